"""The decay kernel E(s) = exp(-lambda^s t), its s-derivatives, and the
constants bounding them uniformly in lambda."""

import math
import threading
from dataclasses import dataclass

import numpy as np

from ._numerics import EXP_UNDERFLOW, golden_section


@dataclass(frozen=True)
class KernelEval:
    value: float
    d1: float
    d2: float
    d3: float


def _validate(lam, t, s):
    if not (np.all(np.isfinite(lam)) and np.all(np.isfinite(t)) and np.all(np.isfinite(s))):
        raise ValueError("kernel arguments must be finite")
    if np.any(lam < 0):
        raise ValueError("lambda must be nonnegative")
    if np.any(t < 0):
        raise ValueError("t must be nonnegative")
    if np.any(s <= 0):
        raise ValueError("s must be positive")


def kernel_derivatives(lam, t, s, order=3, validate=True):
    """Broadcasting evaluation of ``E, E', E'', E'''`` (first ``order + 1`` of them).

    Returns an array of shape ``(order + 1,) + broadcast_shape``. With
    ``r = lambda^s t`` and ``l = ln(lambda)``::

        E'   = -r e^{-r} l
        E''  =  r e^{-r} (r - 1) l^2
        E''' =  r e^{-r} (3r - 1 - r^2) l^3

    All s-derivatives vanish for lambda in {0, 1}; everything is zero once
    ``r`` exceeds the exp underflow threshold.
    """
    if not 0 <= order <= 3:
        raise ValueError("order must be 0..3")
    lam, t, s = np.broadcast_arrays(np.asarray(lam, float), np.asarray(t, float),
                                    np.asarray(s, float))
    if validate:
        _validate(lam, t, s)
    positive = lam > 0
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        ln_lam = np.where(positive, np.log(np.where(positive, lam, 1.0)), 0.0)
        a = np.where(positive, np.exp(s * ln_lam), 0.0)
        r = a * t
        live = r <= EXP_UNDERFLOW
        r = np.where(live, r, 0.0)
        e = np.where(live, np.exp(-r), 0.0)
    out = np.empty((order + 1,) + lam.shape)
    out[0] = e
    if order >= 1:
        re = r * e
        out[1] = -re * ln_lam
        if order >= 2:
            out[2] = re * (r - 1.0) * ln_lam ** 2
        if order >= 3:
            out[3] = re * (3.0 * r - 1.0 - r * r) * ln_lam ** 3
    return out


def eval_kernel(lam, t, s, order=3):
    """Scalar kernel evaluation; derivatives above ``order`` are reported as NaN."""
    values = kernel_derivatives(float(lam), float(t), float(s), order)
    full = [float(v) for v in values] + [math.nan] * (3 - order)
    return KernelEval(*full)


@dataclass(frozen=True)
class BoundConstants:
    M1: float
    M2: float
    M3: float
    M4: float
    M5: float
    M6: float

    @property
    def Chat0(self):
        return 1.0

    @property
    def Chat1(self):
        return self.M1 + self.M2

    @property
    def Chat2(self):
        return self.M3 + self.M4

    @property
    def Chat3(self):
        return self.M5 + self.M6

    def chat(self, k):
        return (self.Chat0, self.Chat1, self.Chat2, self.Chat3)[k]


def _sup_profiles():
    def base(r):
        return r * np.exp(-r)

    def absln(r):
        return np.abs(np.log(r))

    def cubic(r):
        return np.abs(3.0 * r - 1.0 - r * r)

    return (
        lambda r: base(r) * absln(r),
        lambda r: base(r),
        lambda r: base(r) * np.abs(r - 1.0) * 4.0 * absln(r) ** 2,
        lambda r: base(r) * 4.0 * np.abs(r - 1.0),
        lambda r: base(r) * cubic(r) * 8.0 * absln(r) ** 3,
        lambda r: base(r) * 8.0 * cubic(r),
    )


def _scan_sup(g, n_points=200_001):
    # log-uniform scan of r in [1e-12, 1e3], then golden section in log r
    log_r = np.linspace(math.log(1e-12), math.log(1e3), n_points)
    values = g(np.exp(log_r))
    i = int(np.argmax(values))
    lo, hi = log_r[max(i - 1, 0)], log_r[min(i + 1, n_points - 1)]
    x, neg, _ = golden_section(lambda u: -float(g(math.exp(u))), lo, hi, tol=1e-13)
    return max(float(values[i]), -neg)


_constants = None
_constants_lock = threading.Lock()


def bound_constants():
    """The suprema ``M_1..M_6`` over ``r > 0``, computed once and cached."""
    global _constants
    with _constants_lock:
        if _constants is None:
            _constants = BoundConstants(*(_scan_sup(g) for g in _sup_profiles()))
        return _constants


def bound_envelopes(t, s, constants=None):
    """Right-hand sides ``s^{-k} Chat_k (1 + |ln t|^k)`` for k = 1, 2, 3."""
    c = constants or bound_constants()
    t = np.asarray(t, float)
    s = np.asarray(s, float)
    ln_t = np.abs(np.log(t))
    return np.stack([s ** -k * c.chat(k) * (1.0 + ln_t ** k) for k in (1, 2, 3)])


def bounds_hold(lam, t, s):
    """Vectorized check of the three derivative bounds; returns a bool array."""
    lam, t, s = np.broadcast_arrays(np.asarray(lam, float), np.asarray(t, float),
                                    np.asarray(s, float))
    _validate(lam, t, s)
    if np.any(t == 0):
        raise ValueError("t = 0 is not admissible (|ln t| is unbounded)")
    d = np.abs(kernel_derivatives(lam, t, s, 3, validate=False)[1:])
    return np.all(d <= bound_envelopes(t, s), axis=0)


def check_bounds(lam, t, s):
    """True iff all three derivative bounds hold at ``(lam, t, s)``."""
    return bool(bounds_hold(lam, t, s))
