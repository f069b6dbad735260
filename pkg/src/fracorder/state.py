"""Mode-by-mode evaluation of the state y(s) and its s-sensitivities.

Each mode obeys ``y_j' + lambda_j^s y_j = f_j`` with ``y_j(0) = <y0, e_j>``, so

    y_j(t, s) = <y0, e_j> E_{lambda_j, t}(s) + int_0^t f_j(tau) E_{lambda_j, t - tau}(s) dtau

and the s-derivatives follow by differentiating the kernel. Space integrals
collapse to coefficient sums by Parseval; time integrals use the graded
Gauss-Legendre rule from ``_numerics``.
"""

import functools
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np
from scipy import integrate

from ._numerics import (
    EXP_UNDERFLOW,
    compensated_sum,
    graded_edges,
    integrate_graded,
)
from .kernel import bound_constants, kernel_derivatives
from .spectral_basis import EigenBasis, SpectralField

# graded meshes stop resolving decay rates beyond this
_RATE_CAP = 1e300


class SignalKind(str, Enum):
    ZERO = "zero"
    CONSTANT = "constant"
    SAMPLED = "sampled"


@dataclass(frozen=True)
class TimeSignal:
    """Per-mode time dependence of a forcing or target.

    ``coeffs`` has shape (J,) for constant signals; sampled signals carry
    ``times`` (N,) and ``values`` (J, N) and are linearly interpolated.
    """

    kind: SignalKind
    coeffs: np.ndarray = None
    times: np.ndarray = None
    values: np.ndarray = None

    @classmethod
    def zero(cls):
        return cls(SignalKind.ZERO)

    @classmethod
    def constant(cls, coeffs):
        c = np.array(coeffs, dtype=float)
        if c.ndim != 1 or not np.all(np.isfinite(c)):
            raise ValueError("constant signal needs a finite coefficient vector")
        return cls(SignalKind.CONSTANT, coeffs=c)

    @classmethod
    def sampled(cls, times, values):
        times = np.array(times, dtype=float)
        values = np.array(values, dtype=float)
        if times.ndim != 1 or len(times) < 2:
            raise ValueError("sampled signal needs at least two time nodes")
        if np.any(np.diff(times) <= 0):
            raise ValueError("sample times must be strictly increasing")
        if values.ndim != 2 or values.shape[1] != len(times):
            raise ValueError("values must have shape (modes, len(times))")
        if not (np.all(np.isfinite(times)) and np.all(np.isfinite(values))):
            raise ValueError("non-finite sampled signal")
        return cls(SignalKind.SAMPLED, times=times, values=values)

    @property
    def n_modes(self):
        if self.kind is SignalKind.CONSTANT:
            return len(self.coeffs)
        if self.kind is SignalKind.SAMPLED:
            return self.values.shape[0]
        return None

    def check_modes(self, n):
        if self.n_modes is not None and self.n_modes != n:
            raise ValueError(f"signal has {self.n_modes} modes, basis has {n}")

    def active(self, n):
        """Boolean mask of modes carrying nonzero data."""
        if self.kind is SignalKind.CONSTANT:
            return self.coeffs != 0
        if self.kind is SignalKind.SAMPLED:
            return np.any(self.values != 0, axis=1)
        return np.zeros(n, dtype=bool)

    def at(self, t, idx):
        """Values at times ``t`` for modes ``idx``; shape (len(idx), len(t))."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if self.kind is SignalKind.ZERO:
            return np.zeros((len(idx), len(t)))
        if self.kind is SignalKind.CONSTANT:
            return np.broadcast_to(self.coeffs[idx][:, None], (len(idx), len(t)))
        return np.stack([np.interp(t, self.times, self.values[k]) for k in idx])

    def sup_abs(self, n):
        if self.kind is SignalKind.CONSTANT:
            return np.abs(self.coeffs)
        if self.kind is SignalKind.SAMPLED:
            return np.max(np.abs(self.values), axis=1)
        return np.zeros(n)

    def breakpoints(self, T):
        """Interior kinks of the interpolant inside ``(0, T)``."""
        if self.kind is not SignalKind.SAMPLED:
            return np.empty(0)
        return self.times[(self.times > 0) & (self.times < T)]


@dataclass(frozen=True)
class ModeTrajectory:
    y: Callable
    dy_ds: Callable
    d2y_ds2: Callable


def _phi_series(x, n, terms=25):
    # int_0^1 v^n exp(-x v) dv for small x
    total = np.zeros_like(x)
    term = np.ones_like(x)
    for k in range(terms):
        total = total + term / (n + k + 1)
        term = term * (-x) / (k + 1)
    return total


def forced_response(c, lam, s, t, order=2):
    """Closed-form Duhamel integral for forcing constant in time.

    With ``a = lambda^s``, ``x = a t`` and ``h_n(x) = x^n int_0^1 v^n e^{-xv} dv``::

        w     = c t h_0(x)
        d_s w = -c ln(lambda) t h_1(x)
        d2_s w = c ln(lambda)^2 t (h_2(x) - h_1(x))

    Returns shape ``(order + 1, len(lam), len(t))``.
    """
    c = np.asarray(c, float)[:, None]
    lam = np.asarray(lam, float)[:, None]
    t = np.atleast_1d(np.asarray(t, float))[None, :]
    positive = lam > 0
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        ln_lam = np.where(positive, np.log(np.where(positive, lam, 1.0)), 0.0)
        a = np.where(positive, np.exp(s * ln_lam), 0.0)
        x = np.where(t > 0, a * t, 0.0)
    x = np.broadcast_to(x, np.broadcast_shapes(lam.shape, t.shape))
    small = x < 1.0
    huge = x > EXP_UNDERFLOW
    mid = ~small & ~huge
    xs, xm = x[small], x[mid]

    h0 = np.empty_like(x)
    h0[small] = _phi_series(xs, 0)
    h0[mid] = -np.expm1(-xm) / xm
    h0[huge] = 1.0 / x[huge]
    out = np.empty((order + 1,) + x.shape)
    out[0] = c * t * h0
    if order >= 1:
        em = np.exp(-xm)
        h1 = np.empty_like(x)
        h1[small] = xs * _phi_series(xs, 1)
        h1[mid] = (1.0 - em * (1.0 + xm)) / xm
        h1[huge] = 1.0 / x[huge]
        out[1] = -c * ln_lam * t * h1
        if order >= 2:
            h2 = np.empty_like(x)
            h2[small] = xs * xs * _phi_series(xs, 2)
            h2[mid] = (2.0 - em * (xm * xm + 2.0 * xm + 2.0)) / xm
            h2[huge] = 2.0 / x[huge]
            out[2] = c * ln_lam ** 2 * t * (h2 - h1)
    return out


def _phi_moments(x):
    """``phi_n(x) = int_0^1 v^n e^{-xv} dv`` for n = 0..3, shape (4,) + x.shape."""
    out = np.empty((4,) + x.shape)
    small = x < 4.0
    xs = x[small]
    for n in range(4):
        out[n][small] = _phi_series(xs, n, terms=40)
    xl = x[~small]
    with np.errstate(under="ignore"):
        e = np.exp(-xl)
    prev = -np.expm1(-xl) / xl
    out[0][~small] = prev
    for n in range(1, 4):
        prev = (n * prev - e) / xl
        out[n][~small] = prev
    return out


# beyond this exponent the forced part is below 1e-300 and a^2 would overflow
_LOG_RATE_CAP = 690.0


def piecewise_linear_response(times, values, lam, s, t, order=2):
    """Exact Duhamel integral and s-derivatives for piecewise-linear forcing.

    On each segment ending at ``tau_b = min(t_{k+1}, t)`` write ``u0 = t - tau_b``,
    ``v = tau_b - tau`` and ``f = f_b - slope v``. With ``M_n = int_0^D v^n e^{-av} dv``
    the a-derivatives are ``(-1)^m e^{-a u0} int (f_b - slope v)(u0 + v)^m e^{-av} dv``
    and ``d_s = ln(lambda) a d_a``. Returns shape ``(order + 1, len(lam), len(t))``.
    """
    times = np.asarray(times, float)
    values = np.asarray(values, float)
    lam = np.asarray(lam, float)[:, None]
    t = np.atleast_1d(np.asarray(t, float))[None, :]
    positive = lam > 0
    with np.errstate(divide="ignore"):
        ln_lam = np.where(positive, np.log(np.where(positive, lam, 1.0)), 0.0)
    a = np.where(positive, np.exp(np.minimum(s * ln_lam, _LOG_RATE_CAP)), 0.0)
    out = np.zeros((order + 1, lam.shape[0], t.shape[1]))
    for k in range(len(times) - 1):
        t0, t1 = times[k], times[k + 1]
        lo = max(t0, 0.0)
        tau_b = np.minimum(t1, t)
        live = tau_b > lo
        if not np.any(live):
            continue
        slope = (values[:, k + 1] - values[:, k])[:, None] / (t1 - t0)
        fb = values[:, k][:, None] + slope * (tau_b - t0)
        q = -slope
        D = np.where(live, tau_b - lo, 0.0)
        u0 = np.where(live, t - tau_b, 0.0)
        x = a * D
        xu = a * u0
        with np.errstate(under="ignore"):
            E = np.where(xu <= EXP_UNDERFLOW, np.exp(-np.minimum(xu, EXP_UNDERFLOW)), 0.0)
        phi = _phi_moments(x)
        M = [D ** (n + 1) * phi[n] for n in range(4)]
        A0 = fb * M[0] + q * M[1]
        out[0] += np.where(live, E * A0, 0.0)
        if order == 0:
            continue
        # a M_n = D^n x phi_n, a^2 M_n = D^(n-1) x^2 phi_n: no overflow for large a
        aM = [D ** n * x * phi[n] for n in range(4)]
        aA1 = xu * A0 + fb * aM[1] + q * aM[2]
        d1 = np.where(live & (E > 0), -ln_lam * E * aA1, 0.0)
        out[1] += d1
        if order >= 2:
            a2M = [D ** (n - 1) * x * x * phi[n] for n in (2, 3)]
            a2A2 = xu * xu * A0 + 2 * xu * (fb * aM[1] + q * aM[2]) + fb * a2M[0] + q * a2M[1]
            out[2] += np.where(live & (E > 0), ln_lam ** 2 * E * (a2A2 - aA1), 0.0)
    return out


def _check_s(s):
    s = float(s)
    if not (s > 0 and math.isfinite(s)):
        raise ValueError("s must be positive and finite")
    return s


class StateEval:
    """Evaluator for ``y(s)``, ``d_s y(s)`` and ``d2_ss y(s)`` of one problem instance."""

    def __init__(self, basis: EigenBasis, y0, f: TimeSignal, T: float):
        if not (T > 0 and math.isfinite(T)):
            raise ValueError("T must be positive and finite")
        coeffs = y0.coeffs if isinstance(y0, SpectralField) else SpectralField(y0).coeffs
        if len(coeffs) != basis.J_max:
            raise ValueError("y0 length does not match basis")
        f = f if f is not None else TimeSignal.zero()
        f.check_modes(basis.J_max)
        if f.kind is SignalKind.SAMPLED and (f.times[0] > 0 or f.times[-1] < T):
            raise ValueError("sampled forcing must span [0, T]")
        self.basis = basis
        self.y0 = coeffs
        self.f = f
        self.T = float(T)
        self.lam = basis.eigenvalues

    @property
    def n_modes(self):
        return self.basis.J_max

    def active_modes(self, target=None):
        mask = (self.y0 != 0) | self.f.active(self.n_modes)
        if target is not None:
            mask |= target.active(self.n_modes)
        return np.flatnonzero(mask)

    def rate(self, s, idx):
        """Fastest decay rate ``max lambda_j^s`` over modes ``idx`` (capped)."""
        if len(idx) == 0:
            return 0.0
        with np.errstate(over="ignore"):
            a = np.max(self.lam[idx] ** s)
        return float(min(a, _RATE_CAP))

    def _times(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if np.any(t < 0) or np.any(t > self.T * (1 + 1e-12)):
            raise ValueError("t outside [0, T]")
        return np.minimum(t, self.T)

    def trajectories(self, s, t, order=0, modes=None, method="auto"):
        """``y_j``, ``d_s y_j``, ... at times ``t``; shape (order + 1, modes, len(t)).

        ``method`` selects how the forcing integral is computed: ``"closed"``
        (exact for constant and piecewise-linear forcing, the default) or
        ``"quadrature"`` (adaptive Gauss-Legendre, kept as a cross-check).
        """
        s = _check_s(s)
        t = self._times(t)
        idx = np.arange(self.n_modes) if modes is None else np.asarray(modes, dtype=int)
        lam = self.lam[idx]
        out = self.y0[idx][None, :, None] * kernel_derivatives(
            lam[:, None], t[None, :], s, order, validate=False)
        if self.f.kind is SignalKind.ZERO:
            return out
        if method == "auto":
            method = "closed"
        if method == "closed":
            if self.f.kind is SignalKind.CONSTANT:
                return out + forced_response(self.f.coeffs[idx], lam, s, t, order)
            return out + piecewise_linear_response(
                self.f.times, self.f.values[idx], lam, s, t, order)
        if method != "quadrature":
            raise ValueError(f"unknown method {method!r}")
        return out + self._duhamel_quadrature(idx, s, t, order)

    def _duhamel_quadrature(self, idx, s, t, order):
        lam = self.lam[idx]
        rate = self.rate(s, idx)
        kinks = self.f.breakpoints(self.T)
        out = np.zeros((order + 1, len(idx), len(t)))
        for i, ti in enumerate(t):
            if ti <= 0:
                continue
            # substitute u = t - tau so the kernel decays from u = 0
            inner = np.sort(ti - kinks[kinks < ti])
            breaks = np.concatenate(([0.0], inner, [ti]))

            def integrand(u, ti=ti):
                k = kernel_derivatives(lam[:, None], u[None, :], s, order, validate=False)
                return k * self.f.at(ti - u, idx)[None]

            out[:, :, i] = integrate_graded(integrand, breaks, rate, rtol=1e-13)
        return out

    def _position(self, j):
        if not 0 <= j < self.n_modes:
            raise IndexError(f"mode {j} out of range 0..{self.n_modes - 1}")
        return j

    def solve_mode(self, j, s, t, method="auto"):
        """``y_j(t, s)`` for the mode at basis position ``j``."""
        j = self._position(j)
        vals = self.trajectories(s, t, 0, [j], method)[0, 0]
        return float(vals[0]) if np.ndim(t) == 0 else vals

    def sensitivity_mode(self, j, s, t, order=1, method="auto"):
        """``d_s^order y_j(t, s)`` for order 1 or 2."""
        if order not in (1, 2):
            raise ValueError("order must be 1 or 2")
        j = self._position(j)
        vals = self.trajectories(s, t, order, [j], method)[order, 0]
        return float(vals[0]) if np.ndim(t) == 0 else vals

    def mode_trajectory(self, j, s):
        j = self._position(j)
        return ModeTrajectory(
            y=lambda t: self.solve_mode(j, s, t),
            dy_ds=lambda t: self.sensitivity_mode(j, s, t, 1),
            d2y_ds2=lambda t: self.sensitivity_mode(j, s, t, 2),
        )

    def time_breaks(self, *signals):
        kinks = [self.f.breakpoints(self.T)] + [g.breakpoints(self.T) for g in signals]
        return np.unique(np.concatenate([[0.0], *kinks, [self.T]]))

    def integrate_modes(self, integrand, s, idx, *signals):
        """Time integrals of a per-mode integrand; returns shape (..., len(idx))."""
        return integrate_graded(integrand, self.time_breaks(*signals), self.rate(s, idx))


def misfit_and_derivatives(state: StateEval, yQ: TimeSignal, s, order=2):
    """Tracking term ``J0 = 1/2 ||y - yQ||^2`` and its first two s-derivatives.

    Returns ``(J0, G, H)`` with ``G = <y - yQ, d_s y>`` and
    ``H = ||d_s y||^2 + <y - yQ, d2_ss y>`` in L2(Q). With ``order < 2`` the
    unneeded entries are NaN.
    """
    s = _check_s(s)
    yQ = yQ if yQ is not None else TimeSignal.zero()
    yQ.check_modes(state.n_modes)
    idx = state.active_modes(yQ)
    result = [math.nan, math.nan, math.nan]
    if len(idx) == 0:
        result[: order + 1] = [0.0] * (order + 1)
        return tuple(result)

    def integrand(t):
        y = state.trajectories(s, t, order, idx)
        r = y[0] - yQ.at(t, idx)
        parts = [0.5 * r * r]
        if order >= 1:
            parts.append(r * y[1])
        if order >= 2:
            parts.append(y[1] * y[1] + r * y[2])
        return np.stack(parts)

    per_mode = state.integrate_modes(integrand, s, idx, yQ)
    for q in range(order + 1):
        result[q] = compensated_sum(per_mode[q])
    return tuple(result)


def tracking_cost(state, yQ, s):
    return misfit_and_derivatives(state, yQ, s, order=0)[0]


def sensitivity_norms(state: StateEval, s):
    """``(||d_s y||, ||d2_ss y||)`` in L2(Q)."""
    s = _check_s(s)
    idx = state.active_modes()
    if len(idx) == 0:
        return 0.0, 0.0

    def integrand(t):
        y = state.trajectories(s, t, 2, idx)
        return y[1:] ** 2

    per_mode = state.integrate_modes(integrand, s, idx)
    return (math.sqrt(compensated_sum(per_mode[0])),
            math.sqrt(compensated_sum(per_mode[1])))


@functools.lru_cache(maxsize=64)
def _log_weight_integrals(T, k):
    # int_0^T (1 + |ln t|^k)^2 dt and int_0^T psi_k(t)^2 dt,
    # psi_k(t) = int_0^t (1 + |ln u|^k) du
    pts = [1.0] if T > 1 else None

    def phi(t):
        return 1.0 + abs(math.log(t)) ** k

    def psi(t):
        if t <= 0:
            return 0.0
        return integrate.quad(phi, 0.0, t, points=[1.0] if t > 1 else None, limit=200)[0]

    phi_sq = integrate.quad(lambda t: phi(t) ** 2, 0.0, T, points=pts, limit=200)[0]
    psi_sq = integrate.quad(lambda t: psi(t) ** 2, 0.0, T, points=pts, limit=200)[0]
    return phi_sq, psi_sq


def sensitivity_bound(state: StateEval, s, order=1):
    """Upper bound on ``||d_s^order y(s)||`` built from the kernel constants:

    ``sqrt(2) Chat_k s^{-k} (Phi_k sum y0_j^2 + Psi_k sum sup|f_j|^2)^{1/2}``.
    """
    s = _check_s(s)
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    phi_sq, psi_sq = _log_weight_integrals(state.T, order)
    data = (phi_sq * compensated_sum(state.y0 ** 2)
            + psi_sq * compensated_sum(state.f.sup_abs(state.n_modes) ** 2))
    return math.sqrt(2.0 * data) * bound_constants().chat(order) * s ** -order


def energy_diagnostic(state: StateEval, s):
    """Both sides of the energy estimate.

    ``lhs = ||d_t y||^2_{L2(Q)} + sup_t ||y(t)||^2_{H^{s/2}} + ||y||^2_{L2(0,T;H^s)}``,
    ``rhs = T sum_j sup_t |f_j|^2 + ||y0||^2_{H^{s/2}}``. The time derivative
    comes from the mode equation ``d_t y_j = -lambda_j^s y_j + f_j``.
    """
    s = _check_s(s)
    n = state.n_modes
    idx = state.active_modes()
    with np.errstate(over="ignore"):
        a_all = state.lam ** s
    rhs = (state.T * compensated_sum(state.f.sup_abs(n) ** 2)
           + compensated_sum(a_all * state.y0 ** 2))
    if len(idx) == 0:
        return 0.0, rhs
    a = a_all[idx][:, None]

    def integrand(t):
        y = state.trajectories(s, t, 0, idx)[0]
        ay = a * y
        return np.stack([(state.f.at(t, idx) - ay) ** 2, ay * ay])

    per_mode = state.integrate_modes(integrand, s, idx)
    edges = graded_edges(state.time_breaks(), state.rate(s, idx))
    frac = np.linspace(0.0, 1.0, 17)
    grid = np.unique((edges[:-1, None] + np.diff(edges)[:, None] * frac[None, :]).ravel())
    y = state.trajectories(s, grid, 0, idx)[0]
    sup_term = float(np.max(np.sum((a * y) * y, axis=0)))
    lhs = compensated_sum(per_mode[0]) + sup_term + compensated_sum(per_mode[1])
    return lhs, rhs


def energy_balance(state: StateEval, s):
    """Energy identity at the final time, summed over modes.

    ``||d_t y||^2 + ||y(T)||^2_{H^{s/2}} + ||y||^2_{L2(H^s)}`` against
    ``||y0||^2_{H^{s/2}} + ||f||^2_{L2(Q)}``; the two agree up to quadrature error.
    """
    s = _check_s(s)
    idx = state.active_modes()
    if len(idx) == 0:
        return 0.0, 0.0
    with np.errstate(over="ignore"):
        a = state.lam[idx] ** s

    def integrand(t):
        y = state.trajectories(s, t, 0, idx)[0]
        ay = a[:, None] * y
        fv = state.f.at(t, idx)
        return np.stack([(fv - ay) ** 2, ay * ay, fv * fv])

    per_mode = state.integrate_modes(integrand, s, idx)
    y_T = state.trajectories(s, [state.T], 0, idx)[0, :, 0]
    lhs = (compensated_sum(per_mode[0]) + compensated_sum(a * y_T * y_T)
           + compensated_sum(per_mode[1]))
    rhs = compensated_sum(a * state.y0[idx] ** 2) + compensated_sum(per_mode[2])
    return lhs, rhs
