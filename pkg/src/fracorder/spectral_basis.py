"""Eigenpairs of the base operator and projection of sampled functions onto them."""

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from ._numerics import compensated_sum, simpson_weights


class BasisKind(str, Enum):
    DIRICHLET = "dirichlet"
    NEUMANN = "neumann"
    EXPLICIT = "explicit"


@dataclass(frozen=True)
class EigenMode:
    index: int
    lam: float
    norm_const: float


@dataclass(frozen=True)
class EigenBasis:
    """Ordered eigenmodes of -d^2/dx^2 on ``(0, domain_length)`` or a user list."""

    kind: BasisKind
    domain_length: float
    modes: tuple

    @property
    def J_max(self):
        return len(self.modes)

    @property
    def eigenvalues(self):
        return np.array([m.lam for m in self.modes])

    @property
    def indices(self):
        return [m.index for m in self.modes]

    def position(self, index):
        """Array position of the mode with eigen-index ``index``."""
        first = self.modes[0].index
        pos = index - first
        if not 0 <= pos < len(self.modes):
            raise IndexError(
                f"mode index {index} outside {first}..{first + len(self.modes) - 1}")
        return pos

    def evaluate(self, x):
        """Eigenfunction values, shape (J_max, len(x))."""
        if self.kind is BasisKind.EXPLICIT:
            raise ValueError("explicit bases carry no eigenfunctions")
        x = np.asarray(x, dtype=float)
        k = np.array(self.indices, dtype=float) * (math.pi / self.domain_length)
        c = np.array([m.norm_const for m in self.modes])
        if self.kind is BasisKind.DIRICHLET:
            return c[:, None] * np.sin(k[:, None] * x[None, :])
        return c[:, None] * np.cos(k[:, None] * x[None, :])

    def grid(self, n_points):
        return np.linspace(0.0, self.domain_length, n_points)


@dataclass(frozen=True)
class SpectralField:
    """Coefficients <v, e_j> in basis order; ``tail`` is the L2 energy not
    captured by the truncation (0 when unknown)."""

    coeffs: np.ndarray
    tail: float = field(default=0.0)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.ndim != 1:
            raise ValueError("coefficients must be a vector")
        if not np.all(np.isfinite(c)):
            raise ValueError("non-finite spectral coefficients")
        object.__setattr__(self, "coeffs", c)

    def __len__(self):
        return len(self.coeffs)

    def l2_norm(self):
        return math.sqrt(compensated_sum(self.coeffs ** 2))


def build_basis(kind, domain_length=math.pi, J_max=None, eigenvalues=None):
    """Build the first ``J_max`` eigenmodes.

    Dirichlet modes are ``j = 1..J_max`` with ``e_j = sqrt(2/l) sin(j pi x / l)``;
    Neumann modes are ``j = 0..J_max-1`` with ``e_0 = 1/sqrt(l)`` and
    ``e_j = sqrt(2/l) cos(j pi x / l)``. In both cases ``lambda_j = (j pi / l)^2``.
    The explicit kind takes a nondecreasing list of nonnegative eigenvalues.
    """
    try:
        kind = BasisKind(kind)
    except ValueError:
        raise ValueError(f"unsupported basis kind {kind!r}") from None
    if not (domain_length > 0 and math.isfinite(domain_length)):
        raise ValueError("domain_length must be positive and finite")

    if kind is BasisKind.EXPLICIT:
        if eigenvalues is None:
            raise ValueError("explicit basis needs eigenvalues")
        lam = [float(v) for v in eigenvalues]
        if J_max is not None and J_max != len(lam):
            raise ValueError("J_max disagrees with the number of eigenvalues")
        if not lam:
            raise ValueError("J_max must be at least 1")
        if any(not math.isfinite(v) or v < 0 for v in lam):
            raise ValueError("eigenvalues must be finite and nonnegative")
        if any(b < a for a, b in zip(lam, lam[1:])):
            raise ValueError("eigenvalues must be nondecreasing")
        modes = tuple(EigenMode(j, v, 1.0) for j, v in enumerate(lam))
        return EigenBasis(kind, float(domain_length), modes)

    if eigenvalues is not None:
        raise ValueError(f"{kind.value} basis computes its own eigenvalues")
    if J_max is None or int(J_max) != J_max or J_max < 1:
        raise ValueError("J_max must be a positive integer")
    J_max = int(J_max)
    scale = math.pi / domain_length
    c = math.sqrt(2.0 / domain_length)
    if kind is BasisKind.DIRICHLET:
        modes = tuple(EigenMode(j, (j * scale) ** 2, c) for j in range(1, J_max + 1))
    else:
        modes = tuple(
            EigenMode(j, (j * scale) ** 2, c if j else 1.0 / math.sqrt(domain_length))
            for j in range(J_max))
    return EigenBasis(kind, float(domain_length), modes)


def project(basis, samples):
    """Project samples of ``v`` on ``basis.grid(len(samples))`` by composite Simpson.

    Needs an odd sample count of at least ``4 * J_max``. On that grid the rule
    integrates products of two basis functions exactly.
    """
    if basis.kind is BasisKind.EXPLICIT:
        raise ValueError("projection is unavailable for explicit bases; give coefficients")
    v = np.asarray(samples, dtype=float)
    if v.ndim != 1:
        raise ValueError("samples must be one-dimensional")
    if len(v) < 4 * basis.J_max:
        raise ValueError(
            f"grid too coarse: {len(v)} samples for J_max={basis.J_max} "
            f"(need >= {4 * basis.J_max})")
    if not np.all(np.isfinite(v)):
        raise ValueError("non-finite samples")
    w = simpson_weights(len(v), basis.domain_length)
    phi = basis.evaluate(basis.grid(len(v)))
    coeffs = phi @ (w * v)
    energy = float(np.dot(w, v * v))
    tail = max(0.0, energy - compensated_sum(coeffs ** 2))
    return SpectralField(coeffs, tail)


def reconstruct(field, basis, x):
    """Evaluate the truncated expansion at points ``x``."""
    if len(field) != basis.J_max:
        raise ValueError("field length does not match basis")
    return field.coeffs @ basis.evaluate(x)


def hs_norm(field, basis, s):
    """Truncated graph norm ``(sum lambda_j^{2s} <v, e_j>^2)^{1/2}``."""
    if not s > 0:
        raise ValueError("s must be positive")
    coeffs = field.coeffs if isinstance(field, SpectralField) else np.asarray(field, float)
    if len(coeffs) != basis.J_max:
        raise ValueError("field length does not match basis")
    weights = basis.eigenvalues ** (2.0 * s)
    return math.sqrt(compensated_sum(weights * coeffs ** 2))
