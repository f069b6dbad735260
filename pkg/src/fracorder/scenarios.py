"""Preset problems on (0, pi) and the built-in scenario catalogue.

``example1``: Neumann basis, ``y0 = 1 + eps e_j0``, target ``yQ = 1``.
``example2``: Dirichlet basis, ``y0 = eps e_j0``, target ``yQ = eps e_j0``.
Both have zero forcing.
"""

import math

import numpy as np

from .objective import PenaltySpec, Scenario
from .spectral_basis import BasisKind, build_basis
from .state import StateEval, TimeSignal

PRESETS = ("example1", "example2")


def default_jmax(j0):
    return j0 + 8


def preset_fields(name, epsilon, j0, J_max=None, domain_length=math.pi):
    """Basis plus initial and target coefficient vectors for a preset."""
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}")
    if int(j0) != j0:
        raise ValueError("j0 must be an integer")
    j0 = int(j0)
    if name == "example1" and j0 < 1:
        raise ValueError("example1 needs j0 >= 1")
    if name == "example2" and j0 < 1:
        raise ValueError("example2 needs j0 >= 1")
    J_max = default_jmax(j0) if J_max is None else J_max
    kind = BasisKind.NEUMANN if name == "example1" else BasisKind.DIRICHLET
    basis = build_basis(kind, domain_length, J_max)
    pos = basis.position(j0)
    y0 = np.zeros(basis.J_max)
    target = np.zeros(basis.J_max)
    if name == "example1":
        # the constant function 1 has coefficient sqrt(l) on e_0 = 1/sqrt(l)
        one = math.sqrt(domain_length)
        y0[0] = one
        target[0] = one
        y0[pos] += epsilon
    else:
        y0[pos] = epsilon
        target[pos] = epsilon
    return basis, y0, target


def preset_scenario(name, epsilon, j0, T=1.0, J_max=None, domain_length=math.pi):
    basis, y0, target = preset_fields(name, epsilon, j0, J_max, domain_length)
    state = StateEval(basis, y0, TimeSignal.zero(), T)
    label = f"{name}_eps{epsilon:g}_j{j0}_T{T:g}"
    return Scenario(label, state, TimeSignal.constant(target))


def example1(epsilon, j0, T=1.0, J_max=None):
    return preset_scenario("example1", epsilon, j0, T, J_max)


def example2(epsilon, j0, T=1.0, J_max=None):
    return preset_scenario("example2", epsilon, j0, T, J_max)


BUILTIN_EPSILONS = (0.1, 0.5)
BUILTIN_J0 = (1, 2, 5)
BUILTIN_T = 1.0
RECIPROCAL_L = 4.0


def builtin_penalties():
    return {"exp_over_s": PenaltySpec.exp_over_s(),
            "reciprocal": PenaltySpec.reciprocal(RECIPROCAL_L)}


def penalty_minimizer(spec):
    """Analytic minimizer of the built-in penalty families."""
    if spec.kind.value == "exp_over_s":
        return 1.0
    if spec.kind.value == "reciprocal":
        return spec.L / 2.0
    raise ValueError("no closed-form minimizer for custom penalties")


def builtin_cases(include_degenerate=False):
    """``(preset, epsilon, j0, penalty_name)`` tuples of the built-in catalogue."""
    eps = ((0.0,) if include_degenerate else ()) + BUILTIN_EPSILONS
    return [(name, e, j0, pen)
            for name in PRESETS for e in eps for j0 in BUILTIN_J0
            for pen in builtin_penalties()]


def builtin_scenarios(include_degenerate=False):
    """Built-in ``(Scenario, PenaltySpec)`` pairs keyed by a readable name."""
    penalties = builtin_penalties()
    out = {}
    for name, e, j0, pen in builtin_cases(include_degenerate):
        sc = preset_scenario(name, e, j0, BUILTIN_T)
        out[f"{sc.name}_{pen}"] = (sc, penalties[pen])
    return out
