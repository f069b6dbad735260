"""Reduced cost J(s) = 1/2 ||y(s) - yQ||^2 + phi(s), its derivatives, and
optimality verdicts."""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

from .state import StateEval, TimeSignal, misfit_and_derivatives

S_MAX_UNBOUNDED = 50.0


class PenaltyKind(str, Enum):
    RECIPROCAL = "reciprocal"
    EXP_OVER_S = "exp_over_s"
    CUSTOM = "custom"


@dataclass(frozen=True)
class PenaltySpec:
    """Penalty ``phi`` on ``(0, L)``.

    ``reciprocal``: ``1 / (s (L - s))``; ``exp_over_s``: ``e^s / s`` with
    ``L = inf``; ``custom``: user callables for ``phi, phi', phi''``.
    """

    kind: PenaltyKind
    L: float = math.inf
    value: Optional[Callable] = None
    d1: Optional[Callable] = None
    d2: Optional[Callable] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", PenaltyKind(self.kind))
        if self.kind is PenaltyKind.RECIPROCAL:
            if not (0 < self.L < math.inf):
                raise ValueError("reciprocal penalty needs a finite L > 0")
        elif self.kind is PenaltyKind.EXP_OVER_S:
            if self.L != math.inf:
                raise ValueError("exp_over_s penalty lives on (0, inf)")
        else:
            if None in (self.value, self.d1, self.d2):
                raise ValueError("custom penalty needs value, d1 and d2 callables")
            if not self.L > 0:
                raise ValueError("L must be positive")

    @classmethod
    def reciprocal(cls, L):
        return cls(PenaltyKind.RECIPROCAL, float(L))

    @classmethod
    def exp_over_s(cls):
        return cls(PenaltyKind.EXP_OVER_S)

    @classmethod
    def custom(cls, value, d1, d2, L=math.inf):
        return cls(PenaltyKind.CUSTOM, float(L), value, d1, d2)

    @property
    def working_upper(self):
        """Upper end of the evaluation domain (``L`` or the cap for ``L = inf``)."""
        return self.L if math.isfinite(self.L) else S_MAX_UNBOUNDED

    def to_dict(self):
        if self.kind is PenaltyKind.CUSTOM:
            raise ValueError("custom penalties are not serializable")
        if self.kind is PenaltyKind.RECIPROCAL:
            return {"kind": self.kind.value, "L": self.L}
        return {"kind": self.kind.value}


def penalty_eval(spec: PenaltySpec, s, order=0):
    """``phi``, ``phi'`` or ``phi''`` at ``s`` (``order`` 0, 1 or 2)."""
    s = float(s)
    if not (0 < s < spec.L):
        raise ValueError(f"s={s!r} outside the penalty domain (0, {spec.L})")
    if order not in (0, 1, 2):
        raise ValueError("order must be 0, 1 or 2")
    if spec.kind is PenaltyKind.RECIPROCAL:
        L = spec.L
        g = s * (L - s)
        if order == 0:
            return 1.0 / g
        if order == 1:
            return (2.0 * s - L) / (g * g)
        return 2.0 * ((L - 2.0 * s) ** 2 + g) / (g * g * g)
    if spec.kind is PenaltyKind.EXP_OVER_S:
        e = math.exp(s)
        if order == 0:
            return e / s
        if order == 1:
            return e * (s - 1.0) / (s * s)
        return e * (s * s - 2.0 * s + 2.0) / (s * s * s)
    return float((spec.value, spec.d1, spec.d2)[order](s))


@dataclass(frozen=True)
class Scenario:
    """One identification problem: state data plus the tracking target."""

    name: str
    state: StateEval
    target: TimeSignal


@dataclass(frozen=True)
class ReducedCostReport:
    s: float
    J: float
    dJ: float
    d2J: float
    tracking: float
    penalty: float


def reduced_cost(scenario: Scenario, spec: PenaltySpec, s, order=2):
    """Assemble ``J = J0 + phi``, ``dJ = G + phi'``, ``d2J = H + phi''``.

    With ``order=0`` only ``J`` is computed; the derivative fields are NaN.
    """
    phi = [penalty_eval(spec, s, k) for k in range(order + 1)] + [math.nan] * (2 - order)
    J0, G, H = misfit_and_derivatives(scenario.state, scenario.target, s, order)
    return ReducedCostReport(
        s=float(s), J=J0 + phi[0], dJ=G + phi[1], d2J=H + phi[2],
        tracking=J0, penalty=phi[0])


class Optimality(str, Enum):
    SECOND_ORDER_SUFFICIENT = "SecondOrderSufficient"
    FIRST_ORDER_STATIONARY = "FirstOrderStationary"
    NOT_STATIONARY = "NotStationary"


def stationarity_tolerance(J, rel=1e-9):
    return rel * (1.0 + abs(J))


def check_optimality(report, tol=None):
    """Classify a report: stationary when ``|dJ| <= tol`` (default
    ``1e-9 (1 + |J|)``), sufficient when additionally ``d2J > 0``.

    At finite truncation the second-order verdict is a genuine local-minimum
    certificate for the truncated problem.
    """
    J = getattr(report, "J", 0.0)
    dJ = report.dJ
    d2J = getattr(report, "d2J", math.nan)
    tol = stationarity_tolerance(J) if tol is None else tol
    if not (math.isfinite(dJ) and abs(dJ) <= tol):
        return Optimality.NOT_STATIONARY
    if math.isfinite(d2J) and d2J > 0:
        return Optimality.SECOND_ORDER_SUFFICIENT
    return Optimality.FIRST_ORDER_STATIONARY
