"""Locate the minimizer of the reduced cost: a log-spaced grid scan brackets
the global minimum, then safeguarded Newton on dJ polishes it."""

import math
import sys
from dataclasses import asdict, dataclass, field

import numpy as np

from ._numerics import QuadratureError, golden_section
from .objective import (
    Optimality,
    PenaltySpec,
    Scenario,
    check_optimality,
    reduced_cost,
)

S_EDGE = 1e-3
# accepted iterates may not raise J by more than this (floating-point slack)
_J_SLACK = 8 * sys.float_info.epsilon


@dataclass(frozen=True)
class OptimizerConfig:
    grid_points: int = 64
    newton_tol: float = 1e-10
    max_newton_iters: int = 50
    bracket_pad: float = 0.05

    def __post_init__(self):
        if int(self.grid_points) != self.grid_points or self.grid_points < 16:
            raise ValueError("grid_points must be an integer >= 16")
        if not self.newton_tol > 0:
            raise ValueError("newton_tol must be positive")
        if int(self.max_newton_iters) != self.max_newton_iters or self.max_newton_iters < 1:
            raise ValueError("max_newton_iters must be a positive integer")
        if not 0 < self.bracket_pad < 0.5:
            raise ValueError("bracket_pad must lie in (0, 0.5)")

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class Iterate:
    s: float
    J: float
    dJ: float
    d2J: float
    step: str


@dataclass(frozen=True)
class ScanResult:
    s: np.ndarray
    J: np.ndarray
    best_index: int
    bracket: tuple
    local_minima: tuple

    @property
    def best(self):
        return float(self.s[self.best_index])


@dataclass(frozen=True)
class OptimizeReport:
    s_star: float
    J_star: float
    dJ_star: float
    d2J_star: float
    iterations: tuple
    verdict: Optimality
    bracket: tuple
    newton_steps: int = 0
    fallback: bool = False
    local_minima: tuple = field(default=())

    def summary(self):
        return {
            "s_star": self.s_star,
            "J_star": self.J_star,
            "dJ_star": self.dJ_star,
            "d2J_star": self.d2J_star,
            "verdict": self.verdict.value,
            "bracket": list(self.bracket),
            "newton_steps": self.newton_steps,
            "fallback": self.fallback,
            "local_minima": list(self.local_minima),
        }


def working_domain(spec: PenaltySpec):
    """Scan interval ``[1e-3, L - 1e-3]`` (upper end 50 when ``L`` is infinite)."""
    hi = spec.L - S_EDGE if math.isfinite(spec.L) else spec.working_upper
    if hi <= S_EDGE:
        raise ValueError("penalty domain too narrow to scan")
    return S_EDGE, hi


def _cost(scenario, spec, s, order):
    try:
        return reduced_cost(scenario, spec, s, order)
    except (QuadratureError, OverflowError, ZeroDivisionError):
        return None


def cost_curve(scenario, spec, s_values, order=2):
    """Reduced-cost reports at each ``s`` (entries are None where evaluation fails)."""
    return [_cost(scenario, spec, float(s), order) for s in s_values]


def grid_scan(scenario: Scenario, spec: PenaltySpec, config: OptimizerConfig = None):
    """Evaluate J on a log grid; bracket the grid argmin (ties go to smaller s)."""
    config = config or OptimizerConfig()
    lo, hi = working_domain(spec)
    grid = np.geomspace(lo, hi, config.grid_points)
    values = np.full(len(grid), np.inf)
    for i, rep in enumerate(cost_curve(scenario, spec, grid, order=0)):
        if rep is not None and math.isfinite(rep.J):
            values[i] = rep.J
    if not np.any(np.isfinite(values)):
        raise RuntimeError("reduced cost is non-finite on the whole grid")
    best = int(np.argmin(values))
    left, right = grid[max(best - 1, 0)], grid[min(best + 1, len(grid) - 1)]
    pad = config.bracket_pad * (right - left)
    bracket = (float(max(lo, left - pad)), float(min(hi, right + pad)))
    padded = np.concatenate(([np.inf], values, [np.inf]))
    minima = tuple(
        float(grid[i]) for i in range(len(grid))
        if np.isfinite(values[i]) and padded[i + 1] < padded[i] and padded[i + 1] <= padded[i + 2])
    return ScanResult(grid, values, best, bracket, minima)


def _iterate(rep, step):
    return Iterate(rep.s, rep.J, rep.dJ, rep.d2J, step)


def _golden_fallback(scenario, spec, lo, hi, iterations, config, newton_steps):
    s, _, _ = golden_section(
        lambda x: reduced_cost(scenario, spec, x, order=0).J, lo, hi, tol=1e-10)
    rep = reduced_cost(scenario, spec, s)
    iterations.append(_iterate(rep, "golden"))
    verdict = check_optimality(rep, tol=config.newton_tol * (1.0 + abs(rep.J)))
    return OptimizeReport(rep.s, rep.J, rep.dJ, rep.d2J, tuple(iterations), verdict,
                          (lo, hi), newton_steps, fallback=True)


def newton_refine(scenario: Scenario, spec: PenaltySpec, bracket, start,
                  config: OptimizerConfig = None):
    """Safeguarded Newton iteration ``s <- s - dJ/d2J`` inside ``bracket``.

    Steps that leave the current sign-change bracket, meet nonpositive
    curvature, or raise J are replaced by bisection. Without a sign change
    and positive curvature the search falls back to golden section on J.
    """
    config = config or OptimizerConfig()
    lo, hi = float(bracket[0]), float(bracket[1])
    if not lo < hi:
        raise ValueError("bracket must satisfy lo < hi")
    start = min(max(float(start), lo), hi)
    rep = reduced_cost(scenario, spec, start)
    iterations = [_iterate(rep, "start")]

    def converged(r):
        return abs(r.dJ) <= config.newton_tol * (1.0 + abs(r.J))

    d_lo = reduced_cost(scenario, spec, lo, order=1).dJ
    d_hi = reduced_cost(scenario, spec, hi, order=1).dJ
    sign_change = d_lo < 0 < d_hi
    if not sign_change and not rep.d2J > 0 and not converged(rep):
        return _golden_fallback(scenario, spec, lo, hi, iterations, config, 0)

    newton_steps = 0
    for _ in range(config.max_newton_iters):
        if converged(rep):
            break
        if sign_change:
            if rep.dJ < 0:
                lo = max(lo, rep.s)
            else:
                hi = min(hi, rep.s)
        if hi - lo <= 4 * sys.float_info.epsilon * max(abs(hi), 1.0):
            break
        cand, step = None, "newton"
        if rep.d2J > 0:
            c = rep.s - rep.dJ / rep.d2J
            if lo < c < hi:
                cand = c
        if cand is None:
            if not sign_change:
                return _golden_fallback(scenario, spec, lo, hi, iterations, config,
                                        newton_steps)
            cand, step = 0.5 * (lo + hi), "bisect"
        trial = reduced_cost(scenario, spec, cand)
        if sign_change:
            if trial.dJ < 0:
                lo = max(lo, trial.s)
            else:
                hi = min(hi, trial.s)
        if trial.J <= rep.J + _J_SLACK * (1.0 + abs(rep.J)):
            rep = trial
            iterations.append(_iterate(rep, step))
            newton_steps += step == "newton"
        elif not sign_change:
            return _golden_fallback(scenario, spec, lo, hi, iterations, config,
                                    newton_steps)

    if converged(rep):
        verdict = check_optimality(rep, tol=config.newton_tol * (1.0 + abs(rep.J)))
    else:
        verdict = Optimality.NOT_STATIONARY
    return OptimizeReport(rep.s, rep.J, rep.dJ, rep.d2J, tuple(iterations), verdict,
                          (lo, hi), newton_steps)


def solve(scenario: Scenario, spec: PenaltySpec, config: OptimizerConfig = None):
    """Grid scan followed by Newton refinement from the best grid point."""
    config = config or OptimizerConfig()
    scan = grid_scan(scenario, spec, config)
    report = newton_refine(scenario, spec, scan.bracket, scan.best, config)
    return OptimizeReport(
        report.s_star, report.J_star, report.dJ_star, report.d2J_star, report.iterations,
        report.verdict, scan.bracket, report.newton_steps, report.fallback,
        scan.local_minima)
