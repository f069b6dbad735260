import math

import numpy as np
import pytest

from fracorder.objective import Optimality, PenaltySpec
from fracorder.optimize import OptimizerConfig, grid_scan, newton_refine, solve
from fracorder.scenarios import builtin_scenarios, example1, example2
from fracorder.verify import oracle_minimizer


def test_pure_penalty_scan_reciprocal():
    spec = PenaltySpec.reciprocal(2.0)
    scan = grid_scan(example1(0.0, 2), spec)
    assert abs(scan.best - 1.0) == pytest.approx(np.min(np.abs(scan.s - 1.0)))
    assert scan.bracket[0] < 1.0 < scan.bracket[1]


def test_pure_penalty_scan_exp():
    scan = grid_scan(example2(0.0, 3), PenaltySpec.exp_over_s())
    assert abs(scan.best - 1.0) == pytest.approx(np.min(np.abs(scan.s - 1.0)))


def test_example1_scan_brackets_oracle(ex1):
    # the 64-point grid cannot resolve s_bar - 1 ~ 8e-3, but its bracket must hold s_bar
    spec = PenaltySpec.exp_over_s()
    ref = oracle_minimizer("example1", 0.5, 2, spec)
    lo, hi = grid_scan(ex1, spec).bracket
    assert ref > 1.0
    assert lo < ref < hi


def test_newton_on_pure_penalty():
    rep = newton_refine(example1(0.0, 2), PenaltySpec.exp_over_s(), (0.5, 2.0), 0.5)
    assert rep.s_star == pytest.approx(1.0, abs=1e-9)
    rep = solve(example1(0.0, 2), PenaltySpec.reciprocal(2.0))
    assert rep.s_star == pytest.approx(1.0, abs=1e-9)


def test_example1_solution_matches_oracle(ex1):
    spec = PenaltySpec.exp_over_s()
    rep = solve(ex1, spec)
    assert rep.verdict is Optimality.SECOND_ORDER_SUFFICIENT
    assert rep.s_star > 1.0
    assert rep.s_star == pytest.approx(oracle_minimizer("example1", 0.5, 2, spec), abs=1e-6)


def test_example2_solution_below_one(ex2):
    rep = solve(ex2, PenaltySpec.exp_over_s())
    assert rep.verdict is Optimality.SECOND_ORDER_SUFFICIENT
    assert rep.s_star < 1.0


def test_example2_first_mode_has_no_effect():
    # lambda = 1 makes y independent of s, so the optimum is the penalty minimizer
    rep = solve(example2(0.5, 1), PenaltySpec.exp_over_s())
    assert rep.s_star == pytest.approx(1.0, abs=1e-9)
    assert rep.verdict is Optimality.SECOND_ORDER_SUFFICIENT


@pytest.mark.parametrize("name", sorted(builtin_scenarios(include_degenerate=True)))
def test_builtin_convergence(name):
    sc, spec = builtin_scenarios(include_degenerate=True)[name]
    rep = solve(sc, spec)
    assert rep.verdict is Optimality.SECOND_ORDER_SUFFICIENT
    assert not rep.fallback
    assert abs(rep.dJ_star) <= 1e-10 * (1 + abs(rep.J_star))
    assert len(rep.iterations) - 1 <= 15
    Js = [it.J for it in rep.iterations]
    assert all(b <= a * (1 + 1e-14) for a, b in zip(Js, Js[1:]))


def test_golden_fallback_on_concave_bracket():
    # -cos is concave on (2, 4) with no gradient sign change: golden section takes over
    spec = PenaltySpec.custom(lambda s: -math.cos(s), math.sin, math.cos, L=10.0)
    rep = newton_refine(example2(0.0, 2), spec, (2.0, 4.0), 2.1)
    assert rep.fallback
    assert rep.s_star == pytest.approx(2.0, abs=1e-8)
    assert rep.verdict is Optimality.NOT_STATIONARY
    assert rep.iterations[-1].step == "golden"


@pytest.mark.parametrize("kwargs", [
    dict(grid_points=4), dict(newton_tol=0.0), dict(max_newton_iters=0), dict(bracket_pad=0.7),
])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        OptimizerConfig(**kwargs)


def test_bracket_validation(ex1):
    with pytest.raises(ValueError):
        newton_refine(ex1, PenaltySpec.exp_over_s(), (2.0, 1.0), 1.5)
