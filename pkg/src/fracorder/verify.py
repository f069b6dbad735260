"""Acceptance checks against closed-form and independent-quadrature oracles.

Each ``criterion_N`` returns a :class:`CriterionResult`; ``run_all`` runs them
in order and optionally echoes one line per check.
"""

import json
import math
import os
import subprocess
import sys
import tempfile
import time
from dataclasses import dataclass, field

import mpmath
import numpy as np

from .kernel import bound_constants, bounds_hold, kernel_derivatives
from .objective import penalty_eval, reduced_cost
from .optimize import OptimizerConfig, solve, working_domain
from .scenarios import (
    BUILTIN_EPSILONS,
    BUILTIN_J0,
    BUILTIN_T,
    PRESETS,
    builtin_cases,
    builtin_penalties,
    penalty_minimizer,
    preset_scenario,
)
from .state import energy_diagnostic, misfit_and_derivatives, sensitivity_norms

SEED = 20240611
N_SAMPLES = 10_000
FD_STEP = 1e-6


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    detail: str
    seconds: float = 0.0
    failures: list = field(default_factory=list)

    def line(self):
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag} [{self.number:2d}] {self.title}: {self.detail} ({self.seconds:.2f} s)"


def _result(number, title, failures, detail, start, limit=None):
    seconds = time.perf_counter() - start
    passed = not failures
    if limit is not None and seconds >= limit:
        passed = False
        detail += f"; runtime {seconds:.1f} s exceeds {limit:g} s"
    if failures:
        detail += f"; {len(failures)} failure(s), first: {failures[0]}"
    return CriterionResult(number, title, passed, detail, seconds, failures)


def kernel_samples(n=N_SAMPLES, seed=SEED):
    """Random ``(lam, t, s)`` in ``[0, 100] x (0, 10] x (0.05, 4]``."""
    rng = np.random.default_rng(seed)
    lam = rng.uniform(0.0, 100.0, n)
    t = 10.0 * (1.0 - rng.random(n))
    s = 0.05 + 3.95 * (1.0 - rng.random(n))
    return lam, t, s


def _within(approx, exact, abs_floor, rel):
    return np.abs(approx - exact) <= np.maximum(abs_floor, rel * np.abs(exact))


def criterion_1():
    start = time.perf_counter()
    lam, t, s = kernel_samples()
    h = FD_STEP
    plus = kernel_derivatives(lam, t, s + h, 2)
    minus = kernel_derivatives(lam, t, s - h, 2)
    mid = kernel_derivatives(lam, t, s, 3)
    failures = []
    for k in (1, 2, 3):
        fd = (plus[k - 1] - minus[k - 1]) / (2 * h)
        ok = _within(fd, mid[k], 1e-7, 1e-5)
        for i in np.flatnonzero(~ok)[:5]:
            failures.append(f"order {k} at lam={lam[i]:.6g} t={t[i]:.6g} s={s[i]:.6g}: "
                            f"fd={fd[i]:.10g} exact={mid[k][i]:.10g}")
    return _result(1, "kernel derivative fidelity", failures,
                   f"{N_SAMPLES} samples, orders 1-3, h={h:g}", start, limit=5.0)


def criterion_2():
    start = time.perf_counter()
    lam, t, s = kernel_samples()
    c = bound_constants()
    ok = bounds_hold(lam, t, s)
    failures = [f"lam={lam[i]:.6g} t={t[i]:.6g} s={s[i]:.6g}" for i in np.flatnonzero(~ok)[:5]]
    return _result(2, "kernel derivative bounds", failures,
                   f"{N_SAMPLES} samples, Chat=({c.Chat1:.6g}, {c.Chat2:.6g}, {c.Chat3:.6g})",
                   start, limit=5.0)


def grid_cases():
    """Preset, epsilon, j0, penalty name for the nondegenerate catalogue."""
    return builtin_cases(include_degenerate=False)


def criterion_3():
    start = time.perf_counter()
    penalties = builtin_penalties()
    s_grid = np.geomspace(0.1, 3.0, 16)
    failures, checks = [], 0
    for name, eps, j0, pen in grid_cases():
        sc = preset_scenario(name, eps, j0, BUILTIN_T)
        spec = penalties[pen]
        for s in s_grid:
            h = 1e-5 * s
            r0 = reduced_cost(sc, spec, s)
            rp = reduced_cost(sc, spec, s + h)
            rm = reduced_cost(sc, spec, s - h)
            for label, fd, exact in (("dJ", (rp.J - rm.J) / (2 * h), r0.dJ),
                                     ("d2J", (rp.dJ - rm.dJ) / (2 * h), r0.d2J)):
                checks += 1
                if not _within(fd, exact, 1e-6, 1e-4):
                    failures.append(f"{sc.name}/{pen} s={s:.4g} {label}: "
                                    f"fd={fd:.10g} exact={exact:.10g}")
    return _result(3, "reduced-cost gradient and Hessian", failures,
                   f"{checks} finite-difference checks", start, limit=30.0)


def _theta_integral(upper, example):
    """High-precision oracle for the scalar integrals in the closed-form gradients."""
    with mpmath.workdps(40):
        if example == "example1":
            f = lambda th: th * mpmath.exp(-2 * th)
        else:
            f = lambda th: th * (mpmath.exp(-th) - 1) * mpmath.exp(-th)
        upper = mpmath.mpf(upper)
        pts = [mpmath.mpf(0)] + [mpmath.mpf(p) for p in (0.5, 2, 8, 32, 128) if p < upper]
        return float(mpmath.quad(f, pts + [upper]))


def closed_form_gradient(example, eps, j0, s, T=BUILTIN_T):
    a = float(j0) ** (2 * s)
    return -2 * eps ** 2 * j0 ** (-2 * s) * math.log(j0) * _theta_integral(a * T, example)


def criterion_4():
    start = time.perf_counter()
    s_grid = np.geomspace(0.1, 3.0, 16)
    failures, checks = [], 0
    for name in PRESETS:
        for eps in BUILTIN_EPSILONS:
            for j0 in BUILTIN_J0:
                sc = preset_scenario(name, eps, j0, BUILTIN_T)
                for s in s_grid:
                    G = misfit_and_derivatives(sc.state, sc.target, s, order=1)[1]
                    ref = closed_form_gradient(name, eps, j0, s)
                    checks += 1
                    if abs(G - ref) > 1e-8 * abs(ref) and not (ref == 0 and G == 0):
                        failures.append(f"{sc.name} s={s:.4g}: G={G:.15g} ref={ref:.15g}")
    return _result(4, "closed-form tracking gradients", failures,
                   f"{checks} comparisons at 1e-8 rel", start)


# s_bar and s0 closer than this are not resolved as ordered
ORDER_RESOLUTION = 1e-8


def criterion_5():
    start = time.perf_counter()
    penalties = builtin_penalties()
    failures, checks = [], 0
    for name, eps, j0, pen in grid_cases():
        if name == "example1" and j0 <= 1:
            continue
        spec = penalties[pen]
        s0 = penalty_minimizer(spec)
        sc = preset_scenario(name, eps, j0, BUILTIN_T)
        s_bar = solve(sc, spec).s_star
        checks += 1
        if name == "example1":
            ok = s_bar > s0 + ORDER_RESOLUTION
            want = ">"
        else:
            ok = s_bar < s0 - ORDER_RESOLUTION
            want = "<"
        if not ok:
            failures.append(f"{sc.name}/{pen}: s_bar={s_bar:.15g} not {want} s0={s0:g}")
    return _result(5, "ordering of optima against s0", failures,
                   f"{checks} scenarios, resolution {ORDER_RESOLUTION:g}", start)


def criterion_6():
    start = time.perf_counter()
    penalties = builtin_penalties()
    failures, worst = [], 0.0
    for name in PRESETS:
        for j0 in BUILTIN_J0:
            for pen, spec in penalties.items():
                sc = preset_scenario(name, 0.0, j0, BUILTIN_T)
                s0 = penalty_minimizer(spec)
                err = abs(solve(sc, spec).s_star - s0)
                worst = max(worst, err)
                if err > 1e-8:
                    failures.append(f"{sc.name}/{pen}: |s_bar - s0| = {err:.3g}")
    return _result(6, "degenerate reduction eps = 0", failures,
                   f"max |s_bar - s0| = {worst:.3g}", start)


def closed_form_tracking(example, eps, j0, s, T=BUILTIN_T):
    """Tracking term of the preset problems, vectorized in ``s``."""
    a = float(j0) ** (2 * np.asarray(s, float))
    with np.errstate(over="ignore"):
        e1 = -np.expm1(-a * T)
        e2 = -np.expm1(-2 * a * T)
    if example == "example1":
        return eps ** 2 * e2 / (4 * a)
    return 0.5 * eps ** 2 * (T - 2 * e1 / a + e2 / (2 * a))


def oracle_minimizer(example, eps, j0, spec, n=10_000, tol=1e-12):
    """Dense log scan of the closed-form cost, then trisection on the best cell."""
    lo, hi = working_domain(spec)
    pen = np.vectorize(lambda x: penalty_eval(spec, x))

    def J(x):
        return closed_form_tracking(example, eps, j0, x) + pen(x)

    grid = np.geomspace(lo, hi, n)
    k = int(np.argmin(J(grid)))
    a, b = grid[max(k - 1, 0)], grid[min(k + 1, n - 1)]
    while b - a > tol * max(1.0, b):
        m1, m2 = a + (b - a) / 3, b - (b - a) / 3
        if float(J(m1)) < float(J(m2)):
            b = m2
        else:
            a = m1
    return 0.5 * (a + b)


def criterion_7():
    start = time.perf_counter()
    penalties = builtin_penalties()
    failures, worst, max_iter = [], 0.0, 0
    cases = builtin_cases(include_degenerate=True)
    for name, eps, j0, pen in cases:
        spec = penalties[pen]
        sc = preset_scenario(name, eps, j0, BUILTIN_T)
        rep = solve(sc, spec, OptimizerConfig())
        ref = oracle_minimizer(name, eps, j0, spec)
        err = abs(rep.s_star - ref)
        iters = len(rep.iterations) - 1
        worst, max_iter = max(worst, err), max(max_iter, iters)
        tag = f"{sc.name}/{pen}"
        if err > 1e-6:
            failures.append(f"{tag}: s_star={rep.s_star:.12g} oracle={ref:.12g}")
        if not abs(rep.dJ_star) <= 1e-10 * (1 + abs(rep.J_star)):
            failures.append(f"{tag}: |dJ|={abs(rep.dJ_star):.3g} above tolerance")
        if iters > 15:
            failures.append(f"{tag}: {iters} iterations")
    return _result(7, "optimizer against dense-scan oracle", failures,
                   f"{len(cases)} scenarios, max |ds|={worst:.2g}, max iterations={max_iter}",
                   start, limit=60.0)


def _state_cases(include_degenerate=True):
    eps = ((0.0,) if include_degenerate else ()) + BUILTIN_EPSILONS
    return [(name, e, j0) for name in PRESETS for e in eps for j0 in BUILTIN_J0]


def criterion_8():
    start = time.perf_counter()
    s_grid = np.geomspace(0.1, 3.0, 8)
    failures, worst = [], 0.0
    cases = _state_cases()
    for name, eps, j0 in cases:
        sc = preset_scenario(name, eps, j0, BUILTIN_T)
        for s in s_grid:
            lhs, rhs = energy_diagnostic(sc.state, s)
            if rhs > 0:
                worst = max(worst, lhs / rhs)
            if lhs > rhs * (1 + 1e-8):
                failures.append(f"{sc.name} s={s:.4g}: lhs={lhs:.10g} > rhs={rhs:.10g}")
    return _result(8, "energy estimate", failures,
                   f"{len(cases)} scenarios x {len(s_grid)} orders, max lhs/rhs={worst:.4g}",
                   start)


def criterion_9():
    start = time.perf_counter()
    s_grid = np.geomspace(0.05, 4.0, 32)
    failures, worst = [], 0.0
    cases = _state_cases()
    for name, eps, j0 in cases:
        sc = preset_scenario(name, eps, j0, BUILTIN_T)
        norms = np.array([sensitivity_norms(sc.state, s) for s in s_grid])
        for label, vals in (("s*|dy|", s_grid * norms[:, 0]),
                            ("s^2*|d2y|", s_grid ** 2 * norms[:, 1])):
            med = float(np.median(vals))
            peak = float(np.max(vals))
            if med > 0:
                worst = max(worst, peak / med)
            if peak > 2 * med:
                failures.append(f"{sc.name} {label}: max={peak:.6g} > 2*median={2 * med:.6g}")
    return _result(9, "scaled sensitivity norms stay within 2x median", failures,
                   f"{len(cases)} scenarios, worst max/median={worst:.3g}", start)


DETERMINISM_CONFIG = {
    "name": "determinism",
    "T": 1.0,
    "y0": {"preset": "example1", "epsilon": 0.5, "j0": 2},
    "penalty": {"kind": "exp_over_s"},
    "snapshots": [{"s": 1.0, "t": 0.0}, {"s": 1.0, "t": 0.5}],
    "snapshot_points": 65,
}


def _tree_bytes(root):
    out = {}
    for dirpath, _, files in os.walk(root):
        for fname in files:
            path = os.path.join(dirpath, fname)
            with open(path, "rb") as fh:
                out[os.path.relpath(path, root)] = fh.read()
    return out


def criterion_10():
    start = time.perf_counter()
    failures = []
    with tempfile.TemporaryDirectory() as tmp:
        cfg = os.path.join(tmp, "scenario.json")
        with open(cfg, "w", encoding="utf-8") as fh:
            json.dump(DETERMINISM_CONFIG, fh)
        trees = []
        for k in (1, 2):
            out = os.path.join(tmp, f"run{k}")
            proc = subprocess.run(
                [sys.executable, "-m", "fracorder", "run", "--config", cfg, "--out", out],
                capture_output=True, text=True)
            if proc.returncode not in (0, 2, 3):
                failures.append(f"run {k} exited {proc.returncode}: {proc.stderr.strip()}")
            trees.append(_tree_bytes(out) if os.path.isdir(out) else {})
        a, b = trees
        if not a:
            failures.append("no artifacts written")
        if sorted(a) != sorted(b):
            failures.append(f"file sets differ: {sorted(a)} vs {sorted(b)}")
        failures += [f"{name} differs" for name in sorted(set(a) & set(b)) if a[name] != b[name]]
        n_files = len(a)
    return _result(10, "byte-identical repeated runs", failures,
                   f"{n_files} files compared", start)


CRITERIA = {
    1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5,
    6: criterion_6, 7: criterion_7, 8: criterion_8, 9: criterion_9, 10: criterion_10,
}


def run_all(only=None, echo=None):
    results = []
    for number in sorted(only or CRITERIA):
        res = CRITERIA[number]()
        if echo:
            echo(res.line())
        results.append(res)
    return results
