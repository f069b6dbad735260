"""Shared numerical primitives: graded composite Gauss-Legendre quadrature,
golden-section search and deterministic compensated summation."""

import math

import numpy as np

GL_ORDER = 8
_GL_X, _GL_W = np.polynomial.legendre.leggauss(GL_ORDER)

# exp(-x) underflows to zero in double precision beyond this
EXP_UNDERFLOW = 745.0

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


class QuadratureError(RuntimeError):
    """Raised when panel doubling fails to reach the requested tolerance."""


def compensated_sum(values):
    """Sum in ascending index order with exact rounding (Shewchuk/fsum)."""
    return math.fsum(float(v) for v in values)


def graded_edges(breaks, rate, resolve=64.0, max_levels=1100):
    """Panel edges for integrands decaying like exp(-rate * (x - left)).

    Each interval ``[b_i, b_{i+1}]`` is cut into dyadic panels accumulating at
    its left end until the smallest panel satisfies ``rate * width <= 1/resolve``.
    Intervals on which the decay is already resolved are left whole.
    """
    breaks = np.asarray(breaks, dtype=float)
    edges = [breaks[0]]
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        width = hi - lo
        if width <= 0.0:
            continue
        x = rate * width * resolve
        if math.isfinite(x) and x <= 1.0:
            levels = 0
        elif not math.isfinite(x):
            levels = max_levels
        else:
            levels = min(max_levels, int(math.ceil(math.log2(x))))
        if levels:
            edges.extend(lo + width * np.exp2(-np.arange(levels, 0, -1, dtype=float)))
        edges.append(hi)
    return np.asarray(edges)


def panel_rule(edges, n_sub):
    """Nodes and weights of the composite 8-point rule on ``edges``, each panel
    split into ``n_sub`` equal pieces."""
    edges = np.asarray(edges, dtype=float)
    frac = np.linspace(0.0, 1.0, n_sub + 1)
    sub = edges[:-1, None] + (edges[1:] - edges[:-1])[:, None] * frac[None, :]
    left = sub[:, :-1].ravel()
    width = (sub[:, 1:] - sub[:, :-1]).ravel()
    nodes = left[:, None] + 0.5 * width[:, None] * (_GL_X[None, :] + 1.0)
    weights = 0.5 * width[:, None] * _GL_W[None, :]
    return nodes.ravel(), weights.ravel()


def integrate_graded(func, breaks, rate, rtol=1e-11, min_panels=8, max_panels=2**13):
    """Integrate ``func`` over ``[breaks[0], breaks[-1]]``.

    ``func`` maps a 1-D node array of length N to an array of shape (..., N);
    the result has shape (...). The subdivision count doubles until two
    successive results agree to ``rtol`` in the max norm.
    """
    edges = graded_edges(breaks, rate)
    n_panels = len(edges) - 1
    if n_panels < 1:
        raise ValueError("empty integration interval")
    n_sub = max(1, -(-min_panels // n_panels))
    previous = None
    while True:
        nodes, weights = panel_rule(edges, n_sub)
        current = np.sum(func(nodes) * weights, axis=-1)
        if previous is not None:
            scale = max(np.max(np.abs(current), initial=0.0),
                        np.max(np.abs(previous), initial=0.0))
            change = np.max(np.abs(current - previous), initial=0.0)
            if change <= rtol * scale:
                return current
        if 2 * n_sub * n_panels > max_panels:
            raise QuadratureError(
                f"no convergence to rtol={rtol:g} with {n_sub * n_panels} panels")
        previous = current
        n_sub *= 2


def simpson_weights(n_points, length):
    """Composite Simpson weights on a uniform grid of ``n_points`` (odd) over ``length``."""
    if n_points < 3 or n_points % 2 == 0:
        raise ValueError("composite Simpson needs an odd number of samples >= 3")
    h = length / (n_points - 1)
    w = np.ones(n_points)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * (h / 3.0)


def golden_section(f, lo, hi, tol=1e-10, max_iter=500):
    """Minimize a unimodal ``f`` on ``[lo, hi]``; returns ``(x, f(x), evaluations)``."""
    a, b = float(lo), float(hi)
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    evals = 2
    while (b - a) > tol and evals < max_iter:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
        evals += 1
    if fc <= fd:
        return c, fc, evals
    return d, fd, evals
