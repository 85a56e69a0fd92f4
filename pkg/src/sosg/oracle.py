"""Discretized linear-programming reference values on a 1-D grid.

The "for all x" constraints are imposed only at grid points, so each value
here is an inner approximation of the exact (nonnegativity-based) answer:
it can only overestimate a lower prevision. Breakpoints are inserted exactly
and sampled from both sides.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .piecewise import PiecewisePolynomial, _check_interval, as_piecewise, merge_breakpoints
from .sdp import SdpProblem, Status, solve

MIN_GRID = 100


def grid(a: float, b: float, grid_n: int, breakpoints: Sequence[float] = ()) -> np.ndarray:
    if grid_n < MIN_GRID:
        raise ValueError(f"grid_n must be at least {MIN_GRID}")
    pts = np.linspace(a, b, grid_n)
    inner = [x for x in breakpoints if a < x < b]
    return np.unique(np.concatenate([pts, inner]))


def _values(g: PiecewisePolynomial, xs: np.ndarray, limits: Sequence[float]) -> np.ndarray:
    """Right values at xs followed by left limits at ``limits``."""
    right = g.eval_many(xs)
    left = np.array([g.left_limit(x) for x in limits])
    return np.concatenate([right, left])


def _points(omega, gambles, grid_n: int, extra: Sequence[float] = ()):
    a, b = _check_interval(omega)
    bps = merge_breakpoints(*(g.breakpoints for g in gambles), extra)
    xs = grid(a, b, grid_n, bps)
    limits = [x for x in bps if a < x <= b]
    return xs, limits


def _solve_lp(rows_f: np.ndarray, rows_g: np.ndarray, lam0_coef: np.ndarray, bounded_lam0: bool = False) -> tuple[Status, float, np.ndarray]:
    """sup lambda_0 s.t. lam0_coef_k * lambda_0 + sum_j lambda_j G[k, j] <= F[k] for all k."""
    K, J = rows_g.shape
    prob = SdpProblem("max", max_vars=None)
    if bounded_lam0:
        lam0, cap = prob.add_nonneg(2)
        prob.add_constraint({int(lam0): 1.0, int(cap): 1.0}, 1.0)
    else:
        lam0 = prob.add_free(1)[0]
    lam = prob.add_nonneg(J) if J else np.zeros(0, dtype=int)
    slack = prob.add_nonneg(K)
    A = sp.hstack([
        sp.csr_matrix(lam0_coef.reshape(-1, 1)),
        sp.csr_matrix(rows_g),
        sp.identity(K, format="csr"),
    ])
    prob.add_constraints(A, rows_f, cols=np.concatenate([[lam0], lam, slack]).astype(int))
    prob.set_objective({int(lam0): 1.0})
    sol = solve(prob, backend="highs")
    if sol.status is Status.UNBOUNDED:
        return sol.status, math.inf, np.zeros(J)
    if sol.status is Status.INFEASIBLE:
        return sol.status, -math.inf, np.zeros(J)
    if sol.status is not Status.OPTIMAL:
        raise RuntimeError(f"LP oracle failed: {sol.message}")
    return sol.status, float(sol.x[lam0]), sol.x[lam]


def _matrix(G, xs, limits) -> np.ndarray:
    if not G:
        return np.zeros((len(xs) + len(limits), 0))
    return np.column_stack([_values(g, xs, limits) for g in G])


def lp_lower_prevision(omega, G: Sequence, f, grid_n: int = 8001) -> float:
    """sup lambda_0 with f(x_k) - lambda_0 - sum lambda_j g_j(x_k) >= 0 on the grid; +inf if unbounded."""
    G = [as_piecewise(g) for g in G]
    f = as_piecewise(f)
    xs, limits = _points(omega, G + [f], grid_n)
    Gm = _matrix(G, xs, limits)
    F = _values(f, xs, limits)
    return _solve_lp(F, Gm, np.ones(len(F)))[1]


def lp_upper_prevision(omega, G: Sequence, f, grid_n: int = 8001) -> float:
    return -lp_lower_prevision(omega, G, -as_piecewise(f), grid_n)


def lp_avoids_sure_loss(omega, G: Sequence, grid_n: int = 8001) -> float:
    """sup lambda_0 in [0, 1] with -lambda_0 - sum lambda_j g_j(x_k) >= 0; 0 means a consistent pricing exists."""
    G = [as_piecewise(g) for g in G]
    xs, limits = _points(omega, G, grid_n)
    Gm = _matrix(G, xs, limits)
    return _solve_lp(np.zeros(len(Gm)), Gm, np.ones(len(Gm)), bounded_lam0=True)[1]


def lp_conditional(omega, G: Sequence, event: tuple[float, float], f, grid_n: int = 8001) -> float:
    """sup lambda_0 with f - lambda_0 - sum lambda_j g_j >= 0 on A and -sum lambda_j g_j >= 0 off A.

    A = [lo, hi] is closed. The off-A constraints are also imposed at A's
    endpoints, using the value seen from outside A (left limit at lo, right
    value at hi), which is the closure of the complement. Returns +inf when A
    is null for the assessments.
    """
    G = [as_piecewise(g) for g in G]
    f = as_piecewise(f)
    a, b = _check_interval(omega)
    lo, hi = max(event[0], a), min(event[1], b)
    if lo > hi:
        return math.inf
    bps = merge_breakpoints(*(g.breakpoints for g in G + [f]), [lo, hi])
    xs = grid(a, b, grid_n, bps)
    inner = [x for x in bps if a < x <= b]

    def rows(right: np.ndarray, left: Sequence[float]):
        F = _values(f, right, left)
        return F, _matrix(G, right, left)

    in_right = xs[(xs >= lo) & (xs <= hi)]
    in_left = [x for x in inner if lo < x <= hi]
    out_right = xs[(xs < lo) | (xs > hi)]
    out_left = [x for x in inner if x <= lo or x > hi]
    if hi < b:
        out_right = np.append(out_right, hi)
    F_in, G_in = rows(in_right, in_left)
    _, G_out = rows(out_right, out_left)
    rows_g = np.vstack([G_in, G_out])
    rhs = np.concatenate([F_in, np.zeros(len(G_out))])
    coef = np.concatenate([np.ones(len(F_in)), np.zeros(len(G_out))])
    return _solve_lp(rhs, rows_g, coef)[1]


def lp_lower_prevision_points(points: np.ndarray, G: Sequence, f) -> float:
    """Same LP on an explicit point cloud (any dimension); G and f are Polynomials."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    Gm = np.column_stack([g.eval_many(points) for g in G]) if G else np.zeros((len(points), 0))
    F = f.eval_many(points)
    return _solve_lp(F, Gm, np.ones(len(F)))[1]
