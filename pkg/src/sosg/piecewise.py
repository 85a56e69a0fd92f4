"""Piecewise-polynomial gambles on a compact interval.

Each region [lo, hi] between consecutive breakpoints gets its own Xi
certificate with constraints x - lo >= 0 and hi - x >= 0 (multipliers of
degree 2(d-1), free SOS part of degree 2d). The multipliers lambda_j are shared
across regions. By default every region is mapped to [0, 1] before assembly,
which is exact because SOS cones are closed under affine substitution.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from ._program import LinPoly, Program, sum_terms
from .errors import InconclusiveError
from .poly import Polynomial
from .prevision import (
    AslResult,
    AslStatus,
    PrevisionResult,
    PrevisionStatus,
    SolveOptions,
    _status_from_primal,
    classify_asl,
)
from .sdp import Status, solve

COALESCE_TOL = 1e-9


def _as_poly(p) -> Polynomial:
    if isinstance(p, Polynomial):
        if p.n != 1:
            raise ValueError("piecewise gambles are univariate")
        return p
    return Polynomial.constant(1, float(p))


class PiecewisePolynomial:
    """pieces[i] is valid on [b_i, b_{i+1}) with b_0 = -inf and b_{k+1} = +inf."""

    __slots__ = ("breakpoints", "pieces")

    def __init__(self, breakpoints: Sequence[float], pieces: Sequence[Polynomial | float]):
        bps = [float(b) for b in breakpoints]
        if any(b2 <= b1 for b1, b2 in zip(bps, bps[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        if any(not math.isfinite(b) for b in bps):
            raise ValueError("breakpoints must be finite")
        if len(pieces) != len(bps) + 1:
            raise ValueError(f"{len(bps)} breakpoints need {len(bps) + 1} pieces, got {len(pieces)}")
        self.breakpoints = tuple(bps)
        self.pieces = tuple(_as_poly(p) for p in pieces)

    @classmethod
    def from_poly(cls, p: Polynomial | float) -> "PiecewisePolynomial":
        return cls([], [p])

    @property
    def degree(self) -> int:
        return max(p.degree for p in self.pieces)

    def piece_at(self, x: float) -> Polynomial:
        return self.pieces[bisect.bisect_right(self.breakpoints, x)]

    def piece_on(self, lo: float, hi: float) -> Polynomial:
        """The piece governing the open interval (lo, hi)."""
        return self.piece_at(0.5 * (lo + hi))

    def __call__(self, x: float) -> float:
        return self.piece_at(x)([x])

    def eval_many(self, xs: np.ndarray) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        idx = np.searchsorted(self.breakpoints, xs, side="right")
        out = np.empty_like(xs)
        for k, p in enumerate(self.pieces):
            mask = idx == k
            if mask.any():
                out[mask] = p.eval_many(xs[mask][:, None])
        return out

    def left_limit(self, x: float) -> float:
        return self.pieces[bisect.bisect_left(self.breakpoints, x)]([x])

    def _combine(self, other, op: Callable) -> "PiecewisePolynomial":
        other = other if isinstance(other, PiecewisePolynomial) else PiecewisePolynomial.from_poly(other)
        bps = merge_breakpoints(self.breakpoints, other.breakpoints)
        probes = _probe_points(bps)
        return PiecewisePolynomial(bps, [op(self.piece_at(x), other.piece_at(x)) for x in probes])

    def __add__(self, other):
        return self._combine(other, lambda p, q: p + q)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, lambda p, q: p - q)

    def __rsub__(self, other):
        return self._combine(other, lambda p, q: q - p)

    def __mul__(self, other):
        return self._combine(other, lambda p, q: p * q)

    __rmul__ = __mul__

    def __neg__(self):
        return PiecewisePolynomial(self.breakpoints, [-p for p in self.pieces])

    def compose_affine(self, scale: float, shift: float) -> "PiecewisePolynomial":
        """g(shift + scale*t) as a piecewise polynomial in t (scale > 0)."""
        if scale <= 0:
            raise ValueError("scale must be positive")
        return PiecewisePolynomial(
            [(b - shift) / scale for b in self.breakpoints],
            [p.compose_affine([scale], [shift]) for p in self.pieces],
        )

    def to_json(self) -> dict:
        return {"breakpoints": list(self.breakpoints), "pieces": [p.to_json() for p in self.pieces]}

    @classmethod
    def from_json(cls, data: Mapping) -> "PiecewisePolynomial":
        if "terms" in data:
            return cls.from_poly(Polynomial.from_json(data))
        return cls(data.get("breakpoints", []), [Polynomial.from_json(p) for p in data["pieces"]])

    def __repr__(self):
        return f"PiecewisePolynomial({list(self.breakpoints)}, {list(self.pieces)})"


def as_piecewise(g) -> PiecewisePolynomial:
    if isinstance(g, PiecewisePolynomial):
        return g
    return PiecewisePolynomial.from_poly(g)


def merge_breakpoints(*lists: Sequence[float], tol: float = COALESCE_TOL) -> list[float]:
    pts = sorted(float(b) for lst in lists for b in lst)
    out: list[float] = []
    for b in pts:
        if not out or b - out[-1] > tol * max(1.0, abs(b)):
            out.append(b)
    return out


def _probe_points(bps: Sequence[float]) -> list[float]:
    if not bps:
        return [0.0]
    probes = [bps[0] - 1.0]
    probes += [0.5 * (a + b) for a, b in zip(bps, bps[1:])]
    probes.append(bps[-1] + 1.0)
    return probes


def call_payoff(strike: float) -> PiecewisePolynomial:
    """max(x - strike, 0)."""
    x = Polynomial.variable(1, 0)
    return PiecewisePolynomial([strike], [0.0, x - strike])


def indicator_at_least(c: float) -> PiecewisePolynomial:
    """I[c, inf), right-continuous at c."""
    return PiecewisePolynomial([c], [0.0, 1.0])


@dataclass(frozen=True)
class Region:
    lower: float
    upper: float

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ValueError(f"degenerate region [{self.lower}, {self.upper}]")

    @property
    def constraints(self) -> tuple[Polynomial, Polynomial]:
        x = Polynomial.variable(1, 0)
        return (x - self.lower, self.upper - x)

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, x: float) -> bool:
        return self.lower <= x <= self.upper


def _check_interval(omega) -> tuple[float, float]:
    try:
        a, b = (float(v) for v in omega)
    except (TypeError, ValueError):
        bounds = getattr(omega, "interval_bounds", lambda: None)()
        if bounds is None:
            raise ValueError("piecewise previsions need a compact interval [a, b]") from None
        a, b = bounds
    if not (math.isfinite(a) and math.isfinite(b)):
        raise ValueError("piecewise previsions need a compact interval [a, b]")
    if not a < b:
        raise ValueError(f"empty domain [{a}, {b}]")
    return a, b


def partition(omega, gambles: Sequence[PiecewisePolynomial] = (), extra: Sequence[float] = ()) -> list[Region]:
    """Regions of [a, b] cut at every breakpoint strictly inside it."""
    a, b = _check_interval(omega)
    bps = merge_breakpoints(*(as_piecewise(g).breakpoints for g in gambles), extra)
    inner = [x for x in bps if a + COALESCE_TOL * max(1.0, abs(a)) < x < b - COALESCE_TOL * max(1.0, abs(b))]
    edges = [a] + inner + [b]
    return [Region(lo, hi) for lo, hi in zip(edges, edges[1:])]


@dataclass
class RegionCertificate:
    region: Region
    grams: list  # GramRepresentation per generator in local coordinates t in [0, 1] (or x if not rescaled)
    rescaled: bool

    def to_json(self) -> dict:
        return {
            "region": [self.region.lower, self.region.upper],
            "coordinates": "t = (x - lower) / (upper - lower)" if self.rescaled else "x",
            "grams": [g.to_json() for g in self.grams],
        }


class RegionFrame:
    """Local coordinates on one region; polynomials are re-expressed there before assembly."""

    def __init__(self, region: Region, rescale: bool):
        self.region = region
        self.rescale = rescale
        t = Polynomial.variable(1, 0)
        if rescale:
            self.generators = [(t, 1), (1.0 - t, 1)]
        else:
            w = region.width
            self.generators = [((t - region.lower) / w, 1), ((region.upper - t) / w, 1)]

    def local(self, p: Polynomial) -> Polynomial:
        if not self.rescale:
            return p
        return p.compose_affine([self.region.width], [self.region.lower])

    def restrict(self, g: PiecewisePolynomial) -> Polynomial:
        return self.local(g.piece_on(self.region.lower, self.region.upper))

    def extra_generator(self, h: Polynomial) -> tuple[Polynomial, int]:
        hl = self.local(h)
        s = hl.max_abs_coef()
        return (hl / s if s > 0 else hl), h.half_degree


def _frames(regions: Sequence[Region], opts: SolveOptions) -> list[RegionFrame]:
    return [RegionFrame(r, opts.rescale is not False) for r in regions]


def _validate(G: Sequence[PiecewisePolynomial], f: PiecewisePolynomial, d: int) -> None:
    if d < 1:
        raise ValueError("piecewise previsions need d >= 1")
    for g in list(G) + [f]:
        if g.degree > 2 * d:
            raise ValueError(f"piece of degree {g.degree} exceeds 2d = {2 * d}")


def _scales(frames, G, opts) -> np.ndarray:
    if not opts.normalize_gambles or not G:
        return np.ones(len(G))
    out = []
    for g in G:
        s = max(fr.restrict(g).max_abs_coef() for fr in frames)
        out.append(s if s > 0 else 1.0)
    return np.array(out)


def _scaled(g, k: float):
    return type(g)(g.basis, g.Q * k)


def pw_lower_prevision(
    omega,
    G: Sequence,
    f,
    d: int,
    opts: SolveOptions | None = None,
    weight=None,
) -> PrevisionResult:
    """sup lambda_0 with (f - lambda_0) W - sum lambda_j g_j in Xi on every region (W = 1 unless given)."""
    opts = opts or SolveOptions()
    G = [as_piecewise(g) for g in G]
    f = as_piecewise(f)
    W = None if weight is None else as_piecewise(weight)
    _validate(G, f if W is None else f * W, d)
    regions = partition(omega, G + [f] + ([W] if W is not None else []))
    frames = _frames(regions, opts)
    scales = _scales(frames, G, opts)
    # solve for f / sf so payoffs in the hundreds do not dominate the gram entries
    sf = _scales(frames, [f], opts)[0]
    prog = Program(1, "max")
    lam0 = prog.free(1)[0]
    lam = prog.nonneg(len(G)) if G else np.zeros(0, dtype=int)
    certs = []
    for fr in frames:
        fl = fr.restrict(f) / sf
        wl = Polynomial.constant(1, 1.0) if W is None else fr.restrict(W)
        expr = LinPoly.of(fl * wl) - LinPoly.var(1, lam0, wl)
        for v, g, s in zip(lam, G, scales):
            expr = expr - LinPoly.var(1, v, fr.restrict(g) / s)
        certs.append((fr, prog.xi(expr, fr.generators, d)))
    prog.objective({int(lam0): 1.0})
    sol = solve(prog.prob, backend=opts.backend)
    bad = _status_from_primal(sol)
    if bad is not None:
        return bad
    return PrevisionResult(
        PrevisionStatus.VALUE,
        value=float(sol.x[lam0]) * sf,
        lambda0=float(sol.x[lam0]) * sf,
        lambdas=sf * sol.x[lam] / scales if len(lam) else np.zeros(0),
        certificate=[
            RegionCertificate(fr.region, [_scaled(s.gram(sol), sf) for s in slots], fr.rescale) for fr, slots in certs
        ],
    )


def pw_upper_prevision(omega, G, f, d: int, opts: SolveOptions | None = None, weight=None) -> PrevisionResult:
    return pw_lower_prevision(omega, G, -as_piecewise(f), d, opts, weight).negated()


def pw_dual_lower_prevision(omega, G: Sequence, f, d: int, opts: SolveOptions | None = None) -> PrevisionResult:
    """inf sum_r L_r(f) over per-region moment vectors with total mass 1 and sum_r L_r(g_j) >= 0."""
    opts = opts or SolveOptions()
    G = [as_piecewise(g) for g in G]
    f = as_piecewise(f)
    _validate(G, f, d)
    regions = partition(omega, G + [f])
    frames = _frames(regions, opts)
    scales = _scales(frames, G, opts)
    prog = Program(1, "min")
    ys = [prog.moments(d) for _ in frames]
    prog.prob.add_constraint({int(y[0]): 1.0 for y, _ in ys}, 1.0)
    one = Polynomial.constant(1, 1.0)
    for (y, big), fr in zip(ys, frames):
        prog.localizing_psd(y, big, one, d)
        for c, nc in fr.generators:
            prog.localizing_psd(y, big, c, d - nc)
    if G:
        slack = prog.nonneg(len(G))
        for s, g, sc in zip(slack, G, scales):
            terms = [prog.functional(y, big, fr.restrict(g) / sc) for (y, big), fr in zip(ys, frames)]
            prog.prob.add_constraint(sum_terms(*terms, {int(s): -1.0}), 0.0)
    prog.objective(sum_terms(*[prog.functional(y, big, fr.restrict(f)) for (y, big), fr in zip(ys, frames)]))
    sol = solve(prog.prob, backend=opts.backend)
    if sol.status is Status.UNBOUNDED:
        return PrevisionResult(PrevisionStatus.UNBOUNDED, -math.inf)
    if sol.status is Status.INFEASIBLE:
        return PrevisionResult(PrevisionStatus.UNBOUNDED, math.inf)
    if sol.status is not Status.OPTIMAL:
        return PrevisionResult(PrevisionStatus.INCONCLUSIVE, message=sol.message)
    return PrevisionResult(PrevisionStatus.VALUE, value=float(sol.objective_value))


def pw_avoids_sure_loss(omega, G: Sequence, d: int, opts: SolveOptions | None = None) -> AslResult:
    opts = opts or SolveOptions()
    G = [as_piecewise(g) for g in G]
    _validate(G, PiecewisePolynomial.from_poly(0.0), d)
    frames = _frames(partition(omega, G), opts)
    scales = _scales(frames, G, opts)
    prog = Program(1, "max")
    lam0, slack = prog.nonneg(2)
    prog.prob.add_constraint({int(lam0): 1.0, int(slack): 1.0}, 1.0)
    lam = prog.nonneg(len(G)) if G else np.zeros(0, dtype=int)
    for fr in frames:
        expr = -LinPoly.var(1, lam0)
        for v, g, s in zip(lam, G, scales):
            expr = expr - LinPoly.var(1, v, fr.restrict(g) / s)
        prog.xi(expr, fr.generators, d)
    prog.objective({int(lam0): 1.0})
    sol = solve(prog.prob, backend=opts.backend)
    if sol.status is not Status.OPTIMAL:
        return AslResult(AslStatus.INCONCLUSIVE, float("nan"), message=sol.message)
    l0 = float(sol.x[lam0])
    return AslResult(classify_asl(l0), l0, sol.x[lam] / scales if len(lam) else np.zeros(0))


def pw_extends(omega, G: Sequence, f, d: int, opts: SolveOptions | None = None) -> bool:
    """f - sum lambda_j g_j in the per-region Xi cone for some lambda >= 0."""
    opts = opts or SolveOptions()
    G = [as_piecewise(g) for g in G]
    f = as_piecewise(f)
    _validate(G, f, d)
    frames = _frames(partition(omega, G + [f]), opts)
    scales = _scales(frames, G, opts)
    prog = Program(1, "min")
    lam = prog.nonneg(len(G)) if G else np.zeros(0, dtype=int)
    for fr in frames:
        expr = LinPoly.of(fr.restrict(f))
        for v, g, s in zip(lam, G, scales):
            expr = expr - LinPoly.var(1, v, fr.restrict(g) / s)
        prog.xi(expr, fr.generators, d)
    sol = solve(prog.prob, backend=opts.backend)
    if sol.status is Status.OPTIMAL:
        return True
    if sol.status is Status.INFEASIBLE:
        return False
    raise InconclusiveError(f"solver returned {sol.status.value}: {sol.message}")


def combination(G: Sequence, lambdas: Sequence[float], f=None, lambda0: float = 0.0) -> PiecewisePolynomial:
    """f - lambda_0 - sum lambda_j g_j (f = 0 if omitted), for pointwise soundness checks."""
    out = as_piecewise(0.0 if f is None else f) - lambda0
    for g, l in zip(G, lambdas):
        out = out - as_piecewise(g) * float(l)
    return out
