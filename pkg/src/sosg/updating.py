"""Conditioning on an event A = {h >= 0} and weighted updating.

Single-constraint conditioning solves

    sup lambda_0  s.t.  f - lambda_0 - sum_i lambda_i g_i = s_10 + sum_j s_1j c_j + s_a h
                        -sum_i lambda_i g_i                = s_20 + sum_j s_2j c_j - s_b h

with the same lambda_i in both identities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from ._program import LinPoly, Program, sum_terms
from .cones import MomentVector, SemiAlgebraicSet
from .errors import ConditioningOnNullEvent
from .piecewise import (
    PiecewisePolynomial,
    RegionCertificate,
    _check_interval,
    _frames,
    _scales,
    _validate,
    as_piecewise,
    partition,
    pw_lower_prevision,
)
from .poly import Polynomial
from .prevision import (
    AssessmentSet,
    PrevisionResult,
    PrevisionStatus,
    SolveOptions,
    _certificate,
    _prepare,
)
from .sdp import Status, solve


@dataclass(frozen=True)
class Event:
    """A = {x : h_i(x) >= 0 for all i}."""

    hs: tuple[Polynomial, ...]
    half_degrees: tuple[int, ...] = ()

    def __post_init__(self):
        hs = tuple(self.hs)
        if not hs:
            raise ValueError("an event needs at least one constraint")
        if len({h.n for h in hs}) != 1:
            raise ValueError("event constraints must share one dimension")
        hd = tuple(self.half_degrees) if self.half_degrees else tuple(h.half_degree for h in hs)
        object.__setattr__(self, "hs", hs)
        object.__setattr__(self, "half_degrees", hd)

    @property
    def n(self) -> int:
        return self.hs[0].n

    @property
    def h(self) -> Polynomial:
        if len(self.hs) != 1:
            raise ValueError("event has several constraints")
        return self.hs[0]

    @classmethod
    def single(cls, h: Polynomial) -> "Event":
        return cls((h,))

    @classmethod
    def at_least(cls, s0: float) -> "Event":
        return cls((Polynomial.variable(1, 0) - s0,))

    @classmethod
    def interval(cls, lo: float, hi: float, single: bool = True) -> "Event":
        """[lo, hi] as one quadratic constraint, or as two affine ones."""
        x = Polynomial.variable(1, 0)
        if single:
            return cls(((x - lo) * (hi - x),))
        return cls((x - lo, hi - x))

    def contains(self, point: Sequence[float]) -> bool:
        return all(h(point) >= 0 for h in self.hs)

    def to_json(self) -> dict:
        return {"h": [h.to_json() for h in self.hs]}

    @classmethod
    def from_json(cls, data: Mapping) -> "Event":
        hs = data["h"]
        if isinstance(hs, Mapping):
            hs = [hs]
        return cls(tuple(Polynomial.from_json(h) for h in hs))


@dataclass
class ConditionalDualPoint:
    y: MomentVector
    z: MomentVector


def _with(omega: SemiAlgebraicSet, extra: Sequence[tuple[Polynomial, int]]) -> SemiAlgebraicSet:
    return SemiAlgebraicSet(
        omega.n,
        omega.constraints + tuple(p for p, _ in extra),
        omega.half_degrees + tuple(k for _, k in extra),
        omega.box if omega.box is not None else (
            (omega.interval_bounds(),) if omega.interval_bounds() is not None else None
        ),
    )


def _check(a: AssessmentSet, event: Event, f: Polynomial) -> None:
    a.check(f)
    if event.n != a.n:
        raise ValueError("event dimension does not match the domain")
    for h, k in zip(event.hs, event.half_degrees):
        if h.degree > 2 * a.degree or k > a.degree:
            raise ValueError(f"event constraint of degree {h.degree} needs d >= {k}")


def _conditional_primal(a: AssessmentSet, event: Event, f: Polynomial, opts: SolveOptions, second_with_h: bool) -> PrevisionResult:
    _check(a, event, f)
    pos = list(zip(event.hs, event.half_degrees))
    a1 = AssessmentSet(_with(a.omega, pos), a.gambles, a.degree)
    neg = [(-h, k) for h, k in pos] if second_with_h else []
    a2 = AssessmentSet(_with(a.omega, neg), a.gambles, a.degree)
    prep1, (ft,) = _prepare(a1, opts, [f])
    prep2, _ = _prepare(a2, opts)
    prog = Program(a.n, "max")
    lam0 = prog.free(1)[0]
    lam = prog.nonneg(len(prep1.gambles)) if prep1.gambles else []
    first = LinPoly.of(ft) - LinPoly.var(a.n, lam0)
    second = LinPoly(a.n)
    for v, g in zip(lam, prep1.gambles):
        first = first - LinPoly.var(a.n, v, g)
        second = second - LinPoly.var(a.n, v, g)
    slots1 = prog.xi(first, prep1.omega.generators, a.degree)
    slots2 = prog.xi(second, prep2.omega.generators, a.degree)
    prog.objective({int(lam0): 1.0})
    sol = solve(prog.prob, backend=opts.backend)
    if sol.status is Status.UNBOUNDED:
        return PrevisionResult(PrevisionStatus.NULL_EVENT, math.inf, message="conditioning event is null for these assessments")
    if sol.status is Status.INFEASIBLE:
        return PrevisionResult(PrevisionStatus.UNBOUNDED, -math.inf, message="no feasible lambda_0")
    if sol.status is not Status.OPTIMAL:
        return PrevisionResult(PrevisionStatus.INCONCLUSIVE, message=sol.message)
    return PrevisionResult(
        PrevisionStatus.VALUE,
        value=float(sol.x[lam0]),
        lambda0=float(sol.x[lam0]),
        lambdas=sol.x[lam] / prep1.scales if len(lam) else np.zeros(0),
        certificate=[_certificate(prep1, slots1, sol), _certificate(prep2, slots2, sol)],
    )


def conditional_lower_prevision(a: AssessmentSet, event: Event, f: Polynomial, opts: SolveOptions | None = None) -> PrevisionResult:
    """Lower prevision of f updated on a single-constraint event. Certificates: [first identity, second identity]."""
    if len(event.hs) != 1:
        raise ValueError("use multi_constraint_conditional for events with several constraints")
    return _conditional_primal(a, event, f, opts or SolveOptions(), second_with_h=True)


def conditional_upper_prevision(a: AssessmentSet, event: Event, f: Polynomial, opts: SolveOptions | None = None) -> PrevisionResult:
    return conditional_lower_prevision(a, event, -f, opts).negated()


def multi_constraint_conditional(a: AssessmentSet, event: Event, f: Polynomial, opts: SolveOptions | None = None) -> PrevisionResult:
    """Conservative relaxation: the first identity gets sum_i s_ai h_i, the second drops h entirely."""
    return _conditional_primal(a, event, f, opts or SolveOptions(), second_with_h=False)


def conditional_dual(a: AssessmentSet, event: Event, f: Polynomial, opts: SolveOptions | None = None) -> tuple[PrevisionResult, ConditionalDualPoint | None]:
    """inf L_y(f) over (y, z) with L_y(1) = 1, L_y(g) + L_z(g) >= 0 and PSD moment/localizing matrices.

    y is localized on h, z on -h; both are localized on the domain constraints.
    """
    opts = opts or SolveOptions()
    if len(event.hs) != 1:
        raise ValueError("the y/z dual is defined for single-constraint events")
    _check(a, event, f)
    h, nh = event.hs[0], event.half_degrees[0]
    ext = AssessmentSet(_with(a.omega, [(h, nh)]), a.gambles, a.degree)
    prep, (ft,) = _prepare(ext, opts, [f])
    hs = prep.omega.constraints[-1]
    d = a.degree
    prog = Program(a.n, "min")
    y, big = prog.moments(d)
    z, _ = prog.moments(d)
    prog.prob.add_constraint({int(y[0]): 1.0}, 1.0)
    one = Polynomial.constant(a.n, 1.0)
    for w in (y, z):
        prog.localizing_psd(w, big, one, d)
        for c, nc in prep.omega.generators[:-1]:
            prog.localizing_psd(w, big, c, d - nc)
    prog.localizing_psd(y, big, hs, d - nh)
    prog.localizing_psd(z, big, -hs, d - nh)
    if prep.gambles:
        slack = prog.nonneg(len(prep.gambles))
        for s, g in zip(slack, prep.gambles):
            prog.prob.add_constraint(
                sum_terms(prog.functional(y, big, g), prog.functional(z, big, g), {int(s): -1.0}), 0.0
            )
    prog.objective(prog.functional(y, big, ft))
    sol = solve(prog.prob, backend=opts.backend)
    if sol.status is Status.INFEASIBLE:
        return PrevisionResult(PrevisionStatus.NULL_EVENT, math.inf, message="no normalized functional is supported on the event"), None
    if sol.status is Status.UNBOUNDED:
        return PrevisionResult(PrevisionStatus.UNBOUNDED, -math.inf), None
    if sol.status is not Status.OPTIMAL:
        return PrevisionResult(PrevisionStatus.INCONCLUSIVE, message=sol.message), None
    yv, zv = MomentVector(a.n, d, sol.x[y]), MomentVector(a.n, d, sol.x[z])
    if prep.resc is not None:
        yv, zv = prep.resc.moments_back(yv), prep.resc.moments_back(zv)
    point = ConditionalDualPoint(yv, zv)
    return PrevisionResult(PrevisionStatus.VALUE, value=float(sol.objective_value), moments=point), point


def weighted_lower_prevision(a: AssessmentSet, f: Polynomial, W: Polynomial, opts: SolveOptions | None = None) -> PrevisionResult:
    """sup lambda_0 with (f - lambda_0) W - sum lambda_j g_j in Xi_2d; W >= 0 on the domain is the caller's promise."""
    opts = opts or SolveOptions()
    if W.is_zero:
        raise ValueError("weight is identically zero")
    a.check(f * W)
    prep, (ft, wt) = _prepare(a, opts, [f, W])
    prog = Program(a.n, "max")
    lam0 = prog.free(1)[0]
    lam = prog.nonneg(len(prep.gambles)) if prep.gambles else []
    expr = LinPoly.of(ft * wt) - LinPoly.var(a.n, lam0, wt)
    for v, g in zip(lam, prep.gambles):
        expr = expr - LinPoly.var(a.n, v, g)
    slots = prog.xi(expr, prep.omega.generators, a.degree)
    prog.objective({int(lam0): 1.0})
    sol = solve(prog.prob, backend=opts.backend)
    if sol.status is Status.UNBOUNDED:
        return PrevisionResult(PrevisionStatus.UNBOUNDED, math.inf)
    if sol.status is Status.INFEASIBLE:
        return PrevisionResult(PrevisionStatus.UNBOUNDED, -math.inf)
    if sol.status is not Status.OPTIMAL:
        return PrevisionResult(PrevisionStatus.INCONCLUSIVE, message=sol.message)
    return PrevisionResult(
        PrevisionStatus.VALUE,
        value=float(sol.x[lam0]),
        lambda0=float(sol.x[lam0]),
        lambdas=sol.x[lam] / prep.scales if len(lam) else np.zeros(0),
        certificate=_certificate(prep, slots, sol),
    )


def weighted_upper_prevision(a: AssessmentSet, f: Polynomial, W: Polynomial, opts: SolveOptions | None = None) -> PrevisionResult:
    return weighted_lower_prevision(a, -f, W, opts).negated()


def _weight_vanishes(omega, W: PiecewisePolynomial) -> bool:
    for r in partition(omega, [W]):
        if not W.piece_on(r.lower, r.upper).is_zero:
            return False
    return True


def pw_weighted_lower_prevision(omega, G: Sequence, f, W, d: int, opts: SolveOptions | None = None) -> PrevisionResult:
    """Per-region (f - lambda_0) W - sum lambda_j g_j in Xi, on the partition refined by W's breakpoints."""
    W = as_piecewise(W)
    if _weight_vanishes(omega, W):
        raise ValueError("weight vanishes on the whole domain")
    return pw_lower_prevision(omega, G, f, d, opts, weight=W)


def pw_weighted_upper_prevision(omega, G: Sequence, f, W, d: int, opts: SolveOptions | None = None) -> PrevisionResult:
    return pw_weighted_lower_prevision(omega, G, -as_piecewise(f), W, d, opts).negated()


def _event_roots(event: Event, a: float, b: float) -> list[float]:
    roots = []
    for h in event.hs:
        coeffs = [h.coef((k,)) for k in range(h.degree, -1, -1)]
        if h.degree == 0:
            continue
        for r in np.roots(coeffs):
            if abs(r.imag) < 1e-9 and a < r.real < b:
                roots.append(float(r.real))
    return roots


def pw_conditional_lower_prevision(omega, G: Sequence, event: Event, f, d: int, opts: SolveOptions | None = None) -> PrevisionResult:
    """Conditioning for piecewise gambles on a 1-D event.

    The partition is refined at the real roots of every h_i, so each region
    lies either in A or in its complement (decided at the midpoint). A regions
    carry the first identity and the remaining regions the second.
    """
    opts = opts or SolveOptions()
    if event.n != 1:
        raise ValueError("piecewise conditioning needs a univariate event")
    G = [as_piecewise(g) for g in G]
    f = as_piecewise(f)
    _validate(G, f, d)
    a, b = _check_interval(omega)
    regions = partition((a, b), G + [f], _event_roots(event, a, b))
    frames = _frames(regions, opts)
    inside = [event.contains([0.5 * (fr.region.lower + fr.region.upper)]) for fr in frames]
    if not any(inside):
        return PrevisionResult(PrevisionStatus.NULL_EVENT, math.inf, message="event has empty interior in the domain")
    scales = _scales(frames, G, opts)
    prog = Program(1, "max")
    lam0 = prog.free(1)[0]
    lam = prog.nonneg(len(G)) if G else np.zeros(0, dtype=int)
    certs = []
    for fr, ins in zip(frames, inside):
        expr = LinPoly(1)
        if ins:
            expr = LinPoly.of(fr.restrict(f)) - LinPoly.var(1, lam0)
        for v, g, s in zip(lam, G, scales):
            expr = expr - LinPoly.var(1, v, fr.restrict(g) / s)
        certs.append((fr, prog.xi(expr, fr.generators, d)))
    prog.objective({int(lam0): 1.0})
    sol = solve(prog.prob, backend=opts.backend)
    if sol.status is Status.UNBOUNDED:
        return PrevisionResult(PrevisionStatus.NULL_EVENT, math.inf, message="conditioning event is null for these assessments")
    if sol.status is Status.INFEASIBLE:
        return PrevisionResult(PrevisionStatus.UNBOUNDED, -math.inf)
    if sol.status is not Status.OPTIMAL:
        return PrevisionResult(PrevisionStatus.INCONCLUSIVE, message=sol.message)
    return PrevisionResult(
        PrevisionStatus.VALUE,
        value=float(sol.x[lam0]),
        lambda0=float(sol.x[lam0]),
        lambdas=sol.x[lam] / scales if len(lam) else np.zeros(0),
        certificate=[RegionCertificate(fr.region, [s.gram(sol) for s in slots], fr.rescale) for fr, slots in certs],
    )


def pw_conditional_upper_prevision(omega, G: Sequence, event: Event, f, d: int, opts: SolveOptions | None = None) -> PrevisionResult:
    return pw_conditional_lower_prevision(omega, G, event, -as_piecewise(f), d, opts).negated()


def require_value(res: PrevisionResult) -> PrevisionResult:
    """Raise ConditioningOnNullEvent for null-event results, pass everything else through."""
    if res.status is PrevisionStatus.NULL_EVENT:
        raise ConditioningOnNullEvent(res.message or "conditioning on a null event")
    return res
