"""Lower and upper previsions of polynomial gambles under finite assessments.

The primal program is

    sup  lambda_0   s.t.  f - lambda_0 - sum_j lambda_j g_j  in  Xi_2d(Omega),  lambda_j >= 0,

and the dual is a moment program over y with y_0 = 1, L(g_j) >= 0 and PSD
moment and localizing matrices. Both are assembled explicitly; neither is
read off the other's multipliers.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

from ._program import LinPoly, Program, sum_terms
from .cones import MomentVector, SemiAlgebraicSet, XiCertificate
from .errors import InconclusiveError
from .poly import GramRepresentation, Polynomial, affine_basis_transform, monomial_basis
from .sdp import Status, solve

logger = logging.getLogger(__name__)

RESCALE_WIDTH = 10.0
ASL_AVOIDS = 0.01
ASL_SURE_LOSS = 0.99


class PrevisionStatus(enum.Enum):
    VALUE = "Value"
    UNBOUNDED = "Unbounded"
    INCONCLUSIVE = "Inconclusive"
    NULL_EVENT = "ConditioningOnNullEvent"


@dataclass
class PrevisionResult:
    status: PrevisionStatus
    value: float = float("nan")
    lambda0: float = float("nan")
    lambdas: np.ndarray = field(default_factory=lambda: np.zeros(0))
    certificate: object = None
    moments: object = None
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status is PrevisionStatus.VALUE

    @property
    def bounded(self) -> bool:
        return self.status is PrevisionStatus.VALUE and math.isfinite(self.value)

    def negated(self) -> "PrevisionResult":
        """Result for -f as an upper prevision, from the lower prevision of -f."""
        out = replace(self, value=-self.value, lambda0=-self.lambda0)
        return out

    def to_json(self) -> dict:
        cert = self.certificate
        if isinstance(cert, XiCertificate):
            cert = cert.to_json()
        elif isinstance(cert, list):
            cert = [c.to_json() if hasattr(c, "to_json") else c for c in cert]
        return {
            "status": self.status.value,
            "value": None if math.isnan(self.value) else (self.value if math.isfinite(self.value) else str(self.value)),
            "lambda0": None if not math.isfinite(self.lambda0) else self.lambda0,
            "multipliers": [float(v) for v in self.lambdas],
            "certificate": cert,
        }


@dataclass
class SolveOptions:
    """rescale: None rescales 1-D intervals wider than RESCALE_WIDTH to [0, 1]."""

    rescale: bool | None = None
    backend: str = "clarabel"
    normalize_gambles: bool = True


@dataclass
class AssessmentSet:
    omega: SemiAlgebraicSet
    gambles: list[Polynomial]
    degree: int

    def __post_init__(self):
        self.gambles = list(self.gambles)
        for g in self.gambles:
            if g.n != self.omega.n:
                raise ValueError("gamble dimension does not match the domain")
            if g.degree > 2 * self.degree:
                raise ValueError(f"gamble of degree {g.degree} needs d >= {g.half_degree}, got d={self.degree}")
        if self.degree < self.omega.max_half_degree:
            raise ValueError(f"d={self.degree} is below the domain half-degree {self.omega.max_half_degree}")

    @property
    def n(self) -> int:
        return self.omega.n

    def with_degree(self, d: int) -> "AssessmentSet":
        return AssessmentSet(self.omega, self.gambles, d)

    def min_degree(self, f: Polynomial | None = None) -> int:
        ds = [self.omega.max_half_degree, 1 if f is None else f.half_degree] + [g.half_degree for g in self.gambles]
        return max(ds)

    def check(self, f: Polynomial) -> None:
        if f.n != self.n:
            raise ValueError("gamble dimension does not match the domain")
        if f.degree > 2 * self.degree:
            raise ValueError(f"f has degree {f.degree}; d={self.degree} admits at most {2 * self.degree}")

    def to_json(self) -> dict:
        return {
            "omega": self.omega.to_json(),
            "gambles": [g.to_json() for g in self.gambles],
            "degree": self.degree,
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "AssessmentSet":
        gambles = [Polynomial.from_json(g) for g in data.get("gambles", [])]
        n = gambles[0].n if gambles else None
        omega = SemiAlgebraicSet.from_json(data.get("omega", {}), n)
        return cls(omega, gambles, int(data["degree"]))


class Rescaling:
    """x = lo + (hi - lo) t on a 1-D interval, with maps for certificates and moments."""

    def __init__(self, lo: float, hi: float):
        self.lo, self.hi = float(lo), float(hi)
        self.width = self.hi - self.lo

    @classmethod
    def for_set(cls, omega: SemiAlgebraicSet, opts: SolveOptions) -> "Rescaling | None":
        if opts.rescale is False:
            return None
        bounds = omega.interval_bounds()
        if bounds is None:
            if opts.rescale:
                logger.info("rescaling requested but the domain is not a 1-D interval; skipped")
            return None
        lo, hi = bounds
        if opts.rescale is None and hi - lo <= RESCALE_WIDTH:
            return None
        return cls(lo, hi)

    def poly(self, p: Polynomial) -> Polynomial:
        return p.compose_affine([self.width], [self.lo])

    def omega(self, omega: SemiAlgebraicSet) -> tuple[SemiAlgebraicSet, list[float]]:
        return omega.compose_affine([self.width], [self.lo])

    def gram_back(self, g: GramRepresentation, factor: float = 1.0) -> GramRepresentation:
        """Gram matrix of sigma(t(x)) / factor in x coordinates."""
        T = affine_basis_transform(g.basis, [1.0 / self.width], [-self.lo / self.width])
        return GramRepresentation(g.basis, T.T @ g.Q @ T / factor)

    def moments_back(self, y: MomentVector) -> MomentVector:
        T = affine_basis_transform(y.basis, [self.width], [self.lo])
        return MomentVector(y.n, y.d, T @ y.y)


def _gamble_scales(gambles: Sequence[Polynomial], opts: SolveOptions) -> np.ndarray:
    if not opts.normalize_gambles:
        return np.ones(len(gambles))
    return np.array([g.max_abs_coef() if not g.is_zero else 1.0 for g in gambles])


@dataclass
class _Prepared:
    omega: SemiAlgebraicSet
    gambles: list[Polynomial]
    scales: np.ndarray
    factors: list[float]
    resc: Rescaling | None


def _prepare(a: AssessmentSet, opts: SolveOptions, extra: Sequence[Polynomial] = ()) -> tuple[_Prepared, list[Polynomial]]:
    resc = Rescaling.for_set(a.omega, opts)
    if resc is None:
        omega, factors, gambles, extra = a.omega, [1.0] * len(a.omega.constraints), list(a.gambles), list(extra)
    else:
        omega, factors = resc.omega(a.omega)
        gambles = [resc.poly(g) for g in a.gambles]
        extra = [resc.poly(p) for p in extra]
    scales = _gamble_scales(gambles, opts)
    gambles = [g / s for g, s in zip(gambles, scales)]
    return _Prepared(omega, gambles, scales, factors, resc), extra


def _certificate(prep: _Prepared, slots, sol) -> XiCertificate:
    grams = [s.gram(sol) for s in slots]
    if prep.resc is not None:
        grams = [prep.resc.gram_back(grams[0])] + [
            prep.resc.gram_back(g, f) for g, f in zip(grams[1:], prep.factors)
        ]
    else:
        grams = [grams[0]] + [GramRepresentation(g.basis, g.Q / f) for g, f in zip(grams[1:], prep.factors)]
    return XiCertificate(grams[0], grams[1:])


def _status_from_primal(sol, sense_max: bool = True) -> PrevisionResult | None:
    if sol.status is Status.UNBOUNDED:
        return PrevisionResult(PrevisionStatus.UNBOUNDED, math.inf if sense_max else -math.inf, message="unbounded above")
    if sol.status is Status.INFEASIBLE:
        return PrevisionResult(PrevisionStatus.UNBOUNDED, -math.inf if sense_max else math.inf, message="no feasible lambda_0")
    if sol.status is Status.NUMERICAL_FAILURE:
        return PrevisionResult(PrevisionStatus.INCONCLUSIVE, message=sol.message)
    return None


def lower_prevision(a: AssessmentSet, f: Polynomial, opts: SolveOptions | None = None) -> PrevisionResult:
    """sup lambda_0 with f - lambda_0 - sum lambda_j g_j in Xi_2d."""
    opts = opts or SolveOptions()
    a.check(f)
    prep, (ft,) = _prepare(a, opts, [f])
    prog = Program(a.n, "max")
    lam0 = prog.free(1)[0]
    lam = prog.nonneg(len(prep.gambles))
    expr = LinPoly.of(ft) - LinPoly.var(a.n, lam0)
    for v, g in zip(lam, prep.gambles):
        expr = expr - LinPoly.var(a.n, v, g)
    slots = prog.xi(expr, prep.omega.generators, a.degree)
    prog.objective({int(lam0): 1.0})
    sol = solve(prog.prob, backend=opts.backend)
    bad = _status_from_primal(sol)
    if bad is not None:
        return bad
    lambdas = sol.x[lam] / prep.scales if len(lam) else np.zeros(0)
    return PrevisionResult(
        PrevisionStatus.VALUE,
        value=float(sol.x[lam0]),
        lambda0=float(sol.x[lam0]),
        lambdas=lambdas,
        certificate=_certificate(prep, slots, sol),
    )


def upper_prevision(a: AssessmentSet, f: Polynomial, opts: SolveOptions | None = None) -> PrevisionResult:
    return lower_prevision(a, -f, opts).negated()


def extends(a: AssessmentSet, f: Polynomial, opts: SolveOptions | None = None) -> bool:
    """True iff f - sum lambda_j g_j lies in Xi_2d for some lambda >= 0."""
    opts = opts or SolveOptions()
    a.check(f)
    prep, (ft,) = _prepare(a, opts, [f])
    prog = Program(a.n, "min")
    lam = prog.nonneg(len(prep.gambles)) if prep.gambles else []
    expr = LinPoly.of(ft)
    for v, g in zip(lam, prep.gambles):
        expr = expr - LinPoly.var(a.n, v, g)
    prog.xi(expr, prep.omega.generators, a.degree)
    sol = solve(prog.prob, backend=opts.backend)
    if sol.status is Status.OPTIMAL:
        return True
    if sol.status is Status.INFEASIBLE:
        return False
    raise InconclusiveError(f"solver returned {sol.status.value}: {sol.message}")


class AslStatus(enum.Enum):
    AVOIDS = "Avoids"
    SURE_LOSS = "SureLoss"
    INCONCLUSIVE = "Inconclusive"


@dataclass
class AslResult:
    status: AslStatus
    lambda0: float
    lambdas: np.ndarray = field(default_factory=lambda: np.zeros(0))
    message: str = ""

    @property
    def avoids(self) -> bool:
        return self.status is AslStatus.AVOIDS


def classify_asl(lam0: float) -> AslStatus:
    if lam0 < ASL_AVOIDS:
        return AslStatus.AVOIDS
    if lam0 > ASL_SURE_LOSS:
        return AslStatus.SURE_LOSS
    logger.warning("sure-loss optimum %.4g is neither near 0 nor near 1", lam0)
    return AslStatus.INCONCLUSIVE


def avoids_sure_loss(a: AssessmentSet, opts: SolveOptions | None = None) -> AslResult:
    """sup lambda_0 in [0, 1] with -lambda_0 - sum lambda_j g_j in Xi_2d; 0 means no sure loss."""
    opts = opts or SolveOptions()
    prep, _ = _prepare(a, opts)
    prog = Program(a.n, "max")
    lam0, slack = prog.nonneg(2)
    prog.prob.add_constraint({int(lam0): 1.0, int(slack): 1.0}, 1.0)
    lam = prog.nonneg(len(prep.gambles)) if prep.gambles else []
    expr = -LinPoly.var(a.n, lam0)
    for v, g in zip(lam, prep.gambles):
        expr = expr - LinPoly.var(a.n, v, g)
    prog.xi(expr, prep.omega.generators, a.degree)
    prog.objective({int(lam0): 1.0})
    sol = solve(prog.prob, backend=opts.backend)
    if sol.status is not Status.OPTIMAL:
        return AslResult(AslStatus.INCONCLUSIVE, float("nan"), message=sol.message)
    l0 = float(sol.x[lam0])
    lambdas = sol.x[lam] / prep.scales if len(lam) else np.zeros(0)
    return AslResult(classify_asl(l0), l0, lambdas)


def dual_lower_prevision(a: AssessmentSet, f: Polynomial, opts: SolveOptions | None = None) -> PrevisionResult:
    """inf L(f) over y with y_0 = 1, L(g_j) >= 0, M_d(y) and M_{d-n_j}(c_j y) PSD."""
    opts = opts or SolveOptions()
    a.check(f)
    prep, (ft,) = _prepare(a, opts, [f])
    d = a.degree
    prog = Program(a.n, "min")
    y, big = prog.moments(d)
    prog.prob.add_constraint({int(y[0]): 1.0}, 1.0)
    if prep.gambles:
        slack = prog.nonneg(len(prep.gambles))
        for s, g in zip(slack, prep.gambles):
            prog.prob.add_constraint(sum_terms(prog.functional(y, big, g), {int(s): -1.0}), 0.0)
    prog.localizing_psd(y, big, Polynomial.constant(a.n, 1.0), d)
    for c, nc in prep.omega.generators:
        prog.localizing_psd(y, big, c, d - nc)
    prog.objective(prog.functional(y, big, ft))
    sol = solve(prog.prob, backend=opts.backend)
    if sol.status is Status.UNBOUNDED:
        return PrevisionResult(PrevisionStatus.UNBOUNDED, -math.inf, message="moment program unbounded below")
    if sol.status is Status.INFEASIBLE:
        return PrevisionResult(PrevisionStatus.UNBOUNDED, math.inf, message="moment program infeasible")
    if sol.status is not Status.OPTIMAL:
        return PrevisionResult(PrevisionStatus.INCONCLUSIVE, message=sol.message)
    mv = MomentVector(a.n, d, sol.x[y])
    if prep.resc is not None:
        mv = prep.resc.moments_back(mv)
    return PrevisionResult(PrevisionStatus.VALUE, value=float(sol.objective_value), moments=mv)


def dual_upper_prevision(a: AssessmentSet, f: Polynomial, opts: SolveOptions | None = None) -> PrevisionResult:
    return dual_lower_prevision(a, -f, opts).negated()


def degree_sweep(a: AssessmentSet, f: Polynomial, degrees: Iterable[int], opts: SolveOptions | None = None) -> list[tuple[int, PrevisionResult]]:
    degrees = list(degrees)
    if any(d2 <= d1 for d1, d2 in zip(degrees, degrees[1:])):
        raise ValueError("degrees must be strictly increasing")
    dmin = a.min_degree(f)
    if degrees and degrees[0] < dmin:
        raise ValueError(f"degree {degrees[0]} is below the minimum admissible {dmin}")
    out = []
    for d in degrees:
        out.append((d, lower_prevision(a.with_degree(d), f, opts)))
    vals = [r.value for _, r in out if r.status in (PrevisionStatus.VALUE, PrevisionStatus.UNBOUNDED)]
    if any(v2 < v1 - 1e-7 for v1, v2 in zip(vals, vals[1:])):
        logger.warning("degree sweep is not monotone: %s", vals)
    return out
