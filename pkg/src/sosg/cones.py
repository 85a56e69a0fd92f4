"""SOS and truncated-quadratic-module certificates, moment and localizing matrices."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from ._program import LinPoly, Program, localizing_entries
from .errors import InconclusiveError
from .poly import GramRepresentation, Monomial, Polynomial, basis_dimension, monomial_basis
from .sdp import Status, solve

CERT_TOL = 1e-6
GRAM_EIG_TOL = 1e-7


@dataclass(frozen=True)
class SemiAlgebraicSet:
    """{x : c_j(x) >= 0 for all j}; no constraints means all of R^n."""

    n: int
    constraints: tuple[Polynomial, ...] = ()
    half_degrees: tuple[int, ...] = ()
    box: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        cons = tuple(self.constraints)
        for c in cons:
            if c.n != self.n:
                raise ValueError("constraint dimension does not match the set")
        hd = tuple(self.half_degrees) if self.half_degrees else tuple(c.half_degree for c in cons)
        if len(hd) != len(cons):
            raise ValueError("one half-degree per constraint is required")
        for c, h in zip(cons, hd):
            if c.degree not in (2 * h, 2 * h - 1) and not (c.degree == 0 and h == 0):
                raise ValueError(f"half-degree {h} does not fit a constraint of degree {c.degree}")
        object.__setattr__(self, "constraints", cons)
        object.__setattr__(self, "half_degrees", hd)

    @classmethod
    def whole(cls, n: int) -> "SemiAlgebraicSet":
        return cls(n)

    @classmethod
    def interval(cls, a: float, b: float) -> "SemiAlgebraicSet":
        if not a < b:
            raise ValueError(f"empty interval [{a}, {b}]")
        x = Polynomial.variable(1, 0)
        return cls(1, (x - a, b - x), (1, 1), ((float(a), float(b)),))

    @classmethod
    def from_box(cls, lo: Sequence[float], hi: Sequence[float]) -> "SemiAlgebraicSet":
        n = len(lo)
        xs = Polynomial.variables(n)
        cons = []
        for i in range(n):
            if not lo[i] < hi[i]:
                raise ValueError("empty box")
            cons += [xs[i] - lo[i], hi[i] - xs[i]]
        return cls(n, tuple(cons), (1,) * (2 * n), tuple((float(a), float(b)) for a, b in zip(lo, hi)))

    @property
    def max_half_degree(self) -> int:
        return max(self.half_degrees, default=0)

    @property
    def generators(self) -> list[tuple[Polynomial, int]]:
        return list(zip(self.constraints, self.half_degrees))

    def contains(self, point: Sequence[float], tol: float = 0.0) -> bool:
        return all(c(point) >= -tol for c in self.constraints)

    def interval_bounds(self) -> tuple[float, float] | None:
        """[a, b] when this is a 1-D interval given by two affine constraints."""
        if self.box is not None and self.n == 1:
            return self.box[0]
        if self.n != 1 or len(self.constraints) != 2:
            return None
        lo, hi = None, None
        for c in self.constraints:
            if c.degree != 1:
                return None
            slope, off = c.coef((1,)), c.coef((0,))
            if slope > 0:
                lo = -off / slope
            elif slope < 0:
                hi = -off / slope
        if lo is None or hi is None or not lo < hi:
            return None
        return lo, hi

    def compose_affine(self, scale: Sequence[float], shift: Sequence[float], normalize: bool = True) -> tuple["SemiAlgebraicSet", list[float]]:
        """Substitute x = shift + scale*t; returns the new set and the positive factor each constraint was divided by."""
        cons, factors = [], []
        for c in self.constraints:
            ct = c.compose_affine(scale, shift)
            f = ct.max_abs_coef() if normalize and not ct.is_zero else 1.0
            cons.append(ct / f)
            factors.append(f)
        box = None
        if self.box is not None:
            box = tuple(
                tuple(sorted(((a - s0) / s1, (b - s0) / s1)))
                for (a, b), s1, s0 in zip(self.box, scale, shift)
            )
        return SemiAlgebraicSet(self.n, tuple(cons), self.half_degrees, box), factors

    def to_json(self) -> dict:
        return {"n": self.n, "constraints": [c.to_json() for c in self.constraints]}

    @classmethod
    def from_json(cls, data: Mapping, n: int | None = None) -> "SemiAlgebraicSet":
        cons = tuple(Polynomial.from_json(c) for c in data.get("constraints", []))
        n = data.get("n", n if n is not None else (cons[0].n if cons else None))
        if n is None:
            raise ValueError("cannot infer the dimension of an unconstrained set")
        if "interval" in data:
            return cls.interval(*data["interval"])
        return cls(int(n), cons)


@dataclass
class XiCertificate:
    sigma0: GramRepresentation
    sigmas: list[GramRepresentation] = field(default_factory=list)

    def reconstruct(self, omega: SemiAlgebraicSet) -> Polynomial:
        out = self.sigma0.to_polynomial()
        for s, c in zip(self.sigmas, omega.constraints):
            out = out + s.to_polynomial() * c
        return out

    def min_eigenvalue(self) -> float:
        return min([self.sigma0.min_eigenvalue()] + [s.min_eigenvalue() for s in self.sigmas])

    def verify(self, p: Polynomial, omega: SemiAlgebraicSet, tol: float = CERT_TOL, eig_tol: float = GRAM_EIG_TOL) -> bool:
        scale = max(1.0, p.max_abs_coef())
        return (self.reconstruct(omega) - p).max_abs_coef() <= tol * scale and self.min_eigenvalue() >= -eig_tol * scale

    def to_json(self) -> dict:
        return {"sigma0": self.sigma0.to_json(), "sigmas": [s.to_json() for s in self.sigmas]}

    @classmethod
    def from_json(cls, n: int, data: Mapping) -> "XiCertificate":
        return cls(
            GramRepresentation.from_json(n, data["sigma0"]),
            [GramRepresentation.from_json(n, s) for s in data.get("sigmas", [])],
        )


@dataclass
class MomentVector:
    """Moments y_alpha for |alpha| <= 2d, indexed by monomial_basis(n, 2d)."""

    n: int
    d: int
    y: np.ndarray

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=float)
        if self.y.shape != (basis_dimension(self.n, 2 * self.d),):
            raise ValueError(f"moment vector for n={self.n}, d={self.d} needs {basis_dimension(self.n, 2 * self.d)} entries")

    @property
    def basis(self):
        return monomial_basis(self.n, 2 * self.d)

    @property
    def normalized(self) -> bool:
        return abs(self.y[0] - 1.0) <= 1e-12

    def __getitem__(self, exps: Sequence[int]) -> float:
        return float(self.y[self.basis.index[tuple(exps)]])

    @classmethod
    def point_mass(cls, point: Sequence[float], d: int) -> "MomentVector":
        point = np.asarray(point, dtype=float)
        return cls(len(point), d, monomial_basis(len(point), 2 * d).evaluate(point))

    @classmethod
    def from_moment_matrix(cls, M: np.ndarray, n: int, d: int, tol: float = 1e-12) -> "MomentVector":
        """Read y off a moment matrix over monomial_basis(n, d), checking Hankel consistency."""
        small = monomial_basis(n, d)
        big = monomial_basis(n, 2 * d)
        M = np.asarray(M, dtype=float)
        if M.shape != (len(small), len(small)):
            raise ValueError("matrix side does not match the basis")
        y = np.full(len(big), np.nan)
        for i, a in enumerate(small):
            for j, b in enumerate(small):
                k = big.index[tuple(p + q for p, q in zip(a, b))]
                if np.isnan(y[k]):
                    y[k] = M[i, j]
                elif abs(y[k] - M[i, j]) > tol * (1 + abs(y[k])):
                    raise ValueError(f"entry ({i}, {j}) breaks the moment structure")
        return cls(n, d, y)

    def to_json(self) -> dict:
        return {"n": self.n, "d": self.d, "y": self.y.tolist()}

    @classmethod
    def from_json(cls, data: Mapping) -> "MomentVector":
        return cls(int(data["n"]), int(data["d"]), data["y"])


def moment_matrix(y: MomentVector) -> np.ndarray:
    return localizing_matrix(Polynomial.constant(y.n, 1.0), y, 0)


def localizing_matrix(c: Polynomial, y: MomentVector, half_degree: int | None = None) -> np.ndarray:
    """M_{d-n_c}(c y), entry (alpha, beta) = sum_gamma c_gamma y_{alpha+beta+gamma}."""
    if c.n != y.n:
        raise ValueError("dimension mismatch")
    nc = c.half_degree if half_degree is None else half_degree
    if c.degree > 2 * nc:
        raise ValueError(f"constraint of degree {c.degree} exceeds twice its half-degree {nc}")
    r = y.d - nc
    if r < 0:
        raise ValueError(f"moment degree {y.d} is below the constraint half-degree {nc}")
    side = basis_dimension(y.n, r)
    entries = localizing_entries(c, r, y.basis)
    M = np.zeros((side, side))
    k = 0
    for i in range(side):
        for j in range(i + 1):
            M[i, j] = M[j, i] = sum(cg * y.y[pos] for pos, cg in entries[k])
            k += 1
    return M


def apply_functional(y: MomentVector, g: Polynomial) -> float:
    """L(g) = sum_alpha g_alpha y_alpha."""
    if g.n != y.n:
        raise ValueError("dimension mismatch")
    if g.degree > 2 * y.d:
        raise ValueError(f"degree {g.degree} exceeds the moment degree {2 * y.d}")
    return float(sum(coef * y.y[y.basis.index[m]] for m, coef in g.items()))


class CheckStatus(enum.Enum):
    SOS = "SOS"
    NOT_SOS = "NOT-SOS"
    INCONCLUSIVE = "INCONCLUSIVE"


@dataclass
class XiCheck:
    status: CheckStatus
    certificate: XiCertificate | None = None
    # separating functional: PSD moment/localizing matrices with L(p) < 0
    witness: MomentVector | None = None
    message: str = ""


def _min_degree(p: Polynomial, omega: SemiAlgebraicSet) -> int:
    return max(p.half_degree, omega.max_half_degree)


def xi_check(p: Polynomial, omega: SemiAlgebraicSet, d: int | None = None) -> XiCheck:
    """Decide p in Xi_2d(omega), with a certificate either way."""
    if p.n != omega.n:
        raise ValueError("dimension mismatch")
    dmin = _min_degree(p, omega)
    d = dmin if d is None else d
    if d < dmin:
        raise ValueError(f"degree d={d} is below the minimum admissible {dmin}")
    scale = max(p.max_abs_coef(), 1e-300)
    prog = Program(omega.n, "min")
    slots = prog.xi(LinPoly.of(p / scale), omega.generators, d)
    sol = solve(prog.prob)
    if sol.status is Status.OPTIMAL:
        grams = [GramRepresentation(s.basis, s.gram(sol).Q * scale) for s in slots]
        cert = XiCertificate(grams[0], grams[1:])
        if not cert.verify(p, omega):
            return XiCheck(CheckStatus.INCONCLUSIVE, message="certificate failed re-verification")
        return XiCheck(CheckStatus.SOS, cert)
    if sol.status is Status.INFEASIBLE:
        w = _witness(sol.certificate, p, omega, d)
        if w is None:
            return XiCheck(CheckStatus.INCONCLUSIVE, message="infeasibility certificate failed re-verification")
        return XiCheck(CheckStatus.NOT_SOS, witness=w)
    return XiCheck(CheckStatus.INCONCLUSIVE, message=sol.message)


def _witness(z: np.ndarray | None, p: Polynomial, omega: SemiAlgebraicSet, d: int) -> MomentVector | None:
    """Turn equality multipliers (one per monomial, sorted) into a checked separating moment vector."""
    if z is None:
        return None
    big = monomial_basis(omega.n, 2 * d)
    monos = sorted(set(big.monomials) | set(p.terms))
    if len(monos) != len(z):
        return None
    vals = dict(zip(monos, z))
    if any(abs(vals[m]) > 1e-9 for m in monos if m not in big.index and p.coef(m) == 0):
        return None
    y = np.array([vals[m] for m in big.monomials])
    if any(m not in big.index for m in p.terms):
        return None
    y = y / (y[0] if y[0] > 1e-9 * np.abs(y).max() else np.abs(y).max())
    w = MomentVector(omega.n, d, y)
    mats = [moment_matrix(w)] + [localizing_matrix(c, w, h) for c, h in omega.generators]
    ok = all(np.linalg.eigvalsh(M)[0] >= -1e-7 * max(1.0, np.abs(M).max()) for M in mats)
    return w if ok and apply_functional(w, p) < 0 else None


def xi_certificate(p: Polynomial, omega: SemiAlgebraicSet, d: int | None = None) -> XiCertificate | None:
    res = xi_check(p, omega, d)
    if res.status is CheckStatus.INCONCLUSIVE:
        raise InconclusiveError(res.message or "solver failure")
    return res.certificate


def sos_check(p: Polynomial, d: int | None = None) -> XiCheck:
    return xi_check(p, SemiAlgebraicSet.whole(p.n), d)


def sos_decompose(p: Polynomial, d: int | None = None) -> GramRepresentation | None:
    cert = xi_certificate(p, SemiAlgebraicSet.whole(p.n), d)
    return None if cert is None else cert.sigma0
