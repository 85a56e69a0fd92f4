"""Sparse multivariate polynomials, graded-lex monomial bases and Gram matrices.

Monomials are plain exponent tuples. A :class:`Polynomial` maps exponent
tuples to float coefficients and is treated as an immutable value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations_with_replacement
from typing import Iterable, Mapping, Sequence

import numpy as np

Monomial = tuple[int, ...]

ZERO_TOL = 1e-14


def _canonical(terms: Mapping[Monomial, float]) -> dict[Monomial, float]:
    return {m: float(c) for m, c in terms.items() if abs(c) >= ZERO_TOL}


class Polynomial:
    """Polynomial in ``n`` variables stored as ``{exponents: coefficient}``."""

    __slots__ = ("n", "_terms")

    def __init__(self, n: int, terms: Mapping[Sequence[int], float] | None = None):
        if n < 1:
            raise ValueError("a polynomial needs at least one variable")
        self.n = n
        clean: dict[Monomial, float] = {}
        for exps, coef in (terms or {}).items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != n:
                raise ValueError(f"exponent vector {exps} does not have length {n}")
            if any(e < 0 for e in exps):
                raise ValueError(f"negative exponent in {exps}")
            clean[exps] = clean.get(exps, 0.0) + float(coef)
        self._terms = _canonical(clean)

    @classmethod
    def _raw(cls, n: int, terms: dict[Monomial, float]) -> "Polynomial":
        p = object.__new__(cls)
        p.n = n
        p._terms = _canonical(terms)
        return p

    @classmethod
    def constant(cls, n: int, value: float) -> "Polynomial":
        return cls._raw(n, {(0,) * n: float(value)})

    @classmethod
    def variable(cls, n: int, i: int) -> "Polynomial":
        exps = [0] * n
        exps[i] = 1
        return cls._raw(n, {tuple(exps): 1.0})

    @classmethod
    def variables(cls, n: int) -> list["Polynomial"]:
        return [cls.variable(n, i) for i in range(n)]

    @classmethod
    def from_coefficients(cls, basis: "MonomialBasis", coeffs: Sequence[float]) -> "Polynomial":
        return cls._raw(basis.n, dict(zip(basis.monomials, map(float, coeffs))))

    @property
    def terms(self) -> dict[Monomial, float]:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def coef(self, exps: Sequence[int]) -> float:
        return self._terms.get(tuple(exps), 0.0)

    @property
    def degree(self) -> int:
        return max((sum(m) for m in self._terms), default=0)

    @property
    def half_degree(self) -> int:
        """Smallest k with degree <= 2k."""
        return (self.degree + 1) // 2

    @property
    def is_zero(self) -> bool:
        return not self._terms

    def coefficients(self, basis: "MonomialBasis") -> np.ndarray:
        """Coefficient vector in ``basis``; raises if a term falls outside it."""
        out = np.zeros(len(basis))
        for m, c in self._terms.items():
            try:
                out[basis.index[m]] = c
            except KeyError:
                raise ValueError(f"monomial {m} is not in the degree-{basis.d} basis") from None
        return out

    def __call__(self, point: Sequence[float]) -> float:
        return self.eval(point)

    def eval(self, point: Sequence[float]) -> float:
        point = np.asarray(point, dtype=float)
        if point.shape != (self.n,):
            raise ValueError(f"expected a point of length {self.n}, got shape {point.shape}")
        total = 0.0
        for m, c in self._terms.items():
            total += c * float(np.prod(point ** np.asarray(m)))
        return total

    def eval_many(self, points: np.ndarray) -> np.ndarray:
        """Vectorised evaluation; ``points`` has shape (k, n) (or (k,) when n = 1)."""
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1 and self.n == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[1] != self.n:
            raise ValueError(f"expected points of shape (k, {self.n})")
        out = np.zeros(pts.shape[0])
        for m, c in self._terms.items():
            out += c * np.prod(pts ** np.asarray(m), axis=1)
        return out

    def _check(self, other: "Polynomial") -> None:
        if other.n != self.n:
            raise ValueError(f"variable count mismatch: {self.n} vs {other.n}")

    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            self._check(other)
            return other
        if isinstance(other, (int, float, np.floating, np.integer)):
            return Polynomial.constant(self.n, float(other))
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = dict(self._terms)
        for m, c in other._terms.items():
            out[m] = out.get(m, 0.0) + c
        return Polynomial._raw(self.n, out)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial._raw(self.n, {m: -c for m, c in self._terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other + (-self)

    def __mul__(self, other):
        if isinstance(other, (int, float, np.floating, np.integer)):
            s = float(other)
            return Polynomial._raw(self.n, {m: s * c for m, c in self._terms.items()})
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out: dict[Monomial, float] = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                m = tuple(a + b for a, b in zip(m1, m2))
                out[m] = out.get(m, 0.0) + c1 * c2
        return Polynomial._raw(self.n, out)

    __rmul__ = __mul__

    def __truediv__(self, s: float):
        return self * (1.0 / float(s))

    def __pow__(self, k: int):
        if not isinstance(k, (int, np.integer)) or k < 0:
            raise ValueError("only nonnegative integer powers are supported")
        out = Polynomial.constant(self.n, 1.0)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __eq__(self, other):
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.n == other.n and self._terms == other._terms

    def __hash__(self):
        return hash((self.n, frozenset(self._terms.items())))

    def allclose(self, other: "Polynomial", atol: float = 1e-9) -> bool:
        self._check(other)
        diff = self - other
        return all(abs(c) <= atol for c in diff._terms.values())

    def max_abs_coef(self) -> float:
        return max((abs(c) for c in self._terms.values()), default=0.0)

    def compose_affine(self, scale: Sequence[float], shift: Sequence[float]) -> "Polynomial":
        """Return ``p(shift + scale * t)`` as a polynomial in ``t`` (per-variable map)."""
        scale = np.broadcast_to(np.asarray(scale, dtype=float), (self.n,))
        shift = np.broadcast_to(np.asarray(shift, dtype=float), (self.n,))
        images = [
            Polynomial.constant(self.n, shift[i]) + Polynomial.variable(self.n, i) * scale[i]
            for i in range(self.n)
        ]
        powers: dict[tuple[int, int], Polynomial] = {}

        def power(i: int, e: int) -> Polynomial:
            if (i, e) not in powers:
                powers[(i, e)] = images[i] ** e
            return powers[(i, e)]

        out = Polynomial(self.n)
        for m, c in self._terms.items():
            term = Polynomial.constant(self.n, c)
            for i, e in enumerate(m):
                if e:
                    term = term * power(i, e)
            out = out + term
        return out

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "terms": [{"exps": list(m), "coef": c} for m, c in sorted(self._terms.items(), key=lambda t: _grlex_key(t[0]))],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "Polynomial":
        n = int(data["n"])
        terms: dict[Monomial, float] = {}
        for t in data["terms"]:
            exps = tuple(int(e) for e in t["exps"])
            if len(exps) != n:
                raise ValueError(f"exponent list {list(exps)} does not have length n={n}")
            terms[exps] = terms.get(exps, 0.0) + float(t["coef"])
        return cls(n, terms)

    def __repr__(self):
        if not self._terms:
            return "0"
        names = [f"x{i + 1}" for i in range(self.n)] if self.n > 1 else ["x"]
        parts = []
        for m, c in sorted(self._terms.items(), key=lambda t: _grlex_key(t[0])):
            mono = "*".join(f"{v}^{e}" if e > 1 else v for v, e in zip(names, m) if e)
            parts.append(f"{c:+g}" + (f"*{mono}" if mono else ""))
        return " ".join(parts)


def _grlex_key(m: Monomial):
    # graded, then x1-heavy first: 1, x1, x2, x1^2, x1x2, x2^2, ...
    return (sum(m), tuple(-e for e in m))


def basis_dimension(n: int, d: int) -> int:
    """Number of monomials of total degree <= d in n variables, C(n+d, d)."""
    if n < 1 or d < 0:
        raise ValueError("need n >= 1 and d >= 0")
    return math.comb(n + d, d)


@lru_cache(maxsize=None)
def _monomials(n: int, d: int) -> tuple[Monomial, ...]:
    out: list[Monomial] = []
    for k in range(d + 1):
        level = []
        for combo in combinations_with_replacement(range(n), k):
            exps = [0] * n
            for i in combo:
                exps[i] += 1
            level.append(tuple(exps))
        level.sort(key=lambda m: tuple(-e for e in m))
        out.extend(level)
    return tuple(out)


@dataclass(frozen=True)
class MonomialBasis:
    """All monomials of degree <= d in graded-lex order."""

    n: int
    d: int
    monomials: tuple[Monomial, ...] = field(repr=False)
    index: dict[Monomial, int] = field(repr=False, compare=False)

    def __len__(self) -> int:
        return len(self.monomials)

    def __iter__(self):
        return iter(self.monomials)

    def __getitem__(self, i: int) -> Monomial:
        return self.monomials[i]

    def evaluate(self, point: Sequence[float]) -> np.ndarray:
        """The vector v_d(point)."""
        point = np.asarray(point, dtype=float)
        return np.array([float(np.prod(point ** np.asarray(m))) for m in self.monomials])


@lru_cache(maxsize=None)
def monomial_basis(n: int, d: int) -> MonomialBasis:
    basis_dimension(n, d)
    monos = _monomials(n, d)
    return MonomialBasis(n, d, monos, {m: i for i, m in enumerate(monos)})


def add_exps(a: Monomial, b: Monomial) -> Monomial:
    return tuple(x + y for x, y in zip(a, b))


@dataclass(frozen=True)
class GramRepresentation:
    """The polynomial v_d(x)^T Q v_d(x)."""

    basis: MonomialBasis
    Q: np.ndarray

    def __post_init__(self):
        Q = np.asarray(self.Q, dtype=float)
        side = len(self.basis)
        if Q.shape != (side, side):
            raise ValueError(f"Gram matrix must be {side}x{side}, got {Q.shape}")
        if not np.allclose(Q, Q.T, atol=1e-9 * (1 + np.abs(Q).max(initial=0))):
            raise ValueError("Gram matrix is not symmetric")
        object.__setattr__(self, "Q", (Q + Q.T) / 2)

    @property
    def d(self) -> int:
        return self.basis.d

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.Q)[0]) if len(self.basis) else 0.0

    def to_polynomial(self) -> Polynomial:
        return gram_to_poly(self)

    def squares(self, pivot_tol: float = 1e-9) -> list[Polynomial]:
        """Explicit squares q_k with sum q_k^2 = this polynomial (display only).

        Pivoted LDL^T; pivots below ``pivot_tol`` are treated as zero, so the
        expansion is exact only when Q is PSD.
        """
        Q = self.Q.copy()
        side = len(self.basis)
        out = []
        remaining = list(range(side))
        while remaining:
            k = max(remaining, key=lambda i: Q[i, i])
            piv = Q[k, k]
            if piv < pivot_tol:
                break
            row = Q[k, :] / piv
            coeffs = np.sqrt(piv) * row
            out.append(Polynomial.from_coefficients(self.basis, coeffs))
            Q = Q - piv * np.outer(row, row)
            remaining.remove(k)
        return out

    def to_json(self) -> dict:
        return {"d": self.basis.d, "Q": self.Q.tolist()}

    @classmethod
    def from_json(cls, n: int, data: Mapping) -> "GramRepresentation":
        return cls(monomial_basis(n, int(data["d"])), np.asarray(data["Q"], dtype=float))


def gram_to_poly(g: GramRepresentation) -> Polynomial:
    monos = g.basis.monomials
    out: dict[Monomial, float] = {}
    Q = g.Q
    for i, mi in enumerate(monos):
        for j, mj in enumerate(monos):
            if Q[i, j] != 0.0:
                m = add_exps(mi, mj)
                out[m] = out.get(m, 0.0) + Q[i, j]
    return Polynomial._raw(g.basis.n, out)


def affine_basis_transform(basis: MonomialBasis, scale: Sequence[float], shift: Sequence[float]) -> np.ndarray:
    """Matrix T with v(shift + scale*t) = T v(t), both in ``basis``.

    Used to map Gram matrices between original and rescaled coordinates:
    if p(x) = v(x)^T Q v(x) and x = shift + scale*t then p = v(t)^T (T^T Q T) v(t).
    """
    T = np.zeros((len(basis), len(basis)))
    for i, m in enumerate(basis.monomials):
        image = Polynomial._raw(basis.n, {m: 1.0}).compose_affine(scale, shift)
        for mm, c in image.items():
            T[i, basis.index[mm]] = c
    return T


def polys_to_matrix(polys: Iterable[Polynomial], basis: MonomialBasis) -> np.ndarray:
    return np.array([p.coefficients(basis) for p in polys])
