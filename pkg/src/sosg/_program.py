"""Assembly of coefficient-matching SOS programs and moment programs on top of sdp."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .poly import GramRepresentation, Monomial, MonomialBasis, Polynomial, add_exps, monomial_basis
from .sdp import SQRT2, Block, SdpProblem, SdpSolution


class LinPoly:
    """Polynomial whose coefficients are affine in scalar program variables.

    Represents ``const + sum_v x_v * polys[v]``.
    """

    __slots__ = ("n", "const", "polys")

    def __init__(self, n: int, const: Polynomial | None = None, polys: dict[int, Polynomial] | None = None):
        self.n = n
        self.const = const if const is not None else Polynomial(n)
        self.polys = dict(polys or {})

    @classmethod
    def of(cls, p: Polynomial) -> "LinPoly":
        return cls(p.n, p)

    @classmethod
    def var(cls, n: int, v: int, p: Polynomial | float = 1.0) -> "LinPoly":
        if not isinstance(p, Polynomial):
            p = Polynomial.constant(n, p)
        return cls(n, None, {int(v): p})

    def __add__(self, other):
        if isinstance(other, (Polynomial, int, float)):
            return LinPoly(self.n, self.const + other, self.polys)
        out = dict(self.polys)
        for v, p in other.polys.items():
            out[v] = out[v] + p if v in out else p
        return LinPoly(self.n, self.const + other.const, out)

    __radd__ = __add__

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        """Multiply by a scalar or a fixed polynomial."""
        return LinPoly(self.n, self.const * other, {v: p * other for v, p in self.polys.items()})

    __rmul__ = __mul__

    def evaluate(self, x: np.ndarray) -> Polynomial:
        out = self.const
        for v, p in self.polys.items():
            out = out + p * float(x[v])
        return out


@dataclass
class GramSlot:
    """One PSD block standing for ``c * v_r^T Q v_r``."""

    multiplier: Polynomial
    basis: MonomialBasis
    block: Block

    def gram(self, sol: SdpSolution) -> GramRepresentation:
        return GramRepresentation(self.basis, sol.matrix(self.block))


def localizing_entries(c: Polynomial, r: int, big: MonomialBasis) -> list[list[tuple[int, float]]]:
    """Sparse rows of ``M_r(c y)`` in lower-triangle order: each entry lists (index into y, coefficient)."""
    small = monomial_basis(c.n, r)
    out = []
    for i in range(len(small)):
        for j in range(i + 1):
            base = add_exps(small[i], small[j])
            entry = []
            for gam, cg in c.items():
                key = add_exps(base, gam)
                if key not in big.index:
                    raise ValueError("localizing matrix needs moments beyond the moment vector's degree")
                entry.append((big.index[key], cg))
            out.append(entry)
    return out


class Program:
    """Thin builder: scalar variables, Xi-membership identities, moment blocks."""

    def __init__(self, n: int, sense: str = "max", max_vars: int | None = None):
        self.n = n
        self.prob = SdpProblem(sense, **({} if max_vars is None else {"max_vars": max_vars}))

    def free(self, count: int = 1) -> np.ndarray:
        return self.prob.add_free(count)

    def nonneg(self, count: int = 1) -> np.ndarray:
        return self.prob.add_nonneg(count)

    def objective(self, terms: dict[int, float]) -> None:
        self.prob.set_objective(terms)

    # -- SOS side --------------------------------------------------------
    def identity(self, expr: LinPoly, slots: Sequence[GramSlot]) -> None:
        """Impose ``expr == sum_k slots[k].multiplier * v^T Q_k v`` coefficient-wise."""
        rows: dict[Monomial, dict[int, float]] = {}
        rhs: dict[Monomial, float] = {}
        for slot in slots:
            basis, blk = slot.basis, slot.block
            mult = list(slot.multiplier.items())
            for i in range(len(basis)):
                for j in range(i + 1):
                    base = add_exps(basis[i], basis[j])
                    var = blk.index(i, j)
                    scale = 1.0 if i == j else SQRT2
                    for gam, cg in mult:
                        row = rows.setdefault(add_exps(base, gam), {})
                        row[var] = row.get(var, 0.0) + scale * cg
        for v, p in expr.polys.items():
            for m, coef in p.items():
                row = rows.setdefault(m, {})
                row[v] = row.get(v, 0.0) - coef
        for m, coef in expr.const.items():
            rows.setdefault(m, {})
            rhs[m] = coef
        for m in sorted(rows):
            self.prob.add_constraint(rows[m], rhs.get(m, 0.0))

    def slot(self, multiplier: Polynomial, r: int) -> GramSlot:
        basis = monomial_basis(self.n, r)
        return GramSlot(multiplier, basis, self.prob.add_block(len(basis)))

    def xi(self, expr: LinPoly, generators: Iterable[tuple[Polynomial, int]], d: int) -> list[GramSlot]:
        """Require ``expr`` in sigma_0 + sum sigma_j c_j with sigma_j of degree 2(d - n_j).

        ``generators`` lists (c_j, n_j) pairs; the constant generator 1 is added first.
        """
        slots = [self.slot(Polynomial.constant(self.n, 1.0), d)]
        for c, nc in generators:
            if d - nc < 0:
                raise ValueError(f"degree {d} is below the constraint half-degree {nc}")
            slots.append(self.slot(c, d - nc))
        self.identity(expr, slots)
        return slots

    # -- moment side -----------------------------------------------------
    def moments(self, d: int) -> tuple[np.ndarray, MonomialBasis]:
        big = monomial_basis(self.n, 2 * d)
        return self.free(len(big)), big

    def functional(self, y: np.ndarray, big: MonomialBasis, g: Polynomial) -> dict[int, float]:
        out: dict[int, float] = {}
        for m, coef in g.items():
            if m not in big.index:
                raise ValueError(f"polynomial of degree {g.degree} exceeds the moment degree {big.d}")
            v = int(y[big.index[m]])
            out[v] = out.get(v, 0.0) + coef
        return out

    def localizing_psd(self, y: np.ndarray, big: MonomialBasis, c: Polynomial, r: int) -> Block:
        """Add a PSD slack X with X == M_r(c y)."""
        entries = localizing_entries(c, r, big)
        side = len(monomial_basis(self.n, r))
        blk = self.prob.add_block(side)
        k = 0
        for i in range(side):
            for j in range(i + 1):
                idx, coef = blk.entry_coef(i, j, 1.0)
                row = {idx: coef}
                for pos, cg in entries[k]:
                    v = int(y[pos])
                    row[v] = row.get(v, 0.0) - cg
                self.prob.add_constraint(row, 0.0)
                k += 1
        return blk


def sum_terms(*dicts: dict[int, float], scale: Sequence[float] | None = None) -> dict[int, float]:
    out: dict[int, float] = {}
    for k, d in enumerate(dicts):
        s = 1.0 if scale is None else scale[k]
        for v, c in d.items():
            out[v] = out.get(v, 0.0) + s * c
    return out
