"""Dense block semidefinite programs in standard (Gram-matrix) form.

Problems read::

    minimize / maximize   c^T x
    subject to            A x = b
                          x = (free scalars, nonnegative scalars, svec(X_1), ..., svec(X_k)),  X_i PSD

A symmetric block is stored as its lower triangle, row-major, with
off-diagonal entries multiplied by sqrt(2) so that ``svec(C) . svec(X) =
Tr(C X)``. Side-1 blocks are plain nonnegativity.

:func:`solve` is the only entry point; the numerical engine is chosen by
name. ``"clarabel"`` (default) is a primal-dual interior point method on a
homogeneous embedding, so infeasible and unbounded outcomes come with
certificates. ``"highs"`` handles the all-scalar (LP) case.
"""

from __future__ import annotations

import enum
import io
import logging
import os
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence, TextIO

import numpy as np
import scipy.sparse as sp

logger = logging.getLogger(__name__)

SQRT2 = np.sqrt(2.0)

FEAS_TOL = 1e-8
PSD_TOL = 1e-8
GAP_TOL = 1e-7
DIVERGENCE = 1e8
DEFAULT_MAX_VARS = 5000
DEFAULT_MAX_ITER = 200


class Status(enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"
    NUMERICAL_FAILURE = "NumericalFailure"


class MalformedProblem(ValueError):
    pass


@dataclass(frozen=True)
class Block:
    """A PSD block occupying ``side*(side+1)/2`` consecutive variables."""

    side: int
    offset: int

    @property
    def size(self) -> int:
        return self.side * (self.side + 1) // 2

    def index(self, i: int, j: int) -> int:
        if i < j:
            i, j = j, i
        if not 0 <= j <= i < self.side:
            raise IndexError(f"entry ({i}, {j}) outside a {self.side}x{self.side} block")
        return self.offset + i * (i + 1) // 2 + j

    def entry_coef(self, i: int, j: int, coef: float) -> tuple[int, float]:
        """(variable, svec coefficient) for a term ``coef * X[i, j]``."""
        return self.index(i, j), (coef if i == j else coef / SQRT2)

    def matrix(self, x: np.ndarray) -> np.ndarray:
        return svec_to_mat(x[self.offset:self.offset + self.size], self.side)


def svec_to_mat(v: np.ndarray, side: int) -> np.ndarray:
    M = np.zeros((side, side))
    rows, cols = np.tril_indices(side)
    vals = np.where(rows == cols, v, v / SQRT2)
    M[rows, cols] = vals
    M[cols, rows] = vals
    return M


def mat_to_svec(M: np.ndarray) -> np.ndarray:
    rows, cols = np.tril_indices(M.shape[0])
    v = M[rows, cols]
    return np.where(rows == cols, v, v * SQRT2)


class SdpProblem:
    """Builder and container for a block SDP with equality constraints."""

    def __init__(self, sense: str = "min", max_vars: int | None = DEFAULT_MAX_VARS):
        if sense not in ("min", "max"):
            raise MalformedProblem(f"sense must be 'min' or 'max', got {sense!r}")
        self.sense = sense
        self.max_vars = max_vars
        self.n_vars = 0
        self.free: list[int] = []
        self.blocks: list[Block] = []
        self._rows: list[int] = []
        self._cols: list[int] = []
        self._vals: list[float] = []
        self.rhs: list[float] = []
        self.objective: dict[int, float] = {}

    # -- variables -------------------------------------------------------
    def _grow(self, k: int) -> int:
        start = self.n_vars
        self.n_vars += k
        if self.max_vars is not None and self.n_vars > self.max_vars:
            raise MalformedProblem(f"problem exceeds the cap of {self.max_vars} scalar variables")
        return start

    def add_free(self, count: int = 1) -> np.ndarray:
        start = self._grow(count)
        idx = np.arange(start, start + count)
        self.free.extend(idx.tolist())
        return idx

    def add_block(self, side: int) -> Block:
        if side < 1:
            raise MalformedProblem("block side must be positive")
        blk = Block(side, self._grow(side * (side + 1) // 2))
        self.blocks.append(blk)
        return blk

    def add_nonneg(self, count: int = 1) -> np.ndarray:
        start = self._grow(count)
        self.blocks.extend(Block(1, start + k) for k in range(count))
        return np.arange(start, start + count)

    @property
    def block_sides(self) -> list[int]:
        return [b.side for b in self.blocks]

    @property
    def n_constraints(self) -> int:
        return len(self.rhs)

    # -- constraints -----------------------------------------------------
    def add_constraint(self, terms: Mapping[int, float], rhs: float) -> int:
        row = len(self.rhs)
        for var, coef in terms.items():
            if not 0 <= var < self.n_vars:
                raise MalformedProblem(f"constraint touches undeclared variable {var}")
            if coef != 0.0:
                self._rows.append(row)
                self._cols.append(int(var))
                self._vals.append(float(coef))
        self.rhs.append(float(rhs))
        return row

    def add_constraints(self, A: sp.spmatrix | np.ndarray, rhs: Sequence[float], cols: Sequence[int] | None = None) -> None:
        """Append rows ``A[:, k]`` acting on variables ``cols[k]`` (default: all variables)."""
        A = sp.coo_matrix(A)
        cols = np.arange(self.n_vars) if cols is None else np.asarray(cols)
        if A.shape[1] != len(cols) or A.shape[0] != len(rhs):
            raise MalformedProblem("constraint block shape mismatch")
        if len(cols) and (cols.min() < 0 or cols.max() >= self.n_vars):
            raise MalformedProblem("constraint touches undeclared variable")
        base = len(self.rhs)
        self._rows.extend((A.row + base).tolist())
        self._cols.extend(cols[A.col].tolist())
        self._vals.extend(A.data.tolist())
        self.rhs.extend(float(r) for r in rhs)

    def set_objective(self, terms: Mapping[int, float]) -> None:
        for var in terms:
            if not 0 <= var < self.n_vars:
                raise MalformedProblem(f"objective touches undeclared variable {var}")
        self.objective = {int(k): float(v) for k, v in terms.items() if v != 0.0}

    # -- matrices --------------------------------------------------------
    def A(self) -> sp.csr_matrix:
        return sp.csr_matrix(
            (self._vals, (self._rows, self._cols)), shape=(len(self.rhs), self.n_vars)
        )

    def b(self) -> np.ndarray:
        return np.asarray(self.rhs, dtype=float)

    def c(self) -> np.ndarray:
        c = np.zeros(self.n_vars)
        for k, v in self.objective.items():
            c[k] = v
        return c

    def is_lp(self) -> bool:
        return all(b.side == 1 for b in self.blocks)

    def dump(self, fh: TextIO | None = None) -> str:
        """Plain-text dump for cross-checking with external solvers.

        Header lines give the sense, variable count, free variables and
        block list (offset:side); the objective and each constraint follow
        on one line as ``var coef var coef ... rhs``.
        """
        out = io.StringIO()
        out.write(f"sense {self.sense}\n")
        out.write(f"vars {self.n_vars}\n")
        out.write("free " + " ".join(map(str, self.free)) + "\n")
        out.write("blocks " + " ".join(f"{b.offset}:{b.side}" for b in self.blocks) + "\n")
        out.write("objective " + " ".join(f"{k} {float(v)!r}" for k, v in sorted(self.objective.items())) + "\n")
        A = self.A().tocsr()
        for r in range(A.shape[0]):
            lo, hi = A.indptr[r], A.indptr[r + 1]
            pairs = " ".join(f"{c} {float(v)!r}" for c, v in zip(A.indices[lo:hi], A.data[lo:hi]))
            out.write(f"{pairs} {float(self.rhs[r])!r}\n".lstrip())
        text = out.getvalue()
        if fh is not None:
            fh.write(text)
        return text

    @classmethod
    def load(cls, text: str) -> "SdpProblem":
        lines = text.splitlines()
        sense = lines[0].split()[1]
        n_vars = int(lines[1].split()[1])
        prob = cls(sense, max_vars=None)
        prob.n_vars = n_vars
        prob.free = [int(t) for t in lines[2].split()[1:]]
        prob.blocks = [Block(int(s), int(o)) for o, s in (t.split(":") for t in lines[3].split()[1:])]
        toks = lines[4].split()[1:]
        prob.objective = {int(toks[i]): float(toks[i + 1]) for i in range(0, len(toks), 2)}
        for line in lines[5:]:
            toks = line.split()
            terms = {int(toks[i]): float(toks[i + 1]) for i in range(0, len(toks) - 1, 2)}
            prob.add_constraint(terms, float(toks[-1]))
        return prob


@dataclass
class SdpSolution:
    status: Status
    objective_value: float = float("nan")
    dual_objective_value: float = float("nan")
    x: np.ndarray = field(default_factory=lambda: np.zeros(0))
    y: np.ndarray = field(default_factory=lambda: np.zeros(0))
    iterations: int = 0
    backend: str = ""
    # certificate of infeasibility (equality multipliers) or of unboundedness (primal ray)
    certificate: np.ndarray | None = None
    message: str = ""

    @property
    def gap(self) -> float:
        return abs(self.objective_value - self.dual_objective_value)

    def value(self, var: int | np.ndarray):
        return self.x[var]

    def matrix(self, block: Block) -> np.ndarray:
        return block.matrix(self.x)


def check_point(prob: SdpProblem, x: np.ndarray) -> tuple[float, float]:
    """(max equality residual scaled by 1+|b|, min over blocks of lambda_min / (1 + |X|))."""
    if prob.n_constraints:
        res = np.abs(prob.A() @ x - prob.b()) / (1.0 + np.abs(prob.b()))
        feas = float(res.max())
    else:
        feas = 0.0
    worst = np.inf
    for blk in prob.blocks:
        if blk.side == 1:
            v = x[blk.offset]
            worst = min(worst, v / (1.0 + abs(v)))
        else:
            M = blk.matrix(x)
            worst = min(worst, float(np.linalg.eigvalsh(M)[0]) / (1.0 + np.abs(M).max()))
    return feas, (0.0 if worst == np.inf else worst)


def _max_iter(default: int) -> int:
    env = os.environ.get("SOSG_MAX_ITER")
    return int(env) if env else default


def _solve_clarabel(prob: SdpProblem, max_iter: int, tol: float) -> SdpSolution:
    import clarabel

    n = prob.n_vars
    A_eq = prob.A().tocsc()
    m = A_eq.shape[0]
    scalar = [b.offset for b in prob.blocks if b.side == 1]
    mats = [b for b in prob.blocks if b.side > 1]
    cone_rows = []
    cones = []
    if m:
        cones.append(clarabel.ZeroConeT(m))
    if scalar:
        cone_rows.extend(scalar)
        cones.append(clarabel.NonnegativeConeT(len(scalar)))
    for blk in mats:
        cone_rows.extend(range(blk.offset, blk.offset + blk.size))
        cones.append(clarabel.PSDTriangleConeT(blk.side))
    k = len(cone_rows)
    G = sp.csc_matrix((-np.ones(k), (np.arange(k), cone_rows)), shape=(k, n))
    A = sp.vstack([A_eq, G]).tocsc()
    b = np.concatenate([prob.b(), np.zeros(k)])
    c = prob.c()
    q = -c if prob.sense == "max" else c

    settings = clarabel.DefaultSettings()
    settings.verbose = False
    settings.max_iter = max_iter
    settings.tol_gap_abs = tol
    settings.tol_gap_rel = tol
    settings.tol_feas = tol
    settings.tol_infeas_abs = tol
    settings.tol_infeas_rel = tol
    settings.presolve_enable = False
    solver = clarabel.DefaultSolver(sp.csc_matrix((n, n)), q, A, b, cones, settings)
    sol = solver.solve()
    name = str(sol.status).split(".")[-1]
    x = np.asarray(sol.x)
    z = np.asarray(sol.z)
    sign = -1.0 if prob.sense == "max" else 1.0
    out = SdpSolution(Status.NUMERICAL_FAILURE, x=x, iterations=sol.iterations, backend="clarabel", message=name)
    if name in ("Solved", "AlmostSolved"):
        out.status = Status.OPTIMAL
        out.objective_value = sign * sol.obj_val
        out.dual_objective_value = sign * sol.obj_val_dual
        # multipliers y with  c - A^T y in K*  (min)  or  A^T y - c in K*  (max)
        out.y = -z[:m] if prob.sense == "min" else z[:m]
    elif name in ("PrimalInfeasible", "AlmostPrimalInfeasible"):
        out.status = Status.INFEASIBLE
        out.certificate = z[:m].copy()
    elif name in ("DualInfeasible", "AlmostDualInfeasible"):
        out.status = Status.UNBOUNDED
        out.certificate = x.copy()
    return out


def _solve_highs(prob: SdpProblem, max_iter: int, tol: float) -> SdpSolution:
    from scipy.optimize import linprog

    if not prob.is_lp():
        raise MalformedProblem("the highs backend only accepts all-scalar (LP) problems")
    n = prob.n_vars
    bounds = [(0.0, None)] * n
    for k in prob.free:
        bounds[k] = (None, None)
    c = prob.c()
    res = linprog(
        -c if prob.sense == "max" else c,
        A_eq=prob.A() if prob.n_constraints else None,
        b_eq=prob.b() if prob.n_constraints else None,
        bounds=bounds,
        method="highs",
        options={"primal_feasibility_tolerance": tol, "dual_feasibility_tolerance": tol},
    )
    sign = -1.0 if prob.sense == "max" else 1.0
    out = SdpSolution(Status.NUMERICAL_FAILURE, backend="highs", message=res.message, iterations=int(res.nit or 0))
    if res.status == 0:
        out.status = Status.OPTIMAL
        out.x = res.x
        out.objective_value = sign * res.fun
        marg = res.eqlin.marginals if prob.n_constraints else np.zeros(0)
        out.y = np.asarray(marg) * sign
        out.dual_objective_value = float(out.y @ prob.b()) if prob.n_constraints else out.objective_value
    elif res.status == 2:
        out.status = Status.INFEASIBLE
    elif res.status == 3:
        out.status = Status.UNBOUNDED
    return out


BACKENDS: dict[str, Callable[[SdpProblem, int, float], SdpSolution]] = {
    "clarabel": _solve_clarabel,
    "highs": _solve_highs,
}


def solve(
    prob: SdpProblem,
    backend: str = "clarabel",
    max_iter: int | None = None,
    tol: float = 1e-9,
    feas_tol: float = FEAS_TOL,
    psd_tol: float = PSD_TOL,
    gap_tol: float = GAP_TOL,
) -> SdpSolution:
    """Solve ``prob``; an Optimal status is re-verified independently of the backend."""
    if backend not in BACKENDS:
        raise MalformedProblem(f"unknown backend {backend!r}; choose from {sorted(BACKENDS)}")
    if prob.n_vars == 0:
        raise MalformedProblem("problem has no variables")
    if prob.max_vars is not None and prob.n_vars > prob.max_vars:
        raise MalformedProblem(f"problem exceeds the cap of {prob.max_vars} scalar variables")
    sol = BACKENDS[backend](prob, _max_iter(max_iter or DEFAULT_MAX_ITER), tol)
    if sol.status is Status.OPTIMAL:
        feas, eig = check_point(prob, sol.x)
        scale = 1.0 + abs(sol.objective_value)
        if feas > feas_tol or eig < -psd_tol or sol.gap > gap_tol * scale:
            logger.warning(
                "backend %s reported %s but residual=%.2e, min-eig=%.2e, gap=%.2e",
                sol.backend, sol.message, feas, eig, sol.gap,
            )
            sol.status = Status.NUMERICAL_FAILURE
        elif abs(sol.objective_value) > DIVERGENCE:
            sol.status = Status.UNBOUNDED
    return sol
