"""Option-chain case study: bid/ask quotes as desirable gambles, probability curves for S_T >= c."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import ChainValidationError, ConditioningOnNullEvent
from .oracle import lp_conditional, lp_lower_prevision, lp_upper_prevision
from .piecewise import (
    PiecewisePolynomial,
    call_payoff,
    indicator_at_least,
    pw_avoids_sure_loss,
    pw_lower_prevision,
    pw_upper_prevision,
)
from .prevision import AslResult, PrevisionResult, PrevisionStatus, SolveOptions
from .updating import (
    Event,
    pw_conditional_lower_prevision,
    pw_conditional_upper_prevision,
    pw_weighted_lower_prevision,
    pw_weighted_upper_prevision,
)

logger = logging.getLogger(__name__)

DEFAULT_DOMAIN = (2000.0, 3200.0)


@dataclass(frozen=True)
class ChainRow:
    strike: float
    bid: float
    ask: float


@dataclass
class OptionChain:
    rows: list[ChainRow]
    discount: float = 1.0

    def __post_init__(self):
        if not self.rows:
            raise ChainValidationError("option chain has no rows")
        for r in self.rows:
            if not (math.isfinite(r.strike) and math.isfinite(r.bid) and math.isfinite(r.ask)):
                raise ChainValidationError(f"non-finite quote at strike {r.strike}")
            if r.bid < 0 or r.bid > r.ask:
                raise ChainValidationError(f"need 0 <= bid <= ask at strike {r.strike}, got {r.bid} / {r.ask}")
        ks = [r.strike for r in self.rows]
        if any(b <= a for a, b in zip(ks, ks[1:])):
            raise ChainValidationError("strikes must be strictly increasing")

    @property
    def strikes(self) -> list[float]:
        return [r.strike for r in self.rows]

    def __len__(self) -> int:
        return len(self.rows)


def load_option_chain(data: bytes | str, discount: float = 1.0) -> OptionChain:
    """Parse "strike,bid,ask" CSV text; prices are multiplied by ``discount``."""
    text = data.decode() if isinstance(data, bytes) else data
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or [h.strip().lower() for h in header] != ["strike", "bid", "ask"]:
        raise ChainValidationError('expected header "strike,bid,ask"')
    rows = []
    for lineno, rec in enumerate(reader, start=2):
        if not rec or all(not c.strip() for c in rec):
            continue
        if len(rec) != 3:
            raise ChainValidationError(f"line {lineno}: expected 3 fields, got {len(rec)}")
        try:
            k, b, a = (float(c) for c in rec)
        except ValueError:
            raise ChainValidationError(f"line {lineno}: non-numeric field") from None
        rows.append(ChainRow(k, b * discount, a * discount))
    return OptionChain(rows, discount)


def bundled_table1() -> OptionChain:
    return load_option_chain(resources.files("sosg.data").joinpath("table1.csv").read_bytes())


def bundled_weight() -> PiecewisePolynomial:
    return load_weight(resources.files("sosg.data").joinpath("weight_hump.json").read_text())


def load_weight(text: str) -> PiecewisePolynomial:
    return PiecewisePolynomial.from_json(json.loads(text))


def assessments_from_chain(chain: OptionChain) -> list[PiecewisePolynomial]:
    """payoff - bid and ask - payoff for every row."""
    G = []
    for r in chain.rows:
        pay = call_payoff(r.strike)
        G += [pay - r.bid, r.ask - pay]
    return G


def parse_cgrid(spec: str) -> np.ndarray:
    """"a:b:step" inclusive of b when it lies on the grid."""
    try:
        a, b, step = (float(v) for v in spec.split(":"))
    except ValueError:
        raise ValueError(f"c-grid must look like a:b:step, got {spec!r}") from None
    if step <= 0 or b < a:
        raise ValueError("c-grid needs step > 0 and a <= b")
    k = int(math.floor((b - a) / step + 1e-9))
    return a + step * np.arange(k + 1)


def default_cgrid() -> np.ndarray:
    return parse_cgrid("2400:2800:10")


@dataclass
class CurveConfig:
    domain: tuple[float, float] = DEFAULT_DOMAIN
    c_grid: np.ndarray = field(default_factory=default_cgrid)
    d: int = 2
    workers: int = 1
    options: SolveOptions = field(default_factory=SolveOptions)


@dataclass
class ProbabilityCurve:
    c: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    updated_lower: np.ndarray | None = None
    updated_upper: np.ndarray | None = None
    failures: dict = field(default_factory=dict)
    domain: tuple[float, float] = DEFAULT_DOMAIN

    def violations(self, tol: float = 1e-6) -> list[str]:
        """Broken curve invariants: range [0, 1], lower <= upper, both nonincreasing in c."""
        out = []
        pairs = [("lower", self.lower, "upper", self.upper)]
        if self.updated_lower is not None:
            pairs.append(("updated_lower", self.updated_lower, "updated_upper", self.updated_upper))
        for ln, lo, un, up in pairs:
            for name, v in ((ln, lo), (un, up)):
                if np.any(np.isnan(v)):
                    out.append(f"{name} has failed points")
                if np.any(v < -tol) or np.any(v > 1 + tol):
                    out.append(f"{name} leaves [0, 1]")
                if np.any(np.diff(v) > tol):
                    out.append(f"{name} is not nonincreasing")
            if np.any(lo > up + tol):
                out.append(f"{ln} exceeds {un}")
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        cols = ["c", "lower", "upper"]
        if self.updated_lower is not None:
            cols += ["updated_lower", "updated_upper"]
        buf.write(",".join(cols) + "\n")
        order = np.argsort(self.c, kind="stable")
        for i in order:
            vals = [self.c[i], self.lower[i], self.upper[i]]
            if self.updated_lower is not None:
                vals += [self.updated_lower[i], self.updated_upper[i]]
            buf.write(",".join(_fmt(v) for v in vals) + "\n")
        return buf.getvalue()


def _fmt(v: float) -> str:
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    s = f"{v:.6f}"
    return "0.000000" if s == "-0.000000" else s


def _map(fn: Callable[[float], PrevisionResult], cs: Sequence[float], workers: int) -> list[PrevisionResult]:
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(fn, cs))
    return [fn(c) for c in cs]


def _values(results: list[PrevisionResult], cs, failures: dict, label: str) -> np.ndarray:
    out = np.full(len(results), np.nan)
    for i, (c, r) in enumerate(zip(cs, results)):
        if r.status is PrevisionStatus.VALUE:
            out[i] = r.value
        else:
            failures[(label, float(c))] = f"{r.status.value}: {r.message}"
    return out


def probability_curve(chain: OptionChain, cfg: CurveConfig | None = None) -> ProbabilityCurve:
    """Lower and upper previsions of I[c, inf) for each c in the grid."""
    cfg = cfg or CurveConfig()
    if cfg.d < 1:
        raise ValueError("d must be at least 1")
    G = assessments_from_chain(chain)
    cs = np.asarray(cfg.c_grid, dtype=float)
    failures: dict = {}
    lo = _map(lambda c: pw_lower_prevision(cfg.domain, G, indicator_at_least(c), cfg.d, cfg.options), cs, cfg.workers)
    up = _map(lambda c: pw_upper_prevision(cfg.domain, G, indicator_at_least(c), cfg.d, cfg.options), cs, cfg.workers)
    return ProbabilityCurve(cs, _values(lo, cs, failures, "lower"), _values(up, cs, failures, "upper"), failures=failures, domain=cfg.domain)


def oracle_curve(chain: OptionChain, cfg: CurveConfig | None = None, grid_n: int = 8001) -> ProbabilityCurve:
    cfg = cfg or CurveConfig()
    G = assessments_from_chain(chain)
    cs = np.asarray(cfg.c_grid, dtype=float)
    lo = np.array([lp_lower_prevision(cfg.domain, G, indicator_at_least(c), grid_n) for c in cs])
    up = np.array([lp_upper_prevision(cfg.domain, G, indicator_at_least(c), grid_n) for c in cs])
    return ProbabilityCurve(cs, lo, up, domain=cfg.domain)


def arbitrage_check(chain: OptionChain, domain: tuple[float, float] = DEFAULT_DOMAIN, d: int = 2, opts: SolveOptions | None = None) -> AslResult:
    return pw_avoids_sure_loss(domain, assessments_from_chain(chain), d, opts)


def conditioned_curve(chain: OptionChain, s0: float, cfg: CurveConfig | None = None) -> ProbabilityCurve:
    """Unconditional curve plus the curve updated on S_T >= s0."""
    cfg = cfg or CurveConfig()
    if s0 >= cfg.domain[1]:
        raise ConditioningOnNullEvent(f"S_T >= {s0} leaves no room in the domain {cfg.domain}")
    base = probability_curve(chain, cfg)
    G = assessments_from_chain(chain)
    ev = Event.at_least(s0)
    cs = base.c
    lo = _map(lambda c: pw_conditional_lower_prevision(cfg.domain, G, ev, indicator_at_least(c), cfg.d, cfg.options), cs, cfg.workers)
    up = _map(lambda c: pw_conditional_upper_prevision(cfg.domain, G, ev, indicator_at_least(c), cfg.d, cfg.options), cs, cfg.workers)
    if all(r.status is PrevisionStatus.NULL_EVENT for r in lo):
        raise ConditioningOnNullEvent(f"S_T >= {s0} is a null event for this chain")
    base.updated_lower = _values(lo, cs, base.failures, "updated_lower")
    base.updated_upper = _values(up, cs, base.failures, "updated_upper")
    return base


def oracle_conditioned(chain: OptionChain, s0: float, cfg: CurveConfig | None = None, grid_n: int = 8001) -> tuple[np.ndarray, np.ndarray]:
    cfg = cfg or CurveConfig()
    G = assessments_from_chain(chain)
    ev = (s0, cfg.domain[1])
    lo = np.array([lp_conditional(cfg.domain, G, ev, indicator_at_least(c), grid_n) for c in cfg.c_grid])
    up = np.array([-lp_conditional(cfg.domain, G, ev, -indicator_at_least(c), grid_n) for c in cfg.c_grid])
    return lo, up


def weighted_curve(chain: OptionChain, W, cfg: CurveConfig | None = None) -> ProbabilityCurve:
    """Unconditional curve plus the curve with (f - lambda_0) replaced by (f - lambda_0) W."""
    cfg = cfg or CurveConfig()
    base = probability_curve(chain, cfg)
    G = assessments_from_chain(chain)
    cs = base.c
    lo = _map(lambda c: pw_weighted_lower_prevision(cfg.domain, G, indicator_at_least(c), W, cfg.d, cfg.options), cs, cfg.workers)
    up = _map(lambda c: pw_weighted_upper_prevision(cfg.domain, G, indicator_at_least(c), W, cfg.d, cfg.options), cs, cfg.workers)
    base.updated_lower = _values(lo, cs, base.failures, "updated_lower")
    base.updated_upper = _values(up, cs, base.failures, "updated_upper")
    return base


def call_spread_bound(chain: OptionChain, i: int) -> float:
    """Upper bound on P(S_T >= k_{i+1}) from buying call i and selling call i+1."""
    r1, r2 = chain.rows[i], chain.rows[i + 1]
    return (r1.ask - r2.bid) / (r2.strike - r1.strike)
