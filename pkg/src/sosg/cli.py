"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 solver failure (inconclusive),
3 invalid input data. Errors are reported as one JSON object on stderr.
File arguments accept ``bundled:NAME`` for files shipped in sosg/data.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from . import optionlab
from .cones import CheckStatus, SemiAlgebraicSet, xi_check
from .errors import ConditioningOnNullEvent, InconclusiveError
from .oracle import lp_conditional, lp_lower_prevision, lp_upper_prevision
from .piecewise import PiecewisePolynomial, pw_avoids_sure_loss, pw_lower_prevision, pw_upper_prevision
from .poly import Polynomial
from .prevision import (
    AslStatus,
    AssessmentSet,
    PrevisionStatus,
    avoids_sure_loss,
    degree_sweep,
    dual_lower_prevision,
    dual_upper_prevision,
    lower_prevision,
    upper_prevision,
)
from .updating import (
    Event,
    conditional_dual,
    conditional_lower_prevision,
    conditional_upper_prevision,
    multi_constraint_conditional,
    pw_conditional_lower_prevision,
    pw_conditional_upper_prevision,
)

EXIT_OK, EXIT_USAGE, EXIT_SOLVER, EXIT_DATA = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def fmt(v: float) -> str:
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    s = f"{v:.6f}"
    return "0.000000" if s == "-0.000000" else s


def read_text(name: str) -> str:
    if name.startswith("bundled:"):
        return resources.files("sosg.data").joinpath(name.split(":", 1)[1]).read_text()
    return Path(name).read_text()


def read_json(name: str):
    return json.loads(read_text(name))


def load_gamble(data) -> Polynomial | PiecewisePolynomial:
    if "pieces" in data:
        return PiecewisePolynomial.from_json(data)
    return Polynomial.from_json(data)


def load_gambles(name: str | None) -> list:
    if name is None:
        return []
    data = read_json(name)
    if isinstance(data, dict):
        data = data.get("gambles", [])
    return [load_gamble(g) for g in data]


def load_omega(name: str | None, n: int):
    """Returns (SemiAlgebraicSet, interval or None)."""
    if name is None:
        return SemiAlgebraicSet.whole(n), None
    data = read_json(name)
    if "interval" in data:
        a, b = (float(v) for v in data["interval"])
        return SemiAlgebraicSet.interval(a, b), (a, b)
    omega = SemiAlgebraicSet.from_json(data, n)
    return omega, omega.interval_bounds()


def _degree(args, need: int) -> int:
    return need if args.degree is None else args.degree


def _is_pw(*gs) -> bool:
    return any(isinstance(g, PiecewisePolynomial) for g in gs)


def _print_result(res, out) -> int:
    out.write(f"status {res.status.value}\n")
    out.write(f"value {fmt(res.value)}\n")
    if res.status is PrevisionStatus.INCONCLUSIVE:
        return EXIT_SOLVER
    if res.status is PrevisionStatus.NULL_EVENT:
        raise ConditioningOnNullEvent(res.message or "conditioning on a null event")
    return EXIT_OK


def _oracle_line(out, value: float, ref: float) -> None:
    out.write(f"oracle {fmt(ref)}\n")
    out.write(f"gap {fmt(abs(value - ref)) if math.isfinite(value) and math.isfinite(ref) else 'nan'}\n")


def cmd_sos_check(args, out) -> int:
    p = Polynomial.from_json(read_json(args.file))
    omega = SemiAlgebraicSet.whole(p.n)
    if getattr(args, "omega", None):
        omega, _ = load_omega(args.omega, p.n)
    res = xi_check(p, omega, args.degree)
    out.write(res.status.value + "\n")
    if res.certificate is not None:
        out.write(json.dumps(res.certificate.to_json()) + "\n")
    elif res.witness is not None:
        out.write(json.dumps({"moment_witness": res.witness.to_json()}) + "\n")
    return EXIT_SOLVER if res.status is CheckStatus.INCONCLUSIVE else EXIT_OK


def _setup(args):
    f = load_gamble(read_json(args.file))
    G = load_gambles(args.gambles)
    n = 1 if _is_pw(f, *G) else f.n
    omega, interval = load_omega(args.omega, n)
    return f, G, omega, interval


def _need(f, G, omega) -> int:
    polys = [f] + list(G)
    degs = [p.degree for p in polys]
    return max([1, omega.max_half_degree] + [(k + 1) // 2 for k in degs])


def cmd_prevision(args, out) -> int:
    f, G, omega, interval = _setup(args)
    if args.oracle and interval is None:
        raise ValueError("--oracle needs a 1-D interval domain")
    d = _degree(args, _need(f, G, omega))
    if _is_pw(f, *G):
        if interval is None:
            raise ValueError("piecewise gambles need an interval domain")
        fn = pw_upper_prevision if args.upper else pw_lower_prevision
        if args.dual:
            raise ValueError("--dual is available for polynomial gambles only")
        res = fn(interval, G, f, d)
    else:
        a = AssessmentSet(omega, G, d)
        if args.dual:
            res = (dual_upper_prevision if args.upper else dual_lower_prevision)(a, f)
        else:
            res = (upper_prevision if args.upper else lower_prevision)(a, f)
    code = _print_result(res, out)
    if args.oracle:
        ref = (lp_upper_prevision if args.upper else lp_lower_prevision)(interval, G, f, args.oracle)
        _oracle_line(out, res.value, ref)
    return code


def cmd_condition(args, out) -> int:
    f, G, omega, interval = _setup(args)
    event = Event.from_json(read_json(args.given))
    if args.oracle and interval is None:
        raise ValueError("--oracle needs a 1-D interval domain")
    d = _degree(args, max(_need(f, G, omega), max(event.half_degrees)))
    if _is_pw(f, *G):
        if interval is None:
            raise ValueError("piecewise gambles need an interval domain")
        fn = pw_conditional_upper_prevision if args.upper else pw_conditional_lower_prevision
        res = fn(interval, G, event, f, d)
    else:
        a = AssessmentSet(omega, G, d)
        if len(event.hs) > 1:
            g = -f if args.upper else f
            res = multi_constraint_conditional(a, event, g)
            res = res.negated() if args.upper else res
        elif args.dual:
            g = -f if args.upper else f
            res, _ = conditional_dual(a, event, g)
            res = res.negated() if args.upper else res
        else:
            res = (conditional_upper_prevision if args.upper else conditional_lower_prevision)(a, event, f)
    code = _print_result(res, out)
    if args.oracle:
        lo, hi = _event_interval(event, interval)
        sign = -1.0 if args.upper else 1.0
        ref = sign * lp_conditional(interval, G, (lo, hi), -f if args.upper else f, args.oracle)
        _oracle_line(out, res.value, ref)
    return code


def _event_interval(event: Event, interval) -> tuple[float, float]:
    """Bounding interval of a 1-D event, read off a fine grid."""
    xs = np.linspace(interval[0], interval[1], 200001)
    mask = np.all([h.eval_many(xs[:, None]) >= 0 for h in event.hs], axis=0)
    if not mask.any():
        raise ConditioningOnNullEvent("event is empty on the domain")
    inside = xs[mask]
    if np.any(np.diff(np.flatnonzero(mask)) > 1):
        raise ValueError("--oracle supports interval events only")
    return float(inside[0]), float(inside[-1])


def cmd_asl(args, out) -> int:
    G = load_gambles(args.gambles)
    n = 1 if _is_pw(*G) or not G else G[0].n
    omega, interval = load_omega(args.omega, n)
    need = max([1, omega.max_half_degree] + [(g.degree + 1) // 2 for g in G])
    d = _degree(args, need)
    if _is_pw(*G):
        if interval is None:
            raise ValueError("piecewise gambles need an interval domain")
        res = pw_avoids_sure_loss(interval, G, d)
    else:
        res = avoids_sure_loss(AssessmentSet(omega, G, d))
    out.write(f"{res.status.value}\n")
    out.write(f"lambda0 {fmt(res.lambda0)}\n")
    return EXIT_SOLVER if res.status is AslStatus.INCONCLUSIVE else EXIT_OK


def parse_degrees(spec: str) -> list[int]:
    if ".." in spec:
        lo, hi = spec.split("..")
        return list(range(int(lo), int(hi) + 1))
    return [int(v) for v in spec.split(",")]


def cmd_sweep(args, out) -> int:
    f, G, omega, interval = _setup(args)
    degrees = parse_degrees(args.degrees)
    out.write("d,value\n")
    code = EXIT_OK
    if _is_pw(f, *G):
        for d in degrees:
            res = pw_lower_prevision(interval, G, f, d)
            out.write(f"{d},{fmt(res.value)}\n")
            code = max(code, EXIT_SOLVER if res.status is PrevisionStatus.INCONCLUSIVE else EXIT_OK)
        return code
    need = _need(f, G, omega)
    degrees = [d for d in degrees if d >= need]
    if not degrees:
        raise ValueError(f"no requested degree reaches the minimum admissible {need}")
    for d, res in degree_sweep(AssessmentSet(omega, G, degrees[0]), f, degrees):
        out.write(f"{d},{fmt(res.value)}\n")
        if res.status is PrevisionStatus.INCONCLUSIVE:
            code = EXIT_SOLVER
    return code


def cmd_options(args, out) -> int:
    chain = optionlab.load_option_chain(read_text(args.chain).encode())
    cfg = optionlab.CurveConfig(d=args.degree or 2, workers=args.workers)
    if args.domain:
        a, b = (float(v) for v in args.domain.split(","))
        if not a < b:
            raise ValueError("domain needs a < b")
        cfg.domain = (a, b)
    if args.cgrid:
        cfg.c_grid = optionlab.parse_cgrid(args.cgrid)
    if args.given is not None and args.weight:
        raise UsageError("--given and --weight are mutually exclusive")
    if args.given is not None:
        curve = optionlab.conditioned_curve(chain, args.given, cfg)
    elif args.weight:
        curve = optionlab.weighted_curve(chain, optionlab.load_weight(read_text(args.weight)), cfg)
    else:
        curve = optionlab.probability_curve(chain, cfg)
    out.write(curve.to_csv())
    if args.oracle:
        ref = optionlab.oracle_curve(chain, cfg, args.oracle)
        gap = max(np.nanmax(np.abs(curve.lower - ref.lower)), np.nanmax(np.abs(curve.upper - ref.upper)))
        sys.stderr.write(f"oracle max gap {fmt(gap)}\n")
    return EXIT_SOLVER if curve.failures else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="sosg", description="SOS lower/upper previsions of polynomial gambles.")
    p.add_argument("--seed", type=int, default=None, help="seed for data generators (solvers are deterministic)")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    s = sub.add_parser("sos-check", help="SOS membership of a polynomial")
    s.add_argument("file")
    s.add_argument("-d", "--degree", type=int)
    s.set_defaults(fn=cmd_sos_check)

    s = sub.add_parser("xi-check", help="membership in the truncated quadratic module of a domain")
    s.add_argument("file")
    s.add_argument("--omega", required=True)
    s.add_argument("-d", "--degree", type=int)
    s.set_defaults(fn=cmd_sos_check)

    def common(s, gambles_required=False):
        s.add_argument("file")
        s.add_argument("--omega")
        s.add_argument("--gambles", required=gambles_required)
        s.add_argument("-d", "--degree", type=int)

    s = sub.add_parser("prevision", help="lower (or upper) prevision")
    common(s)
    s.add_argument("--upper", action="store_true")
    s.add_argument("--dual", action="store_true", help="solve the moment program instead")
    s.add_argument("--oracle", type=int, metavar="N", help="also run the grid LP with N points")
    s.set_defaults(fn=cmd_prevision)

    s = sub.add_parser("condition", help="prevision conditional on an event")
    common(s)
    s.add_argument("--given", required=True, metavar="EVENTFILE")
    s.add_argument("--upper", action="store_true")
    s.add_argument("--dual", action="store_true")
    s.add_argument("--oracle", type=int, metavar="N")
    s.set_defaults(fn=cmd_condition)

    s = sub.add_parser("asl", help="avoiding-sure-loss check")
    s.add_argument("--gambles", required=True)
    s.add_argument("--omega")
    s.add_argument("-d", "--degree", type=int)
    s.set_defaults(fn=cmd_asl)

    s = sub.add_parser("sweep", help="lower prevision over a range of degrees")
    common(s)
    s.add_argument("--degrees", default="1..5")
    s.set_defaults(fn=cmd_sweep)

    s = sub.add_parser("options", help="probability curves from an option chain")
    s.add_argument("chain")
    s.add_argument("--domain")
    s.add_argument("--cgrid")
    s.add_argument("--given", type=float, metavar="S0")
    s.add_argument("--weight")
    s.add_argument("--oracle", type=int, metavar="N")
    s.add_argument("-d", "--degree", type=int)
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(fn=cmd_options)
    return p


def _error(kind: str, exc: BaseException) -> None:
    sys.stderr.write(json.dumps({"error": kind, "type": type(exc).__name__, "message": str(exc)}) + "\n")


def run(argv: Sequence[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "command", None):
            raise UsageError("a subcommand is required")
        return args.fn(args, out)
    except UsageError as exc:
        _error("usage", exc)
        return EXIT_USAGE
    except InconclusiveError as exc:
        _error("solver", exc)
        return EXIT_SOLVER
    except (ValueError, KeyError, TypeError, OSError) as exc:
        _error("data", exc)
        return EXIT_DATA


def main() -> None:
    sys.exit(run())
