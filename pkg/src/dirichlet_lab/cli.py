"""Command line front end.

Every command prints one report (JSON by default) and exits with 0 for a
determinate result, 2 when a verdict is Unknown/Inconclusive and 1 on
errors, which are printed to stderr as one JSON line ``{"error": {...}}``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from typing import List, Optional

import numpy as np

from . import __version__
from .approx import Construction, DiagnosticVerdict, convergence_diagnostic
from .classify import Membership, RegimeTag, bp_infinity, bp_zero, density_report
from .errors import DirichletLabError
from .hardy import Operator, condition_C, condition_Cstar, estimate_best_constant
from .quad import Endpoint
from .space import (DirichletFunction, constant_function, morrey_modulus, omega0, omega_inf,
                    seminorm, trace_infinity, trace_zero)
from .varmin import MinimizerProblem, Side, closed_form_minimizer, discrete_minimizer
from .weights import interpolate_weights, parse_weight

SCHEMA = "dirichlet-lab/1"
EXIT_OK, EXIT_ERROR, EXIT_UNDETERMINED = 0, 1, 2

CSV_HELP = """\
CSV columns:
  omega   t, omega0, omega_inf        (empty when the weight is not B_p there)
  approx  n, s_n, t_n, gap, predicted_gap, verdict
  others  key, value                  (flattened report)
"""


class UsageError(DirichletLabError):
    code = "E_USAGE"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# serialization ----------------------------------------------------------


def _float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    text = format(x, ".17g")
    if all(c in "-0123456789" for c in text):
        text += ".0"
    return text


def dumps(obj) -> str:
    """Deterministic JSON: sorted keys, floats with 17 significant digits."""
    if isinstance(obj, dict):
        items = sorted(obj.items(), key=lambda kv: str(kv[0]))
        return "{" + ", ".join(f"{json.dumps(str(k))}: {dumps(v)}" for k, v in items) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(dumps(v) for v in obj) + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _float(float(obj))
    if hasattr(obj, "value") and hasattr(obj, "name"):  # enums
        return dumps(obj.value)
    return json.dumps(str(obj))


def _flatten(obj, prefix=""):
    if isinstance(obj, dict):
        for k in sorted(obj):
            yield from _flatten(obj[k], f"{prefix}{k}.")
    elif isinstance(obj, (list, tuple)):
        for i, v in enumerate(obj):
            yield from _flatten(v, f"{prefix}{i}.")
    else:
        yield prefix[:-1], obj


def _csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for row in rows:
        writer.writerow([_float(x).strip('"') if isinstance(x, float) else
                         ("" if x is None else x) for x in row])
    return buf.getvalue()


# argument parsing ------------------------------------------------------


def _floats(text: str) -> List[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"expected a comma separated list of numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--weight", default="1", help="weight expression in t (default: 1)")
    common.add_argument("--p", type=float, default=2.0, help="exponent p > 1 (default: 2)")
    common.add_argument("--tol", type=float, default=1e-8, help="tolerance (default: 1e-8)")
    common.add_argument("--output", choices=["json", "csv"], default="json")
    common.add_argument("--seed", type=int, default=42)

    fn = _Parser(add_help=False)
    fn.add_argument("--function", help="path to a function JSON {anchor, anchor_value, derivative, label}")
    fn.add_argument("--derivative", help="derivative expression in t (alternative to --function)")
    fn.add_argument("--anchor", type=float, default=1.0)
    fn.add_argument("--anchor-value", type=float, default=0.0)

    parser = _Parser(prog="dirichlet-lab", description="Weighted Dirichlet space toolkit.",
                     epilog=CSV_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("classify", parents=[common], help="B_p membership and density regime")

    p = sub.add_parser("omega", parents=[common], help="endpoint moduli on a t-grid")
    p.add_argument("--grid", default="0.001,0.01,0.1,1,10,100,1000")

    p = sub.add_parser("trace", parents=[common, fn], help="certified endpoint trace")
    p.add_argument("--side", choices=["zero", "infinity"], default="zero")

    p = sub.add_parser("minimize", parents=[common], help="energy minimizer and discrete oracle")
    p.add_argument("--k", type=float, required=True)
    p.add_argument("--K", type=float, required=True)
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--side", choices=["left", "right"], default="left")
    p.add_argument("--n", type=int, default=256)

    p = sub.add_parser("approx", parents=[common, fn], help="approximation convergence diagnostic")
    p.add_argument("--construction", choices=[c.value for c in Construction], default="caloric-tail")
    p.add_argument("--schedule", default="2,4,8,16,32,64,128,256,512,1024")
    p.add_argument("--cut", type=float, default=1.0)

    p = sub.add_parser("hardy", parents=[common], help="conditions (C)/(C*) and constant estimate")
    p.add_argument("--h", required=True, help="target weight expression")
    p.add_argument("--q", type=float, help="target exponent (default: p)")
    p.add_argument("--operator", choices=["hardy", "conjugate"], default="hardy")
    p.add_argument("--estimate", action="store_true", help="also estimate the best constant")
    p.add_argument("--trials", type=int, default=64)

    p = sub.add_parser("morrey", parents=[common, fn], help="weighted Morrey modulus vs seminorm")
    p.add_argument("--grid", default="0.5,1,1.5,2,3,4")

    p = sub.add_parser("interp", parents=[common], help="interpolated weight and exponent")
    p.add_argument("--weight1", required=True)
    p.add_argument("--p1", type=float, required=True)
    p.add_argument("--theta", type=float, required=True)
    return parser


def _function(args) -> Optional[DirichletFunction]:
    if getattr(args, "function", None):
        try:
            with open(args.function, encoding="utf-8") as fh:
                return DirichletFunction.from_json(fh.read())
        except OSError as exc:
            raise UsageError(f"cannot read function file: {exc}") from None
        except json.JSONDecodeError as exc:
            raise UsageError(f"function file is not JSON: {exc}") from None
    if getattr(args, "derivative", None):
        return DirichletFunction.from_expression(args.derivative, args.anchor, args.anchor_value)
    return None


def _need_function(args):
    u = _function(args)
    if u is None:
        raise UsageError("this command needs --function or --derivative")
    return u


# commands ---------------------------------------------------------------


def _cmd_classify(args, w):
    rep = density_report(w, args.p)
    status = EXIT_UNDETERMINED if rep.regime.tag is RegimeTag.UNKNOWN else EXIT_OK
    result = rep.to_dict()
    prov = {"bp_zero": rep.regime.zero.integral.to_dict(),
            "bp_infinity": rep.regime.infinity.integral.to_dict()}
    return result, prov, status, None


def _cmd_omega(args, w):
    grid = _floats(args.grid)
    z = bp_zero(w, args.p)
    i = bp_infinity(w, args.p)
    rows = []
    for t in grid:
        o0 = omega0(w, args.p, t) if z.member is Membership.YES else None
        oi = omega_inf(w, args.p, t) if i.member is Membership.YES else None
        rows.append({"t": t, "omega0": o0, "omega_inf": oi})
    undetermined = Membership.UNKNOWN in (z.member, i.member)
    table = [["t", "omega0", "omega_inf"]] + [[r["t"], r["omega0"], r["omega_inf"]] for r in rows]
    prov = {"bp_zero": z.integral.to_dict(), "bp_infinity": i.integral.to_dict()}
    return ({"rows": rows, "bp_zero": z.member.value, "bp_infinity": i.member.value}, prov,
            EXIT_UNDETERMINED if undetermined else EXIT_OK, table)


def _cmd_trace(args, w):
    u = _need_function(args)
    side = Endpoint.ZERO if args.side == "zero" else Endpoint.INFINITY
    tr = (trace_zero if side is Endpoint.ZERO else trace_infinity)(u, w, args.p, args.tol)
    result = tr.to_dict()
    result["seminorm"] = seminorm(u, w, args.p)
    return result, {"bound": "Hoelder tail bound at the final probe"}, \
        EXIT_OK if tr.converged else EXIT_UNDETERMINED, None


def _cmd_minimize(args, w):
    side = Side.LEFT if args.side == "left" else Side.RIGHT
    prob = MinimizerProblem(args.k, args.K, args.a, side, args.p, w)
    sol = closed_form_minimizer(prob)
    disc = discrete_minimizer(prob, args.n)
    result = {
        "energy": sol.minimal_energy,
        "normalizer": sol.normalizer,
        "oracle_energy": disc.energy,
        "oracle_relative_gap": disc.energy / sol.minimal_energy - 1.0,
        "oracle_nodes": args.n,
        "oracle_iterations": disc.iterations,
        "boundary": list(prob.boundary),
    }
    prov = {"normalizer": "dual-density integral over [k, K]",
            "oracle": "piecewise linear minimizer with exact cell masses"}
    return result, prov, EXIT_OK, None


def _cmd_approx(args, w):
    builder = Construction(args.construction)
    u = _function(args)
    if u is None:
        if builder in (Construction.CALORIC_TAIL, Construction.CALORIC_HEAD):
            u = constant_function(1.0, anchor=args.cut)
        else:
            raise UsageError("truncations need --function or --derivative")
    diag = convergence_diagnostic(u, builder, w, args.p, _floats(args.schedule), args.tol, args.cut)
    def _n(x):
        return int(x) if float(x).is_integer() else x

    steps = [{"n": _n(s.index), "s_n": s.s_n, "t_n": s.t_n, "gap": s.gap,
              "predicted_gap": s.predicted_gap} for s in diag.steps]
    table = [["n", "s_n", "t_n", "gap", "predicted_gap", "verdict"]] + [
        [_n(s.index), s.s_n, s.t_n, s.gap, s.predicted_gap, diag.verdict.value] for s in diag.steps]
    status = EXIT_UNDETERMINED if diag.verdict is DiagnosticVerdict.INCONCLUSIVE else EXIT_OK
    return ({"steps": steps, "verdict": diag.verdict.value,
             "predicted_mismatch": diag.predicted_mismatch},
            {"gap": "quadrature of the derivative difference"}, status, table)


def _cmd_hardy(args, w):
    h = parse_weight(args.h)
    q = args.p if args.q is None else args.q
    op = Operator.HARDY if args.operator == "hardy" else Operator.CONJUGATE
    rep = condition_C(w, h, args.p, q) if op is Operator.HARDY else condition_Cstar(w, h, args.p, q)
    d = rep.to_dict()
    prov = d.pop("provenance")
    if args.estimate and rep.bounded is Membership.YES:
        est, idx = estimate_best_constant(w, h, args.p, q, op, args.trials, args.seed, rep)
        d["constant_estimate"] = est
        d["constant_candidate"] = idx
    status = EXIT_UNDETERMINED if rep.bounded is Membership.UNKNOWN else EXIT_OK
    return d, prov, status, None


def _cmd_morrey(args, w):
    u = _need_function(args)
    grid = _floats(args.grid)
    mod = morrey_modulus(u, w, args.p, grid)
    semi = seminorm(u, w, args.p)
    return ({"modulus": mod, "seminorm": semi, "bound_holds": mod <= semi + 1e-6},
            {"distance": "dual-density integrals between consecutive grid points"}, EXIT_OK, None)


def _cmd_interp(args, w):
    w1 = parse_weight(args.weight1)
    wt, pt = interpolate_weights(w, args.p, w1, args.p1, args.theta)
    return {"weight": wt.render(), "p": pt}, {}, EXIT_OK, None


COMMANDS = {
    "classify": _cmd_classify,
    "omega": _cmd_omega,
    "trace": _cmd_trace,
    "minimize": _cmd_minimize,
    "approx": _cmd_approx,
    "hardy": _cmd_hardy,
    "morrey": _cmd_morrey,
    "interp": _cmd_interp,
}


def _error_line(exc) -> str:
    code = getattr(exc, "code", "E_INTERNAL")
    return dumps({"error": {"code": code, "message": str(exc)}})


def main(argv: Optional[List[str]] = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        if not args.tol > 0:
            raise UsageError("--tol must be positive")
        w = parse_weight(args.weight)
        result, prov, status, table = COMMANDS[args.command](args, w)
    except (DirichletLabError, ValueError, ArithmeticError) as exc:
        stderr.write(_error_line(exc) + "\n")
        return EXIT_ERROR
    if args.output == "csv":
        rows = table if table is not None else [["key", "value"]] + list(_flatten(result))
        stdout.write(_csv(rows))
    else:
        report = {
            "schema": SCHEMA,
            "version": __version__,
            "command": args.command,
            "config": {k: v for k, v in vars(args).items()},
            "result": result,
            "provenance": prov,
        }
        stdout.write(dumps(report) + "\n")
    return status


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
