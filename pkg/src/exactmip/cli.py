"""Command-line interface: ``exactmip solve|verify|iis``."""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from .arith import ExtRational, RationalParseError, parse_rational, render
from .bnb.search import SolveParams, SolveResult, solve
from .certificate import CertificateError, emit_certificate, verify_certificate
from .iis import FeasibleInstanceError, IISError, additive_method, deletion_filter
from .io import FormatError, FormatTag, infer_format, read_file, write_instance
from .model import ModelError

EXIT_OK, EXIT_ERROR, EXIT_REJECTED, EXIT_FEASIBLE = 0, 1, 2, 3

STATS_KEYS = ("status", "primal_bound", "dual_bound", "nodes", "lp_iterations",
              "cuts_applied", "repaired_solutions", "dual_proofs", "time_seconds")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _on_off(text: str) -> bool:
    low = text.lower()
    if low in ("on", "true", "yes", "1"):
        return True
    if low in ("off", "false", "no", "0"):
        return False
    raise argparse.ArgumentTypeError(f"expected on/off, got {text!r}")


def _rational(text: str) -> Fraction:
    try:
        return parse_rational(text)
    except (RationalParseError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"invalid rational {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    defaults = SolveParams()
    p = _Parser(prog="exactmip", description="Exact MILP solver with certificates.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", help="solve an MPS/LP instance exactly")
    s.add_argument("input")
    s.add_argument("--format", choices=[f.value for f in FormatTag])
    s.add_argument("--certificate", metavar="PATH", help="write a derivation certificate")
    s.add_argument("--stats", metavar="PATH", help="write solve statistics as JSON")
    s.add_argument("--node-limit", type=int, default=defaults.node_limit)
    s.add_argument("--time-limit", type=float, default=defaults.time_limit)
    s.add_argument("--cuts", type=_on_off, default=defaults.cuts, metavar="on|off")
    s.add_argument("--heuristics", type=_on_off, default=defaults.heuristics, metavar="on|off")
    s.add_argument("--branching", choices=["aps", "pscost", "firstfrac"], default=defaults.branching)
    s.add_argument("--gamma", type=_rational, default=defaults.gamma)
    s.add_argument("--reliability", type=int, default=defaults.reliability)

    v = sub.add_parser("verify", help="check a certificate")
    v.add_argument("certificate")

    i = sub.add_parser("iis", help="compute an irreducible infeasible subsystem")
    i.add_argument("input")
    i.add_argument("--format", choices=[f.value for f in FormatTag])
    i.add_argument("--method", choices=["deletion", "additive"], default="deletion")
    i.add_argument("--include-bounds", type=_on_off, default=True, metavar="on|off")
    i.add_argument("--irreducible", type=_on_off, default=True, metavar="on|off")
    i.add_argument("--output", metavar="PATH", help="reduced instance (default: <input>.iis.<ext>)")
    i.add_argument("--summary", metavar="PATH", help="JSON summary (default: <input>.iis.json)")
    i.add_argument("--node-limit", type=int, default=2000)
    return p


def _bound(value: ExtRational) -> str:
    if value.is_finite:
        return render(value.value)
    return "inf" if value.is_pos_inf else "-inf"


def stats_dict(result: SolveResult) -> dict:
    st = result.stats
    return {
        "status": result.status.value,
        "primal_bound": _bound(result.primal_bound),
        "dual_bound": _bound(result.dual_bound),
        "nodes": st.nodes,
        "lp_iterations": st.lp_iterations,
        "cuts_applied": st.cuts_applied,
        "repaired_solutions": st.repaired_solutions,
        "dual_proofs": st.dual_proofs,
        "time_seconds": round(st.time_seconds, 3),
    }


def _load(path: str, fmt: str | None):
    return read_file(path, fmt)


def run_solve(args) -> int:
    instance = _load(args.input, args.format)
    if args.gamma < 0 or args.gamma > 1:
        raise ValueError("--gamma must lie in [0, 1]")
    params = SolveParams(node_limit=args.node_limit, time_limit=args.time_limit, cuts=args.cuts,
                         heuristics=args.heuristics, branching=args.branching, gamma=args.gamma,
                         reliability=args.reliability)
    result = solve(instance, params)
    print(f"status={result.status.value} primal={_bound(result.primal_bound)} "
          f"dual={_bound(result.dual_bound)}")
    if result.incumbent is not None:
        for var, value in zip(instance.variables, result.incumbent):
            print(f"{var.name} = {render(value)}")
    if args.certificate:
        try:
            data = emit_certificate(result, instance)
        except CertificateError as exc:
            print(f"no certificate written: {exc}", file=sys.stderr)
        else:
            Path(args.certificate).write_bytes(data)
    if args.stats:
        Path(args.stats).write_text(json.dumps(stats_dict(result), indent=2) + "\n")
    return EXIT_OK


def run_verify(args) -> int:
    data = Path(args.certificate).read_bytes()
    verdict = verify_certificate(data)
    if verdict.accepted:
        print("accepted")
        return EXIT_OK
    where = f" (line {verdict.line})" if verdict.line is not None else ""
    print(f"rejected: {verdict.reason}{where}")
    return EXIT_REJECTED


def run_iis(args) -> int:
    path = Path(args.input)
    fmt = FormatTag(args.format) if args.format else infer_format(path)
    instance = read_file(path, fmt)
    try:
        if args.method == "deletion":
            result = deletion_filter(instance, include_bounds=args.include_bounds,
                                     node_limit=args.node_limit)
            if not args.irreducible:
                result.irreducible = False
        else:
            result = additive_method(instance, include_bounds=args.include_bounds,
                                     irreducible=args.irreducible, node_limit=args.node_limit)
    except FeasibleInstanceError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_FEASIBLE
    out = Path(args.output) if args.output else path.with_name(f"{path.stem}.iis{path.suffix}")
    summary_path = Path(args.summary) if args.summary else path.with_name(f"{path.stem}.iis.json")
    out.write_bytes(write_instance(result.subsystem(instance), fmt))
    summary = result.summary()
    summary_path.write_text(json.dumps(summary, indent=2) + "\n")
    print(json.dumps(summary))
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {"solve": run_solve, "verify": run_verify, "iis": run_iis}
    try:
        return handlers[args.command](args)
    except (OSError, FormatError, ModelError, IISError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
