"""Command-line interface.

Output formats (``--format``):
  table  aligned text, numbers rounded to ``--sig-figs`` significant figures
  csv    comma-separated with a header row, LF line endings, full precision
  json   one JSON document, full precision

Exit codes: 0 success, 2 invalid flags or parameters, 3 infeasible design,
4 internal numeric error.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import io
import json
import sys
from dataclasses import dataclass
from typing import Sequence

from . import analytic, design, optimize, simulate
from .fmt import format_sig
from .model import DesignParams, InfeasibleDesignError, ParameterError, PracticalParams

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3
EXIT_NUMERIC = 4


@dataclass(frozen=True)
class OutputSpec:
    format: str = "table"
    path: str | None = None
    sig_figs: int = 3

    def __post_init__(self):
        if self.format not in ("table", "csv", "json"):
            raise ParameterError(f"unknown output format {self.format!r}")
        if self.sig_figs < 1:
            raise ParameterError("--sig-figs must be >= 1")


def _csv_text(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def _table_text(header: Sequence[str], rows) -> str:
    cells = [list(map(str, header))] + [[str(c) for c in row] for row in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    lines = [
        "  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(row, widths))).rstrip()
        for row in cells
    ]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def _emit(text: str, out: OutputSpec) -> None:
    if out.path:
        with open(out.path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _params(args) -> PracticalParams:
    return PracticalParams(args.p, args.u)


def cmd_eti(args, out: OutputSpec) -> str:
    params = _params(args)
    if args.individual or (args.r == 1 and args.s == 1):
        eti = analytic.eti_individual(params)
        record = {"p": params.p, "u": params.u, "r": 1, "s": 1, "eti": eti}
    else:
        if args.r is None or args.s is None:
            raise ParameterError("give --r and --s, or --individual")
        b = analytic.eti_pooled(params, (args.r, args.s))
        record = {"p": params.p, "u": params.u, "r": args.r, "s": args.s, **b.to_dict()}
    if out.format == "json":
        return _json_text(record)
    if out.format == "csv":
        return _csv_text(list(record), [list(record.values())])
    rows = [(k, format_sig(v, out.sig_figs) if isinstance(v, float) and k not in ("p", "u") else v)
            for k, v in record.items()]
    return _table_text(["quantity", "value"], rows)


def _optimum_record(o: optimize.Optimum) -> dict:
    d = {"p": o.params.p, "u": o.params.u, "r": o.design.r, "s": o.design.s, "eti": o.eti}
    if o.runner_up is not None:
        d["runner_up_r"], d["runner_up_s"] = o.runner_up[0].r, o.runner_up[0].s
        d["runner_up_eti"] = o.runner_up[1]
    return d


def cmd_tables(args, out: OutputSpec) -> str:
    ps = args.p_values or optimize.TABLE_P
    us = args.u_values or optimize.TABLE_U
    grid = optimize.screening_grid(ps, us)
    tab = optimize.table(grid, args.r_max, args.s_max, individual_only=args.which == 1)
    cells = [c for row in tab for c in row]
    if out.format == "json":
        return _json_text([_optimum_record(c) for c in cells])
    if out.format == "csv":
        return _csv_text(
            ["p", "u", "r", "s", "eti", "eti_display"],
            [(c.params.p, c.params.u, c.design.r, c.design.s, repr(c.eti), format_sig(c.eti, out.sig_figs))
             for c in cells],
        )

    def cell(c):
        text = format_sig(c.eti, out.sig_figs)
        return text if args.which == 1 else f"{text} ({c.design.r},{c.design.s})"

    header = ["p"] + [f"u = {u:g}" for u in us]
    return _table_text(header, [[f"{p:g}"] + [cell(c) for c in row] for p, row in zip(ps, tab)])


def cmd_optimize(args, out: OutputSpec) -> str:
    o = optimize.optimize_design(_params(args), args.r_max, args.s_max)
    record = _optimum_record(o)
    if out.format == "json":
        return _json_text(record)
    if out.format == "csv":
        return _csv_text(list(record), [list(record.values())])
    rows = [(k, format_sig(v, out.sig_figs) if k.endswith("eti") else v) for k, v in record.items()]
    return _table_text(["quantity", "value"], rows)


def _design_params(args) -> DesignParams:
    kind = args.design if hasattr(args, "design") and args.design else args.kind
    if kind == "individual":
        return DesignParams.individual()
    if kind == "random":
        _need(args, "r", "s")
        return DesignParams.random_regular(args.r, args.s)
    if kind == "grid":
        size = args.a if args.a is not None else args.s
        if size is None:
            raise ParameterError("grid design needs --s (or --a)")
        return DesignParams.grid(size)
    _need(args, "r", "a")
    return DesignParams.hypercube(args.r, args.a)


def _need(args, *names):
    missing = [f"--{n}" for n in names if getattr(args, n) is None]
    if missing:
        raise ParameterError(f"missing {', '.join(missing)}")


def cmd_simulate(args, out: OutputSpec) -> str:
    if args.mode == "saffron":
        _need(args, "p", "n")
        report = simulate.simulate_saffron(
            args.n, args.p, args.replicates, args.seed, threads=args.threads, block_size=args.block_size
        )
    else:
        _need(args, "p", "u", "m")
        params = _params(args)
        if args.mode == "individual":
            dp = DesignParams.individual()
        else:
            dp = _design_params(args)
        config = simulate.SimulationConfig(params, dp, args.m, args.replicates, args.seed)
        run = simulate.simulate_individual if dp.is_individual else simulate.simulate_two_stage
        report = run(config, threads=args.threads)
    if args.replicate_csv:
        with open(args.replicate_csv, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(_csv_text(["replicate", "tests", "stage2_tests", "found", "infected"],
                               [(i, *row) for i, row in enumerate(report.per_replicate)]))
    record = report.to_dict(include_timing=args.timing)
    if out.format == "json":
        return _json_text(record)
    flat = {
        "mode": report.mode,
        "m": report.m,
        "replicates": report.replicates,
        "total_tests": report.total_tests,
        "stage2_tests": report.stage2_tests,
        "total_found": report.total_found,
        "total_infected": report.total_infected,
        "eti_estimate": report.eti_estimate,
        "eti_stderr": report.eti_stderr,
        "seed": report.seed,
    }
    if out.format == "csv":
        return _csv_text(list(flat), [list(flat.values())])
    rows = [(k, format_sig(v, out.sig_figs) if isinstance(v, float) else v) for k, v in flat.items()]
    rows += [(k, format_sig(v, out.sig_figs) if isinstance(v, float) else v) for k, v in report.extra.items()]
    return _table_text(["quantity", "value"], rows)


def cmd_design(args, out: OutputSpec) -> str:
    if args.kind == "saffron":
        _need(args, "block_size")
        code = design.saffron_block_code(args.block_size)
        buf = io.StringIO()
        design.write_code_csv(code, buf)
        text = buf.getvalue()
    else:
        _need(args, "m")
        dp = _design_params(args)
        if dp.kind.value == "random" and args.seed is None:
            raise ParameterError("random designs need an explicit --seed")
        built = design.build_design(dp, args.m, args.seed)
        text = design.design_csv(built)
    if args.export:
        with open(args.export, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        return ""
    return text


def cmd_rate_curve(args, out: OutputSpec) -> str:
    points = analytic.rate_curve(args.alpha_min, args.alpha_max, args.steps)
    header = ["alpha", "R_full", "R_saff", "R"]
    rows = [(pt.alpha, pt.r_full, pt.r_saff, pt.r) for pt in points]
    if out.format == "json":
        return _json_text([dict(zip(header, row)) for row in rows])
    if out.format == "table":
        return _table_text(header, [[format_sig(v, out.sig_figs) for v in row] for row in rows])
    return _csv_text(header, [[repr(v) for v in row] for row in rows])


def _output_parent(default_format: str) -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--format", choices=["table", "csv", "json"], default=default_format,
                        help=f"output format (default: {default_format})")
    parent.add_argument("--output", "-o", help="write to this file instead of stdout")
    parent.add_argument("--sig-figs", type=int, default=3, help="significant figures in table output")
    return parent


def _practical_flags(p: argparse.ArgumentParser, required: bool = True) -> None:
    p.add_argument("--p", type=float, required=required, help="prevalence in (0, 1)")
    p.add_argument("--u", type=float, required=required, help="sensitivity in (0, 1]")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pooltest",
        description="Expected tests per infected individual found (ETI) for pooled testing.",
        epilog=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eti", parents=[_output_parent("table")], help="closed-form ETI of one design")
    _practical_flags(p)
    p.add_argument("--r", type=int, help="pools per individual")
    p.add_argument("--s", type=int, help="individuals per pool")
    p.add_argument("--individual", action="store_true", help="individual testing (r = s = 1)")
    p.set_defaults(func=cmd_eti)

    p = sub.add_parser("tables", parents=[_output_parent("table")],
                       help="ETI grid: 1 = individual testing, 2 = optimal pooled designs")
    p.add_argument("--which", type=int, choices=[1, 2], default=2)
    p.add_argument("--r-max", type=int, default=optimize.DEFAULT_R_MAX)
    p.add_argument("--s-max", type=int, default=optimize.DEFAULT_S_MAX)
    p.add_argument("--p-values", type=float, nargs="*", help="prevalence rows (default 0.1 .. 0.005)")
    p.add_argument("--u-values", type=float, nargs="*", help="sensitivity columns (default 0.6 .. 0.9)")
    p.set_defaults(func=cmd_tables)

    p = sub.add_parser("optimize", parents=[_output_parent("table")], help="best (r, s) for one (p, u)")
    _practical_flags(p)
    p.add_argument("--r-max", type=int, default=optimize.DEFAULT_R_MAX)
    p.add_argument("--s-max", type=int, default=optimize.DEFAULT_S_MAX)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("simulate", parents=[_output_parent("json")],
                       help="seeded Monte Carlo; JSON report by default")
    p.add_argument("--mode", choices=["two-stage", "individual", "saffron"], default="two-stage")
    _practical_flags(p, required=False)
    p.add_argument("--design", choices=["random", "grid", "hypercube", "individual"], default="random")
    p.add_argument("--r", type=int)
    p.add_argument("--s", type=int)
    p.add_argument("--a", type=int, help="side length for grid/hypercube designs")
    p.add_argument("--m", type=int, help="individuals per replicate (rounded down to a feasible size)")
    p.add_argument("--n", type=int, help="population per replicate for --mode saffron")
    p.add_argument("--block-size", type=int, help="fixed SAFFRON block size (power of two)")
    p.add_argument("--replicates", type=int, default=100)
    p.add_argument("--seed", type=int, required=True, help="random seed (required)")
    p.add_argument("--threads", type=int, default=1, help="worker threads; never changes results")
    p.add_argument("--replicate-csv", help="also write per-replicate totals to this CSV file")
    p.add_argument("--timing", action="store_true", help="include wall time in the JSON report")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("design", parents=[_output_parent("csv")],
                       help="emit a design as CSV (pool,individual) or a SAFFRON code")
    p.add_argument("--kind", choices=["random", "grid", "hypercube", "individual", "saffron"], required=True)
    p.add_argument("--m", type=int)
    p.add_argument("--r", type=int)
    p.add_argument("--s", type=int)
    p.add_argument("--a", type=int)
    p.add_argument("--block-size", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--export", help="write the CSV to this path")
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("rate-curve", parents=[_output_parent("csv")],
                       help="CSV of alpha,R_full,R_saff,R on a uniform alpha grid")
    p.add_argument("--alpha-min", type=float, default=0.0)
    p.add_argument("--alpha-max", type=float, default=0.99)
    p.add_argument("--steps", type=int, default=100)
    p.set_defaults(func=cmd_rate_curve)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        out = OutputSpec(args.format, args.output, args.sig_figs)
        text = args.func(args, out)
    except InfeasibleDesignError as exc:
        print(f"pooltest: infeasible design: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ParameterError as exc:
        print(f"pooltest: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ArithmeticError, ValueError) as exc:
        print(f"pooltest: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if text:
        _emit(text, out)
    return EXIT_OK


if __name__ == "__main__":
    with contextlib.suppress(BrokenPipeError):
        sys.exit(main())
