"""Command-line interface: ``maxdet {solve,relax,export,gen-ocp,bench}``."""

import argparse
import json
import logging
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import conic
from .bnb import DEFAULT_TIME_LIMIT, solve
from .exceptions import (
    BadDimensions,
    DependentFixedRows,
    Infeasible,
    InfeasibleDomain,
    InfeasibleNode,
    MaxDetError,
    NotTall,
    ParseError,
    RankDeficient,
    RankZero,
    StartSingular,
)
from .graph import gen_ocp, looks_like_incidence, write_instance_csv
from .io import independent_columns, load_csv
from .linalg import InstanceMatrix
from .relax import solve_lp_relaxation
from .report import LN2, ReportRow, convert_log2, format_table, gap

logger = logging.getLogger("maxdet")

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _fix_list(text):
    if not text:
        return ()
    try:
        idx = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if any(i < 1 for i in idx):
        raise argparse.ArgumentTypeError("--fix indices are 1-based")
    return tuple(i - 1 for i in idx)


def load_problem(path, delimiter=",", skip_header=False):
    """Read an instance CSV; returns ``(V, default_log_base)``.

    Incidence-matrix CSVs (rows of two ones) are used as-is and reported in
    base 2; anything else is reduced to independent columns and reported in
    natural log.
    """
    raw = load_csv(path, delimiter=delimiter, skip_header=skip_header)
    if looks_like_incidence(raw.values):
        return InstanceMatrix(raw.values, check_rank=False), "2"
    return independent_columns(raw), "e"


def solve_instance(path, time_limit=DEFAULT_TIME_LIMIT, fix=(), log_base=None, tol=1e-6, delimiter=",", skip_header=False):
    """Run branch-and-bound and the root relaxation on one CSV; returns a ReportRow."""
    V, default_base = load_problem(path, delimiter, skip_header)
    base = log_base or default_base
    rep = solve(V, fix, time_limit=time_limit)
    t0 = time.perf_counter()
    try:
        sol = solve_lp_relaxation(V, fix, tol=tol)
        ub_ln = sol.cert_ub_ln
    except (StartSingular, InfeasibleDomain) as exc:
        logger.warning("relaxation failed on %s: %s", path, exc)
        ub_ln = math.nan
    t_lp = time.perf_counter() - t0
    lb = convert_log2(rep.lb_log2, base)
    ub = convert_log2(ub_ln / LN2, base)
    return ReportRow(
        name=Path(path).stem,
        n=V.n,
        r=V.r,
        lb=lb,
        lb_optimal=rep.optimal,
        time_bnb_s=rep.time_seconds,
        ub=ub,
        time_lp_s=t_lp,
        gap=gap(lb, ub) if math.isfinite(ub) else math.nan,
        log_base=base,
        subset=list(rep.subset),
    )


def _json_safe(d):
    return {k: (None if isinstance(v, float) and not math.isfinite(v) else v) for k, v in d.items()}


def cmd_solve(args):
    row = solve_instance(args.input, args.time_limit, args.fix, args.log_base, args.tol, args.delimiter, args.skip_header)
    print(format_table([row]))
    print("subset: " + " ".join(str(i + 1) for i in sorted(row.subset)))
    if args.json:
        Path(args.json).write_text(json.dumps(_json_safe(row.to_json()), indent=1) + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_relax(args):
    V, default_base = load_problem(args.input, args.delimiter, args.skip_header)
    base = args.log_base or default_base
    t0 = time.perf_counter()
    sol = solve_lp_relaxation(V, args.fix, tol=args.tol, max_iters=args.max_iters)
    elapsed = time.perf_counter() - t0
    out = {
        "name": Path(args.input).stem,
        "n": V.n,
        "r": V.r,
        "obj_log": convert_log2(sol.obj_ln / LN2, base),
        "cert_ub_log": convert_log2(sol.cert_ub_ln / LN2, base),
        "iters": sol.iters,
        "converged": sol.converged,
        "time_s": elapsed,
        "log_base": base,
    }
    print(f"objective ({base}):      {out['obj_log']:.6g}")
    print(f"certified UB ({base}):   {out['cert_ub_log']:.6g}")
    print(f"iterations:         {sol.iters} ({'converged' if sol.converged else 'not converged'})")
    if args.json:
        Path(args.json).write_text(json.dumps(_json_safe(out), indent=1) + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_export(args):
    V, _ = load_problem(args.input, args.delimiter, args.skip_header)
    build = conic.build_expcone_lp if args.form == "lp" else conic.build_sdp_relaxation
    model = build(V, args.fix)
    model.metadata["name"] = f"{Path(args.input).stem}:{model.metadata['name']}"
    conic.write_model(model, args.format, args.out)
    print(f"wrote {args.format} model with {model.num_scalar_vars} variables to {args.out}")
    return EXIT_OK


def cmd_gen_ocp(args):
    try:
        inst = gen_ocp(args.nodes, args.edges, args.seed)
    except BadDimensions as exc:
        # bad --nodes/--edges is a usage problem, not a data problem
        print(f"maxdet gen-ocp: {exc}", file=sys.stderr)
        return EXIT_USAGE
    write_instance_csv(inst, args.out)
    print(f"wrote {inst.n} edges on {inst.r} nodes to {args.out}")
    return EXIT_OK


def _bench_one(task):
    path, time_limit, log_base, tol = task
    try:
        return solve_instance(path, time_limit, (), log_base, tol), None
    except Exception as exc:  # reported per instance, not fatal for the batch
        return None, (path, exc)


def cmd_bench(args):
    paths = sorted(Path(args.dir).glob("*.csv"))
    if not paths:
        raise ParseError(f"no .csv files in {args.dir}")
    tasks = [(str(p), args.time_limit, args.log_base, args.tol) for p in paths]
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(_bench_one, tasks))
    else:
        results = [_bench_one(t) for t in tasks]
    rows = [row for row, _ in results if row is not None]
    status = EXIT_OK
    for _, failure in results:
        if failure is not None:
            path, exc = failure
            print(f"maxdet bench: {path}: {exc}", file=sys.stderr)
            if status == EXIT_OK:
                status = exit_code_for(exc)
    if args.format in ("table", "both"):
        print(format_table(rows))
    if args.format in ("jsonl", "both"):
        for row in rows:
            print(json.dumps(_json_safe(row.to_json())))
    if args.jsonl:
        with open(args.jsonl, "w", encoding="utf-8") as fh:
            for row in rows:
                fh.write(json.dumps(_json_safe(row.to_json())) + "\n")
    return status


def build_parser():
    p = _Parser(prog="maxdet", description="Maximum-determinant principal submatrix solver.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def instance_opts(sp):
        sp.add_argument("--input", required=True, help="CSV matrix, one observation per row")
        sp.add_argument("--delimiter", default=",")
        sp.add_argument("--skip-header", action="store_true")
        sp.add_argument("--fix", type=_fix_list, default=(), help="1-based rows forced into the subset, e.g. 1,4")

    sp = sub.add_parser("solve", help="branch-and-bound plus root relaxation bound")
    instance_opts(sp)
    sp.add_argument("--time-limit", type=float, default=DEFAULT_TIME_LIMIT)
    sp.add_argument("--log-base", choices=("2", "e"))
    sp.add_argument("--tol", type=float, default=1e-6)
    sp.add_argument("--json")
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("relax", help="certified log-det relaxation bound")
    instance_opts(sp)
    sp.add_argument("--tol", type=float, default=1e-6)
    sp.add_argument("--max-iters", type=int, default=5000)
    sp.add_argument("--log-base", choices=("2", "e"))
    sp.add_argument("--json")
    sp.set_defaults(func=cmd_relax)

    sp = sub.add_parser("export", help="write a conic relaxation model")
    instance_opts(sp)
    sp.add_argument("--form", choices=("lp", "sdp"), required=True)
    sp.add_argument("--format", choices=("cbf", "json"), required=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_export)

    sp = sub.add_parser("gen-ocp", help="random odd-cycle-packing instance")
    sp.add_argument("--nodes", type=int, required=True)
    sp.add_argument("--edges", type=int, required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_gen_ocp)

    sp = sub.add_parser("bench", help="solve every CSV in a directory")
    sp.add_argument("--dir", required=True)
    sp.add_argument("--time-limit", type=float, default=DEFAULT_TIME_LIMIT)
    sp.add_argument("--log-base", choices=("2", "e"))
    sp.add_argument("--tol", type=float, default=1e-6)
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--format", choices=("table", "jsonl", "both"), default="both")
    sp.add_argument("--jsonl", help="also write JSON lines to this file")
    sp.set_defaults(func=cmd_bench)
    return p


def exit_code_for(exc):
    if isinstance(exc, (Infeasible, InfeasibleNode, InfeasibleDomain, DependentFixedRows, StartSingular)):
        return EXIT_INFEASIBLE
    if isinstance(exc, (OSError, ParseError, RankZero, NotTall, RankDeficient, BadDimensions)):
        return EXIT_IO
    return EXIT_USAGE


def run(argv=None):
    """Entry point returning the process exit status."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"maxdet: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (MaxDetError, OSError, ValueError, IndexError) as exc:
        print(f"maxdet {args.command}: {exc}", file=sys.stderr)
        return exit_code_for(exc)


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
