"""Command-line entry point.

Subcommands: ``constellation show``, ``region dump``, ``solve
powermin|maxmin``, ``experiment run``.  All structured output goes to
stdout as JSON/CSV; diagnostics go to stderr.  Exit codes: 0 success,
1 solver infeasible, 2 bad arguments, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import harness, precoders
from .constellation import (
    Constellation,
    ConstellationError,
    classify_hull,
    load_constellation,
    make_standard,
)
from .dpcir import region_summary
from .system_model import ChannelSet, SymbolAssignment, assemble, rng_stream, sample_channel

EXIT_OK = 0
EXIT_INFEASIBLE = 1
EXIT_USAGE = 2
EXIT_IO = 3


def _add_constellation_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--kind", choices=["psk", "qam", "pam"], help="standard family")
    p.add_argument("--order", type=int, help="constellation order")
    p.add_argument("--file", help="JSON constellation file")


def _resolve_constellation(args) -> Constellation:
    if args.file:
        return load_constellation(args.file)
    if args.kind and args.order:
        return make_standard(args.kind, args.order)
    raise ConstellationError("give either --file or both --kind and --order")


def _parse_fixed_channel(text: str, n: int, k: int) -> ChannelSet:
    rows = json.loads(text)
    arr = np.asarray(rows, dtype=float)
    if arr.shape != (k, n, 2):
        raise ValueError(
            f"fixed channel must be K x N x [re, im] = ({k}, {n}, 2), got {arr.shape}"
        )
    return ChannelSet(arr[..., 0] + 1j * arr[..., 1])


def _cmd_constellation_show(args) -> int:
    c = _resolve_constellation(args)
    hull = classify_hull(c)
    out = {
        "name": c.name,
        "size": c.size,
        "points": [[float(p[0]), float(p[1])] for p in c.points],
        "hull": {
            "boundary_indices": sorted(hull.boundary_indices),
            "interior_indices": sorted(hull.interior_indices),
            "contains_origin": hull.contains_origin,
            "is_one_dimensional": hull.is_one_dimensional,
        },
    }
    print(json.dumps(out, indent=2))
    return EXIT_OK


def _cmd_region_dump(args) -> int:
    c = _resolve_constellation(args)
    if not 0 <= args.index < c.size:
        print(f"error: --index {args.index} out of range for M={c.size}",
              file=sys.stderr)
        return EXIT_USAGE
    print(json.dumps(region_summary(c, args.index), indent=2))
    return EXIT_OK


def _cmd_solve(args) -> int:
    c = _resolve_constellation(args)
    n, k = args.n, args.k
    if n < 1 or k < 1:
        print("error: --n and --k must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    if args.fixed_channel:
        ch = _parse_fixed_channel(args.fixed_channel, n, k)
    else:
        ch = sample_channel(n, k, rng_stream(args.seed, 0, "channel"))
    if args.symbols:
        idx = np.array([int(v) for v in args.symbols.split(",")])
        if idx.size != k:
            print(f"error: --symbols needs {k} indices", file=sys.stderr)
            return EXIT_USAGE
    else:
        idx = rng_stream(args.seed, 0, "symbols").integers(0, c.size, size=k)

    gamma = harness.db_to_linear(args.snr_db)
    a = SymbolAssignment.uniform(idx, args.sigma, gamma)
    sys_ = assemble(ch, c, a)

    if args.problem == "powermin":
        if args.method == "qp":
            sol = precoders.power_min_qp(sys_)
        elif args.method == "qp_peak":
            sol = precoders.power_min_qp(sys_, peak=True)
        elif args.method == "reduced":
            sol = precoders.power_min_reduced(sys_)
        else:
            print(f"error: unknown powermin method {args.method!r}",
                  file=sys.stderr)
            return EXIT_USAGE
    else:
        if args.p_dbw is None:
            print("error: maxmin needs --p-dbw", file=sys.stderr)
            return EXIT_USAGE
        mm = precoders.MaxMinConfig(
            p_max=harness.db_to_linear(args.p_dbw),
            epsilon=args.epsilon, max_iter=args.max_iter,
            n_delta=args.n_delta)
        try:
            sol = harness._maxmin_solver(args.method, sys_, args.sigma, mm)
        except (precoders.PrecoderError, harness.ConfigError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_USAGE

    out = sol.to_dict()
    out["symbols"] = [int(v) for v in idx]
    print(json.dumps(out, indent=2))
    return EXIT_INFEASIBLE if sol.status == "infeasible" else EXIT_OK


def _cmd_experiment_run(args) -> int:
    cfg = harness.load_config(args.config)
    records = harness.run_experiment(cfg, threads=args.threads)
    harness.write_csv(records, args.out)
    if args.jsonl:
        harness.write_jsonl(records, args.jsonl)
    if args.scatter_out:
        rows = harness.scatter_records(cfg, method=args.scatter_method,
                                       threads=args.threads)
        harness.write_scatter_csv(rows, args.scatter_out)
    print(f"wrote {len(records)} records to {args.out}", file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="slpkit")
    sub = p.add_subparsers(dest="command", required=True)

    pc_ = sub.add_parser("constellation", help="constellation tools")
    pcs = pc_.add_subparsers(dest="subcommand", required=True)
    show = pcs.add_parser("show", help="print points and hull classification")
    _add_constellation_flags(show)
    show.set_defaults(func=_cmd_constellation_show)

    pr = sub.add_parser("region", help="region tools")
    prs = pr.add_subparsers(dest="subcommand", required=True)
    dump = prs.add_parser("dump", help="print one point's region system")
    _add_constellation_flags(dump)
    dump.add_argument("--index", type=int, required=True)
    dump.set_defaults(func=_cmd_region_dump)

    ps = sub.add_parser("solve", help="solve one symbol slot")
    ps.add_argument("problem", choices=["powermin", "maxmin"])
    ps.add_argument("--method", default="qp",
                    help="powermin: qp|qp_peak|reduced; "
                         "maxmin: exhaustive|relaxed|bcd|bcd_warm|bisection|zf_baseline")
    ps.add_argument("--n", type=int, required=True)
    ps.add_argument("--k", type=int, required=True)
    ps.add_argument("--snr-db", type=float, default=0.0)
    ps.add_argument("--p-dbw", type=float, default=None)
    ps.add_argument("--sigma", type=float, default=1.0)
    ps.add_argument("--seed", type=int, default=0)
    ps.add_argument("--symbols", help="comma-separated symbol indices")
    ps.add_argument("--epsilon", type=float, default=1e-3)
    ps.add_argument("--max-iter", type=int, default=100)
    ps.add_argument("--n-delta", type=int, default=5)
    ps.add_argument("--fixed-channel", help=argparse.SUPPRESS)
    _add_constellation_flags(ps)
    ps.set_defaults(func=_cmd_solve)

    pe = sub.add_parser("experiment", help="run experiment configs")
    pes = pe.add_subparsers(dest="subcommand", required=True)
    run = pes.add_parser("run", help="run a config and write CSV")
    run.add_argument("--config", required=True)
    run.add_argument("--out", required=True)
    run.add_argument("--threads", type=int, default=1)
    run.add_argument("--jsonl", default=None)
    run.add_argument("--scatter-out", default=None)
    run.add_argument("--scatter-method", default="power_min_qp")
    run.set_defaults(func=_cmd_experiment_run)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (ConstellationError, harness.ConfigError,
            precoders.PrecoderError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
