"""Command-line entry point: render figures from experiment CSVs.

Usage:
    slpkit-plots render --spec figure.json
    slpkit-plots render --kind maxmin --csv results.csv --out fig.png
"""
import argparse
import sys

from .figures import FIGURE_KINDS, FigureSpec, PlotError, load_spec, render

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="slpkit-plots",
                                description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("render", help="render one figure from a CSV")
    r.add_argument("--spec", help="JSON FigureSpec file")
    r.add_argument("--kind", choices=FIGURE_KINDS)
    r.add_argument("--csv", help="input CSV path")
    r.add_argument("--out", help="output image path (.png or .svg)")
    r.add_argument("--title")
    r.add_argument("--xlabel")
    r.add_argument("--ylabel")
    r.add_argument("--constellation",
                   help="constellation JSON for the scatter overlay")
    r.add_argument("--scale", type=float, default=1.0,
                   help="received-signal scale for the scatter overlay")
    return p


def _spec_from_args(args) -> FigureSpec:
    if args.spec:
        extra = [f for f in ("kind", "csv", "out")
                 if getattr(args, f) is not None]
        if extra:
            raise PlotError(f"--spec conflicts with --{extra[0]}")
        return load_spec(args.spec)
    missing = [f for f in ("kind", "csv", "out")
               if getattr(args, f) is None]
    if missing:
        raise PlotError("either --spec or all of --kind/--csv/--out "
                        f"are required (missing --{missing[0]})")
    return FigureSpec(kind=args.kind, csv=args.csv, out=args.out,
                      title=args.title, xlabel=args.xlabel,
                      ylabel=args.ylabel, constellation=args.constellation,
                      scale=args.scale)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else EXIT_OK
    try:
        out = render(_spec_from_args(args))
    except PlotError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return EXIT_IO
    print(out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
