"""Command line interface: ``ecfgof test | simulate | sample``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

import argparse
import json
import logging
import sys

from .engine import TestConfig, bhep_test, run_test
from .errors import ConfigError, DataFormatError, NumericalError
from .harness import load_csv, load_spec, run_experiment, shipped_specs, with_overrides, write_csv
from .numerics import WeightKernel
from .samplers import FamilySpec, RngStream, sample_family

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _family(text):
    try:
        return FamilySpec.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _kernel(text):
    try:
        return WeightKernel.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _seed(text):
    value = int(text, 0)
    if not 0 <= value < 1 << 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser():
    parser = _Parser(prog="ecfgof", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    t = sub.add_parser("test", help="test a CSV sample against an elliptical family")
    t.add_argument("--data", required=True, help="CSV file, one observation per row")
    t.add_argument("--family", type=_family, default=FamilySpec(), help="normal | laplace | studentt:NU | kotz:N")
    t.add_argument("--kernel", type=_kernel, default=WeightKernel(), help="gauss | stable:B | glaplace:B")
    t.add_argument("--m", type=int, default=10, help="null replicates per statistic (default 10)")
    t.add_argument("--big-m", type=int, default=1000, dest="big_m", help="bootstrap repetitions (default 1000)")
    t.add_argument("--alpha", type=float, default=0.05)
    t.add_argument("--agg", choices=("mean", "max"), default="mean")
    t.add_argument("--seed", type=_seed, default=0)
    t.add_argument("--bhep", type=float, metavar="BETA", help="run the BHEP normality test with this beta instead")
    t.add_argument("--jobs", type=int, default=1, help="worker processes for the bootstrap")
    t.add_argument("--out", help="write the JSON outcome here (default stdout)")

    s = sub.add_parser("simulate", help="run a size/power experiment from a TOML spec")
    s.add_argument("--spec", required=True, help=f"TOML file or bundled name ({', '.join(shipped_specs())})")
    s.add_argument("--out", help="CSV output path (default stdout)")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--trials", type=int, help="override the spec's trial count")
    s.add_argument("--big-m", type=int, dest="big_m", help="override the spec's bootstrap size")
    s.add_argument("--seed", type=_seed, help="override the spec's seed")
    s.add_argument("--paper-scale", action="store_true", help="1000 trials and M=1000")

    g = sub.add_parser("sample", help="draw a sample from a family at (0, I)")
    g.add_argument("--family", type=_family, required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--p", type=int, required=True)
    g.add_argument("--seed", type=_seed, default=0)
    g.add_argument("--out", help="CSV output path (default stdout)")
    return parser


def _cmd_test(args):
    x = load_csv(args.data)
    if args.bhep is not None:
        outcome = bhep_test(x, beta=args.bhep, M=args.big_m, alpha=args.alpha, seed=args.seed)
    else:
        try:
            cfg = TestConfig(family=args.family, kernel=args.kernel, m=args.m, M=args.big_m,
                             alpha=args.alpha, agg=args.agg, seed=args.seed)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        outcome = run_test(x, cfg, n_jobs=max(1, args.jobs))
    text = json.dumps(outcome.to_dict(), indent=2) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_simulate(args):
    spec = load_spec(args.spec)
    if args.paper_scale:
        spec = with_overrides(spec, trials=1000, M=1000)
    spec = with_overrides(spec, trials=args.trials, M=args.big_m, seed=args.seed)
    progress = logging.getLogger("ecfgof.simulate").info
    table = run_experiment(spec, workers=args.workers, progress=progress)
    text = table.to_csv(args.out)
    if not args.out:
        sys.stdout.write(text)


def _cmd_sample(args):
    if args.n < 1 or args.p < 1:
        raise UsageError("--n and --p must be positive")
    x = sample_family(args.n, args.family, RngStream(args.seed), args.p)
    if args.out:
        write_csv(args.out, x)
    else:
        for row in x:
            sys.stdout.write(",".join(repr(float(v)) for v in row) + "\n")


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handlers = {"test": _cmd_test, "simulate": _cmd_simulate, "sample": _cmd_sample}
    try:
        handlers[args.command](args)
    except UsageError as exc:
        print(f"ecfgof {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"ecfgof {args.command}: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataFormatError as exc:
        print(f"ecfgof {args.command}: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"ecfgof {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"ecfgof {args.command}: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
