"""Command line entry point: ``sixdmm run | oracle | validate``.

Exit codes: 0 on success, 1 on usage or config errors, 2 if any trial failed.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .config import ConfigError, format_config
from .harness import config_from_text, load_config, run_experiment, write_experiment


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sixdmm", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run an experiment sweep")
    run.add_argument("--config", help="key = value config file (defaults apply if omitted)")
    run.add_argument("--experiment", choices=("convergence", "element_sweep", "user_sweep",
                                              "power_sweep", "oracle_gap"))
    run.add_argument("--seed", type=int)
    run.add_argument("--trials", type=int)
    run.add_argument("--out", help="output directory")
    run.add_argument("--jobs", type=int, default=1, help="worker processes")

    oracle = sub.add_parser("oracle", help="CEO versus brute force on tiny instances")
    oracle.add_argument("--config")
    oracle.add_argument("--seed", type=int)
    oracle.add_argument("--trials", type=int, default=10)
    oracle.add_argument("--out", default="oracle_gap")
    oracle.add_argument("--jobs", type=int, default=1)

    val = sub.add_parser("validate", help="check a config file and print the resolved values")
    val.add_argument("--config", required=True)
    return parser


def _load(path):
    if path is None:
        return config_from_text("")
    return load_config(path)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config, spec = _load(args.config)
        if args.command == "validate":
            print(format_config(config), end="")
            print(f"experiment = {spec.experiment}\nsweep = {' '.join(map(str, spec.values))}\n"
                  f"schemes = {' '.join(spec.scheme_names)}\ntrials = {spec.trials}")
            return 0
        if args.seed is not None:
            config = config.replace(seed=args.seed)
        if args.command == "oracle":
            spec = spec.replace(experiment="oracle_gap", sweep=("tiny",),
                                schemes=("6dmm-noma", "oracle"))
        elif args.experiment is not None and args.experiment != spec.experiment:
            # sweep values and schemes of another experiment do not carry over
            spec = spec.replace(experiment=args.experiment, sweep=(), schemes=())
        spec = spec.replace(seed=config.seed, trials=args.trials, out=args.out)
    except (ConfigError, OSError) as exc:
        print(f"sixdmm: {exc}", file=sys.stderr)
        return 1

    output = run_experiment(spec, config, jobs=max(1, args.jobs))
    out_dir = write_experiment(output, spec.out, config, spec)
    for s in output.summary:
        print(f"{s['scheme']:>16} {s['sweep_value']:>10}  mean={s['mean_sum_rate']:.4f}"
              f"  se={s['std_error']:.4f}  n={s['n']}")
    print(f"wrote {out_dir}")
    return 2 if output.failed else 0


if __name__ == "__main__":
    sys.exit(main())
