"""Command line entry point.

    isaacslab <command> [--config FILE] [--out DIR] [--threads N] [--seed N]

Commands run one experiment each (represent, freeze, affine, holder,
ksat, isaacs, moll, solve) or all of them; every run writes one CSV per
experiment into the output directory and prints one PASS/FAIL line per
experiment.  Exit codes: 0 all gates passed, 2 configuration or usage
error, 3 at least one numerical gate failed.

Config values resolve defaults < TOML file < ISAACSLAB_<SECTION>_<KEY>
environment variables < command line flags.
"""

import argparse
import sys

from .harness import EXPERIMENTS, ConfigError, load_config, run_experiments

ORDER = ["represent", "freeze", "affine", "holder", "ksat", "isaacs", "moll", "solve"]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="isaacslab",
        description="numerical experiments for truncated parabolic sup-inf operators",
    )
    parser.add_argument("command", choices=ORDER + ["all"], help="experiment to run")
    parser.add_argument("--config", default=None, help="TOML config file")
    parser.add_argument("--out", default=None, help="report output directory")
    parser.add_argument("--threads", type=int, default=None, help="worker threads")
    parser.add_argument("--seed", type=int, default=None, help="base RNG seed")
    args = parser.parse_args(argv)
    overrides = {}
    if args.out is not None:
        overrides[("global", "out")] = args.out
    if args.threads is not None:
        overrides[("global", "threads")] = args.threads
    if args.seed is not None:
        overrides[("global", "seed")] = args.seed
    try:
        cfg = load_config(args.config, overrides=overrides)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    names = ORDER if args.command == "all" else [args.command]
    reports = run_experiments(names, cfg)
    for rep in reports:
        status = "PASS" if rep.passed else "FAIL"
        notes = " ".join(f"{k}={v}" for k, v in sorted(rep.notes.items()))
        print(f"{status} {rep.name} {notes}")
    return 0 if all(r.passed for r in reports) else 3


if __name__ == "__main__":
    sys.exit(main())
