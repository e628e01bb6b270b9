"""Command-line entry point: ``palmnut --scenario denoise --solver palmnut ...``.

Exit codes: 0 success, 2 invalid configuration, 3 numerical failure.
"""
import argparse
import json
import sys

from .errors import ConfigError, ConvergenceError, NumericalError
from .experiments import SCENARIOS, resolve_config, run_experiment
from .solvers import SOLVERS

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def load_toml(path):
    try:
        import tomllib
    except ModuleNotFoundError:  # Python < 3.11
        import tomli as tomllib
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {path}: {exc}") from None
    return {key.replace("-", "_"): val for key, val in data.items()}


def build_parser():
    p = argparse.ArgumentParser(
        prog="palmnut",
        description="Run a seeded magnitude/phase reconstruction experiment and write traces and images.",
    )
    p.add_argument("--config", help="TOML file with the same keys as the flags; flags override it")
    p.add_argument("--scenario", choices=SCENARIOS)
    p.add_argument("--solver", choices=sorted(SOLVERS))
    p.add_argument("--lambda1", type=float, help="magnitude penalty weight")
    p.add_argument("--lambda2", type=float, help="phase penalty weight")
    p.add_argument("--xi", type=float, help="Huber breakpoint")
    p.add_argument("--size", help="image size, N or WxH (powers of two)")
    p.add_argument("--accel", type=float, help="undersampling factor (recon)")
    p.add_argument("--sigma", type=float, help="noise std per real component; default picks input NRMSE 0.15")
    p.add_argument("--seed", type=int)
    p.add_argument("--max-iter", dest="max_iter", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument(
        "--timing",
        choices=("wall", "off"),
        help="'off' leaves the seconds column blank so traces are byte-reproducible",
    )
    p.add_argument("--coils", type=int)
    p.add_argument("--reps", type=int, help="repetitions (combine)")
    p.add_argument("--inner-iter", dest="inner_iter", type=int, help="inner iterations per block (am)")
    return p


def config_from_args(args):
    values = load_toml(args.config) if args.config else {}
    flags = {k: v for k, v in vars(args).items() if k != "config" and v is not None}
    values.update(flags)
    scenario = values.pop("scenario", None)
    if scenario is None:
        raise ConfigError("--scenario is required (flag or config file)")
    return resolve_config(scenario, values)


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        summary = run_experiment(cfg)
    except ConfigError as exc:
        print(f"palmnut: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, ConvergenceError, FloatingPointError) as exc:
        print(f"palmnut: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    summary.pop("config", None)
    print(json.dumps(summary, indent=2, sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
