"""
Command-line entrypoint: ``python -m app.main <subcommand> [flags]``.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from dotenv import dotenv_values

from app.config import get_settings
from app.exceptions import CheckFailedError, ConfigError, LinkfitError
from app.schemas.grids import GridSpec
from app.schemas.run import EXPERIMENT_DEFAULTS, RunConfig
from app.services.experiment_service import METRICS, ExperimentService, compare_curves

logger = logging.getLogger(__name__)

EXPERIMENTS = list(EXPERIMENT_DEFAULTS)

# config-file key -> RunConfig field
CONFIG_KEYS = {
    "seed": "seed",
    "samples": "samples",
    "hidden": "hidden",
    "iters": "iters",
    "link": "links",
    "links": "links",
    "mu": "mu",
    "lambda": "lam",
    "creg": "creg",
    "grid": "grid",
    "out": "out",
    "strict_range": "strict_range",
    "strict_tail": "strict_tail",
    "mode": "mode",
    "batch_size": "batch_size",
    "shuffle": "shuffle",
    "alpha": "alpha",
    "gamma": "gamma",
    "numeric_iters": "numeric_iters",
    "ar_r": "ar_r",
    "ar_m": "ar_m",
    "ar_s": "ar_s",
    "r": "ar_r",
    "m": "ar_m",
    "s": "ar_s",
    "q": "q",
    "noise_var": "noise_var",
    "lr_shift": "lr_shift",
    "eval_grid": "eval_grid",
}

LIST_FIELDS = ("ar_r", "ar_m", "ar_s")


def configure_logging(level: Optional[str] = None) -> None:
    settings = get_settings()
    logging.basicConfig(
        level=getattr(logging, (level or settings.log_level).upper(), logging.INFO),
        format=settings.log_format,
    )


def _parse_interval(text: str):
    parts = text.split(":")
    if len(parts) != 2:
        raise ConfigError(f"interval must be lo:hi, got '{text}'")
    try:
        lo, hi = float(parts[0]), float(parts[1])
    except ValueError:
        raise ConfigError(f"invalid interval '{text}'")
    if not lo < hi:
        raise ConfigError(f"interval must satisfy lo < hi, got '{text}'")
    return lo, hi


def _parse_floats(key: str, text: str) -> List[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise ConfigError(f"{key} must be comma-separated numbers, got '{text}'")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, help="Run seed")
    common.add_argument("--samples", type=int, help="Training samples or transitions")
    common.add_argument("--hidden", type=int, help="Hidden layer size")
    common.add_argument("--iters", type=int, help="Training iterations")
    common.add_argument("--link", action="append", help="Link ID[:a[:b]], repeatable")
    common.add_argument("--mu", type=float, help="Step size")
    common.add_argument("--lambda", dest="lam", type=float, help="Forgetting factor")
    common.add_argument("--creg", type=float, help="Denominator regulariser c")
    common.add_argument("--grid", help="Quadrature grid lo:hi:n")
    common.add_argument("--numeric-iters", type=int, help="Fixed-point iterations of numeric solvers")
    common.add_argument("--mode", help="full-batch | single-sample | mini-batch (lr: gd | labeled-sgd | paired-sgd)")
    common.add_argument("--batch-size", type=int, help="Mini-batch size")
    common.add_argument("--shuffle", action=argparse.BooleanOptionalAction, default=None, help="Reshuffle every epoch")
    common.add_argument("--alpha", type=float, help="Stopping discount")
    common.add_argument("--gamma", type=float, help="RL discount")
    common.add_argument("--ar-r", help="AR coefficient r, comma-separated per action")
    common.add_argument("--ar-m", help="AR drift m, comma-separated per action")
    common.add_argument("--ar-s", help="AR innovation variance s, comma-separated per action")
    common.add_argument("--q", type=float, help="Sampling cost of the stopping problem")
    common.add_argument("--noise-var", type=float, help="Noise variance of the Example (a)/(b) models")
    common.add_argument("--lr-shift", type=float, help="Mean of the f sample in the lr experiment")
    common.add_argument("--eval-grid", help="Curve grid lo:hi:n")
    common.add_argument("--strict-range", action=argparse.BooleanOptionalAction, default=None)
    common.add_argument("--strict-tail", action=argparse.BooleanOptionalAction, default=None)
    common.add_argument("--out", help="Artifact directory")
    common.add_argument("--config", help="key=value run configuration file")
    common.add_argument("--log-level", help="Log level")

    parser = argparse.ArgumentParser(prog="linkfit", description="Link-function estimators and their oracles")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        sub.add_parser(name, parents=[common], help=f"Run the {name} experiment")

    cmp = sub.add_parser("compare", help="Compare a curve CSV against a reference CSV")
    cmp.add_argument("curve_csv")
    cmp.add_argument("reference_csv")
    cmp.add_argument("--interval", help="Restrict to grid values in lo:hi")
    cmp.add_argument("--metric", choices=sorted(METRICS), default="rmse")
    cmp.add_argument("--column", help="Curve column (default: second column)")
    cmp.add_argument("--reference-column", help="Reference column (default: same name or second column)")
    cmp.add_argument("--threshold", type=float, help="Fail unless the metric is below this value")
    cmp.add_argument("--log-level", help="Log level")
    return parser


def _normalise(raw: Dict[str, Any], experiment: str) -> Dict[str, Any]:
    """Map flag/config names onto RunConfig fields and parse compound values."""
    values: Dict[str, Any] = {}
    for key, value in raw.items():
        if value is None:
            continue
        field = CONFIG_KEYS.get(key.lower().replace("-", "_"))
        if field is None:
            raise ConfigError(f"unknown configuration key '{key}'")
        if field == "links" and isinstance(value, str):
            value = [part.strip() for part in value.split(",") if part.strip()]
        if field == "grid" and isinstance(value, str):
            value = GridSpec.parse(value, centered=EXPERIMENT_DEFAULTS[experiment]["grid"].centered)
        if field == "eval_grid" and isinstance(value, str):
            value = GridSpec.parse(value)
        if field in LIST_FIELDS and isinstance(value, str):
            value = _parse_floats(key, value)
        values[field] = value
    return values


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Experiment defaults, then the config file, then explicit flags."""
    experiment = args.command
    settings = get_settings()
    config_path = args.config or settings.config_file
    values: Dict[str, Any] = {
        "seed": settings.default_seed,
        "strict_range": settings.strict_range,
        "strict_tail": settings.strict_tail,
        "out": str(Path(settings.output_dir) / experiment),
    }
    if config_path:
        if not Path(config_path).exists():
            raise ConfigError(f"config file not found: {config_path}")
        values.update(_normalise(dict(dotenv_values(config_path)), experiment))

    flags = {
        "seed": args.seed, "samples": args.samples, "hidden": args.hidden, "iters": args.iters,
        "link": args.link, "mu": args.mu, "lambda": args.lam, "creg": args.creg, "grid": args.grid,
        "numeric_iters": args.numeric_iters, "mode": args.mode, "batch_size": args.batch_size,
        "shuffle": args.shuffle, "alpha": args.alpha, "gamma": args.gamma,
        "ar_r": args.ar_r, "ar_m": args.ar_m, "ar_s": args.ar_s, "q": args.q,
        "noise_var": args.noise_var, "lr_shift": args.lr_shift, "eval_grid": args.eval_grid,
        "strict_range": args.strict_range, "strict_tail": args.strict_tail, "out": args.out,
    }
    values.update(_normalise(flags, experiment))
    return RunConfig.build(experiment, **values)


def run_compare(args: argparse.Namespace) -> int:
    interval = _parse_interval(args.interval) if args.interval else None
    value = compare_curves(
        args.curve_csv, args.reference_csv, interval, args.metric, args.column, args.reference_column
    )
    print(f"metric={args.metric} value={value!r}")
    if args.threshold is not None and not value < args.threshold:
        raise CheckFailedError(f"{args.metric} {value!r} not below threshold {args.threshold!r}")
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    """
    Parse arguments, run the command and map errors to exit codes.

    Returns:
        int: 0 on success, 1 on a failed run or check, 2 on configuration errors
    """
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    try:
        if args.command == "compare":
            return run_compare(args)
        config = resolve_config(args)
        result = ExperimentService(config).run()
        for name, value in result.summary.items():
            print(f"{name}={value!r}")
        return 0
    except LinkfitError as e:
        logger.error(f"{args.command} failed: {e}")
        print(e.one_line(), file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
