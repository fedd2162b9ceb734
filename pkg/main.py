import argparse
import sys
from typing import List, Optional

from config import settings
from exceptions import ConfigurationError, MnlBanditError
from harness import ExperimentConfig, emit_csv, run_experiment, write_manifest
from logging_config import get_main_logger, log_error
from verification import run_verification

EXIT_OK = 0
EXIT_FAILURE = 2

main_logger = get_main_logger()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mnlbandit", description="MNL contextual bandit experiments")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="run a replicated regret experiment and write CSV + manifest")
    run.add_argument("--config", help="KEY=value experiment file")
    run.add_argument("--algo", action="append", dest="algorithms", help="algorithm name (repeatable)")
    run.add_argument("--T", type=int, help="horizon")
    run.add_argument("--d", type=int, help="feature dimension")
    run.add_argument("--N", type=int, help="number of items per round")
    run.add_argument("--K", type=int, help="maximum assortment size")
    run.add_argument("--B", type=float, help="parameter norm bound")
    run.add_argument("--delta", type=float, help="confidence failure level")
    run.add_argument("--runs", type=int, help="number of replicas")
    run.add_argument("--seed", type=int, help="master seed")
    run.add_argument("--tau-mult", type=float, dest="tau_multiplier", help="multiplier on the warm-up threshold")
    run.add_argument("--tau", type=float, dest="tau_override", help="constant warm-up threshold")
    run.add_argument("--radius-mult", type=float, dest="radius_multiplier", help="multiplier on the planning radius")
    run.add_argument("--reg-mult", type=float, dest="regularizer_multiplier", help="multiplier on lambda and lambda_w")
    run.add_argument("--baseline-alpha", type=float, dest="baseline_alpha_scale", help="UCB/TS width scale c")
    run.add_argument("--baseline-lambda", type=float, dest="baseline_lambda", help="UCB/TS design regularizer")
    run.add_argument("--workers", type=int, help="worker processes")
    run.add_argument("--no-timing", action="store_const", const=False, dest="record_timing",
                     help="write mean_round_ms as 0 for byte-identical output")
    run.add_argument("--out", help="CSV output path")
    run.add_argument("--quiet", action="store_true", help="hide the progress bar")

    verify = commands.add_parser("verify", help="run the oracle and property suites")
    verify.add_argument("--full", action="store_true", help="include Monte Carlo coverage checks")
    verify.add_argument("--seed", type=int, default=0)
    verify.add_argument("--regret", action="store_true",
                        help="run an experiment file and check warm-up share, regret ordering, timing and growth")
    verify.add_argument("--config", help="experiment file for --regret (default configs/regret_b1.env)")
    return parser


def _report_configuration_error(e: ConfigurationError) -> int:
    print(f"Configuration error: {e}", file=sys.stderr)
    for error in e.errors:
        print(f"  {error.field}: {error.message} [{error.code}]", file=sys.stderr)
    return EXIT_FAILURE


def run_command(args: argparse.Namespace) -> int:
    overrides = {
        name: getattr(args, name)
        for name in ("algorithms", "T", "d", "N", "K", "B", "delta", "runs", "seed", "tau_multiplier",
                     "tau_override", "radius_multiplier", "regularizer_multiplier", "baseline_alpha_scale",
                     "baseline_lambda", "workers", "record_timing", "out")
    }
    try:
        cfg = ExperimentConfig.from_sources(args.config, overrides)
    except ConfigurationError as e:
        return _report_configuration_error(e)

    try:
        result = run_experiment(cfg, progress=not args.quiet)
    except MnlBanditError as e:
        log_error("EXPERIMENT", "Experiment aborted", e)
        print(f"Experiment failed: {e}", file=sys.stderr)
        return EXIT_FAILURE

    emit_csv(result, cfg.out, record_timing=cfg.record_timing)
    manifest = write_manifest(cfg, result)
    window_start = max(1, cfg.T - cfg.T // 6)
    for name in cfg.algorithms:
        slope = result.window_slope(name, window_start, cfg.T) if cfg.T > window_start else 0.0
        print(f"{name:<12} final mean regret {result.final_regret(name):10.4f}  "
              f"final-window slope {slope:.5f}  warm-up share {result.warmup_frac[name].mean():.3f}")
    print(f"CSV: {cfg.out}\nManifest: {manifest}")
    return EXIT_OK


def verify_command(args: argparse.Namespace) -> int:
    try:
        report = run_verification(full=args.full, seed=args.seed, regret=args.regret, regret_config=args.config)
    except ConfigurationError as e:
        return _report_configuration_error(e)
    except MnlBanditError as e:
        log_error("VERIFY", "Verification aborted", e)
        print(f"Verification failed: {e}", file=sys.stderr)
        return EXIT_FAILURE
    print(report.summary())
    return EXIT_OK if report.passed else EXIT_FAILURE


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    main_logger.info(f"mnlbandit {args.command} started (log level {settings.LOG_LEVEL})")
    if args.command == "run":
        return run_command(args)
    return verify_command(args)


if __name__ == "__main__":
    sys.exit(main())
