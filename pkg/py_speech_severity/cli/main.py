"""
Command-line interface for the speech severity pipeline.

Usage:
    py-speech-severity synth --config run.yaml
    py-speech-severity fvtc --manifest runs/<synth-run>/corpus/manifest.json
    py-speech-severity train-vqvae --manifest manifest.json --fvtc runs/<fvtc-run>/fvtc
    py-speech-severity encode --model vqvae.ckpt --manifest manifest.json
    py-speech-severity train --variant fusion-mha --manifest manifest.json --artic runs/<encode-run>/artic
    py-speech-severity eval --model a/model.ckpt --model b/model.ckpt --fold test
    py-speech-severity gradcheck
"""

# Python imports
from __future__ import annotations

import argparse
import sys
from collections.abc import Sequence
from typing import Any

import msgspec
from loguru import logger

# Local imports
from .. import __version__
from ..config import LOG_LEVELS, RunConfig
from ..datamodel import Fold
from ..exceptions import ConfigurationError, DataError, NumericError, SeverityEstimationError
from ..fusion import Variant
from .commands import cmd_encode, cmd_eval, cmd_fvtc, cmd_gradcheck, cmd_synth, cmd_train, cmd_train_vqvae
from .rundir import RunDirectory

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4
EXIT_INTERRUPTED = 130


def exit_code_for(error: BaseException) -> int:
    """Exit code of an error: 2 config, 3 data, 4 numeric, 1 otherwise."""
    if isinstance(error, ConfigurationError):
        return EXIT_CONFIG
    if isinstance(error, DataError):
        return EXIT_DATA
    if isinstance(error, NumericError):
        return EXIT_NUMERIC
    return EXIT_FAILURE


def error_line(error: BaseException, exit_code: int) -> str:
    """One-line JSON error record printed to stderr."""
    message = error.message if isinstance(error, SeverityEstimationError) else str(error)
    details = error.details if isinstance(error, SeverityEstimationError) else None
    record = {"error": type(error).__name__, "message": message, "details": details, "exit_code": exit_code}
    return msgspec.json.encode(record).decode("utf-8")


def configure_logging(level: str) -> None:
    """Replace every loguru sink with a single stderr sink."""
    logger.remove()
    logger.add(sys.stderr, level=level, format="{time:HH:mm:ss} | {level: <8} | {message}")


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with one subcommand per pipeline stage."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", "-c", help="Run config file (.json, .yaml or .yml)")
    common.add_argument("--seed", type=int, help="Run seed; replaces every section seed")
    common.add_argument("--log-level", choices=LOG_LEVELS, help="Console log level")
    common.add_argument("--data-root", help="Parent directory of timestamped run directories")
    common.add_argument("--run-dir", help="Explicit run directory (must be empty or absent)")

    parser = argparse.ArgumentParser(
        prog="py-speech-severity",
        description="Speech-based severity estimation: FVTC features, VQ-VAE encoding and fusion regression",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Synthetic corpus, features and representation learner
  py-speech-severity synth --config run.yaml --run-dir runs/synth
  py-speech-severity fvtc --manifest runs/synth/corpus/manifest.json --run-dir runs/fvtc
  py-speech-severity train-vqvae --manifest runs/synth/corpus/manifest.json --fvtc runs/fvtc/fvtc --run-dir runs/vq
  py-speech-severity encode --model runs/vq/vqvae.ckpt --manifest runs/synth/corpus/manifest.json --run-dir runs/enc

  # Ablation pair and its report
  py-speech-severity train --variant fusion-mha --manifest runs/synth/corpus/manifest.json --artic runs/enc/artic
  py-speech-severity train --variant fusion-nomha --manifest runs/synth/corpus/manifest.json --artic runs/enc/artic
  py-speech-severity eval --model <mha-run>/model.ckpt --model <nomha-run>/model.ckpt --fold test
        """,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    synth = sub.add_parser("synth", parents=[common], help="Generate the synthetic corpus")
    synth.add_argument("--out", help="Corpus directory (default: <run-dir>/corpus)")
    synth.add_argument("--n-subjects", type=int, help="Number of subjects")
    synth.add_argument("--coupling-gain", type=float, help="Severity coupling gain")
    synth.add_argument("--noise-sd", type=float, help="Additive noise standard deviation")

    fvtc = sub.add_parser("fvtc", parents=[common], help="Extract FVTC matrices")
    fvtc.add_argument("--manifest", required=True, help="Dataset manifest")
    fvtc.add_argument("--D", dest="D", type=int, help="Maximum delay")
    fvtc.add_argument("--no-normalize", action="store_true", help="Skip per-channel standardization")
    fvtc.add_argument("--out", help="Output directory (default: <run-dir>/fvtc)")
    fvtc.add_argument("--workers", type=int, default=1, help="Extraction threads")

    vq = sub.add_parser("train-vqvae", parents=[common], help="Train the masked VQ-VAE")
    vq.add_argument("--manifest", required=True, help="Dataset manifest")
    vq.add_argument("--fvtc", help="Precomputed FVTC directory (default: extract on the fly)")
    vq.add_argument("--epochs", type=int, help="Training epochs")
    vq.add_argument("--lr", type=float, help="Initial learning rate")

    encode = sub.add_parser("encode", parents=[common], help="Concise articulatory representations")
    encode.add_argument("--model", required=True, help="VQ-VAE checkpoint")
    encode.add_argument("--manifest", required=True, help="Dataset manifest")
    encode.add_argument("--fvtc", help="Precomputed FVTC directory (default: extract on the fly)")
    encode.add_argument("--out", help="Output directory (default: <run-dir>/artic)")

    train = sub.add_parser("train", parents=[common], help="Train a severity regressor")
    train.add_argument("--variant", required=True, choices=[v.value for v in Variant], help="Model variant")
    train.add_argument("--manifest", required=True, help="Dataset manifest")
    train.add_argument("--artic", help="Concise articulatory representation directory")
    train.add_argument("--epochs", type=int, help="Training epochs")
    train.add_argument("--lr", type=float, help="Initial learning rate")

    evaluate = sub.add_parser("eval", parents=[common], help="Evaluate regressors on a fold")
    evaluate.add_argument(
        "--model", required=True, action="append", dest="models", help="Regressor checkpoint (repeatable)"
    )
    evaluate.add_argument("--fold", default=Fold.TEST.value, choices=[f.value for f in Fold], help="Fold to evaluate")
    evaluate.add_argument("--manifest", help="Manifest (default: the one stored with each model)")
    evaluate.add_argument("--artic", help="Representation directory (default: the one stored with each model)")
    evaluate.add_argument("--baseline", help="Model label to report relative improvements against")

    sub.add_parser("gradcheck", parents=[common], help="Verify analytic gradients")
    return parser


def config_overrides(args: argparse.Namespace) -> dict[str, Any]:
    """Config keys set by command-line flags."""
    overrides: dict[str, Any] = {}

    def put(section: str, key: str, value: Any) -> None:
        if value is not None:
            overrides.setdefault(section, {})[key] = value

    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.log_level is not None:
        overrides["log_level"] = args.log_level
    if args.data_root is not None:
        overrides["data_root"] = args.data_root
    match args.command:
        case "synth":
            put("synth", "n_subjects", args.n_subjects)
            put("synth", "coupling_gain", args.coupling_gain)
            put("synth", "noise_sd", args.noise_sd)
        case "fvtc":
            put("fvtc", "D", args.D)
            put("vqvae", "D", args.D)
            if args.no_normalize:
                put("fvtc", "normalize", False)
        case "train-vqvae":
            put("vqvae_training", "epochs", args.epochs)
            put("vqvae_training", "lr", args.lr)
        case "train":
            put("regressor", "epochs", args.epochs)
            put("regressor", "lr", args.lr)
    return overrides


def _arguments(args: argparse.Namespace) -> dict[str, Any]:
    return {key: value for key, value in vars(args).items() if value is not None}


def run_command(args: argparse.Namespace, config: RunConfig) -> None:
    """Dispatch a parsed command inside a fresh run directory."""
    run = RunDirectory.create(config.data_root, args.command, config, args.run_dir, _arguments(args))
    with run:
        match args.command:
            case "synth":
                print(cmd_synth(run, args.out))
            case "fvtc":
                print(cmd_fvtc(run, args.manifest, args.out, args.workers))
            case "train-vqvae":
                print(cmd_train_vqvae(run, args.manifest, args.fvtc))
            case "encode":
                print(cmd_encode(run, args.model, args.manifest, args.out, args.fvtc))
            case "train":
                print(cmd_train(run, args.variant, args.manifest, args.artic))
            case "eval":
                cmd_eval(run, args.models, args.fold, args.manifest, args.artic, args.baseline)
            case "gradcheck":
                cmd_gradcheck(run, config.seed or 0)
    logger.info(f"Outputs in {run.path}")


def main(argv: Sequence[str] | None = None) -> int:
    """
    Main entry point for the CLI.

    Returns:
        Exit code (0 for success, 2 config, 3 data, 4 numeric, 1 other errors)
    """
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level or "INFO")
    try:
        config = RunConfig.load(args.config, config_overrides(args))
        configure_logging(config.log_level)
        run_command(args, config)
        return EXIT_OK
    except KeyboardInterrupt:
        print("\n\nInterrupted by user", file=sys.stderr)
        return EXIT_INTERRUPTED
    except Exception as e:
        code = exit_code_for(e)
        logger.opt(exception=code == EXIT_FAILURE).error(str(e))
        print(error_line(e, code), file=sys.stderr)
        return code
