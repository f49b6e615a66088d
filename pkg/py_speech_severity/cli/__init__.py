"""
Command-line pipeline: one subcommand per stage, one run directory per invocation.
"""

# Local imports
from .commands import (
    cmd_encode,
    cmd_eval,
    cmd_fvtc,
    cmd_gradcheck,
    cmd_synth,
    cmd_train,
    cmd_train_vqvae,
)
from .gradcheck_suite import GRADCHECK_TOLERANCE, GradCheckCase, GradCheckResult, gradcheck_cases, run_gradcheck_suite
from .main import EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC, EXIT_OK, build_parser, main
from .rundir import RunDirectory

__all__ = [
    "EXIT_CONFIG",
    "EXIT_DATA",
    "EXIT_NUMERIC",
    "EXIT_OK",
    "GRADCHECK_TOLERANCE",
    "GradCheckCase",
    "GradCheckResult",
    "RunDirectory",
    "build_parser",
    "cmd_encode",
    "cmd_eval",
    "cmd_fvtc",
    "cmd_gradcheck",
    "cmd_synth",
    "cmd_train",
    "cmd_train_vqvae",
    "gradcheck_cases",
    "main",
    "run_gradcheck_suite",
]
