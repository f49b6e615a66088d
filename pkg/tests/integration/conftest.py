"""
Fixtures for integration tests.
"""

# Python imports
from collections.abc import Callable
from pathlib import Path
from typing import Any

import msgspec
from pytest import fixture

# Local imports
from py_speech_severity.cli import EXIT_OK, main

RunCli = Callable[..., Path]


@fixture
def run_cli(tmp_path: Path, mock_empty_environment: dict[str, str]) -> RunCli:
    """
    Run one CLI stage in a fresh run directory and require success.

    Returns:
        RunCli: run(name, command, *args, config=path) -> run directory.
    """

    def run(name: str, command: str, *args: str, config: Path) -> Path:
        run_dir = tmp_path / "runs" / name
        code = main([command, "--config", str(config), "--run-dir", str(run_dir), *args])
        assert code == EXIT_OK, f"{command} exited with {code}"
        return run_dir

    return run


@fixture
def pipeline(run_cli: RunCli, run_config_json: Path) -> dict[str, Path]:
    """
    Every pipeline stage on the small run config, ending with the ablation report.

    Returns:
        dict[str, Path]: Run directory per stage plus the corpus manifest.
    """
    runs: dict[str, Path] = {"synth": run_cli("synth", "synth", config=run_config_json)}
    manifest = str(runs["synth"] / "corpus" / "manifest.json")
    runs["fvtc"] = run_cli("fvtc", "fvtc", "--manifest", manifest, config=run_config_json)
    fvtc_dir = str(runs["fvtc"] / "fvtc")
    runs["vqvae"] = run_cli(
        "vqvae", "train-vqvae", "--manifest", manifest, "--fvtc", fvtc_dir, config=run_config_json
    )
    runs["encode"] = run_cli(
        "encode",
        "encode",
        "--model",
        str(runs["vqvae"] / "vqvae.ckpt"),
        "--manifest",
        manifest,
        "--fvtc",
        fvtc_dir,
        config=run_config_json,
    )
    artic_dir = str(runs["encode"] / "artic")
    for variant in ("fusion-mha", "fusion-nomha"):
        runs[variant] = run_cli(
            variant, "train", "--variant", variant, "--manifest", manifest, "--artic", artic_dir, config=run_config_json
        )
    runs["eval"] = run_cli(
        "eval",
        "eval",
        "--model",
        str(runs["fusion-mha"] / "model.ckpt"),
        "--model",
        str(runs["fusion-nomha"] / "model.ckpt"),
        "--fold",
        "test",
        "--baseline",
        "Feature-Fusion without MHA",
        config=run_config_json,
    )
    runs["manifest"] = Path(manifest)
    return runs


@fixture
def write_config(tmp_path: Path) -> Callable[[dict[str, Any]], Path]:
    """
    Write a run config document as JSON.

    Returns:
        Callable[[dict[str, Any]], Path]: factory(document) -> config path.
    """

    def write(document: dict[str, Any], name: str = "config.json") -> Path:
        path = tmp_path / name
        path.write_bytes(msgspec.json.encode(document))
        return path

    return write
