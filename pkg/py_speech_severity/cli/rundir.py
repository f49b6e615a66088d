"""
Run directories: one per CLI invocation.

A run directory holds the config snapshot (config.json), the run manifest
(run_manifest.json with command, arguments, seed, package versions and wall
time), the run log (run.log) and every output the command produces.
"""

# Python imports
from __future__ import annotations

import platform
import sys
import time
from datetime import datetime
from importlib import metadata
from pathlib import Path
from types import TracebackType
from typing import Any

import msgspec
from loguru import logger

# Local imports
from ..config import RunConfig
from ..exceptions import DataError

RUN_MANIFEST_NAME = "run_manifest.json"
CONFIG_SNAPSHOT_NAME = "config.json"
RUN_LOG_NAME = "run.log"
_TRACKED_PACKAGES = ("py-speech-severity", "numpy", "scipy", "msgspec", "loguru", "pyyaml")


def package_versions() -> dict[str, str]:
    """Versions of Python and the packages a run depends on ("unknown" when not installed)."""
    versions = {"python": platform.python_version()}
    for name in _TRACKED_PACKAGES:
        try:
            versions[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            versions[name] = "unknown"
    return versions


def default_run_name(command: str, now: datetime | None = None) -> str:
    """Timestamped directory name, e.g. 20260101-120000-train."""
    stamp = (now or datetime.now()).strftime("%Y%m%d-%H%M%S-%f")
    return f"{stamp}-{command}"


def write_json(path: str | Path, data: Any) -> Path:
    """Pretty-printed msgspec JSON document."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_bytes(msgspec.json.format(msgspec.json.encode(data), indent=2) + b"\n")
    return target


class RunDirectory:
    """
    Output directory of one command invocation.

    Used as a context manager: entering writes the config snapshot and attaches
    a run.log file sink; leaving writes the run manifest with the wall time and
    the final status, then detaches the sink.

    Example:
        >>> with RunDirectory.create("runs", "synth", config) as run:
        ...     run.record_output("manifest", "corpus/manifest.json")
    """

    def __init__(self, path: Path, command: str, config: RunConfig, arguments: dict[str, Any] | None = None) -> None:
        self.path = path
        self.command = command
        self.config = config
        self.arguments = arguments or {}
        self.outputs: dict[str, str] = {}
        self.started_at = datetime.now()
        self._started = time.perf_counter()
        self._sink_id: int | None = None

    @classmethod
    def create(
        cls,
        root: str | Path,
        command: str,
        config: RunConfig,
        name: str | Path | None = None,
        arguments: dict[str, Any] | None = None,
    ) -> RunDirectory:
        """
        Make the directory `root/<timestamp>-<command>`, or `name` when given.

        `name` is used as given (relative to the working directory). An
        existing non-empty directory is refused.

        Raises:
            DataError: If the directory exists and is not empty, or cannot be created
        """
        path = Path(name) if name is not None else Path(default_run_name(command))
        if name is None:
            path = Path(root) / path
        if path.exists() and any(path.iterdir()):
            raise DataError("Run directory is not empty", str(path))
        try:
            path.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise DataError("Cannot create run directory", f"{path}: {e}") from e
        return cls(path, command, config, arguments)

    def __enter__(self) -> RunDirectory:
        (self.path / CONFIG_SNAPSHOT_NAME).write_bytes(self.config.to_json() + b"\n")
        self._sink_id = logger.add(
            self.path / RUN_LOG_NAME,
            level="DEBUG",
            format="{time:YYYY-MM-DD HH:mm:ss.SSS} | {level: <8} | {name}:{function}:{line} - {message}",
            encoding="utf-8",
        )
        logger.info(f"Run directory {self.path} ({self.command})")
        return self

    def __exit__(
        self,
        exc_type: type[BaseException] | None,
        exc: BaseException | None,
        tb: TracebackType | None,
    ) -> None:
        status = "ok" if exc is None else type(exc).__name__
        self.write_manifest(status)
        if self._sink_id is not None:
            logger.remove(self._sink_id)
            self._sink_id = None

    def file(self, name: str) -> Path:
        """Path of an output file inside the run directory."""
        return self.path / name

    def record_output(self, label: str, path: str | Path) -> None:
        """Register an output so the run manifest lists it."""
        self.outputs[label] = str(path)

    def write_json(self, name: str, data: Any) -> Path:
        """Write a JSON document into the run directory and register it."""
        target = write_json(self.path / name, data)
        self.record_output(Path(name).stem, target)
        return target

    def write_manifest(self, status: str = "ok") -> Path:
        """Write run_manifest.json."""
        return write_json(
            self.path / RUN_MANIFEST_NAME,
            {
                "command": self.command,
                "arguments": self.arguments,
                "argv": sys.argv[1:],
                "seed": self.config.seed,
                "config": CONFIG_SNAPSHOT_NAME,
                "versions": package_versions(),
                "started_at": self.started_at.isoformat(),
                "wall_time_seconds": time.perf_counter() - self._started,
                "status": status,
                "outputs": self.outputs,
            },
        )
