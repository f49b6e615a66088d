"""
Global test configuration and fixtures for the speech severity pipeline tests.
"""

# Python imports
from logging import CRITICAL, DEBUG, ERROR, INFO, WARNING, LogRecord, getLogger

from loguru import logger
from pytest import fixture

# Local imports
from fixtures.config import (
    mock_empty_environment,
    mock_environment,
    run_config_json,
    run_config_yaml,
    small_run_config,
)
from fixtures.datamodel import manifest_factory, segment_factory, synthetic_config, tiny_corpus
from fixtures.fusion import fusion_sessions, tiny_branch, tiny_fusion_config
from fixtures.metrics import training_metrics
from fixtures.tensorcore import rng
from fixtures.vqvae import perfect_autoencoder, tiny_vqvae, tiny_vqvae_config

__all__ = [
    "fusion_sessions",
    "manifest_factory",
    "mock_empty_environment",
    "mock_environment",
    "perfect_autoencoder",
    "rng",
    "run_config_json",
    "run_config_yaml",
    "segment_factory",
    "small_run_config",
    "synthetic_config",
    "tiny_branch",
    "tiny_corpus",
    "tiny_fusion_config",
    "tiny_vqvae",
    "tiny_vqvae_config",
    "training_metrics",
]


def loguru_sink(message):
    """Sink that redirects loguru logs to standard logging for caplog."""
    level_map = {
        "DEBUG": DEBUG,
        "INFO": INFO,
        "WARNING": WARNING,
        "ERROR": ERROR,
        "CRITICAL": CRITICAL,
    }
    record = message.record
    log_level = level_map.get(record["level"].name, INFO)
    logger_name = record.get("name", "loguru")
    log_record = LogRecord(
        name=logger_name,
        level=log_level,
        pathname=str(record.get("file", {}).path) if hasattr(record.get("file", None), "path") else "",
        lineno=record.get("line", 0),
        msg=str(record["message"]),
        args=(),
        exc_info=record.get("exception"),
    )
    std_logger = getLogger(logger_name)
    std_logger.handle(log_record)


logger.remove()
logger.add(loguru_sink, format="{message}", serialize=False)


@fixture(autouse=True)
def restore_loguru_sink():
    """Route loguru back to caplog after tests that reconfigure logging (the CLI replaces every sink)."""
    yield
    logger.remove()
    logger.add(loguru_sink, format="{message}", serialize=False)
