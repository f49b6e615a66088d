"""
Fixtures for TrainingMetrics testing with automatic cleanup.
"""

# Python imports
from pytest import fixture

# Local imports
from py_speech_severity.tensorcore import TrainingMetrics


@fixture
def training_metrics() -> TrainingMetrics:
    """Create TrainingMetrics instance with automatic cleanup."""
    metrics_instance = TrainingMetrics()
    yield metrics_instance
    metrics_instance.reset()
