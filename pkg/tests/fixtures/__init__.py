"""
Pytest fixtures package for the speech severity pipeline tests.

This package contains fixtures organized by component:
- config.py: RunConfig files and small configs
- datamodel.py: Segments, manifests and synthetic corpora
- tensorcore.py: Seeded random generators
- vqvae.py: Tiny and hand-built VQ-VAE models
- fusion.py: Tiny regressor configs and session inputs
- metrics.py: TrainingMetrics collectors
"""
