"""
Integration tests for the speech severity pipeline.
Tests drive the CLI and the library end to end on synthetic corpora.
"""
