"""
Test data package for py-speech-severity tests.
"""
