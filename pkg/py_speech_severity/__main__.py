"""Entry point for ``python -m py_speech_severity``."""

# Python imports
import sys

# Local imports
from .cli import main

if __name__ == "__main__":
    sys.exit(main())
