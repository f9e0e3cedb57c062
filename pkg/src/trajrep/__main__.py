"""Run the command-line interface via ``python -m trajrep``."""
import sys

from .cli import main

if __name__ == "__main__":
    sys.exit(main())
