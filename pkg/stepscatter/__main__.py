"""
Entry point for running the command-line interface as a module.

Usage:
    python -m stepscatter green eval --src 0,0.4 --at 1.0,0.5
"""

import sys

from .cli import main


if __name__ == "__main__":
    try:
        sys.exit(main())
    except KeyboardInterrupt:
        print("\nInterrupted by user", file=sys.stderr)
        sys.exit(130)
