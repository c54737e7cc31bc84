"""
Command-line entry point for lapsmooth.
"""

import sys

from lapsmooth.cli import dispatch


if __name__ == '__main__':
    sys.exit(dispatch())
