#!/usr/bin/env python3
"""
pcskew - main executable entry point
"""

import sys

from pcskew.cli import main

if __name__ == '__main__':
    sys.exit(main())
