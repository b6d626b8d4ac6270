"""
pcskew version command
"""

from .. import __version__


def handle(args):
    print(f"pcskew {__version__}")
    return 0
