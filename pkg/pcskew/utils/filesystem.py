"""
pcskew filesystem utilities
"""

import hashlib
import logging
import os
import sys
import tempfile
from pathlib import Path


logger = logging.getLogger(__name__)

STDOUT = '-'


def ensure_directory(path):
    """Ensure directory exists, create if necessary"""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    return path


def atomic_write(path, text: str) -> Path:
    """Write text to a temporary file next to `path`, then rename it into place"""
    path = Path(path)
    ensure_directory(path.parent)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f'.{path.name}.', suffix='.tmp')
    try:
        with os.fdopen(fd, 'w', encoding='utf-8', newline='\n') as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
    logger.debug(f"Wrote {path}")
    return path


def write_output(destination, text: str) -> None:
    """Write to a file atomically, or to standard output for '-'"""
    if destination is None or str(destination) == STDOUT:
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        atomic_write(destination, text)


def content_hash(path, chunk_size: int = 1 << 20) -> str:
    """SHA-256 of a file's bytes"""
    digest = hashlib.sha256()
    with open(path, 'rb') as f:
        for chunk in iter(lambda: f.read(chunk_size), b''):
            digest.update(chunk)
    return digest.hexdigest()


def get_file_info(path):
    """Size and hash of an input file, or None if it does not exist"""
    path = Path(path)

    if not path.exists():
        return None

    return {
        'path': str(path),
        'name': path.name,
        'size': path.stat().st_size,
        'sha256': content_hash(path),
    }
