"""
Test configuration for pcskew
"""

import os
import tempfile
import pytest
import numpy as np
from pathlib import Path


@pytest.fixture
def temp_pcskew_home():
    """Create temporary pcskew home directory for testing"""
    with tempfile.TemporaryDirectory() as temp_dir:
        pcskew_home = Path(temp_dir) / '.pcskew'
        pcskew_home.mkdir()

        # Set environment variable
        old_home = os.environ.get('HOME')
        os.environ['HOME'] = str(Path(temp_dir))

        yield pcskew_home

        # Restore environment
        if old_home:
            os.environ['HOME'] = old_home
        else:
            os.environ.pop('HOME', None)


@pytest.fixture
def rng():
    """Seeded generator shared by tests that need random data"""
    return np.random.default_rng(20240101)


@pytest.fixture
def small_csv(tmp_path):
    """3 x 2 comma-separated matrix"""
    path = tmp_path / 'small.csv'
    path.write_text("1,2\n3,4\n5,6\n")
    return path


@pytest.fixture
def spiked_csv(tmp_path):
    """40 x 400 matrix with two strong components, written as CSV"""
    generator = np.random.default_rng(7)
    n, d = 40, 400
    scales = np.ones(d)
    scales[:2] = np.sqrt([0.5 * d, 0.25 * d])
    X = generator.standard_normal((n, d)) * scales
    path = tmp_path / 'spiked.csv'
    np.savetxt(path, X, delimiter=',', fmt='%.10g')
    return path


def brute_force_triples_u(y):
    """Mean of the triples kernel over all C(n, 3) triples"""
    from itertools import combinations

    total = 0
    count = 0
    for i, j, k in combinations(range(len(y)), 3):
        a, b, c = y[i], y[j], y[k]
        total += (np.sign(a + b - 2 * c) + np.sign(a + c - 2 * b) + np.sign(b + c - 2 * a))
        count += 1
    return total / (3 * count)
