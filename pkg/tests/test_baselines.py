"""
Test the comparison estimators and Tracy-Widom quantiles
"""

import numpy as np
import pytest

from pcskew.core import baselines
from pcskew.core.baselines import (
    BaselineMethod,
    bai_ng,
    kn_alpha_sweep,
    kritchman_nadler,
    scree_table,
    variance_explained_estimate,
    variance_threshold_sweep,
)
from pcskew.core.matrix import ResidualLengths
from pcskew.core.tracy_widom import ALPHA_RANGE, tw1_quantile
from pcskew.errors import (
    DegenerateResidualsError,
    OutOfRangeError,
    TooFewObservationsError,
)


class TestTracyWidom:
    def test_table_points(self):
        assert tw1_quantile(0.05) == pytest.approx(0.98)
        assert tw1_quantile(0.01) == pytest.approx(2.02)
        assert tw1_quantile(0.5) == pytest.approx(-1.27)

    def test_monotone(self):
        alphas = np.linspace(ALPHA_RANGE[0], ALPHA_RANGE[1], 200)
        quantiles = [tw1_quantile(a) for a in alphas]
        assert all(a > b for a, b in zip(quantiles, quantiles[1:]))

    @pytest.mark.parametrize("alpha", [0.001, 0.995, 0.0, 1.0])
    def test_out_of_range(self, alpha):
        with pytest.raises(OutOfRangeError):
            tw1_quantile(alpha)


class TestBaiNg:
    def test_flat_residuals(self):
        R = ResidualLengths(np.ones((20, 6)), d=500)
        result = bai_ng(R, 20, 500, 5)
        assert result.method is BaselineMethod.BAI_NG
        assert result.m_hat == 0
        assert np.all(np.diff(result.criterion_trace) > 0)

    def test_sharp_drop(self):
        V = np.array([10.0, 5.0, 2.0, 1.0, 0.99, 0.98])
        R = ResidualLengths(np.tile(V, (50, 1)), d=2000)
        result = bai_ng(R, 50, 2000, 5)
        assert result.m_hat == 3
        assert result.m_hat == int(np.argmin(result.criterion_trace))

    def test_scale_shifts_criterion(self, rng):
        table = np.sort(rng.uniform(1, 5, size=(30, 5)), axis=1)[:, ::-1]
        one = bai_ng(ResidualLengths(table, d=300), 30, 300, 4)
        many = bai_ng(ResidualLengths(table * 7.0, d=300), 30, 300, 4)
        np.testing.assert_allclose(many.criterion_trace - one.criterion_trace, np.log(7.0))
        assert many.m_hat == one.m_hat

    def test_zero_residual(self):
        table = np.ones((10, 3))
        table[:, 2] = 0.0
        with pytest.raises(DegenerateResidualsError):
            bai_ng(ResidualLengths(table, d=100), 10, 100, 2)

    def test_m_beyond_table(self):
        with pytest.raises(OutOfRangeError):
            bai_ng(ResidualLengths(np.ones((10, 3)), d=100), 10, 100, 4)


class TestKritchmanNadler:
    def test_equal_eigenvalues(self):
        result = kritchman_nadler(np.ones(20), n=20, d=40, alpha=0.05)
        assert result.m_hat == 0
        assert result.metadata['noise_estimate'] == 'trailing-mean'

    def test_detects_strong_spikes(self, rng):
        n, d = 100, 1000
        X = rng.standard_normal((n, d))
        X[:, :2] *= np.sqrt([200.0, 100.0])
        sample = np.sort(np.linalg.eigvalsh(X @ X.T))[::-1] / n
        assert kritchman_nadler(sample, n, d, 0.05).m_hat >= 2

    def test_non_decreasing_in_alpha(self, rng):
        n, d = 50, 400
        X = rng.standard_normal((n, d)) * np.linspace(3, 0.5, d)
        sample = np.sort(np.linalg.eigvalsh(X @ X.T))[::-1] / n
        results = kn_alpha_sweep(sample, n, d, [0.01, 0.05, 0.1, 0.3, 0.5, 0.9])
        m_hats = [r.m_hat for r in results]
        assert all(a <= b for a, b in zip(m_hats, m_hats[1:]))
        assert all(r.m_hat <= 48 for r in results)

    def test_requires_enough_observations(self):
        with pytest.raises(TooFewObservationsError):
            kritchman_nadler(np.ones(9), n=9, d=100)

    def test_requires_high_dimension(self):
        with pytest.raises(OutOfRangeError):
            kritchman_nadler(np.ones(20), n=20, d=20)

    def test_alpha_outside_table(self):
        with pytest.raises(OutOfRangeError):
            kritchman_nadler(np.ones(20), n=20, d=100, alpha=0.001)


class TestVarianceExplained:
    def test_threshold_080(self):
        result = variance_explained_estimate([6.0, 3.0, 1.0], 0.8)
        assert result.m_hat == 2
        np.testing.assert_allclose(result.criterion_trace, [0.0, 0.6, 0.9, 1.0])

    def test_threshold_050(self):
        assert variance_explained_estimate([6.0, 3.0, 1.0], 0.5).m_hat == 1

    def test_exact_threshold(self):
        assert variance_explained_estimate([6.0, 3.0, 1.0], 0.9).m_hat == 2

    def test_full_variance(self):
        assert variance_explained_estimate([6.0, 3.0, 1.0], 1.0).m_hat == 3

    @pytest.mark.parametrize("threshold", [0.0, -0.1, 1.2])
    def test_threshold_range(self, threshold):
        with pytest.raises(OutOfRangeError):
            variance_explained_estimate([1.0, 1.0], threshold)

    def test_zero_eigenvalues(self):
        with pytest.raises(DegenerateResidualsError):
            variance_explained_estimate([0.0, 0.0])

    def test_sweep_is_monotone(self):
        results = variance_threshold_sweep([5.0, 2.0, 1.5, 1.0, 0.5], [0.5, 0.6, 0.7, 0.8, 0.9])
        m_hats = [r.m_hat for r in results]
        assert m_hats == sorted(m_hats)


def test_scree_table():
    rows = scree_table([6.0, 3.0, 1.0])
    assert [row[0] for row in rows] == [1, 2, 3]
    assert rows[0][1] == 6.0
    np.testing.assert_allclose([row[2] for row in rows], [60.0, 90.0, 100.0])


def test_default_constants():
    assert baselines.DEFAULT_KN_ALPHA == 0.05
    assert baselines.DEFAULT_VARIANCE_THRESHOLD == 0.8
