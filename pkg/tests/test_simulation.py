"""
Test the spiked-model simulation harness and its oracles
"""

import numpy as np
import pytest
from scipy import stats

from pcskew.core import matrix
from pcskew.core.oracles import gram_limit_check, score_rotation_check
from pcskew.core.simulation import (
    CASE_PRESETS,
    ScoreDistribution,
    SimSpec,
    case_preset,
    eigen_model,
    load_spec,
    residual_gap,
    run_replicate,
    run_replicates,
    sample_scores,
    synth_data,
    true_residuals,
)
from pcskew.errors import InvalidSpecError, SpikeBelowNoiseError


def case_spec(case, **overrides):
    return SimSpec.from_mapping(dict({'case': case}, **overrides))


class TestEigenModel:
    def test_case_one_closed_form(self):
        model = eigen_model(10000, 3, 0.2, 1.0, 0.0)
        np.testing.assert_allclose(model.spike_variances, [0.12, 0.08, 0.04], rtol=1e-12)
        np.testing.assert_allclose(model.lambdas[:3], [1200.0, 800.0, 400.0], rtol=1e-12)
        assert np.all(model.lambdas[3:] == 1.0)
        assert model.tau_beta == 1.0

    def test_tail_mean_is_one(self):
        model = eigen_model(1000, 0, 0.2, 1.0, 0.3)
        assert abs(model.lambdas.mean() - 1.0) < 1e-10
        i = np.arange(1, 1001, dtype=float)
        np.testing.assert_allclose(model.lambdas, model.tau_beta * i ** -0.3, rtol=1e-12)

    def test_strictly_decreasing(self):
        model = eigen_model(500, 4, 0.2, 1.0, 0.3)
        assert np.all(np.diff(model.lambdas[:5]) < 0)

    def test_spike_below_noise(self):
        with pytest.raises(SpikeBelowNoiseError):
            eigen_model(10, 1, 0.1, 1.0, 0.0)

    @pytest.mark.parametrize("args", [
        (10, 10, 0.2, 1.0, 0.0),
        (100, 2, 0.0, 1.0, 0.0),
        (100, 3, 0.2, 0.0, 0.0),
        (100, 2, 0.2, 1.0, 0.5),
    ])
    def test_preconditions(self, args):
        with pytest.raises(InvalidSpecError):
            eigen_model(*args)


class TestSimSpec:
    def test_case_presets(self):
        assert case_preset('I') == (0.2, 1.0, 0.0, ScoreDistribution.NORMAL)
        assert case_preset('iv') == (0.1, 0.5, 0.3, ScoreDistribution.T3)
        assert set(CASE_PRESETS) == {'I', 'II', 'III', 'IV'}

    def test_from_mapping_applies_preset_then_overrides(self):
        spec = case_spec('IV', m=5, reps=3, d=400, n=40)
        assert (spec.s, spec.g, spec.beta) == (0.1, 0.5, 0.3)
        assert spec.distribution is ScoreDistribution.T3
        assert spec.replicates == 3 and spec.case == 'IV'

        spec = case_spec('III', s=0.3)
        assert spec.s == 0.3 and spec.distribution is ScoreDistribution.T3

    def test_mapping_round_trip(self):
        spec = case_spec('II', d=300, n=30, m=2, estimators='triples,bai_ng')
        assert SimSpec.from_mapping(spec.to_mapping()) == spec

    @pytest.mark.parametrize("overrides", [
        {'reps': 0},
        {'beta': 0.5},
        {'m': 40, 'n': 40},
        {'estimators': ['triples', 'pca']},
        {'rotate': True, 'd': 500},
        {'alpha': 1.0},
        {'alphas': '0.1,1.2'},
        {'alphas': [0.005, 0.1]},
    ])
    def test_validation(self, overrides):
        with pytest.raises(InvalidSpecError):
            SimSpec.from_mapping(dict({'d': 300, 'n': 40, 'm': 2}, **overrides)).validate()

    def test_alpha_grid(self):
        spec = case_spec('II', d=300, n=30, m=2, alphas='0.05, 0.5')
        assert spec.alphas == (0.05, 0.5)
        assert SimSpec.from_mapping(spec.to_mapping()) == spec
        # Below the Tracy-Widom table, fine without kritchman_nadler
        spec = case_spec('II', d=300, n=30, m=2, alphas=[0.005], estimators=['dagostino'])
        assert spec.validate().alphas == (0.005,)
        assert case_spec('I', alphas=None).alphas == ()

    def test_unknown_keys(self):
        with pytest.raises(InvalidSpecError):
            SimSpec.from_mapping({'dimension': 100})

    def test_load_key_value_file(self, tmp_path):
        path = tmp_path / 'spec.txt'
        path.write_text("case = II\nd = 300  # small\nn = 30\nm = 2\nreps = 4\n"
                        'estimators = ["dagostino", "bai_ng"]\n')
        spec = load_spec(path)
        assert spec.beta == 0.3 and spec.d == 300 and spec.replicates == 4
        assert spec.estimators == ('dagostino', 'bai_ng')

    def test_load_yaml_file(self, tmp_path):
        path = tmp_path / 'spec.yaml'
        path.write_text("case: I\nd: 200\nn: 20\nm: 1\nseed: 5\n")
        spec = load_spec(path)
        assert (spec.d, spec.n, spec.m, spec.seed) == (200, 20, 1, 5)


class TestScores:
    def test_normal_moments(self):
        Z = sample_scores(SimSpec(d=10000, n=100, m=0), 0)
        assert abs(Z.z.mean()) <= 0.005
        assert abs(Z.z.var() - 1.0) <= 0.01

    def test_scaled_t3_variance(self):
        Z = sample_scores(SimSpec(d=10000, n=100, m=0, distribution=ScoreDistribution.T3), 0)
        assert abs(Z.z.var() - 1.0) <= 0.05

    def test_deterministic(self):
        spec = SimSpec(d=300, n=20, m=0, seed=3)
        np.testing.assert_array_equal(sample_scores(spec, 4).z, sample_scores(spec, 4).z)
        assert not np.array_equal(sample_scores(spec, 4).z, sample_scores(spec, 5).z)

    def test_layout(self):
        Z = sample_scores(SimSpec(d=300, n=20, m=0), 0)
        assert Z.z.shape == (20, 300)
        assert (Z.n, Z.d) == (20, 300)


class TestSynthData:
    def test_white_noise_is_scores(self):
        spec = SimSpec(d=200, n=20, m=0)
        Z = sample_scores(spec, 0)
        X = synth_data(eigen_model(200, 0, 0.2, 1.0, 0.0), Z)
        np.testing.assert_array_equal(X.values, Z.z)

    def test_coordinates_scale_with_eigenvalues(self):
        model = eigen_model(300, 2, 0.2, 1.0, 0.3)
        Z = sample_scores(SimSpec(d=300, n=15, m=2), 1)
        X = synth_data(model, Z)
        np.testing.assert_allclose(X.values, Z.z * np.sqrt(model.lambdas))

    def test_gram_diagonal_concentrates(self):
        d = 2000
        model = eigen_model(d, 0, 0.2, 1.0, 0.0)
        spec = SimSpec(d=d, n=30, m=0)
        within = 0
        for replicate in range(20):
            X = synth_data(model, sample_scores(spec, replicate))
            s = matrix.gram(X).scaled
            within += np.mean(np.abs(np.diag(s) - 1.0)) <= 4 * np.sqrt(2.0 / d)
        assert within >= 19


class TestTrueResiduals:
    def test_first_column(self):
        model = eigen_model(300, 2, 0.2, 1.0, 0.0)
        Z = sample_scores(SimSpec(d=300, n=20, m=2), 0)
        R = true_residuals(model, Z, 5)
        np.testing.assert_allclose(R.column(0), np.sum(model.lambdas * Z.z ** 2, axis=1) / 300)

    def test_matches_explicit_projection_on_true_axes(self):
        d = 40
        model = eigen_model(d, 2, 0.5, 1.0, 0.0)
        Z = sample_scores(SimSpec(d=d, n=10, m=2), 2)
        X = synth_data(model, Z).values
        R = true_residuals(model, Z, 6)
        for k in range(7):
            explicit = np.sum(X[:, k:] ** 2, axis=1) / d
            assert np.max(np.abs(R.column(k) - explicit)) < 1e-10

    def test_gap_to_sample_residuals(self):
        d = 2000
        model = eigen_model(d, 3, 0.2, 1.0, 0.0)
        Z = sample_scores(SimSpec(d=d, n=50, m=3), 0)
        _, _, _, R = matrix.decompose(synth_data(model, Z), 5)
        gap = residual_gap(R, true_residuals(model, Z, 5))
        assert gap.shape == (50, 6)
        np.testing.assert_allclose(gap[:, 0], 0.0, atol=1e-10)

    def test_null_column_nearly_symmetric(self):
        d, n, m = 5000, 200, 3
        model = eigen_model(d, m, 0.2, 1.0, 0.0)
        spec = SimSpec(d=d, n=n, m=m)
        small = sum(
            abs(stats.skew(true_residuals(model, sample_scores(spec, r), m).column(m))) < 0.3
            for r in range(10)
        )
        assert small >= 9


class TestRunReplicates:
    def test_single_replicate(self):
        spec = case_spec('I', d=300, n=30, m=2, reps=1, estimators=['dagostino'])
        summary = run_replicates(spec, threads=1)
        histogram = summary.methods['dagostino'].histogram
        assert sum(histogram.values()) == 1
        assert len(histogram) == 1
        assert summary.methods['dagostino'].stderr == 0.0

    def test_histogram_mass_and_seeds(self):
        spec = case_spec('II', d=400, n=30, m=2, reps=6,
                         estimators=['triples', 'dagostino', 'bai_ng', 'variance_explained'])
        summary = run_replicates(spec, threads=2)
        for method in summary.methods.values():
            assert sum(method.histogram.values()) + method.failures == 6
        assert [r.seed_key for r in summary.replicates] == [(spec.seed, i) for i in range(6)]

    def test_exact_replay_across_thread_counts(self):
        spec = case_spec('III', d=300, n=25, m=2, reps=4)
        one = run_replicates(spec, threads=1)
        many = run_replicates(spec, threads=4)
        assert one.methods == many.methods
        assert [r.estimates for r in one.replicates] == [r.estimates for r in many.replicates]

    def test_alpha_sweep(self):
        alphas = (0.05, 0.1, 0.5)
        spec = case_spec('II', d=300, n=30, m=2, reps=3, alphas=alphas,
                         estimators=['triples', 'dagostino', 'bai_ng', 'kritchman_nadler'])
        summary = run_replicates(spec, threads=1)
        assert set(summary.sweeps) == {'triples', 'dagostino', 'kritchman_nadler'}
        for r in summary.replicates:
            assert 'bai_ng' not in r.sweeps
            for method in ('triples', 'dagostino'):
                p = np.array(r.pvalues[method])
                expected = []
                for a in alphas:
                    accepted = np.flatnonzero(p > a)
                    expected.append(int(accepted[0]) if accepted.size else p.size - 1)
                assert r.sweeps[method] == expected
                if spec.alpha in alphas:
                    assert r.sweeps[method][alphas.index(spec.alpha)] == r.estimates[method]
        for points in summary.sweeps.values():
            assert len(points) == 3
            for point in points:
                assert point.count + point.failures == 3

    def test_no_sweep_without_grid(self):
        spec = case_spec('I', d=300, n=30, m=2, reps=1, estimators=['dagostino'])
        summary = run_replicates(spec, threads=1)
        assert summary.sweeps == {}
        assert summary.replicates[0].sweeps == {}

    def test_failures_are_counted(self):
        spec = case_spec('I', d=50, n=60, m=1, reps=3,
                         estimators=['dagostino', 'kritchman_nadler'])
        summary = run_replicates(spec, threads=1)
        assert summary.methods['kritchman_nadler'].failures == 3
        assert summary.methods['kritchman_nadler'].histogram == {}
        assert summary.methods['dagostino'].failures == 0

    def test_rotation_leaves_statistics_unchanged(self):
        spec = case_spec('I', d=60, n=20, m=1, reps=1, estimators=['dagostino'])
        model = eigen_model(60, 1, spec.s, spec.g, spec.beta)
        plain = run_replicate(spec, model, 0)
        rotated = run_replicate(SimSpec.from_mapping(dict(spec.to_mapping(), rotate=True)), model, 0)
        np.testing.assert_allclose(rotated.skewness, plain.skewness, atol=1e-6)
        assert rotated.estimates == plain.estimates

    def test_diagnostics_columns(self):
        spec = case_spec('I', d=300, n=30, m=2, reps=1, estimators=['dagostino'])
        result = run_replicate(spec, eigen_model(300, 2, 0.2, 1.0, 0.0), 0)
        assert result.skewness_at_m == result.skewness[2]
        assert result.skewness_before_m == result.skewness[1]


class TestGramLimit:
    def test_white_noise_limit_is_identity(self):
        model = eigen_model(1000, 0, 0.2, 1.0, 0.0)
        Z = sample_scores(SimSpec(d=1000, n=10, m=0), 0)
        report = gram_limit_check(model, Z)
        S = matrix.gram(synth_data(model, Z)).scaled
        assert report.max_deviation == pytest.approx(np.max(np.abs(S - np.eye(10))))
        assert report.tau2 == 1.0
        assert report.upsilon_d == pytest.approx(np.sqrt(2.0))

    def test_studentized_diagonal_is_symmetric(self):
        d, n = 5000, 200
        model = eigen_model(d, 0, 0.2, 1.0, 0.0)
        report = gram_limit_check(model, sample_scores(SimSpec(d=d, n=n, m=0), 0))
        assert abs(stats.skew(report.studentized_diagonal)) < 0.3
        assert abs(np.std(report.studentized_diagonal) - 1.0) < 0.2

    def test_off_diagonal_scaling(self):
        ratios = []
        for replicate in range(5):
            deviations = []
            for d in (1000, 16000):
                model = eigen_model(d, 3, 0.2, 1.0, 0.0)
                Z = sample_scores(SimSpec(d=d, n=20, m=3), replicate)
                deviations.append(gram_limit_check(model, Z).max_offdiag_deviation)
            ratios.append(deviations[0] / deviations[1])
        assert 2.5 <= np.mean(ratios) <= 6.5

    def test_t3_uses_empirical_square_variance(self):
        model = eigen_model(2000, 1, 0.2, 1.0, 0.0)
        spec = SimSpec(d=2000, n=20, m=1, distribution=ScoreDistribution.T3)
        report = gram_limit_check(model, sample_scores(spec, 0))
        assert report.upsilon_d > report.upsilon_o


class TestScoreRotation:
    def test_needs_a_spike(self):
        model = eigen_model(500, 0, 0.2, 1.0, 0.0)
        with pytest.raises(InvalidSpecError):
            score_rotation_check(model, sample_scores(SimSpec(d=500, n=20, m=0), 0))

    def test_single_spike_ratio(self):
        d = 10000
        model = eigen_model(d, 1, 0.5, 1.0, 0.0)
        report = score_rotation_check(model, sample_scores(SimSpec(d=d, n=50, m=1), 0))
        assert np.median(report.first_component_ratio) == pytest.approx(report.rho[0], abs=0.05)

    def test_noise_second_moments(self):
        d = 10000
        model = eigen_model(d, 3, 0.2, 1.0, 0.0)
        report = score_rotation_check(model, sample_scores(SimSpec(d=d, n=100, m=3), 0))
        assert abs(np.median(report.noise_second_moments) - model.tau2) <= 0.1

    def test_residual_decays(self):
        residuals = {1000: [], 16000: []}
        for replicate in range(5):
            for d in residuals:
                model = eigen_model(d, 3, 0.2, 1.0, 0.0)
                Z = sample_scores(SimSpec(d=d, n=100, m=3), replicate)
                residuals[d].append(score_rotation_check(model, Z).residual)
        assert np.mean(residuals[16000]) < np.mean(residuals[1000])


@pytest.mark.slow
class TestMonteCarloAcceptance:
    def test_global_null_level(self):
        spec = SimSpec.from_mapping({'case': 'custom', 'm': 0, 'beta': 0.0, 'd': 2000, 'n': 50,
                                     'reps': 200, 'estimators': ['dagostino']})
        summary = run_replicates(spec)
        assert summary.methods['dagostino'].histogram.get(0, 0) / 200 >= 0.85

    @pytest.mark.parametrize("m", [3, 10])
    def test_case_one_accuracy(self, m):
        spec = case_spec('I', m=m, d=2000, n=100, reps=50, estimators=['triples', 'dagostino'])
        summary = run_replicates(spec)
        for name in ('triples', 'dagostino'):
            method = summary.methods[name]
            assert abs(method.mean - m) <= 0.3
            assert method.stderr <= 0.25

    def test_skewness_signs_and_transition(self):
        spec = case_spec('I', m=3, d=2000, n=100, reps=100, estimators=['dagostino'])
        summary = run_replicates(spec)
        profiles = np.array([r.skewness for r in summary.replicates], dtype=float)
        for k in range(3):
            assert np.mean(profiles[:, k] > 0) >= 0.9
        assert np.mean(profiles[:, 3] < 0) >= 0.8

        pvalues = np.array([r.pvalues['dagostino'] for r in summary.replicates])
        median = np.median(pvalues, axis=0)
        assert np.all(median[:3] <= 0.05)
        assert median[3] >= 0.5

    @pytest.mark.parametrize("m", [3, 10])
    def test_alpha_robustness(self, m):
        alphas = [0.1, 0.3, 0.5, 0.7, 0.9]
        spec = case_spec('II', m=m, d=2000, n=100, reps=50, estimators=['dagostino'],
                         alphas=alphas)
        summary = run_replicates(spec)
        stable = sum(len(set(r.sweeps['dagostino'])) == 1 for r in summary.replicates)
        assert stable / 50 >= 0.9
        assert [point.count for point in summary.sweeps['dagostino']] == [50] * 5

    def test_kritchman_nadler_overestimates_case_two(self):
        spec = case_spec('II', m=3, d=2000, n=100, reps=50, estimators=['kritchman_nadler'])
        assert run_replicates(spec).methods['kritchman_nadler'].mean > 3

    def test_bai_ng_underestimates_case_four(self):
        spec = case_spec('IV', m=3, d=2000, n=100, reps=50, estimators=['bai_ng'])
        assert run_replicates(spec).methods['bai_ng'].mean < 3

    def test_gram_scaling_many_replicates(self):
        ratios = []
        for replicate in range(50):
            deviations = []
            for d in (1000, 16000):
                model = eigen_model(d, 3, 0.2, 1.0, 0.0)
                Z = sample_scores(SimSpec(d=d, n=20, m=3), replicate)
                deviations.append(gram_limit_check(model, Z).max_offdiag_deviation)
            ratios.append(deviations[0] / deviations[1])
        assert 2.5 <= np.mean(ratios) <= 6.5

    def test_score_residual_decay_rate(self):
        decreased = 0
        for replicate in range(50):
            found = []
            for d in (1000, 16000):
                model = eigen_model(d, 3, 0.2, 1.0, 0.0)
                Z = sample_scores(SimSpec(d=d, n=100, m=3), replicate)
                found.append(score_rotation_check(model, Z).residual)
            decreased += found[1] < found[0]
        assert decreased / 50 >= 0.9
