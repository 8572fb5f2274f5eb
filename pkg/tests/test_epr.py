import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eprbm.epr import (
    DetectorAngles,
    EprDataset,
    EprTrial,
    InsufficientDataError,
    decode_visible,
    empirical_correlations,
    encode_dataset,
    encode_trial,
    generate_dataset,
    load_dataset,
    save_dataset,
    sidecar_path,
    singlet_joint_probability,
)

from helpers import singlet_prob_oracle

angles_st = st.floats(min_value=-10.0, max_value=10.0)
outcome_st = st.sampled_from([-1, 1])


class TestDetectorAngles:
    def test_defaults(self):
        angles = DetectorAngles()
        assert angles.a == 0.0
        assert angles.a_prime == pytest.approx(math.pi / 2)
        assert angles.b == pytest.approx(math.pi / 4)
        assert angles.b_prime == pytest.approx(-math.pi / 4)

    def test_station_lookup(self):
        angles = DetectorAngles(a=0.1, a_prime=0.2, b=0.3, b_prime=0.4)
        assert angles.station_a(0) == 0.1
        assert angles.station_a(1) == 0.2
        assert angles.station_b(0) == 0.3
        assert angles.station_b(1) == 0.4
        with pytest.raises(ValueError):
            angles.station_a(2)

    def test_dict_round_trip(self):
        angles = DetectorAngles(a=1.0, a_prime=-2.0, b=0.25, b_prime=3.5)
        assert DetectorAngles.from_dict(angles.to_dict()) == angles


class TestEprTrial:
    def test_valid(self):
        trial = EprTrial(alpha=1, beta=0, x_alpha=-1, x_beta=1)
        assert trial.alpha == 1

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(alpha=2, beta=0, x_alpha=1, x_beta=1),
            dict(alpha=0, beta=-1, x_alpha=1, x_beta=1),
            dict(alpha=0, beta=0, x_alpha=0, x_beta=1),
            dict(alpha=0, beta=0, x_alpha=1, x_beta=2),
        ],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            EprTrial(**kwargs)


class TestSingletJointProbability:
    def test_known_value(self):
        # (1 - cos(pi/4)) / 4
        p = singlet_joint_probability(0.0, math.pi / 4, 1, 1)
        assert p == pytest.approx(0.0732233, abs=1e-6)

    def test_equal_angles_anticorrelated(self):
        assert singlet_joint_probability(0.7, 0.7, 1, 1) == 0.0
        assert singlet_joint_probability(0.7, 0.7, 1, -1) == pytest.approx(0.5)

    @given(angles_st, angles_st)
    def test_normalization(self, ta, tb):
        total = sum(
            singlet_joint_probability(ta, tb, xa, xb)
            for xa in (-1, 1)
            for xb in (-1, 1)
        )
        assert total == pytest.approx(1.0, abs=1e-12)

    @given(angles_st, angles_st, outcome_st, outcome_st)
    @settings(max_examples=50)
    def test_matches_density_matrix_oracle(self, ta, tb, xa, xb):
        ours = singlet_joint_probability(ta, tb, xa, xb)
        oracle = singlet_prob_oracle(ta, tb, xa, xb)
        assert ours == pytest.approx(oracle, abs=1e-10)

    @given(angles_st, angles_st)
    def test_implies_cosine_correlation(self, ta, tb):
        corr = sum(
            xa * xb * singlet_joint_probability(ta, tb, xa, xb)
            for xa in (-1, 1)
            for xb in (-1, 1)
        )
        assert corr == pytest.approx(-math.cos(ta - tb), abs=1e-12)

    def test_outcome_validation(self):
        with pytest.raises(ValueError):
            singlet_joint_probability(0.0, 0.0, 0, 1)


class TestGenerateDataset:
    def test_zero_trials_rejected(self):
        with pytest.raises(ValueError, match="n_trials"):
            generate_dataset(DetectorAngles(), 0, seed=1)

    def test_deterministic(self):
        a = generate_dataset(DetectorAngles(), 1000, seed=42)
        b = generate_dataset(DetectorAngles(), 1000, seed=42)
        for name in ("alpha", "beta", "x_alpha", "x_beta"):
            np.testing.assert_array_equal(getattr(a, name), getattr(b, name))
        assert a.seed == 42

    def test_empirical_correlations_near_theory(self):
        dataset = generate_dataset(DetectorAngles(), 100_000, seed=7)
        report = empirical_correlations(dataset)
        expected = (-0.707, -0.707, -0.707, 0.707)
        for c, e in zip(report.correlations(), expected):
            assert c == pytest.approx(e, abs=0.01)

    def test_setting_pair_counts(self):
        dataset = generate_dataset(DetectorAngles(), 100_000, seed=8)
        for a, b in itertools.product((0, 1), repeat=2):
            count = int(((dataset.alpha == a) & (dataset.beta == b)).sum())
            assert abs(count - 25_000) <= 500

    def test_outcome_marginals_unbiased(self):
        # no signaling in the data: mean outcome is 0 for every setting
        dataset = generate_dataset(DetectorAngles(), 100_000, seed=9)
        bound = 3.0 / math.sqrt(20_000)
        for setting in (0, 1):
            assert abs(dataset.x_alpha[dataset.alpha == setting].mean()) < bound
            assert abs(dataset.x_beta[dataset.beta == setting].mean()) < bound

    def test_large_sample_convergence(self):
        dataset = generate_dataset(DetectorAngles(), 1_000_000, seed=10)
        report = empirical_correlations(dataset)
        for c, e in zip(report.correlations(), (-0.7071, -0.7071, -0.7071, 0.7071)):
            assert c == pytest.approx(e, abs=0.004)

    def test_custom_angles(self):
        # equal angles everywhere: perfect anticorrelation in every pair
        angles = DetectorAngles(a=0.3, a_prime=0.3, b=0.3, b_prime=0.3)
        dataset = generate_dataset(angles, 2000, seed=11)
        assert np.all(dataset.x_alpha == -dataset.x_beta)


class TestEmpiricalCorrelations:
    def test_two_trial_example(self):
        dataset = EprDataset(
            alpha=[0, 0],
            beta=[0, 0],
            x_alpha=[1, -1],
            x_beta=[1, -1],
            seed=None,
            angles=DetectorAngles(),
        )
        with pytest.raises(InsufficientDataError) as excinfo:
            empirical_correlations(dataset)
        message = str(excinfo.value)
        for label in ("(a, b')", "(a', b)", "(a', b')"):
            assert label in message
        assert excinfo.value.missing_pairs == [(0, 1), (1, 0), (1, 1)]

    def test_perfect_correlation_value(self):
        dataset = EprDataset(
            alpha=[0, 0, 0, 1, 1],
            beta=[0, 1, 0, 0, 1],
            x_alpha=[1, 1, -1, 1, -1],
            x_beta=[1, -1, -1, 1, -1],
            seed=None,
            angles=DetectorAngles(),
        )
        report = empirical_correlations(dataset)
        assert report.c_ab == 1.0
        assert report.c_ab_prime == -1.0
        assert report.source == "empirical"

    def test_fair_coin_outcomes_uncorrelated(self):
        rng = np.random.default_rng(12)
        n = 50_000
        dataset = EprDataset(
            alpha=rng.integers(0, 2, n),
            beta=rng.integers(0, 2, n),
            x_alpha=2 * rng.integers(0, 2, n) - 1,
            x_beta=2 * rng.integers(0, 2, n) - 1,
            seed=None,
            angles=DetectorAngles(),
        )
        report = empirical_correlations(dataset)
        for c in report.correlations():
            assert abs(c) <= 0.02


class TestEncoding:
    def test_setting_encoding_example(self):
        trial = EprTrial(alpha=0, beta=0, x_alpha=1, x_beta=1)
        assert encode_trial(trial).tolist() == [0, 0, 1, 1]

    def test_negative_outcome_example(self):
        trial = EprTrial(alpha=1, beta=0, x_alpha=-1, x_beta=-1)
        assert encode_trial(trial).tolist() == [1, 0, 0, 0]

    def test_round_trip_all_sixteen(self):
        for alpha, beta, xa, xb in itertools.product(
            (0, 1), (0, 1), (-1, 1), (-1, 1)
        ):
            trial = EprTrial(alpha=alpha, beta=beta, x_alpha=xa, x_beta=xb)
            assert decode_visible(encode_trial(trial)) == trial

    def test_decode_validation(self):
        with pytest.raises(ValueError):
            decode_visible([0, 1, 2, 0])
        with pytest.raises(ValueError):
            decode_visible([0, 1, 0])

    def test_encode_dataset_matches_rows(self):
        dataset = generate_dataset(DetectorAngles(), 200, seed=13)
        encoded = encode_dataset(dataset)
        assert encoded.shape == (200, 4)
        assert encoded.dtype == np.float64
        for i in (0, 57, 199):
            np.testing.assert_array_equal(encoded[i], encode_trial(dataset[i]))

    def test_round_trip_preserves_correlations(self):
        dataset = generate_dataset(DetectorAngles(), 5000, seed=14)
        encoded = encode_dataset(dataset)
        decoded = [decode_visible(row) for row in encoded.astype(int)]
        rebuilt = EprDataset(
            alpha=[t.alpha for t in decoded],
            beta=[t.beta for t in decoded],
            x_alpha=[t.x_alpha for t in decoded],
            x_beta=[t.x_beta for t in decoded],
            seed=dataset.seed,
            angles=dataset.angles,
        )
        original = empirical_correlations(dataset)
        recovered = empirical_correlations(rebuilt)
        assert original.correlations() == recovered.correlations()


class TestDatasetValidation:
    def test_rejects_bad_settings(self):
        with pytest.raises(ValueError):
            EprDataset(
                alpha=[0, 2],
                beta=[0, 0],
                x_alpha=[1, 1],
                x_beta=[1, 1],
                seed=None,
                angles=DetectorAngles(),
            )

    def test_rejects_bad_outcomes(self):
        with pytest.raises(ValueError):
            EprDataset(
                alpha=[0, 1],
                beta=[0, 0],
                x_alpha=[1, 0],
                x_beta=[1, 1],
                seed=None,
                angles=DetectorAngles(),
            )

    def test_rejects_length_mismatch(self):
        with pytest.raises(ValueError, match="same length"):
            EprDataset(
                alpha=[0, 1],
                beta=[0],
                x_alpha=[1, 1],
                x_beta=[1, 1],
                seed=None,
                angles=DetectorAngles(),
            )

    def test_indexing(self):
        dataset = generate_dataset(DetectorAngles(), 10, seed=15)
        assert len(dataset) == 10
        trial = dataset[3]
        assert isinstance(trial, EprTrial)
        assert trial.alpha == dataset.alpha[3]


class TestDatasetIO:
    def test_save_load_round_trip(self, tmp_path):
        dataset = generate_dataset(DetectorAngles(), 500, seed=16)
        path = tmp_path / "trials.csv"
        save_dataset(dataset, path)
        loaded = load_dataset(path)
        for name in ("alpha", "beta", "x_alpha", "x_beta"):
            np.testing.assert_array_equal(
                getattr(loaded, name), getattr(dataset, name)
            )
        assert loaded.seed == 16
        assert loaded.angles == dataset.angles

    def test_csv_format(self, tmp_path):
        dataset = EprDataset(
            alpha=[0, 1],
            beta=[1, 0],
            x_alpha=[1, -1],
            x_beta=[-1, -1],
            seed=3,
            angles=DetectorAngles(),
        )
        path = tmp_path / "trials.csv"
        save_dataset(dataset, path)
        lines = path.read_text().splitlines()
        assert lines == ["alpha,beta,x_alpha,x_beta", "0,1,1,-1", "1,0,-1,-1"]

    def test_sidecar_contents(self, tmp_path):
        dataset = generate_dataset(DetectorAngles(), 50, seed=17)
        path = tmp_path / "trials.csv"
        save_dataset(dataset, path)
        meta = json.loads((tmp_path / "trials.csv.meta.json").read_text())
        assert meta["seed"] == 17
        assert meta["n_trials"] == 50
        assert meta["angles"]["a_prime"] == pytest.approx(math.pi / 2)
        assert sidecar_path(path) == str(path) + ".meta.json"

    def test_missing_sidecar_raises(self, tmp_path):
        path = tmp_path / "trials.csv"
        path.write_text("alpha,beta,x_alpha,x_beta\n0,0,1,1\n")
        with pytest.raises(FileNotFoundError):
            load_dataset(path)

    def test_malformed_rows_raise(self, tmp_path):
        path = tmp_path / "trials.csv"
        path.write_text("alpha,beta,x_alpha,x_beta\n0,0,1\n")
        (tmp_path / "trials.csv.meta.json").write_text(
            json.dumps(
                {"seed": None, "n_trials": 1, "angles": DetectorAngles().to_dict()}
            )
        )
        with pytest.raises(ValueError):
            load_dataset(path)
