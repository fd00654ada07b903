"""Case-study orchestration, robustness sweep, and CSV export."""

import csv
import json

import numpy as np
import pytest

from paulitomo import (
    CaseStudySpec,
    DimensionError,
    GenPauliChannel,
    PauliChannel,
    ValidationError,
    choi,
    empirical_stats,
    hs_error,
    rng_from_seed,
    robustness_sweep,
    rotate_bloch,
    run_case_study,
)
from paulitomo.harness import (
    metrics_rows_to_dicts,
    robustness_rows_to_dicts,
    spec_from_dict,
    spec_to_dict,
    write_case_study_csv,
    write_robustness_csv,
    write_sidecar,
)

CASE_LAM = np.array([0.3, -0.1, 0.1])
QUTRIT_LAM = np.array([-0.3, -0.2, -0.1, 0.1])
Z = np.array([0.0, 0.0, 1.0])


class TestRotateBloch:
    def test_zero_angle(self):
        v = np.array([0.3, -0.4, 0.5])
        assert np.allclose(rotate_bloch(v, Z, 0.0), v, atol=1e-15)

    def test_quarter_turn_about_z(self):
        out = rotate_bloch([1.0, 0.0, 0.0], Z, np.pi / 2)
        assert np.allclose(out, [0.0, 1.0, 0.0], atol=1e-15)

    def test_cyclic_axis(self):
        axis = np.ones(3) / np.sqrt(3.0)
        out = rotate_bloch([1.0, 0.0, 0.0], axis, 2 * np.pi / 3)
        assert np.allclose(out, [0.0, 1.0, 0.0], atol=1e-14)

    def test_preserves_norms_and_angles(self):
        rng = rng_from_seed(90)
        for _ in range(25):
            axis = rng.standard_normal(3)
            axis /= np.linalg.norm(axis)
            alpha = rng.uniform(0.0, 2 * np.pi)
            u, v = rng.standard_normal((2, 3))
            ru = rotate_bloch(u, axis, alpha)
            rv = rotate_bloch(v, axis, alpha)
            assert abs(np.linalg.norm(ru) - np.linalg.norm(u)) < 1e-12
            assert abs(ru @ rv - u @ v) < 1e-12

    def test_validation(self):
        with pytest.raises(ValidationError):
            rotate_bloch([1.0, 0.0, 0.0], [0.0, 0.0, 2.0], 0.1)
        with pytest.raises(DimensionError):
            rotate_bloch([1.0, 0.0], Z, 0.1)


class TestEmpiricalStats:
    def test_named_values(self):
        mean, var = empirical_stats([[0.2], [0.3], [0.4], [0.3], [0.3]])
        assert abs(mean[0] - 0.3) < 1e-15
        assert abs(var[0] - 0.005) < 1e-15

    def test_componentwise(self):
        data = rng_from_seed(91).standard_normal((20, 3))
        mean, var = empirical_stats(data)
        assert np.allclose(mean, data.mean(axis=0))
        assert np.allclose(var, data.var(axis=0, ddof=1))

    def test_needs_two_samples(self):
        with pytest.raises(ValidationError):
            empirical_stats([[0.3]])
        with pytest.raises(ValidationError):
            empirical_stats([0.2, 0.3])


class TestHsError:
    def test_zero_for_identical(self):
        x = choi(PauliChannel(CASE_LAM)).matrix
        assert hs_error(x, x) == 0.0

    def test_single_entry_bump(self):
        a = np.eye(4, dtype=complex) / 2
        b = a.copy()
        b[0, 0] += 0.1
        assert abs(hs_error(a, b) - 0.1) < 1e-15

    def test_identity_vs_depolarizing(self):
        # orthonormal affine terms: distance is sqrt(3) in parameter space
        val = hs_error(choi(PauliChannel([1, 1, 1])), choi(PauliChannel([0, 0, 0])))
        assert abs(val - np.sqrt(3.0)) < 1e-12

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            hs_error(np.eye(4), np.eye(9))


class TestCaseStudySpec:
    def test_coerces_grid_and_trials(self):
        spec = CaseStudySpec(PauliChannel(CASE_LAM), "optimal", [100.0, 200.0], trials=3.0)
        assert spec.shot_grid == (100, 200)
        assert spec.trials == 3

    def test_unknown_strategy(self):
        with pytest.raises(ValidationError):
            CaseStudySpec(PauliChannel(CASE_LAM), "adaptive", (100,))

    def test_grid_validation(self):
        for grid in ((), (100, 100), (200, 100), (0, 100)):
            with pytest.raises(ValidationError):
                CaseStudySpec(PauliChannel(CASE_LAM), "optimal", grid)

    def test_trials_validation(self):
        with pytest.raises(ValidationError):
            CaseStudySpec(PauliChannel(CASE_LAM), "optimal", (100,), trials=0)

    def test_strategy_dimension_match(self):
        with pytest.raises(ValidationError):
            CaseStudySpec(GenPauliChannel(QUTRIT_LAM), "optimal", (100,))
        with pytest.raises(ValidationError):
            CaseStudySpec(PauliChannel(CASE_LAM), "qutrit-optimal", (100,))


class TestRunCaseStudy:
    def test_exact_data_recovers_channel(self):
        spec = CaseStudySpec(
            PauliChannel(CASE_LAM), "optimal", (100,), trials=1, seed=0, exact=True
        )
        result = run_case_study(spec)
        row = result.rows[0]
        assert row.complete and row.trial_count == 1
        assert np.abs(row.lambda_mean - CASE_LAM).max() < 1e-5
        assert row.hs_error < 1e-5
        assert np.array_equal(row.lambda_var, np.zeros(3))
        assert result.closed_form_rows[0].hs_error < 1e-8

    def test_deterministic_repeat(self):
        spec = CaseStudySpec(PauliChannel(CASE_LAM), "optimal", (300, 600), trials=3, seed=7)
        a, b = run_case_study(spec), run_case_study(spec)
        for ra, rb in zip(a.rows + a.closed_form_rows, b.rows + b.closed_form_rows):
            assert np.array_equal(ra.lambda_mean, rb.lambda_mean)
            assert np.array_equal(ra.lambda_var, rb.lambda_var)
            assert ra.hs_error == rb.hs_error

    def test_closed_form_logged_only_when_aligned(self):
        spec = CaseStudySpec(
            PauliChannel(CASE_LAM), "nonoptimal-minimal", (300,), trials=2, seed=1
        )
        result = run_case_study(spec)
        assert result.closed_form_rows == ()
        assert result.rows[0].trial_count == 2

    def test_separate_input_strategy_runs(self):
        spec = CaseStudySpec(
            PauliChannel(CASE_LAM), "nonoptimal-input", (400,), trials=2, seed=2
        )
        row = run_case_study(spec).rows[0]
        assert row.complete
        assert np.abs(row.lambda_mean - CASE_LAM).max() < 0.3

    def test_aligned_qutrit_beats_shared_input(self):
        errors = {}
        for strategy in ("qutrit-nonoptimal", "qutrit-optimal"):
            spec = CaseStudySpec(
                GenPauliChannel(QUTRIT_LAM), strategy, (400,), trials=5, seed=30
            )
            errors[strategy] = run_case_study(spec).rows[0].hs_error
        assert errors["qutrit-optimal"] < errors["qutrit-nonoptimal"]

    def test_variance_tracks_information_bound(self):
        spec = CaseStudySpec(PauliChannel(CASE_LAM), "optimal", (2000,), trials=40, seed=32)
        row = run_case_study(spec).rows[0]
        bound = (1.0 - CASE_LAM**2) / 2000.0
        ratio = row.lambda_var / bound
        assert (ratio > 0.5).all() and (ratio < 2.0).all()

    def test_error_decreases_with_shots(self):
        spec = CaseStudySpec(
            PauliChannel(CASE_LAM), "optimal", (500, 2000, 8000), trials=6, seed=33
        )
        hs = [row.hs_error for row in run_case_study(spec).rows]
        violations = sum(b >= a for a, b in zip(hs, hs[1:]))
        assert violations <= 1
        assert hs[-1] < hs[0]


class TestRobustnessSweep:
    def test_zero_angle_matches_case_study(self):
        spec = CaseStudySpec(PauliChannel(CASE_LAM), "optimal", (800,), trials=3, seed=21)
        cs_row = run_case_study(spec).rows[0]
        rob = robustness_sweep(CASE_LAM, Z, [0.0], n_shots=800, trials=3, seed=21)[0]
        assert rob.alpha == 0.0
        assert np.array_equal(rob.lambda_mean, cs_row.lambda_mean)
        assert np.array_equal(rob.lambda_var, cs_row.lambda_var)
        assert abs(rob.hs_error - cs_row.hs_error) < 1e-12

    def test_mismatch_grows_with_angle(self):
        rows = robustness_sweep(CASE_LAM, Z, (0.0, 0.3), n_shots=20000, trials=3, seed=34)
        assert rows[1].hs_error > 3 * rows[0].hs_error

    def test_axis_validation(self):
        with pytest.raises(ValidationError):
            robustness_sweep(CASE_LAM, [0.0, 0.0, 2.0], [0.1], n_shots=100)


class TestExport:
    @pytest.fixture()
    def result(self):
        spec = CaseStudySpec(PauliChannel(CASE_LAM), "optimal", (300, 600), trials=3, seed=5)
        return run_case_study(spec)

    def test_case_study_csv_round_trip(self, result, tmp_path):
        path = tmp_path / "rows.csv"
        write_case_study_csv(result.rows, path)
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == [
            "n_shots", "trial_count",
            "lambda_mean_1", "lambda_mean_2", "lambda_mean_3",
            "lambda_var_1", "lambda_var_2", "lambda_var_3",
            "hs_error",
        ]
        assert len(rows) == 1 + len(result.rows)
        for parsed, row in zip(rows[1:], result.rows):
            assert int(parsed[0]) == row.n_shots
            assert [float(c) for c in parsed[2:5]] == list(row.lambda_mean)
            assert float(parsed[8]) == row.hs_error

    def test_csv_bytes_deterministic(self, result, tmp_path):
        spec = result.spec
        again = run_case_study(spec)
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        write_case_study_csv(result.rows, p1)
        write_case_study_csv(again.rows, p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_robustness_csv(self, tmp_path):
        rows = robustness_sweep(CASE_LAM, Z, (0.0, 0.2), n_shots=300, trials=2, seed=9)
        path = tmp_path / "rob.csv"
        write_robustness_csv(rows, path)
        with open(path, newline="") as fh:
            parsed = list(csv.reader(fh))
        assert parsed[0][0] == "alpha" and len(parsed) == 3
        assert [float(r[0]) for r in parsed[1:]] == [0.0, 0.2]
        assert float(parsed[2][8]) == rows[1].hs_error

    def test_spec_dict_round_trip(self):
        spec = CaseStudySpec(
            GenPauliChannel(QUTRIT_LAM), "qutrit-optimal", (100, 200), trials=4, seed=11
        )
        back = spec_from_dict(spec_to_dict(spec))
        assert back.strategy == spec.strategy
        assert back.shot_grid == spec.shot_grid
        assert back.trials == spec.trials and back.seed == spec.seed
        assert back.channel.dim == 3
        assert np.allclose(back.channel.lam, QUTRIT_LAM)

    def test_sidecar(self, result, tmp_path):
        path = tmp_path / "spec.json"
        write_sidecar(result.spec, path)
        data = json.loads(path.read_text())
        assert data == spec_to_dict(result.spec)

    def test_rows_to_dicts(self, result):
        dicts = metrics_rows_to_dicts(result.rows)
        assert dicts[0]["n_shots"] == 300 and dicts[0]["complete"]
        assert len(dicts[0]["lambda_mean"]) == 3
        rob = robustness_sweep(CASE_LAM, Z, [0.1], n_shots=200, trials=2, seed=3)
        rd = robustness_rows_to_dicts(rob)
        assert rd[0]["alpha"] == 0.1 and rd[0]["trial_count"] == 2
