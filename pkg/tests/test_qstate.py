import numpy as np
import pytest

from paulitomo import (
    DensityMatrix,
    DimensionError,
    InvalidMeasurementError,
    InvalidStateError,
    MeasurementRecord,
    Mub,
    PauliChannel,
    Povm,
    ValidationError,
    basis_povm,
    bloch_to_density,
    choi,
    config_matrix,
    density_to_bloch,
    mub_from_directions,
    outcome_probs,
    projective_povm,
    rng_from_seed,
    sample_record,
    standard_mub,
    substream,
    tetrahedron_povm,
)


class TestDensityMatrix:
    def test_accepts_valid_state(self):
        rho = DensityMatrix(np.diag([0.25, 0.75]))
        assert rho.dim == 2

    def test_rejects_non_hermitian(self):
        with pytest.raises(InvalidStateError):
            DensityMatrix(np.array([[0.5, 0.3], [0.1, 0.5]]))

    def test_rejects_negative_eigenvalue(self):
        with pytest.raises(InvalidStateError):
            DensityMatrix(np.diag([1.2, -0.2]))

    def test_rejects_wrong_trace(self):
        with pytest.raises(InvalidStateError):
            DensityMatrix(np.diag([0.7, 0.7]))

    def test_matrix_is_read_only(self):
        rho = DensityMatrix(np.eye(2) / 2)
        with pytest.raises((ValueError, RuntimeError)):
            rho.matrix[0, 0] = 9.0


class TestBlochConversions:
    def test_center_is_maximally_mixed(self):
        assert np.allclose(bloch_to_density([0, 0, 0]).matrix, np.eye(2) / 2)

    def test_north_pole(self):
        assert np.allclose(bloch_to_density([0, 0, 1]).matrix, np.diag([1.0, 0.0]))

    def test_x_pole(self):
        assert np.allclose(bloch_to_density([1, 0, 0]).matrix, np.full((2, 2), 0.5))

    def test_norm_above_one_rejected(self):
        with pytest.raises(InvalidStateError):
            bloch_to_density([0.8, 0.8, 0.8])

    def test_density_to_bloch_center(self):
        assert np.allclose(density_to_bloch(np.eye(2) / 2), np.zeros(3))

    def test_density_to_bloch_diagonal(self):
        assert np.allclose(density_to_bloch(np.diag([0.55, 0.45])), [0, 0, 0.1])

    def test_density_to_bloch_needs_qubit(self):
        with pytest.raises(DimensionError):
            density_to_bloch(np.eye(3) / 3)

    def test_round_trip_many(self):
        rng = rng_from_seed(11)
        for _ in range(1000):
            v = rng.standard_normal(3)
            v *= rng.uniform(0, 1) / np.linalg.norm(v)
            back = density_to_bloch(bloch_to_density(v).matrix)
            assert np.abs(back - v).max() < 1e-12


class TestMub:
    def test_standard_qubit_directions_are_axes(self):
        mub = standard_mub(2)
        for i in range(3):
            assert np.allclose(mub.direction_bloch(i), np.eye(3)[i], atol=1e-12)

    @pytest.mark.parametrize("d", [2, 3])
    def test_unbiasedness(self, d):
        mub = standard_mub(d)
        n = mub.n_bases
        assert n == d + 1
        for i in range(n):
            gram = mub.bases[i] @ mub.bases[i].conj().T
            assert np.abs(gram - np.eye(d)).max() < 1e-12
            for j in range(n):
                if i == j:
                    continue
                overlaps = np.abs(mub.bases[i].conj() @ mub.bases[j].T) ** 2
                assert np.abs(overlaps - 1.0 / d).max() < 1e-10

    def test_unsupported_dimension(self):
        with pytest.raises(DimensionError):
            standard_mub(4)

    def test_rejects_non_orthonormal(self):
        bad = np.stack([np.eye(2, dtype=complex)] * 3)
        bad[0, 1] = bad[0, 0]
        with pytest.raises(InvalidMeasurementError):
            Mub(bad)

    def test_rejects_biased_pair(self):
        b = np.stack([np.eye(2, dtype=complex), np.eye(2, dtype=complex)])
        with pytest.raises(InvalidMeasurementError):
            Mub(b)

    def test_mub_from_directions_identity(self):
        mub = mub_from_directions(np.eye(3))
        for i in range(3):
            assert np.allclose(mub.direction_bloch(i), np.eye(3)[i], atol=1e-12)

    def test_mub_from_directions_random_frame(self):
        rng = rng_from_seed(5)
        q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
        if np.linalg.det(q) < 0:
            q[2] *= -1
        mub = mub_from_directions(q)
        for i in range(3):
            assert np.abs(mub.direction_bloch(i) - q[i]).max() < 1e-10

    def test_projectors_resolve_identity(self):
        mub = standard_mub(3)
        for i in range(4):
            assert np.allclose(mub.projectors(i).sum(axis=0), np.eye(3))


class TestPovm:
    def test_projective_z(self):
        povm = projective_povm([0, 0, 1])
        assert np.allclose(povm.elements[0], np.diag([1.0, 0.0]))
        assert np.allclose(povm.elements[1], np.diag([0.0, 1.0]))

    def test_projective_needs_unit_direction(self):
        with pytest.raises(InvalidMeasurementError):
            projective_povm([0.5, 0, 0])

    def test_elements_sum_to_identity(self):
        rng = rng_from_seed(3)
        m = rng.standard_normal(3)
        m /= np.linalg.norm(m)
        povm = projective_povm(m)
        assert np.abs(sum(povm.elements) - np.eye(2)).max() < 1e-12

    def test_rejects_bad_sum(self):
        with pytest.raises(InvalidMeasurementError):
            Povm([np.diag([1.0, 0.0]), np.diag([0.0, 0.5])])

    def test_rejects_non_psd_element(self):
        with pytest.raises(InvalidMeasurementError):
            Povm([np.diag([1.5, 1.0]), np.diag([-0.5, 0.0])])

    def test_tetrahedron(self):
        povm = tetrahedron_povm()
        assert povm.n_outcomes == 4
        assert np.abs(sum(povm.elements) - np.eye(2)).max() < 1e-12
        # each element is (identity + t . sigma) / 4, so 2*element is a state
        dirs = [density_to_bloch(2 * np.asarray(e)) for e in povm.elements]
        for i in range(4):
            assert abs(np.linalg.norm(dirs[i]) - 1.0) < 1e-10
            for j in range(i + 1, 4):
                assert abs(dirs[i] @ dirs[j] + 1.0 / 3.0) < 1e-10

    def test_basis_povm(self):
        mub = standard_mub(3)
        povm = basis_povm(mub, 1)
        assert np.allclose(np.stack(povm.elements), mub.projectors(1))


class TestOutcomeProbs:
    def test_maximally_mixed_tetrahedron(self):
        p = outcome_probs(np.eye(2) / 2, tetrahedron_povm())
        assert np.allclose(p, 0.25)

    def test_born_rule_random(self):
        rng = rng_from_seed(17)
        for _ in range(50):
            v = rng.standard_normal(3)
            v *= rng.uniform(0, 1) / np.linalg.norm(v)
            rho = bloch_to_density(v)
            m = rng.standard_normal(3)
            m /= np.linalg.norm(m)
            povm = projective_povm(m)
            p = outcome_probs(rho, povm)
            direct = [np.trace(rho.matrix @ e).real for e in povm.elements]
            assert np.abs(p - direct).max() < 1e-12
            assert abs(p.sum() - 1.0) < 1e-10

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            outcome_probs(np.eye(3) / 3, projective_povm([0, 0, 1]))


class TestSampling:
    def test_deterministic_given_seed(self):
        p = np.array([0.2, 0.5, 0.3])
        a = sample_record(p, 1000, 42)
        b = sample_record(p, 1000, 42)
        assert np.array_equal(a, b)
        assert a.sum() == 1000

    def test_different_seeds_differ(self):
        p = np.array([0.5, 0.5])
        assert not np.array_equal(
            sample_record(p, 10000, 1), sample_record(p, 10000, 2)
        )

    def test_zero_probability_never_sampled(self):
        counts = sample_record([0.0, 1.0, 0.0], 500, 9)
        assert counts[0] == 0 and counts[2] == 0 and counts[1] == 500

    def test_invalid_probs_rejected(self):
        with pytest.raises(ValidationError):
            sample_record([0.6, 0.6], 10, 0)

    def test_frequency_concentration(self):
        # deviation of c/n from p should stay within 4 binomial sigmas
        p = np.array([0.65, 0.35])
        n = 100000
        bound = 4 * np.sqrt(p[0] * (1 - p[0]) / n)
        hits = 0
        for s in range(100):
            c = sample_record(p, n, substream(77, s))
            if abs(c[0] / n - p[0]) < bound:
                hits += 1
        assert hits >= 99

    def test_substream_reproducible_and_distinct(self):
        a = substream(5, 1, 2).standard_normal(4)
        b = substream(5, 1, 2).standard_normal(4)
        c = substream(5, 1, 3).standard_normal(4)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_substream_rejects_generator_root(self):
        with pytest.raises(ValidationError):
            substream(rng_from_seed(1), 0)


class TestMeasurementRecord:
    def test_counts_and_shots(self):
        rec = MeasurementRecord([np.array([650, 350]), np.array([10, 0])])
        assert rec.n_configs == 2
        assert rec.shots == (1000, 10)

    def test_rejects_negative_counts(self):
        with pytest.raises(ValidationError):
            MeasurementRecord([np.array([-1, 2])])


class TestConfigMatrix:
    def test_identity_povm_element(self):
        c = config_matrix(np.eye(2) / 2, np.eye(2))
        assert np.allclose(c, np.kron(np.eye(2) / 2, np.eye(2)))
        x = choi(PauliChannel([0.3, -0.1, 0.1])).matrix
        assert abs(np.trace(c @ x) - 1.0) < 1e-12

    def test_identity_channel_aligned_config(self):
        rho = bloch_to_density([1, 0, 0])
        plus = projective_povm([1, 0, 0]).elements[0]
        c = config_matrix(rho, plus)
        x = choi(PauliChannel([1, 1, 1])).matrix
        assert abs(np.trace(c @ x).real - 1.0) < 1e-12

    def test_known_probability(self):
        rho = bloch_to_density([1, 0, 0])
        plus = projective_povm([1, 0, 0]).elements[0]
        c = config_matrix(rho, plus)
        x = choi(PauliChannel([0.3, -0.1, 0.1])).matrix
        assert abs(np.trace(c @ x).real - 0.65) < 1e-12

    def test_born_choi_identity_random(self):
        # trace(C X) must reproduce trace(E(rho) M) for any channel
        rng = rng_from_seed(23)
        for _ in range(200):
            v = rng.standard_normal(3)
            v *= rng.uniform(0, 1) / np.linalg.norm(v)
            rho = bloch_to_density(v)
            m = rng.standard_normal(3)
            m /= np.linalg.norm(m)
            povm = projective_povm(m)
            lam = rng.uniform(-0.3, 0.3, 3)
            ch = PauliChannel(lam)
            x = choi(ch).matrix
            p_direct = outcome_probs(ch.apply(rho), povm)
            for el, p in zip(povm.elements, p_direct):
                c = config_matrix(rho, el)
                assert abs(np.trace(c @ x).real - p) < 1e-10

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            config_matrix(np.eye(2) / 2, np.eye(3))
