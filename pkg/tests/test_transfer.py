import numpy as np
import pytest

from rydstats import (
    FockDistribution,
    NumericalError,
    ValidationError,
    coherent,
    identity_matrix,
    loss_matrix,
    perfect_filter_matrix,
)
from rydstats.transfer import TransferMatrix


class TestConstruction:
    def test_rejects_negative_entries(self):
        m = np.eye(3)
        m[0, 1] = -0.5
        m[1, 1] = 1.5
        with pytest.raises(ValidationError):
            TransferMatrix(m)

    def test_rejects_bad_column_sum(self):
        m = np.eye(3) * 0.99
        with pytest.raises(ValidationError):
            TransferMatrix(m)

    def test_nonphysical_skips_checks(self):
        m = np.eye(3)
        m[0, 1] = -0.5
        TransferMatrix(m, physical=False)


class TestLossMatrix:
    def test_unit_transmission_is_identity(self):
        np.testing.assert_array_equal(loss_matrix(1.0, 8).matrix, np.eye(9))

    def test_zero_transmission_maps_to_vacuum(self):
        m = loss_matrix(0.0, 8).matrix
        expected = np.zeros((9, 9))
        expected[0, :] = 1.0
        np.testing.assert_array_equal(m, expected)

    def test_half_transmission_column_two(self):
        # binomial pmf B(2, 0.5)
        col = loss_matrix(0.5, 5).matrix[:, 2]
        np.testing.assert_allclose(col, [0.25, 0.5, 0.25, 0, 0, 0], atol=1e-15)

    def test_upper_triangular(self):
        m = loss_matrix(0.3, 10).matrix
        assert np.all(np.tril(m, k=-1) == 0.0)

    def test_out_of_range(self):
        with pytest.raises(ValidationError):
            loss_matrix(1.2, 5)
        with pytest.raises(ValidationError):
            loss_matrix(-0.1, 5)

    def test_semigroup(self):
        # loss(t1) after loss(t2) == loss(t1 t2)
        rng = np.random.default_rng(1)
        for _ in range(100):
            t1, t2 = rng.random(2)
            combined = loss_matrix(t1, 12).compose(loss_matrix(t2, 12))
            np.testing.assert_allclose(
                combined.matrix, loss_matrix(t1 * t2, 12).matrix, atol=1e-12
            )


class TestPerfectFilter:
    def test_displayed_matrix(self):
        m = perfect_filter_matrix(3).matrix
        expected = np.array(
            [
                [1, 0, 0, 0],
                [0, 1, 1, 1],
                [0, 0, 0, 0],
                [0, 0, 0, 0],
            ],
            dtype=float,
        )
        np.testing.assert_array_equal(m, expected)

    def test_two_photon_input(self):
        d = FockDistribution(np.array([0.0, 0.0, 1.0]))
        out = perfect_filter_matrix(2).apply(d)
        np.testing.assert_allclose(out.probs, [0, 1, 0])

    def test_vacuum_passes(self):
        d = FockDistribution(np.array([1.0, 0.0, 0.0]))
        out = perfect_filter_matrix(2).apply(d)
        np.testing.assert_allclose(out.probs, [1, 0, 0])

    def test_mixed_input(self):
        d = FockDistribution(np.array([0.5, 0.3, 0.2]))
        out = perfect_filter_matrix(2).apply(d)
        np.testing.assert_allclose(out.probs, [0.5, 0.5, 0.0])

    def test_idempotent(self):
        f = perfect_filter_matrix(6)
        np.testing.assert_allclose(f.compose(f).matrix, f.matrix, atol=1e-15)


class TestApplyCompose:
    def test_identity_apply(self):
        d = coherent(0.6, 15)
        np.testing.assert_allclose(identity_matrix(15).apply(d).probs, d.probs)

    def test_poisson_thinning(self):
        out = loss_matrix(0.3, 20).apply(coherent(1.0, 20))
        np.testing.assert_allclose(out.probs, coherent(0.3, 20).probs, atol=1e-9)

    def test_total_loss_gives_vacuum(self):
        out = loss_matrix(0.0, 12).apply(coherent(0.8, 12))
        np.testing.assert_allclose(out.probs, np.eye(13)[0])

    def test_dimension_mismatch(self):
        with pytest.raises(ValidationError):
            loss_matrix(0.5, 5).apply(coherent(0.1, 8))
        with pytest.raises(ValidationError):
            loss_matrix(0.5, 5).compose(loss_matrix(0.5, 6))

    def test_identity_compose(self):
        m = loss_matrix(0.4, 9)
        np.testing.assert_array_equal(identity_matrix(9).compose(m).matrix, m.matrix)

    def test_compose_preserves_column_sums(self):
        m = loss_matrix(0.7, 14).compose(perfect_filter_matrix(14))
        np.testing.assert_allclose(m.matrix.sum(axis=0), 1.0, atol=1e-12)


class TestInvert:
    def test_identity(self):
        inv = identity_matrix(6).invert()
        np.testing.assert_allclose(inv.matrix, np.eye(7), atol=1e-12)
        assert not inv.physical

    def test_inverse_times_forward_is_identity(self):
        m = loss_matrix(0.5, 12)
        prod = m.invert().compose(m)
        np.testing.assert_allclose(prod.matrix, np.eye(13), atol=1e-8)

    def test_thinning_inverse_recovers_coherent(self):
        m = loss_matrix(0.5, 20)
        recovered = m.invert().apply(m.apply(coherent(0.5, 20)))
        np.testing.assert_allclose(recovered.probs, coherent(0.5, 20).probs, atol=1e-7)

    @pytest.mark.parametrize("t,n_max", [(0.1, 8), (0.5, 20), (0.9, 20)])
    def test_round_trip_well_conditioned(self, t, n_max):
        rng = np.random.default_rng(3)
        d = FockDistribution(rng.random(n_max + 1) * np.exp(-0.7 * np.arange(n_max + 1)))
        m = loss_matrix(t, n_max)
        recovered = m.invert().apply(m.apply(d))
        np.testing.assert_allclose(recovered.probs, d.probs, atol=1e-7)

    def test_singular_filter(self):
        with pytest.raises(NumericalError):
            perfect_filter_matrix(5).invert()

    def test_ill_conditioned_loss(self):
        # cond(loss(0.1)) at n_max=20 is ~1e25, far beyond trust
        with pytest.raises(NumericalError):
            loss_matrix(0.1, 20).invert()


class TestCsvDump:
    def test_header_and_shape(self, tmp_path):
        path = tmp_path / "m.csv"
        loss_matrix(0.5, 3).to_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "k\\l,0,1,2,3"
        assert len(lines) == 5
        row0 = lines[1].split(",")
        assert row0[0] == "0"
        assert float(row0[2]) == pytest.approx(0.5, abs=1e-15)
