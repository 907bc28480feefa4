import numpy as np
import pytest

from rydstats import (
    BlockadeConfig,
    PipelineConfig,
    ValidationError,
    cloud_input_distribution,
    coherent,
    efficiency,
    exact_pair_survival,
    g2_after_storage,
    loss_matrix,
    medium_matrix,
    post_blockade_distribution,
    source_distribution,
    sweep,
    zeta_to_param,
)
from rydstats.pipeline import _pre_blockade_matrix


def make_cfg(kind="dlcz", n_max=24, trials=20_000, **kwargs):
    blockade = BlockadeConfig(
        trials_per_fock=trials, rng_seed=314, n_max=n_max,
        **{k: kwargs.pop(k) for k in ("cloud_length", "blockade_radius") if k in kwargs},
    )
    return PipelineConfig(input_kind=kind, blockade=blockade, **kwargs)


class TestConfig:
    def test_rejects_unknown_kind(self):
        with pytest.raises(ValidationError):
            make_cfg(kind="laser")

    def test_rejects_bad_efficiency(self):
        with pytest.raises(ValidationError):
            make_cfg(eta_r=0.0)
        with pytest.raises(ValidationError):
            make_cfg(eta_eit=1.5)


class TestPostBlockade:
    def test_identity_chain_passes_input_through(self):
        cfg = make_cfg(
            kind="wcs", blockade_radius=0.0, t_losses=1.0,
            eta_compression=1.0, eta_eit=1.0,
        )
        d = coherent(0.4, 24)
        out = post_blockade_distribution(cfg, d)
        np.testing.assert_allclose(out.probs, d.probs, atol=1e-12)

    def test_full_blockade_caps_at_one_photon(self):
        cfg = make_cfg(kind="wcs", blockade_radius=20.0)
        out = post_blockade_distribution(cfg, coherent(0.8, 24))
        assert out.probs[2:].sum() == 0.0

    def test_wcs_prechain_is_poisson_thinning(self):
        # losses before the medium keep a Poissonian Poissonian: mean
        # mu * eta_compression * sqrt(eta_eit); no setup losses for wcs
        cfg = make_cfg(kind="wcs")
        pre = _pre_blockade_matrix(cfg, 24, cfg.eta_compression)
        out = pre.apply(coherent(0.3, 24))
        expected = coherent(0.3 * 0.6 * np.sqrt(0.6), 24)
        np.testing.assert_allclose(out.probs, expected.probs, atol=1e-9)

    def test_dlcz_prechain_includes_setup_losses(self):
        cfg = make_cfg(kind="dlcz")
        pre = _pre_blockade_matrix(cfg, 24, cfg.eta_compression)
        out = pre.apply(coherent(0.3, 24))
        expected = coherent(0.3 * 0.15 * 0.6 * np.sqrt(0.6), 24)
        np.testing.assert_allclose(out.probs, expected.probs, atol=1e-9)

    def test_mismatched_n_max_rejected(self):
        cfg = make_cfg(kind="wcs", n_max=10)
        with pytest.raises(ValidationError):
            post_blockade_distribution(cfg, coherent(0.1, 24))


class TestG2AfterStorage:
    def test_wcs_small_mu_plateau(self):
        cfg = make_cfg(kind="wcs", trials=100_000)
        mu = zeta_to_param(cfg, 1e-4)
        g2_out = g2_after_storage(cfg, coherent(mu, 24))
        expected = exact_pair_survival(10.5, 15.0)
        sigma = np.sqrt(expected * (1 - expected) / 100_000)
        assert abs(g2_out - expected) < 3 * sigma + 1e-3

    def test_heralded_single_photon_limit(self):
        cfg = make_cfg()
        g2_out = g2_after_storage(cfg, source_distribution(cfg, 1e-8))
        assert g2_out == pytest.approx(0.0, abs=1e-6)

    def test_no_blockade_keeps_input_g2(self):
        cfg = make_cfg(kind="wcs", blockade_radius=0.0)
        d = coherent(0.5, 24)
        assert g2_after_storage(cfg, d) == pytest.approx(d.g2(), abs=1e-7)

    def test_invariant_under_post_blockade_losses(self):
        # applying the retrieval-leg losses after the medium must not move g2
        cfg = make_cfg()
        d = source_distribution(cfg, 0.1)
        out = post_blockade_distribution(cfg, d)
        retrieval = loss_matrix(cfg.eta_r * np.sqrt(cfg.eta_eit), 24)
        assert retrieval.apply(out).g2() == pytest.approx(out.g2(), abs=1e-9)

    def test_order_of_blockade_and_losses_matters(self):
        cfg = make_cfg(n_max=64, trials=20_000)
        p = zeta_to_param(cfg, 0.3)
        d = source_distribution(cfg, p)
        medium = medium_matrix(cfg)
        correct = medium.compose(_pre_blockade_matrix(cfg, 64, 0.6)).apply(d)
        swapped = _pre_blockade_matrix(cfg, 64, 0.6).compose(medium).apply(d)
        assert abs(correct.g2() - swapped.g2()) > 1e-3


class TestEfficiency:
    def test_low_zeta_limit_is_constant_product(self):
        for kind in ("dlcz", "wcs"):
            cfg = make_cfg(kind=kind)
            param = zeta_to_param(cfg, 1e-8)
            eta = efficiency(cfg, source_distribution(cfg, param))
            assert eta == pytest.approx(0.41 * 0.6 * 0.6, abs=1e-6)

    def test_no_blockade_keeps_efficiency_flat(self):
        cfg = make_cfg(kind="wcs", blockade_radius=0.0)
        medium = medium_matrix(cfg)
        etas = [
            efficiency(cfg, coherent(mu, 24), medium) for mu in (0.01, 0.3, 1.0)
        ]
        np.testing.assert_allclose(etas, 0.41 * 0.6 * 0.6, atol=1e-9)

    def test_decreases_with_zeta(self):
        cfg = make_cfg(kind="wcs", trials=50_000)
        medium = medium_matrix(cfg)
        etas = []
        for zeta in (0.01, 0.1, 0.3):
            mu = zeta_to_param(cfg, zeta)
            etas.append(efficiency(cfg, coherent(mu, 24), medium))
        assert np.all(np.diff(etas) < 0)

    def test_ratio_independent_of_linear_calibrations(self):
        # eta(zeta)/eta(zeta->0) reduces to the medium's mean-survival
        # factor on the pre-medium state: eta_r cancels exactly, and
        # t_losses only enters through that state's shape
        cfg_a = make_cfg(eta_r=0.41, trials=20_000)
        cfg_b = make_cfg(eta_r=0.17, trials=20_000)
        medium = medium_matrix(cfg_a)
        p = zeta_to_param(cfg_a, 0.05)
        ratios = []
        for cfg in (cfg_a, cfg_b):
            num = efficiency(cfg, source_distribution(cfg, p), medium)
            den = efficiency(cfg, source_distribution(cfg, 1e-9), medium)
            ratios.append(num / den)
        assert ratios[0] == pytest.approx(ratios[1], abs=1e-9)
        # the ratio equals mean(B q)/mean(q) for the pre-medium state q
        q = _pre_blockade_matrix(cfg_a, 24, 0.6).apply(source_distribution(cfg_a, p))
        survival = medium.apply(q).mean_photons() / q.mean_photons()
        assert ratios[0] == pytest.approx(survival, abs=1e-9)


class TestZetaInversion:
    @pytest.mark.parametrize("kind", ["dlcz", "wcs"])
    @pytest.mark.parametrize("zeta", [0.01, 0.05, 0.2])
    def test_round_trip(self, kind, zeta):
        cfg = make_cfg(kind=kind, n_max=64)
        param = zeta_to_param(cfg, zeta)
        d = cloud_input_distribution(cfg, param, 64)
        assert d.zeta() == pytest.approx(zeta, abs=1e-9)

    def test_unattainable_zeta(self):
        cfg = make_cfg(n_max=12)
        with pytest.raises(ValidationError, match="not attainable"):
            zeta_to_param(cfg, 0.9)

    def test_wcs_zeta_matches_closed_form(self):
        # independent oracle: zeta(mu) = 1 - mu e^-mu / (1 - e^-mu)
        cfg = make_cfg(kind="wcs", n_max=40)
        mu = zeta_to_param(cfg, 0.1)
        closed = 1 - mu * np.exp(-mu) / (1 - np.exp(-mu))
        assert closed == pytest.approx(0.1, abs=1e-9)


class TestSweep:
    def test_columns_and_csv(self, tmp_path):
        cfg = make_cfg(kind="wcs", trials=10_000)
        result = sweep(cfg, [0.01, 0.05, 0.2])
        assert len(result.points) == 3
        np.testing.assert_allclose(result.column("g2_in"), 1.0, atol=1e-9)
        assert np.all(result.column("g2_out_lo") <= result.column("g2_out_hi"))
        path = tmp_path / "sweep.csv"
        result.write_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "zeta,param,g2_in,g2_out,eta,g2_out_lo,g2_out_hi"
        assert len(lines) == 4

    def test_band_brackets_default(self):
        cfg = make_cfg(kind="wcs", trials=10_000)
        result = sweep(cfg, [0.1])
        pt = result.points[0]
        assert pt.g2_out_lo <= pt.g2_out + 1e-12
        assert pt.g2_out <= pt.g2_out_hi + 1e-12

    def test_dlcz_g2_in_increases(self):
        cfg = make_cfg(n_max=64, trials=10_000)
        result = sweep(cfg, [0.01, 0.05, 0.15, 0.3])
        assert np.all(np.diff(result.column("g2_in")) > 0)

    def test_wcs_g2_out_non_decreasing(self):
        # for a fixed medium matrix the Poissonian-input curve only rises
        cfg = make_cfg(kind="wcs", trials=50_000)
        result = sweep(cfg, np.geomspace(0.002, 0.35, 10))
        assert np.all(np.diff(result.column("g2_out")) > -1e-12)

    def test_shared_medium_matches_fresh(self):
        cfg = make_cfg(kind="wcs", trials=10_000)
        medium = medium_matrix(cfg)
        a = sweep(cfg, [0.05], medium=medium)
        b = sweep(cfg, [0.05])
        assert a.points[0] == b.points[0]
