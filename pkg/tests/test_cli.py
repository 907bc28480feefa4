import json

import numpy as np
import pytest

from rydstats import WindowSpec, coherent, exact_pair_survival, fock_state, synthesize
from rydstats.cli import main
from rydstats.config import RunConfig, parse_config_file
from rydstats.errors import ValidationError


def run(args):
    return main([str(a) for a in args])


class TestConfigFile:
    def test_parses_and_overrides_defaults(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text(
            "# comment\n"
            "seed = 7\n"
            "blockade_radius = 9.0   # inline comment\n"
            "detectors_1 = D1,D2\n"
            "zeta_values = 0.01,0.1\n"
        )
        cfg = parse_config_file(path)
        assert cfg.seed == 7
        assert cfg.blockade_radius == 9.0
        assert cfg.detectors_1 == ("D1", "D2")
        assert cfg.zeta_values == (0.01, 0.1)
        # untouched keys keep defaults
        assert cfg.trials == 100_000

    def test_unknown_key_is_error_with_line(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("seed = 1\nblockade_radiu = 9.0\n")
        with pytest.raises(ValidationError, match=":2"):
            parse_config_file(path)

    def test_range_check(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("eta_r = 1.5\n")
        with pytest.raises(ValidationError, match="out of range"):
            parse_config_file(path)

    def test_bad_value_type(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("trials = many\n")
        with pytest.raises(ValidationError, match="bad value"):
            parse_config_file(path)

    def test_set_rejects_unknown(self):
        with pytest.raises(ValidationError):
            RunConfig().set("nope", 1)


class TestBlockadeCommand:
    def test_zero_radius_identity(self, tmp_path):
        code = run(["--out", tmp_path, "blockade", "--rb", 0.0,
                    "--trials", 500, "--n-max", 4])
        assert code == 0
        lines = (tmp_path / "blockade_matrix.csv").read_text().splitlines()
        assert lines[0] == "k\\l,0,1,2,3,4"
        matrix = np.array([[float(v) for v in line.split(",")[1:]] for line in lines[1:]])
        np.testing.assert_array_equal(matrix, np.eye(5))

    def test_deterministic_rerun(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert run(["--out", out, "--seed", 7, "blockade",
                        "--trials", 20_000, "--n-max", 5]) == 0
        assert (a / "blockade_matrix.csv").read_bytes() == (b / "blockade_matrix.csv").read_bytes()
        assert (a / "blockade_summary.json").read_bytes() == (b / "blockade_summary.json").read_bytes()

    def test_summary_oracle_check(self, tmp_path):
        assert run(["--out", tmp_path, "--seed", 3, "blockade",
                    "--trials", 50_000, "--n-max", 6]) == 0
        summary = json.loads((tmp_path / "blockade_summary.json").read_text())
        check = summary["pair_survival_check"]
        assert check["analytic"] == pytest.approx(exact_pair_survival(10.5, 15.0))
        assert abs(check["z_score"]) < 3

    def test_slow_light_flag(self, tmp_path):
        assert run(["--out", tmp_path, "--seed", 3, "blockade", "--slow-light",
                    "--medium-scale", 2.5, "--trials", 20_000, "--n-max", 4]) == 0
        summary = json.loads((tmp_path / "blockade_summary.json").read_text())
        assert summary["config"]["medium_scale"] == 2.5
        assert summary["pair_survival_check"]["analytic"] == pytest.approx(0.5184)


class TestG2Command:
    def make_stream(self, tmp_path, dist, noise=(0.0, 0.0), n=20_000):
        stream = synthesize(dist, n, WindowSpec(), noise_rates_hz=noise, seed=9)
        path = tmp_path / "clicks.csv"
        stream.write_csv(path)
        return path

    def test_coherent_stream_reports_unity(self, tmp_path):
        path = self.make_stream(tmp_path, coherent(0.3, 15), n=50_000)
        assert run(["--out", tmp_path, "g2", path, "--resamples", 200]) == 0
        report = json.loads((tmp_path / "g2_report.json").read_text())
        assert abs(report["g2_raw"] - 1.0) < 3 * report["error"]
        assert report["g2_corrected"] == report["g2_raw"]  # no noise

    def test_antibunched_with_noise_corrects_down(self, tmp_path):
        path = self.make_stream(tmp_path, fock_state(1, 10), noise=(3e4, 3e4), n=50_000)
        assert run(["--out", tmp_path, "g2", path, "--resamples", 200]) == 0
        report = json.loads((tmp_path / "g2_report.json").read_text())
        assert report["g2_raw"] > report["g2_corrected"]
        assert abs(report["g2_corrected"]) < 3 * report["error"]

    def test_overlapping_windows_rejected(self, tmp_path):
        path = self.make_stream(tmp_path, coherent(0.2, 10), n=1000)
        code = run(["--out", tmp_path, "g2", path,
                    "--window", "0,600", "--noise-window", "500,1100"])
        assert code == 2

    def test_parse_error_exit_code(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("# trials=5\ntrial_id,detector,time_ns\n0,D2,oops\n")
        assert run(["--out", tmp_path, "g2", bad]) == 2


class TestReproduceCommands:
    def test_figS5_columns(self, tmp_path):
        assert run(["--out", tmp_path, "reproduce", "figS5",
                    "--zeta", "0.01,0.05"]) == 0
        lines = (tmp_path / "figS5_distributions.csv").read_text().splitlines()
        header = lines[0].split(",")
        assert header == ["k", "dlcz_zeta_0.01", "dlcz_zeta_0.05",
                          "wcs_zeta_0.01", "wcs_zeta_0.05"]
        body = np.array([[float(v) for v in line.split(",")] for line in lines[1:]])
        sums = body[:, 1:].sum(axis=0)
        np.testing.assert_allclose(sums, 1.0, atol=1e-9)
        # heralded input carries no vacuum before losses but plenty after;
        # its distribution tail must exceed the Poissonian one at equal zeta
        k = body[:, 0]
        dlcz_tail = body[k >= 3, 1].sum()
        wcs_tail = body[k >= 3, 3].sum()
        assert dlcz_tail > wcs_tail

    def test_fig3_shape(self, tmp_path):
        assert run(["--out", tmp_path, "--seed", 11, "reproduce", "fig3",
                    "--trials", 4000, "--zeta-range", "0.01,0.3,5"]) == 0
        for kind in ("dlcz", "wcs"):
            lines = (tmp_path / f"fig3_{kind}.csv").read_text().splitlines()
            assert lines[0] == "zeta,param,g2_in,g2_out,eta,g2_out_lo,g2_out_hi"
            assert len(lines) == 6

    def test_figS3_noise_free_collapse(self, tmp_path):
        assert run(["--out", tmp_path, "reproduce", "figS3"]) == 0
        lines = (tmp_path / "figS3_cross_correlation.csv").read_text().splitlines()
        body = np.array([[float(v) for v in line.split(",")] for line in lines[1:]])
        no_storage_free, storage_free = body[:, 4], body[:, 5]
        np.testing.assert_allclose(no_storage_free, storage_free, rtol=0.01)
        # with noise, storage must improve the correlation
        assert np.all(body[:, 3] > body[:, 2])

    def test_unknown_figure_is_usage_error(self, tmp_path):
        assert run(["--out", tmp_path, "reproduce", "fig9"]) == 1


class TestFitPegCommand:
    def test_closed_loop(self, tmp_path):
        from rydstats import RateModelParams, predict_probabilities

        rows = ["p_w,p_r_given_w"]
        for pw in np.linspace(0.002, 0.05, 10):
            p = float((pw - 1e-4) / 0.21)
            out = predict_probabilities(RateModelParams(p=p))
            rows.append(f"{float(pw)!r},{out.p_r_given_w!r}")
        data = tmp_path / "data.csv"
        data.write_text("\n".join(rows) + "\n")
        assert run(["--out", tmp_path, "fit-peg", data]) == 0
        fit = json.loads((tmp_path / "p_eg_fit.json").read_text())
        assert fit["p_eg"] == pytest.approx(0.20, abs=1e-6)
        assert fit["residual_norm"] < 1e-10

    def test_insufficient_rows(self, tmp_path):
        data = tmp_path / "data.csv"
        data.write_text("p_w,p_r_given_w\n0.01,0.03\n")
        assert run(["--out", tmp_path, "fit-peg", data]) == 2


class TestExitCodes:
    def test_usage_error(self):
        assert run(["frobnicate"]) == 1

    def test_missing_file_is_data_error(self, tmp_path):
        assert run(["--out", tmp_path, "g2", tmp_path / "absent.csv"]) == 2

    def test_bad_config_file(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("mystery = 1\n")
        assert run(["--config", cfg, "--out", tmp_path, "reproduce", "figS5"]) == 2
