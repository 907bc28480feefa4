"""Command-line front end.

Commands write CSV tables (curves, matrices) and JSON reports (scalars)
into the output directory.  Every command is deterministic given its
configuration and seed: re-runs produce byte-identical files, regardless
of ``--threads``.

Exit codes: 0 success, 1 usage error, 2 data/validation error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .blockade import BlockadeConfig, blockade_matrix, exact_pair_survival, slow_light_matrix
from .clicks import WindowSpec, analysis_report, ingest
from .config import RunConfig, describe_keys, parse_config_file
from .errors import NumericalError, ValidationError
from .pipeline import (
    PipelineConfig,
    cloud_input_distribution,
    medium_matrix,
    sweep,
    zeta_to_param,
)
from .ratemodel import (
    EfficiencyTable,
    RateModelParams,
    fit_p_eg,
    predict_cross_correlation,
    predict_probabilities,
    with_storage,
)

FIGURES = ("fig3", "fig4", "figS3", "figS5")

#: Truncation defaults when the config leaves n_max unset.  The sweep
#: figures need room for the heralded source's geometric tail at large
#: multiphoton strength; the distribution table reaches even higher.
N_MAX_DEFAULTS = {"blockade": 20, "fig3": 100, "fig4": 100, "figS5": 130}

_DEFAULT_EFFICIENCY = 0.2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit code 1 instead of argparse's 2
        raise _UsageError(message)


def _int_pair(text: str) -> tuple[int, int]:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected 'start,end', got {text!r}")
    return int(parts[0]), int(parts[1])


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(p) for p in text.split(",") if p.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def build_parser() -> _Parser:
    parser = _Parser(
        prog="rydstats",
        description="Photon-number statistics of heralded light in a "
        "partially blockaded medium.",
        epilog="Configuration keys (key = value file, '#' comments):\n" + describe_keys(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--config", type=Path, help="key = value configuration file")
    parser.add_argument("--seed", type=int, help="override the RNG seed")
    parser.add_argument("--threads", type=int, help="Monte Carlo worker threads")
    parser.add_argument("--out", type=Path, default=Path("."), help="output directory")
    sub = parser.add_subparsers(dest="command", required=True)

    b = sub.add_parser("blockade", help="run the blockade Monte Carlo, write the "
                       "transfer matrix and per-column statistics")
    b.add_argument("--trials", type=int, help="trials per Fock state")
    b.add_argument("--rb", type=float, dest="blockade_radius", help="blockade radius (um)")
    b.add_argument("-L", "--cloud-length", type=float, help="cloud length (um)")
    b.add_argument("--n", "--n-max", type=int, dest="n_max",
                   help="largest Fock state to simulate")
    b.add_argument("--slow-light", action="store_true",
                   help="stretch the medium for the no-storage variant")
    b.add_argument("--medium-scale", type=float, help="stretch factor (with --slow-light)")

    g = sub.add_parser("g2", help="analyze a click stream: raw and noise-corrected "
                       "correlation with bootstrap errors")
    g.add_argument("clicks", type=Path, help="click CSV (see README for the format)")
    g.add_argument("--window", type=_int_pair, help="signal window 'start,end' in ns")
    g.add_argument("--window-2", type=_int_pair, help="role-2 signal window (default: same)")
    g.add_argument("--noise-window", type=_int_pair, help="noise window 'start,end' in ns")
    g.add_argument("--detectors-1", help="comma list of detectors for role 1")
    g.add_argument("--detectors-2", help="comma list of detectors for role 2")
    g.add_argument("--resamples", type=int, help="bootstrap resamples")

    r = sub.add_parser("reproduce", help="emit model curves as CSV tables")
    r.add_argument("figure", choices=FIGURES)
    r.add_argument("--trials", type=int, help="Monte Carlo trials per Fock state")
    r.add_argument("--n-max", type=int, dest="n_max", help="Fock truncation")
    r.add_argument("--zeta", type=_float_list,
                   help="comma list of multiphoton strengths (figS5)")
    r.add_argument("--zeta-range", type=_float_list, metavar="MIN,MAX,POINTS",
                   help="log-spaced sweep grid (fig3/fig4)")
    r.add_argument("--efficiency-table", type=Path,
                   help="measured p_w,eta CSV (figS3); default: constant "
                   f"{_DEFAULT_EFFICIENCY}")
    r.add_argument("--slow-light", action="store_true",
                   help="use the stretched-medium variant (fig3/fig4)")

    f = sub.add_parser("fit-peg", help="fit the branching ratio to measured "
                       "(p_w, p_r|w) pairs")
    f.add_argument("data", type=Path, help="CSV with header p_w,p_r_given_w")
    return parser


def _load_config(args) -> RunConfig:
    cfg = parse_config_file(args.config) if args.config else RunConfig()
    if args.seed is not None:
        cfg.set("seed", args.seed)
    if args.threads is not None:
        cfg.set("threads", args.threads)
    overrides = {
        "trials": "trials",
        "blockade_radius": "blockade_radius",
        "cloud_length": "cloud_length",
        "n_max": "n_max",
        "medium_scale": "medium_scale",
        "resamples": "resamples",
    }
    for attr, key in overrides.items():
        value = getattr(args, attr, None)
        if value is not None:
            cfg.set(key, value)
    return cfg


def _blockade_config(cfg: RunConfig, default_n_max: int) -> BlockadeConfig:
    n_max = cfg.n_max if cfg.n_max is not None else default_n_max
    return BlockadeConfig(
        cloud_length=cfg.cloud_length,
        blockade_radius=cfg.blockade_radius,
        trials_per_fock=cfg.trials,
        rng_seed=cfg.seed,
        n_max=n_max,
    )


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _say(path: Path) -> None:
    print(f"wrote {path}")


def cmd_blockade(args, cfg: RunConfig, out: Path) -> None:
    bcfg = _blockade_config(cfg, N_MAX_DEFAULTS["blockade"])
    if args.slow_light:
        matrix = slow_light_matrix(bcfg, cfg.medium_scale, threads=cfg.threads)
        effective_length = bcfg.cloud_length * cfg.medium_scale
    else:
        matrix = blockade_matrix(bcfg, threads=cfg.threads)
        effective_length = bcfg.cloud_length

    matrix_path = out / "blockade_matrix.csv"
    matrix.to_csv(matrix_path)
    _say(matrix_path)

    k = np.arange(bcfg.n_max + 1)
    columns = []
    for n in range(bcfg.n_max + 1):
        probs = matrix.matrix[:, n]
        mean = float(np.dot(k, probs))
        var = float(np.dot(k**2, probs) - mean**2)
        se = np.sqrt(probs * (1.0 - probs) / bcfg.trials_per_fock)
        columns.append({
            "n": int(n),
            "mean_survivors": mean,
            "se_mean": float(np.sqrt(max(var, 0.0) / bcfg.trials_per_fock)),
            "probs": [float(x) for x in probs[: n + 1]],
            "standard_errors": [float(x) for x in se[: n + 1]],
        })
    oracle_expected = exact_pair_survival(bcfg.blockade_radius, effective_length)
    oracle_se = float(
        np.sqrt(oracle_expected * (1 - oracle_expected) / bcfg.trials_per_fock)
    )
    estimate = float(matrix.matrix[2, 2]) if bcfg.n_max >= 2 else None
    summary = {
        "config": {
            "cloud_length_um": bcfg.cloud_length,
            "blockade_radius_um": bcfg.blockade_radius,
            "trials_per_fock": bcfg.trials_per_fock,
            "seed": bcfg.rng_seed,
            "n_max": bcfg.n_max,
            "slow_light": bool(args.slow_light),
            "medium_scale": cfg.medium_scale if args.slow_light else 1.0,
        },
        "columns": columns,
        "pair_survival_check": {
            "analytic": oracle_expected,
            "estimate": estimate,
            "standard_error": oracle_se,
            "z_score": None if estimate is None or oracle_se == 0.0
            else (estimate - oracle_expected) / oracle_se,
        },
    }
    summary_path = out / "blockade_summary.json"
    _write_json(summary_path, summary)
    _say(summary_path)


def cmd_g2(args, cfg: RunConfig, out: Path) -> None:
    signal_1 = args.window if args.window else (cfg.signal_start_ns, cfg.signal_end_ns)
    noise = args.noise_window if args.noise_window else (cfg.noise_start_ns, cfg.noise_end_ns)
    windows = WindowSpec(signal_1=signal_1, signal_2=args.window_2, noise=noise)
    detectors_1 = tuple(args.detectors_1.split(",")) if args.detectors_1 else cfg.detectors_1
    detectors_2 = tuple(args.detectors_2.split(",")) if args.detectors_2 else cfg.detectors_2
    data = ingest(args.clicks, windows, detectors_1, detectors_2)
    report = analysis_report(data, resamples=cfg.resamples, seed=cfg.seed)
    report["source_file"] = str(args.clicks)
    report["detectors_1"] = list(detectors_1)
    report["detectors_2"] = list(detectors_2)
    report_path = out / "g2_report.json"
    _write_json(report_path, report)
    _say(report_path)


def _pipeline_config(cfg: RunConfig, kind: str, n_max: int, slow_light: bool) -> PipelineConfig:
    return PipelineConfig(
        input_kind=kind,
        t_w=cfg.t_w,
        t_losses=cfg.t_losses,
        eta_compression=cfg.eta_compression,
        eta_eit=cfg.eta_eit,
        eta_r=cfg.eta_r,
        compression_band=(cfg.eta_compression_lo, cfg.eta_compression_hi),
        use_slow_light=slow_light,
        medium_scale=cfg.medium_scale,
        blockade=_blockade_config(cfg, n_max),
    )


def _sweep_figure(args, cfg: RunConfig, out: Path, figure: str) -> None:
    if args.zeta_range:
        if len(args.zeta_range) != 3:
            raise ValidationError("--zeta-range expects MIN,MAX,POINTS")
        lo, hi, points = args.zeta_range[0], args.zeta_range[1], int(args.zeta_range[2])
    else:
        lo, hi, points = cfg.zeta_min, cfg.zeta_max, cfg.zeta_points
    if not 0 < lo < hi:
        raise ValidationError(f"sweep grid needs 0 < min < max, got {lo}, {hi}")
    grid = np.geomspace(lo, hi, points)
    medium = None
    for kind in ("dlcz", "wcs"):
        pcfg = _pipeline_config(cfg, kind, N_MAX_DEFAULTS[figure], args.slow_light)
        if medium is None:
            medium = medium_matrix(pcfg, threads=cfg.threads)
        result = sweep(pcfg, grid, medium=medium)
        path = out / f"{figure}_{kind}.csv"
        result.write_csv(path)
        _say(path)


def _figs3(args, cfg: RunConfig, out: Path) -> None:
    if args.efficiency_table:
        table = EfficiencyTable.from_csv(args.efficiency_table)
    else:
        table = EfficiencyTable.constant(_DEFAULT_EFFICIENCY)
    base_kwargs = dict(
        t_w=cfg.t_w, t_r=cfg.t_r, eta_a=cfg.eta_a, p_eg=cfg.p_eg,
        p_nw=cfg.p_nw, p_nr=cfg.p_nr,
    )
    if not 0 < cfg.pw_min < cfg.pw_max:
        raise ValidationError("write-probability grid needs 0 < pw_min < pw_max")
    grid = np.geomspace(cfg.pw_min, cfg.pw_max, cfg.pw_points)
    path = out / "figS3_cross_correlation.csv"
    with open(path, "w", newline="\n") as fh:
        fh.write(
            "p_w,p,g2wr_no_storage,g2wr_storage,"
            "g2wr_no_storage_noise_free,g2wr_storage_noise_free\n"
        )
        for p_w in grid:
            p = (p_w - cfg.p_nw) / cfg.t_w
            if not 0.0 <= p < 1.0:
                raise ValidationError(
                    f"p_w={p_w} implies excitation probability {p} outside [0, 1)"
                )
            plain = RateModelParams(p=p, **base_kwargs)
            stored = with_storage(plain, table, predict_probabilities(plain).p_w,
                                  stored_p_nr=cfg.stored_p_nr)
            row = (
                p_w, p,
                predict_cross_correlation(plain),
                predict_cross_correlation(stored),
                predict_cross_correlation(replace(plain, p_nr=0.0)),
                predict_cross_correlation(replace(stored, p_nr=0.0)),
            )
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    _say(path)


def _figs5(args, cfg: RunConfig, out: Path) -> None:
    zetas = args.zeta if args.zeta else cfg.zeta_values
    n_max = cfg.n_max if cfg.n_max is not None else N_MAX_DEFAULTS["figS5"]
    columns = {}
    for kind in ("dlcz", "wcs"):
        pcfg = _pipeline_config(cfg, kind, n_max, slow_light=False)
        for zeta in zetas:
            param = zeta_to_param(pcfg, zeta)
            dist = cloud_input_distribution(pcfg, param)
            columns[f"{kind}_zeta_{zeta:g}"] = dist.probs
    path = out / "figS5_distributions.csv"
    with open(path, "w", newline="\n") as fh:
        names = list(columns)
        fh.write("k," + ",".join(names) + "\n")
        for k in range(n_max + 1):
            fh.write(
                f"{k}," + ",".join(repr(float(columns[name][k])) for name in names) + "\n"
            )
    _say(path)


def cmd_reproduce(args, cfg: RunConfig, out: Path) -> None:
    if args.figure in ("fig3", "fig4"):
        _sweep_figure(args, cfg, out, args.figure)
    elif args.figure == "figS3":
        _figs3(args, cfg, out)
    else:
        _figs5(args, cfg, out)


def cmd_fit_peg(args, cfg: RunConfig, out: Path) -> None:
    rows = []
    with open(args.data) as fh:
        header = fh.readline().strip()
        if header != "p_w,p_r_given_w":
            raise ValidationError(
                f"{args.data}: expected header 'p_w,p_r_given_w', got {header!r}"
            )
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            try:
                rows.append((float(parts[0]), float(parts[1])))
            except (IndexError, ValueError) as exc:
                raise ValidationError(f"{args.data}:{lineno}: malformed row ({exc})") from exc
    if len(rows) < 3:
        raise ValidationError(f"{args.data}: need at least 3 data rows, got {len(rows)}")
    data = np.array(rows)
    base = RateModelParams(
        p=0.0, t_w=cfg.t_w, t_r=cfg.t_r, eta_a=cfg.eta_a,
        p_eg=cfg.p_eg, p_nw=cfg.p_nw, p_nr=cfg.p_nr,
    )
    p_eg, residual = fit_p_eg(data[:, 0], data[:, 1], base)
    predicted = [
        predict_probabilities(
            RateModelParams(p=(pw - base.p_nw) / base.t_w, t_w=base.t_w, t_r=base.t_r,
                            eta_a=base.eta_a, p_eg=p_eg, p_nw=base.p_nw, p_nr=base.p_nr)
        ).p_r_given_w
        for pw in data[:, 0]
    ]
    payload = {
        "p_eg": p_eg,
        "residual_norm": residual,
        "n_rows": len(rows),
        "residuals": [float(m - p) for m, p in zip(data[:, 1], predicted)],
    }
    path = out / "p_eg_fit.json"
    _write_json(path, payload)
    _say(path)


_COMMANDS = {
    "blockade": cmd_blockade,
    "g2": cmd_g2,
    "reproduce": cmd_reproduce,
    "fit-peg": cmd_fit_peg,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    try:
        cfg = _load_config(args)
        out = args.out
        out.mkdir(parents=True, exist_ok=True)
        _COMMANDS[args.command](args, cfg, out)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
