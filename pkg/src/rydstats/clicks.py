"""Time-tagged detector clicks: ingestion, counting and correlation estimates.

File format
-----------
Click streams are CSV with a mandatory trial-count comment so that trials
without any click still enter the statistics::

    # trials=100000
    trial_id,detector,time_ns
    0,D2,152
    0,D3,87
    3,D2,240

Times are integer nanoseconds relative to the trial start.  Analysis
windows are half-open integer ranges [start, end).  Detection is not
photon-number resolving: any number of clicks on one detector inside one
trial's signal window counts as a single click, and a coincidence is at
least one click on each of the two detector roles in the same trial.

Noise is estimated from a window where no signal is present (but the same
background applies), then rescaled to the signal-window duration.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ValidationError
from .fock import FockDistribution

DETECTORS = ("D1", "D2", "D3")
_DETECTOR_CODE = {name: i for i, name in enumerate(DETECTORS)}

_TRIALS_RE = re.compile(r"#\s*trials\s*=\s*(\d+)\s*$")
_HEADER = "trial_id,detector,time_ns"


@dataclass(frozen=True)
class ClickRecord:
    """One detector click: which trial, which detector, when."""

    trial_id: int
    detector: str
    time_ns: int


def _check_window(name: str, window: tuple[int, int]) -> tuple[int, int]:
    start, end = int(window[0]), int(window[1])
    if start < 0 or end <= start:
        raise ValidationError(f"{name} window must satisfy 0 <= start < end, got {window}")
    return start, end


def _overlaps(a: tuple[int, int], b: tuple[int, int]) -> bool:
    return a[0] < b[1] and b[0] < a[1]


@dataclass(frozen=True)
class WindowSpec:
    """Signal windows for the two detector roles plus a noise window.

    The noise window must not overlap either signal window; it samples the
    stationary background (dark counts plus stray light) after the pulse.
    """

    signal_1: tuple[int, int] = (0, 300)
    signal_2: tuple[int, int] | None = None
    noise: tuple[int, int] = (500, 1100)

    def __post_init__(self):
        sig1 = _check_window("signal_1", self.signal_1)
        sig2 = sig1 if self.signal_2 is None else _check_window("signal_2", self.signal_2)
        noise = _check_window("noise", self.noise)
        for name, sig in (("signal_1", sig1), ("signal_2", sig2)):
            if _overlaps(sig, noise):
                raise ValidationError(
                    f"noise window {noise} overlaps {name} window {sig}"
                )
        object.__setattr__(self, "signal_1", sig1)
        object.__setattr__(self, "signal_2", sig2)
        object.__setattr__(self, "noise", noise)

    @property
    def signal_lengths(self) -> tuple[int, int]:
        return (self.signal_1[1] - self.signal_1[0], self.signal_2[1] - self.signal_2[0])

    @property
    def noise_length(self) -> int:
        return self.noise[1] - self.noise[0]

    def as_dict(self) -> dict:
        return {
            "signal_1": list(self.signal_1),
            "signal_2": list(self.signal_2),
            "noise": list(self.noise),
        }


@dataclass(frozen=True)
class TrialCounts:
    """Aggregates entering the correlation estimators.

    ``n1``/``n2`` are mean signal clicks per trial on each role (binary
    per trial), ``n12`` the total coincidence count, ``nn1``/``nn2`` the
    mean noise clicks per trial rescaled to the signal-window duration.
    """

    n_trials: int
    n1: float
    n2: float
    n12: int
    nn1: float
    nn2: float


@dataclass(frozen=True, eq=False)
class TrialData:
    """Per-trial click indicators and noise counts (bootstrap resamples
    from these; ``counts()`` aggregates them)."""

    n_trials: int
    sig1: np.ndarray
    sig2: np.ndarray
    noise1: np.ndarray
    noise2: np.ndarray
    windows: WindowSpec

    def counts(self) -> TrialCounts:
        len1, len2 = self.windows.signal_lengths
        noise_len = self.windows.noise_length
        return TrialCounts(
            n_trials=self.n_trials,
            n1=float(self.sig1.mean()),
            n2=float(self.sig2.mean()),
            n12=int(np.count_nonzero(self.sig1 & self.sig2)),
            nn1=float(self.noise1.sum()) / self.n_trials * (len1 / noise_len),
            nn2=float(self.noise2.sum()) / self.n_trials * (len2 / noise_len),
        )


@dataclass(frozen=True, eq=False)
class ClickStream:
    """A batch of clicks as parallel arrays (empty trials carry no rows,
    hence the explicit ``n_trials``)."""

    n_trials: int
    trial_ids: np.ndarray
    detector_codes: np.ndarray
    times_ns: np.ndarray

    @property
    def n_records(self) -> int:
        return self.trial_ids.size

    def records(self) -> list[ClickRecord]:
        return [
            ClickRecord(int(t), DETECTORS[int(d)], int(ts))
            for t, d, ts in zip(self.trial_ids, self.detector_codes, self.times_ns)
        ]

    def write_csv(self, path) -> None:
        names = np.array(DETECTORS)
        with open(path, "w", newline="\n") as fh:
            fh.write(f"# trials={self.n_trials}\n")
            fh.write(_HEADER + "\n")
            det = names[self.detector_codes]
            lines = [
                f"{t},{d},{ts}"
                for t, d, ts in zip(self.trial_ids.tolist(), det.tolist(),
                                    self.times_ns.tolist())
            ]
            if lines:
                fh.write("\n".join(lines) + "\n")

    @staticmethod
    def read_csv(path) -> "ClickStream":
        n_trials = None
        ids: list[int] = []
        codes: list[int] = []
        times: list[int] = []
        header_seen = False
        any_line = False
        with open(path) as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.strip()
                if not line:
                    continue
                any_line = True
                if line.startswith("#"):
                    m = _TRIALS_RE.match(line)
                    if m:
                        if n_trials is not None:
                            raise ValidationError(
                                f"{path}:{lineno}: duplicate '# trials=' header"
                            )
                        n_trials = int(m.group(1))
                    continue
                if not header_seen:
                    if line != _HEADER:
                        raise ValidationError(
                            f"{path}:{lineno}: expected header '{_HEADER}', got {line!r}"
                        )
                    header_seen = True
                    continue
                parts = line.split(",")
                if len(parts) != 3:
                    raise ValidationError(f"{path}:{lineno}: expected 3 fields, got {len(parts)}")
                try:
                    trial = int(parts[0])
                    code = _DETECTOR_CODE[parts[1]]
                    t = int(parts[2])
                except (ValueError, KeyError) as exc:
                    raise ValidationError(f"{path}:{lineno}: malformed record ({exc})") from exc
                if trial < 0 or t < 0:
                    raise ValidationError(f"{path}:{lineno}: negative trial id or time")
                ids.append(trial)
                codes.append(code)
                times.append(t)
        if not any_line:
            raise ValidationError(f"{path}: empty click file")
        if n_trials is None:
            raise ValidationError(f"{path}: missing mandatory '# trials=N' comment")
        if not header_seen:
            raise ValidationError(f"{path}: missing column header '{_HEADER}'")
        trial_ids = np.asarray(ids, dtype=np.int64)
        if trial_ids.size and trial_ids.max() >= n_trials:
            raise ValidationError(
                f"{path}: trial id {trial_ids.max()} outside 0..{n_trials - 1}"
            )
        return ClickStream(
            n_trials=n_trials,
            trial_ids=trial_ids,
            detector_codes=np.asarray(codes, dtype=np.int8),
            times_ns=np.asarray(times, dtype=np.int64),
        )


def count_trials(
    stream: ClickStream,
    windows: WindowSpec,
    detectors_1: tuple[str, ...] = ("D2",),
    detectors_2: tuple[str, ...] = ("D3",),
) -> TrialData:
    """Reduce a click stream to per-trial signal indicators and noise counts.

    ``detectors_1``/``detectors_2`` map physical detectors onto the two
    analysis roles (e.g. the two arms of a beam-splitter measurement, or
    the write and read detectors for a cross-correlation).
    """
    for names in (detectors_1, detectors_2):
        for name in names:
            if name not in _DETECTOR_CODE:
                raise ValidationError(f"unknown detector {name!r}; expected one of {DETECTORS}")
    n = stream.n_trials
    if n < 1:
        raise ValidationError("click stream reports zero trials")
    det = stream.detector_codes
    t = stream.times_ns
    ids = stream.trial_ids

    sig = []
    noise = []
    for names, window in ((detectors_1, windows.signal_1), (detectors_2, windows.signal_2)):
        role = np.isin(det, [_DETECTOR_CODE[x] for x in names])
        in_sig = role & (t >= window[0]) & (t < window[1])
        flags = np.zeros(n, dtype=bool)
        flags[ids[in_sig]] = True
        sig.append(flags)
        in_noise = role & (t >= windows.noise[0]) & (t < windows.noise[1])
        noise.append(np.bincount(ids[in_noise], minlength=n).astype(np.int64))
    return TrialData(n, sig[0], sig[1], noise[0], noise[1], windows)


def ingest(
    path,
    windows: WindowSpec,
    detectors_1: tuple[str, ...] = ("D2",),
    detectors_2: tuple[str, ...] = ("D3",),
) -> TrialData:
    """Read a click CSV and reduce it to per-trial counts."""
    return count_trials(ClickStream.read_csv(path), windows, detectors_1, detectors_2)


def g2_raw(c: TrialCounts) -> float:
    """Directly measured zero-delay correlation: n12 / (N n1 n2) with n1,
    n2 as per-trial means (equivalently n12 N / (N1 N2) with totals)."""
    if c.n1 <= 0.0 or c.n2 <= 0.0:
        raise ValidationError("g2 undefined: no signal clicks on one of the detectors")
    return c.n12 / (c.n_trials * c.n1 * c.n2)


def g2_noise_corrected(c: TrialCounts) -> float:
    """Correlation corrected for background uncorrelated with the signal.

    With zero noise this returns exactly ``g2_raw``.  Otherwise::

        g2 = g2n - (1 - g2n) (a + b + a b),
        a = nn1 / (n1 - nn1),  b = nn2 / (n2 - nn2)

    which removes signal-noise and noise-noise accidentals.
    """
    if c.nn1 == 0.0 and c.nn2 == 0.0:
        return g2_raw(c)
    if c.n1 <= c.nn1 or c.n2 <= c.nn2:
        raise ValidationError(
            "noise correction impossible: estimated noise exceeds signal clicks"
        )
    g2n = g2_raw(c)
    a = c.nn1 / (c.n1 - c.nn1)
    b = c.nn2 / (c.n2 - c.nn2)
    return g2n - (1.0 - g2n) * (a + b + a * b)


def cross_correlation(c: TrialCounts) -> float:
    """Write/read cross-correlation from counts with role 1 = write,
    role 2 = read: coincidence probability over the product of singles
    probabilities (the same estimator as ``g2_raw``)."""
    if c.n1 <= 0.0 or c.n2 <= 0.0:
        raise ValidationError("cross-correlation undefined: zero singles")
    return c.n12 / (c.n_trials * c.n1 * c.n2)


def synthesize(
    dist: FockDistribution,
    n_trials: int,
    windows: WindowSpec,
    noise_rates_hz: tuple[float, float] = (0.0, 0.0),
    seed: int = 0,
    detectors: tuple[str, str] = ("D2", "D3"),
) -> ClickStream:
    """Generate a synthetic click stream for closed-loop testing.

    Per trial: draw a photon number from ``dist``, split the photons
    50/50 between the two detectors (beam splitter), and place each photon
    click uniformly in that role's signal window.  Uncorrelated background
    is added as Poisson clicks in both the signal and noise windows at the
    given per-detector rates (counts per second).  Deterministic per seed.
    """
    if n_trials < 1:
        raise ValidationError("n_trials must be >= 1")
    if len(detectors) != 2 or detectors[0] == detectors[1]:
        raise ValidationError("need two distinct detectors")
    for name in detectors:
        if name not in _DETECTOR_CODE:
            raise ValidationError(f"unknown detector {name!r}")
    if any(r < 0 for r in noise_rates_hz):
        raise ValidationError("noise rates must be >= 0")
    rng = np.random.default_rng(seed)

    ks = rng.choice(dist.probs.size, size=n_trials, p=dist.probs)
    counts_1 = rng.binomial(ks, 0.5)
    counts_2 = ks - counts_1

    ids_parts, code_parts, time_parts = [], [], []
    trial_index = np.arange(n_trials, dtype=np.int64)
    for counts, name, window in (
        (counts_1, detectors[0], windows.signal_1),
        (counts_2, detectors[1], windows.signal_2),
    ):
        total = int(counts.sum())
        ids_parts.append(np.repeat(trial_index, counts))
        code_parts.append(np.full(total, _DETECTOR_CODE[name], dtype=np.int8))
        time_parts.append(rng.integers(window[0], window[1], size=total, dtype=np.int64))

    for rate, name in zip(noise_rates_hz, detectors):
        for window in (windows.signal_1 if name == detectors[0] else windows.signal_2,
                       windows.noise):
            lam = rate * (window[1] - window[0]) * 1e-9
            if lam == 0.0:
                continue
            noise_counts = rng.poisson(lam, size=n_trials)
            total = int(noise_counts.sum())
            ids_parts.append(np.repeat(trial_index, noise_counts))
            code_parts.append(np.full(total, _DETECTOR_CODE[name], dtype=np.int8))
            time_parts.append(rng.integers(window[0], window[1], size=total, dtype=np.int64))

    ids = np.concatenate(ids_parts) if ids_parts else np.empty(0, dtype=np.int64)
    codes = np.concatenate(code_parts) if code_parts else np.empty(0, dtype=np.int8)
    times = np.concatenate(time_parts) if time_parts else np.empty(0, dtype=np.int64)
    order = np.lexsort((codes, times, ids))
    return ClickStream(n_trials, ids[order], codes[order], times[order])


def bootstrap_error(
    data: TrialData,
    resamples: int = 1000,
    seed: int = 0,
    corrected: bool = True,
) -> float:
    """Nonparametric bootstrap standard error of the (noise-corrected) g2.

    Trials are resampled with replacement.  Because every trial is fully
    described by its (click-1, click-2, noise-1, noise-2) pattern, the
    resample is drawn as a multinomial over the observed patterns, which
    is distributionally identical to resampling trial indices and orders
    of magnitude faster.  Deterministic per seed.
    """
    if resamples < 100:
        raise ValidationError(f"need at least 100 resamples, got {resamples}")
    n = data.n_trials
    if n < 10:
        raise ValidationError(f"need at least 10 trials to bootstrap, got {n}")

    patterns = np.stack([
        data.sig1.astype(np.int64),
        data.sig2.astype(np.int64),
        data.noise1,
        data.noise2,
    ])
    classes, class_counts = np.unique(patterns, axis=1, return_counts=True)
    f_sig1 = classes[0].astype(float)
    f_sig2 = classes[1].astype(float)
    f_coinc = (classes[0] & classes[1]).astype(float)
    f_noise1 = classes[2].astype(float)
    f_noise2 = classes[3].astype(float)

    pvals = class_counts / class_counts.sum()
    pvals = pvals / pvals.sum()
    rng = np.random.default_rng(seed)
    w = rng.multinomial(n, pvals, size=resamples).astype(float)

    len1, len2 = data.windows.signal_lengths
    noise_len = data.windows.noise_length
    n1 = w @ f_sig1 / n
    n2 = w @ f_sig2 / n
    n12 = w @ f_coinc
    nn1 = (w @ f_noise1) / n * (len1 / noise_len)
    nn2 = (w @ f_noise2) / n * (len2 / noise_len)

    valid = (n1 > 0) & (n2 > 0)
    if corrected:
        valid &= (n1 > nn1) & (n2 > nn2)
    if valid.sum() < 2:
        raise NumericalError("bootstrap degenerate: almost all resamples lack clicks")
    n1, n2, n12, nn1, nn2 = (arr[valid] for arr in (n1, n2, n12, nn1, nn2))
    g2n = n12 / (n * n1 * n2)
    if corrected:
        a = np.where(nn1 > 0, nn1 / (n1 - nn1), 0.0)
        b = np.where(nn2 > 0, nn2 / (n2 - nn2), 0.0)
        values = g2n - (1.0 - g2n) * (a + b + a * b)
    else:
        values = g2n
    return float(np.std(values, ddof=1))


def analysis_report(
    data: TrialData,
    resamples: int = 1000,
    seed: int = 0,
) -> dict:
    """Scalar summary of one analyzed click stream (the JSON payload of
    the ``g2`` CLI command)."""
    c = data.counts()
    return {
        "N": c.n_trials,
        "n1": c.n1,
        "n2": c.n2,
        "n12": c.n12,
        "nn1": c.nn1,
        "nn2": c.nn2,
        "g2_raw": g2_raw(c),
        "g2_corrected": g2_noise_corrected(c),
        "error": bootstrap_error(data, resamples=resamples, seed=seed),
        "windows": data.windows.as_dict(),
    }
