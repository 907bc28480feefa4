"""Truncated photon-number distributions and their scalar statistics.

The central object is :class:`FockDistribution`, a probability vector over
photon numbers k = 0..n_max.  Only diagonal (photon-number) statistics are
represented; there are no coherences anywhere in this package.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from scipy.stats import poisson

from .errors import NumericalError, ValidationError

#: Default truncation order.  Adequate (tail < 1e-12) for Poissonian inputs
#: with mean <~ 1; heralded-source states at large excitation probability
#: need a larger value and the constructors enforce that explicitly.
DEFAULT_N_MAX = 20

#: Tail mass beyond n_max that a source constructor is allowed to discard.
TAIL_TOLERANCE = 1e-9

#: Most-negative entry tolerated on construction (round-off dust from
#: back-propagation through inverted matrices); anything below is an error.
NEGATIVE_TOLERANCE = 1e-9


@dataclass(frozen=True, eq=False)
class FockDistribution:
    """Normalized probability vector over photon numbers 0..n_max.

    Construction always normalizes.  Entries more negative than
    ``NEGATIVE_TOLERANCE`` are rejected; small negative dust is clipped to
    zero before normalizing.  Instances are immutable and safe to share
    between threads.
    """

    probs: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.probs, dtype=float)
        if arr.ndim != 1 or arr.size < 1:
            raise ValidationError("probability vector must be 1-D and non-empty")
        if not np.all(np.isfinite(arr)):
            raise ValidationError("probability vector contains non-finite entries")
        if arr.min() < -NEGATIVE_TOLERANCE:
            raise ValidationError(
                f"negative probability {arr.min():.3e} exceeds tolerance "
                f"{NEGATIVE_TOLERANCE:.0e}"
            )
        arr = np.clip(arr, 0.0, None)
        total = arr.sum()
        if total <= 0.0:
            raise ValidationError("probability vector sums to zero")
        arr = arr / total
        arr.flags.writeable = False
        object.__setattr__(self, "probs", arr)

    @property
    def n_max(self) -> int:
        return self.probs.size - 1

    def mean_photons(self) -> float:
        """Mean photon number, sum(k * p_k)."""
        k = np.arange(self.probs.size)
        return float(np.dot(k, self.probs))

    def g2(self) -> float:
        """Zero-delay autocorrelation, sum(k(k-1) p_k) / [sum(k p_k)]^2.

        Equals 1 for Poissonian light, 0 for a single photon, and is
        invariant under linear loss.  Undefined on vacuum.
        """
        k = np.arange(self.probs.size)
        mean = float(np.dot(k, self.probs))
        if mean <= 0.0:
            raise ValidationError("g2 is undefined for a zero-mean (vacuum) state")
        fac2 = float(np.dot(k * (k - 1), self.probs))
        return fac2 / mean**2

    def zeta(self) -> float:
        """Multiphoton strength: P(k >= 2) / P(k >= 1), in [0, 1]."""
        p_ge1 = float(self.probs[1:].sum())
        if p_ge1 <= 0.0:
            raise ValidationError("zeta is undefined for a vacuum-only state")
        return float(self.probs[2:].sum()) / p_ge1

    def to_csv(self, path) -> None:
        """Write the distribution as CSV with header ``k,prob``."""
        with open(path, "w", newline="\n") as fh:
            self.write_csv(fh)

    def write_csv(self, fh: io.TextIOBase) -> None:
        fh.write("k,prob\n")
        for k, p in enumerate(self.probs):
            fh.write(f"{k},{float(p)!r}\n")

    @staticmethod
    def from_csv(path) -> "FockDistribution":
        with open(path) as fh:
            header = fh.readline().strip()
            if header != "k,prob":
                raise ValidationError(f"expected header 'k,prob', got {header!r}")
            rows = [line.strip().split(",") for line in fh if line.strip()]
        try:
            ks = [int(r[0]) for r in rows]
            ps = [float(r[1]) for r in rows]
        except (IndexError, ValueError) as exc:
            raise ValidationError(f"malformed distribution CSV: {exc}") from exc
        if ks != list(range(len(ks))):
            raise ValidationError("distribution CSV rows must cover k = 0..n_max in order")
        return FockDistribution(np.array(ps))


def vacuum(n_max: int = DEFAULT_N_MAX) -> FockDistribution:
    """The vacuum state, all mass at k = 0."""
    return fock_state(0, n_max)


def fock_state(n: int, n_max: int = DEFAULT_N_MAX) -> FockDistribution:
    """A number state with exactly ``n`` photons."""
    if not 0 <= n <= n_max:
        raise ValidationError(f"photon number {n} outside 0..{n_max}")
    probs = np.zeros(n_max + 1)
    probs[n] = 1.0
    return FockDistribution(probs)


def coherent(mu: float, n_max: int = DEFAULT_N_MAX) -> FockDistribution:
    """Poissonian distribution with mean photon number ``mu``.

    Parameters
    ----------
    mu : float
        Mean photon number, >= 0.
    n_max : int
        Truncation order.  Must be large enough that the Poisson tail
        beyond it is below ``TAIL_TOLERANCE``, otherwise the truncation
        would silently bias g2 upward and an error is raised instead.
    """
    if mu < 0:
        raise ValidationError(f"mean photon number must be >= 0, got {mu}")
    tail = float(poisson.sf(n_max, mu))
    if tail >= TAIL_TOLERANCE:
        raise NumericalError(
            f"Poisson tail beyond n_max={n_max} is {tail:.2e} >= "
            f"{TAIL_TOLERANCE:.0e} for mu={mu}; increase n_max"
        )
    return FockDistribution(poisson.pmf(np.arange(n_max + 1), mu))


def coherent_mu_upper_bound(n_max: int) -> float:
    """Largest mean photon number representable at ``n_max`` within the
    tail tolerance (used to bracket root searches)."""
    lo, hi = 0.0, float(n_max)
    if poisson.sf(n_max, hi) < TAIL_TOLERANCE:
        return hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if poisson.sf(n_max, mid) < TAIL_TOLERANCE:
            lo = mid
        else:
            hi = mid
    return lo
