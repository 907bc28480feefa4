"""Model of the heralded (write/read) photon-pair source.

The source emits write and read modes in a two-mode squeezed state with
perfectly correlated photon numbers, P(n, n) = (1-p) p^n.  Heralding on a
non-number-resolving write detection with path transmission t_w leaves the
read mode in a known diagonal state with no vacuum component; the
excitation probability p is in practice inferred from a measured g2 of
that state, which is loss-independent and monotone in p.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._roots import BracketError, bisect_monotone
from .errors import NumericalError, ValidationError
from .fock import DEFAULT_N_MAX, TAIL_TOLERANCE, FockDistribution

#: Write-path transmission (including detection) used when none is given.
DEFAULT_T_W = 0.21

_P_FLOOR = 1e-12


@dataclass(frozen=True)
class SourceModel:
    """Source parameters: excitation probability and write-path transmission.

    ``p`` is the probability that at least one excitation is created in the
    write mode (p < 1 for the geometric photon-number series to converge);
    ``t_w`` is the write-path transmission including detector efficiency.
    """

    p: float
    t_w: float = DEFAULT_T_W

    def __post_init__(self):
        if not 0.0 <= self.p < 1.0:
            raise ValidationError(f"excitation probability must be in [0, 1), got {self.p}")
        if not 0.0 < self.t_w <= 1.0:
            raise ValidationError(f"write transmission must be in (0, 1], got {self.t_w}")


def two_mode_joint(model: SourceModel, n_max: int = DEFAULT_N_MAX) -> np.ndarray:
    """Joint photon-number distribution of the write/read pair.

    Returns an (n_max+1) x (n_max+1) array with P(n_w = n, n_r = n) =
    (1-p) p^n on the diagonal and zero elsewhere.  Raises if the discarded
    tail beyond n_max reaches the tail tolerance.
    """
    p = model.p
    tail = p ** (n_max + 1)
    if tail >= TAIL_TOLERANCE:
        raise NumericalError(
            f"two-mode tail beyond n_max={n_max} is {tail:.2e}; increase n_max"
        )
    n = np.arange(n_max + 1, dtype=float)
    joint = np.zeros((n_max + 1, n_max + 1))
    np.fill_diagonal(joint, (1.0 - p) * p**n)
    return joint


def _read_state_terms(p: float, t_w: float, n_max: int) -> np.ndarray:
    """Unnormalized heralded read-state vector including its exact
    normalization prefactor; sums to 1 - (discarded tail)."""
    n = np.arange(1, n_max + 1, dtype=float)
    prefactor = (1.0 - p) * (1.0 - p * (1.0 - t_w)) / t_w
    terms = np.zeros(n_max + 1)
    terms[1:] = prefactor * p ** (n - 1.0) * (1.0 - (1.0 - t_w) ** n)
    return terms


def conditional_read_state(model: SourceModel, n_max: int = DEFAULT_N_MAX) -> FockDistribution:
    """Read-mode state conditioned on a write detection.

    p_n is proportional to p^(n-1) [1 - (1-t_w)^n] for n >= 1 and p_0 = 0:
    heralding guarantees at least one read photon, and the detector's
    inability to resolve photon number weights the higher components.

    Raises
    ------
    NumericalError
        If the discarded tail beyond n_max reaches ``TAIL_TOLERANCE``
        (the analytic trace of the full state is exactly 1).
    """
    terms = _read_state_terms(model.p, model.t_w, n_max)
    tail = 1.0 - terms.sum()
    if tail >= TAIL_TOLERANCE:
        raise NumericalError(
            f"read-state tail beyond n_max={n_max} is {tail:.2e} for "
            f"p={model.p}; increase n_max"
        )
    return FockDistribution(terms)


def read_state_p_upper_bound(t_w: float, n_max: int) -> float:
    """Largest excitation probability whose heralded read state fits the
    truncation at ``n_max`` (tail just below tolerance).  Used to bracket
    root searches over p."""
    target = 0.999 * TAIL_TOLERANCE

    def tail(p):
        return 1.0 - _read_state_terms(p, t_w, n_max).sum()

    lo, hi = 0.0, 1.0 - 1e-12
    if tail(hi) < target:
        return hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if tail(mid) < target:
            lo = mid
        else:
            hi = mid
    return lo


def _truncated_g2(p: float, t_w: float, n_max: int) -> float:
    """g2 of the truncated, renormalized read state (matches what
    ``conditional_read_state`` would produce at the same n_max)."""
    terms = _read_state_terms(p, t_w, n_max)
    k = np.arange(n_max + 1, dtype=float)
    total = terms.sum()
    mean = np.dot(k, terms)
    fac2 = np.dot(k * (k - 1.0), terms)
    return float(fac2 * total / mean**2)


def infer_p_from_g2(
    g2_target: float, t_w: float = DEFAULT_T_W, n_max: int = DEFAULT_N_MAX
) -> float:
    """Invert the measured read-state g2 to the excitation probability p.

    g2 of the heralded read state is independent of linear losses and
    strictly increasing in p, so a bracketed bisection on p is exact.
    The search is run against the truncated state at ``n_max`` so that the
    round trip with :func:`conditional_read_state` closes to ~1e-10.

    Raises
    ------
    ValidationError
        If ``g2_target`` is outside the attainable range at this n_max.
    NumericalError
        If the residual after bisection exceeds 1e-10.
    """
    if not 0.0 < t_w <= 1.0:
        raise ValidationError(f"write transmission must be in (0, 1], got {t_w}")
    p_hi = read_state_p_upper_bound(t_w, n_max)
    try:
        return bisect_monotone(
            lambda p: _truncated_g2(p, t_w, n_max),
            _P_FLOOR,
            p_hi,
            g2_target,
            f_tol=1e-10,
        )
    except BracketError as exc:
        raise ValidationError(
            f"g2 target {g2_target} outside the attainable range at "
            f"n_max={n_max} ({exc}); larger n_max extends the upper end"
        ) from exc


def ideal_cross_correlation(p: float, blockaded: bool = False) -> float:
    """Write/read cross-correlation of the lossless, noise-free source.

    1 + 1/p for the bare two-mode squeezed state; capping the read mode at
    one photon (a fully blockaded medium) removes exactly the constant
    term, giving 1/p.
    """
    if not 0.0 < p < 1.0:
        raise ValidationError(f"excitation probability must be in (0, 1), got {p}")
    return 1.0 / p if blockaded else 1.0 + 1.0 / p


def reference_g2_scaling(p: float) -> float:
    """Literature reference curve 2p(2+p)/(1+p)^2 for the heralded g2,
    plotted for comparison only (measured sources need not follow it)."""
    return 2.0 * p * (2.0 + p) / (1.0 + p) ** 2
