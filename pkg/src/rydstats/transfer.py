"""Column-stochastic transfer matrices acting on Fock distributions.

Any element that maps an input photon-number distribution to an output one
(beam splitter, transmission loss, filter, blockaded medium) is represented
by a matrix M with M[k, l] = P(l input photons -> k output photons).
Columns sum to one so that probability is conserved; lossy elements are
upper triangular.  Back-propagation is matrix inversion, guarded by a
condition-number check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import binom

from .errors import NumericalError, ValidationError
from .fock import DEFAULT_N_MAX, FockDistribution

#: Tolerance on column sums of a physical transfer matrix.
COLUMN_SUM_TOLERANCE = 1e-12

#: Condition-number ceiling above which an inverse is not trusted.
CONDITION_LIMIT = 1e12


@dataclass(frozen=True, eq=False)
class TransferMatrix:
    """A (n_max+1) x (n_max+1) map between photon-number distributions.

    ``physical`` marks forward (completely positive) maps: entries >= 0 and
    column sums equal to 1 within ``COLUMN_SUM_TOLERANCE``.  Inverses are
    flagged non-physical and skip those checks (they may contain negative
    entries by construction).
    """

    matrix: np.ndarray
    physical: bool = True

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
            raise ValidationError("transfer matrix must be square and non-empty")
        if not np.all(np.isfinite(m)):
            raise ValidationError("transfer matrix contains non-finite entries")
        if self.physical:
            if m.min() < -COLUMN_SUM_TOLERANCE:
                raise ValidationError(
                    f"physical transfer matrix has negative entry {m.min():.3e}"
                )
            m = np.clip(m, 0.0, None)
            colsums = m.sum(axis=0)
            bad = np.abs(colsums - 1.0) > COLUMN_SUM_TOLERANCE
            if np.any(bad):
                worst = colsums[bad][np.argmax(np.abs(colsums[bad] - 1.0))]
                raise ValidationError(
                    f"column sums must be 1 within {COLUMN_SUM_TOLERANCE:.0e}; "
                    f"worst offender sums to {worst!r}"
                )
        m = m.copy()
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @property
    def n_max(self) -> int:
        return self.matrix.shape[0] - 1

    def apply(self, d: FockDistribution) -> FockDistribution:
        """Propagate a distribution through this element: p'_k = M_kl p_l."""
        if d.n_max != self.n_max:
            raise ValidationError(
                f"dimension mismatch: matrix n_max={self.n_max}, "
                f"distribution n_max={d.n_max}"
            )
        return FockDistribution(self.matrix @ d.probs)

    def compose(self, inner: "TransferMatrix") -> "TransferMatrix":
        """The element equivalent to ``inner`` followed by this one (self @ inner)."""
        if inner.n_max != self.n_max:
            raise ValidationError(
                f"dimension mismatch: {self.n_max} vs {inner.n_max}"
            )
        return TransferMatrix(
            self.matrix @ inner.matrix, physical=self.physical and inner.physical
        )

    def invert(self) -> "TransferMatrix":
        """Back-propagation map: the matrix inverse, flagged non-physical.

        Raises
        ------
        NumericalError
            If the matrix is singular (e.g. a perfect filter) or its
            condition number exceeds ``CONDITION_LIMIT``.
        """
        dim = self.matrix.shape[0]
        if np.linalg.matrix_rank(self.matrix) < dim:
            raise NumericalError("transfer matrix is singular and cannot be inverted")
        cond = float(np.linalg.cond(self.matrix))
        if not np.isfinite(cond) or cond > CONDITION_LIMIT:
            raise NumericalError(
                f"transfer matrix is ill-conditioned (cond ~ {cond:.2e} > "
                f"{CONDITION_LIMIT:.0e}); back-propagation would not be trustworthy"
            )
        return TransferMatrix(np.linalg.inv(self.matrix), physical=False)

    def to_csv(self, path) -> None:
        r"""Dump as CSV, row-major, header ``k\l,0,1,...`` (for debugging
        and golden tests)."""
        with open(path, "w", newline="\n") as fh:
            cols = ",".join(str(l) for l in range(self.matrix.shape[1]))
            fh.write(f"k\\l,{cols}\n")
            for k, row in enumerate(self.matrix):
                fh.write(f"{k}," + ",".join(repr(float(v)) for v in row) + "\n")


def identity_matrix(n_max: int = DEFAULT_N_MAX) -> TransferMatrix:
    """The do-nothing element."""
    return TransferMatrix(np.eye(n_max + 1))


def loss_matrix(t: float, n_max: int = DEFAULT_N_MAX) -> TransferMatrix:
    """Linear loss (beam splitter) with transmission ``t``.

    Each of l input photons survives independently with probability t, so
    column l is the binomial pmf B(l, t): M_kl = C(l, k) t^k (1-t)^(l-k).
    """
    if not 0.0 <= t <= 1.0:
        raise ValidationError(f"transmission must lie in [0, 1], got {t}")
    k = np.arange(n_max + 1)[:, None]
    l = np.arange(n_max + 1)[None, :]
    return TransferMatrix(binom.pmf(k, l, t))


def perfect_filter_matrix(n_max: int = DEFAULT_N_MAX) -> TransferMatrix:
    """Ideal single-photon filter: vacuum stays vacuum, every l >= 1
    input component is mapped onto the one-photon component."""
    if n_max < 1:
        raise ValidationError("perfect filter needs n_max >= 1")
    m = np.zeros((n_max + 1, n_max + 1))
    m[0, 0] = 1.0
    m[1, 1:] = 1.0
    return TransferMatrix(m)
