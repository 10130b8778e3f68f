"""Compositional-geometry primitives for censored-data imputation.

A composition is a strictly positive vector whose information content is
the ratios between its parts.  This module provides the pieces the
imputation algorithms are built from:

* :class:`CompositionMatrix` -- an ``n x D`` data matrix with a boolean
  mask marking rounded zeros (values censored below a detection limit),
* :class:`DetectionLimits` -- per-variable upper bounds for imputed values,
* the pivot log-ratio transform and its inverse
  (:func:`pivot_forward`, :func:`pivot_inverse`),
* :func:`readjust_absolute` -- per-row rescaling so imputation preserves
  the absolute scale of the observed parts,
* :func:`aitchison_distance` and :func:`dl_to_pivot` -- the scale-invariant
  distance and the representation of a detection limit in the first pivot
  coordinate.

All functions are pure and operate in double precision; geometric means
are computed as exponentials of mean logs so large part values cannot
overflow.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

__all__ = [
    "CompositionMatrix",
    "DetectionLimits",
    "PivotCoordinates",
    "closure",
    "pivot_forward",
    "pivot_inverse",
    "readjust_absolute",
    "aitchison_distance",
    "dl_to_pivot",
]


# ---------------------------------------------------------------------------
# Containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CompositionMatrix:
    """An ``n x D`` matrix of parts with a censoring mask.

    ``mask[i, j]`` is True when cell ``(i, j)`` is a rounded zero: the
    instrument reported 0 because the true value lies below the detection
    limit.  Unmasked cells must be strictly positive.  Masked cells are 0
    in raw input and strictly positive once initialized or imputed.

    Treat instances as immutable: use :meth:`with_values` to derive a new
    matrix with updated cells.
    """

    values: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        values = np.ascontiguousarray(np.asarray(self.values, dtype=np.float64))
        mask = np.ascontiguousarray(np.asarray(self.mask, dtype=bool))
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "mask", mask)
        if values.ndim != 2:
            raise ValueError(f"values must be 2-D, got shape {values.shape}")
        if mask.shape != values.shape:
            raise ValueError(
                f"mask shape {mask.shape} does not match values shape {values.shape}"
            )
        n, D = values.shape
        if n < 1 or D < 2:
            raise ValueError(f"need n >= 1 and D >= 2, got n={n}, D={D}")
        if not np.all(np.isfinite(values)):
            i, j = np.argwhere(~np.isfinite(values))[0]
            raise ValueError(f"non-finite value at row {i}, column {j}")
        bad = (~mask) & (values <= 0)
        if np.any(bad):
            i, j = np.argwhere(bad)[0]
            raise ValueError(
                f"unmasked cell at row {i}, column {j} is not strictly positive "
                f"(value {values[i, j]}); encode rounded zeros as 0 with mask=True"
            )
        if np.any(mask & (values < 0)):
            i, j = np.argwhere(mask & (values < 0))[0]
            raise ValueError(f"masked cell at row {i}, column {j} is negative")

    @classmethod
    def from_raw(cls, values) -> "CompositionMatrix":
        """Build from a raw matrix in which 0 encodes a rounded zero."""
        values = np.asarray(values, dtype=np.float64)
        return cls(values=values, mask=values == 0)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def D(self) -> int:
        return self.values.shape[1]

    @property
    def n_masked(self) -> int:
        return int(self.mask.sum())

    def is_initialized(self) -> bool:
        """True when every masked cell already holds a positive value."""
        return bool(np.all(self.values[self.mask] > 0)) if self.n_masked else True

    def with_values(self, values) -> "CompositionMatrix":
        """Same mask, new cell values."""
        return replace(self, values=np.asarray(values, dtype=np.float64))


@dataclass(frozen=True)
class DetectionLimits:
    """Per-variable detection limits; ``nan`` marks variables without one."""

    d: np.ndarray

    def __post_init__(self):
        d = np.ascontiguousarray(np.asarray(self.d, dtype=np.float64)).ravel()
        object.__setattr__(self, "d", d)
        present = np.isfinite(d)
        if np.any(d[present] <= 0):
            j = int(np.where(present & (d <= 0))[0][0])
            raise ValueError(f"detection limit for column {j} must be positive, got {d[j]}")

    @classmethod
    def none(cls, D: int) -> "DetectionLimits":
        return cls(np.full(D, np.nan))

    @property
    def D(self) -> int:
        return self.d.shape[0]

    def has(self, j: int) -> bool:
        return bool(np.isfinite(self.d[j]))

    def require(self, j: int) -> float:
        if not self.has(j):
            raise ValueError(f"no detection limit available for column {j}")
        return float(self.d[j])

    def validate_for(self, mask: np.ndarray) -> None:
        """Every column containing masked cells needs a positive limit."""
        for j in np.where(np.asarray(mask).any(axis=0))[0]:
            self.require(int(j))


@dataclass(frozen=True)
class PivotCoordinates:
    """Pivot log-ratio coordinates of a data matrix.

    ``z`` holds the ``n x (D-1)`` coordinates of the column-permuted
    matrix; ``pivot`` is the original index of the variable moved into
    first position, ``perm`` the full column permutation applied before
    transforming (original column indices in new order), and
    ``row_totals`` the per-row sums of the permuted input, retained for
    the absolute-value adjustment step.
    """

    z: np.ndarray
    pivot: int
    perm: np.ndarray
    row_totals: np.ndarray

    @property
    def n(self) -> int:
        return self.z.shape[0]

    @property
    def D(self) -> int:
        return self.z.shape[1] + 1


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def closure(x, kappa: float = 1.0) -> np.ndarray:
    """Rescale a positive vector (or rows of a matrix) to sum to ``kappa``."""
    x = np.asarray(x, dtype=np.float64)
    if kappa <= 0:
        raise ValueError(f"kappa must be positive, got {kappa}")
    if np.any(x <= 0):
        raise ValueError("closure requires strictly positive entries")
    total = x.sum(axis=-1, keepdims=x.ndim > 1)
    return x * (kappa / total)


def _values_of(X) -> np.ndarray:
    if isinstance(X, CompositionMatrix):
        return X.values
    return np.asarray(X, dtype=np.float64)


def _check_positive(values: np.ndarray, context: str) -> None:
    bad = ~(values > 0)
    if np.any(bad):
        idx = np.argwhere(bad)[0]
        if values.ndim == 2:
            raise ValueError(
                f"{context}: cell at row {idx[0]}, column {idx[1]} is not strictly "
                f"positive (value {values[tuple(idx)]})"
            )
        raise ValueError(
            f"{context}: entry {idx[0]} is not strictly positive (value {values[tuple(idx)]})"
        )


def pivot_permutation(D: int, pivot_var: int) -> np.ndarray:
    """Column order that moves ``pivot_var`` to the front, others unchanged."""
    if not 0 <= pivot_var < D:
        raise ValueError(f"pivot_var {pivot_var} out of range for D={D}")
    return np.array([pivot_var] + [j for j in range(D) if j != pivot_var])


def pivot_forward(X, pivot_var: int = 0) -> PivotCoordinates:
    """Map a positive matrix to pivot log-ratio coordinates.

    Columns are permuted so ``pivot_var`` comes first, then coordinate
    ``j`` (1-based) of each row is

        z_j = sqrt((D-j)/(D-j+1)) * ln(x_j / gmean(x_{j+1}, ..., x_D))

    so the entire relative information about the pivot variable is
    isolated in the first coordinate.

    Parameters
    ----------
    X : CompositionMatrix or array_like, shape (n, D)
        Strictly positive matrix (masked cells must have been initialized).
    pivot_var : int
        Original index of the variable to isolate in coordinate 1.

    Returns
    -------
    PivotCoordinates
    """
    values = np.atleast_2d(_values_of(X))
    _check_positive(values, "pivot_forward")
    n, D = values.shape
    perm = pivot_permutation(D, pivot_var)
    logs = np.log(values[:, perm])

    # Suffix mean of logs: mean over columns j+1 .. D (0-based j+1 ..).
    suffix_sums = np.cumsum(logs[:, ::-1], axis=1)[:, ::-1]
    j = np.arange(1, D)  # 1-based coordinate index
    coef = np.sqrt((D - j) / (D - j + 1.0))
    suffix_means = suffix_sums[:, 1:] / (D - j)
    z = coef * (logs[:, :-1] - suffix_means)
    return PivotCoordinates(
        z=z,
        pivot=int(pivot_var),
        perm=perm,
        row_totals=values[:, perm].sum(axis=1),
    )


def pivot_inverse(Z: PivotCoordinates) -> np.ndarray:
    """Map pivot coordinates back to a positive matrix, original column order.

    The result represents the same composition as the forward input only
    up to a positive per-row scaling factor; use :func:`readjust_absolute`
    to restore absolute values.
    """
    z = np.atleast_2d(np.asarray(Z.z, dtype=np.float64))
    if not np.all(np.isfinite(z)):
        i, j = np.argwhere(~np.isfinite(z))[0]
        raise ValueError(f"pivot_inverse: non-finite coordinate at row {i}, column {j}")
    n, Dm1 = z.shape
    D = Dm1 + 1

    j = np.arange(1, D)
    coef = np.sqrt((D - j) / (D - j + 1.0))          # multiplier of z_j in x_j
    c = 1.0 / np.sqrt((D - j + 1.0) * (D - j))       # weight of z_k in later parts

    weighted = z * c
    prefix = np.concatenate(
        [np.zeros((n, 1)), np.cumsum(weighted, axis=1)], axis=1
    )  # prefix[:, j-1] = sum_{k<j} z_k / sqrt((D-k+1)(D-k))

    log_x = np.empty((n, D))
    log_x[:, :-1] = -prefix[:, :-1] + coef * z
    log_x[:, -1] = -prefix[:, -1]
    x_perm = np.exp(log_x)

    out = np.empty_like(x_perm)
    out[:, Z.perm] = x_perm
    return out


def readjust_absolute(X_new, X_ref: CompositionMatrix) -> np.ndarray:
    """Restore the absolute scale of an imputed matrix, row by row.

    Each row of ``X_new`` is rescaled by a single positive factor so the
    sum of its unmasked cells matches the sum of the same cells in
    ``X_ref``; the unmasked cells are then overwritten with their exact
    original values.  Only masked cells can differ from ``X_ref``.

    Rows with every cell masked cannot be anchored to observed parts;
    they are rescaled to the original row total instead and a warning is
    emitted.
    """
    X_new = np.atleast_2d(np.asarray(X_new, dtype=np.float64))
    if X_new.shape != X_ref.values.shape:
        raise ValueError(
            f"shape mismatch: X_new {X_new.shape} vs reference {X_ref.values.shape}"
        )
    _check_positive(X_new, "readjust_absolute")
    observed = ~X_ref.mask

    ref_sums = np.where(observed, X_ref.values, 0.0).sum(axis=1)
    new_sums = np.where(observed, X_new, 0.0).sum(axis=1)

    all_masked = ~observed.any(axis=1)
    if np.any(all_masked):
        rows = np.where(all_masked)[0]
        warnings.warn(
            f"rows {rows.tolist()} have every cell masked; "
            "rescaling to the original row total instead of the observed sum"
        )
        ref_sums[all_masked] = X_ref.values[all_masked].sum(axis=1)
        new_sums[all_masked] = X_new[all_masked].sum(axis=1)

    factors = ref_sums / new_sums
    out = X_new * factors[:, None]
    out[observed] = X_ref.values[observed]
    return out


def aitchison_distance(x, y) -> float:
    """Aitchison distance between two compositions.

    Defined from all pairwise log-ratios,

        d_A(x, y) = sqrt( (1/D) * sum_{i<j} (ln(x_i/x_j) - ln(y_i/y_j))^2 ),

    computed here as the Euclidean norm of the difference of centred
    log-ratio vectors, which is algebraically identical.  Symmetric,
    non-negative, zero iff x is proportional to y, and invariant under
    positive scaling of either argument.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise ValueError(f"length mismatch: {x.shape[0]} vs {y.shape[0]}")
    _check_positive(x, "aitchison_distance")
    _check_positive(y, "aitchison_distance")
    a = np.log(x) - np.log(y)
    a -= a.mean()
    return float(np.sqrt(np.dot(a, a)))


def dl_to_pivot(X_row, d_j: float, pivot_var: int) -> float:
    """Express a detection limit in the first pivot coordinate of a row.

    Returns the unique value phi such that setting the pivot part of the
    row to ``d_j`` (holding the other parts fixed) yields a first pivot
    coordinate of exactly phi:

        phi = sqrt((D-1)/D) * ln( d_j / gmean(other D-1 parts) )

    Predicted first coordinates above phi therefore correspond to part
    values above the detection limit.
    """
    row = np.asarray(X_row, dtype=np.float64).ravel()
    D = row.shape[0]
    if not 0 <= pivot_var < D:
        raise ValueError(f"pivot_var {pivot_var} out of range for D={D}")
    if d_j <= 0:
        raise ValueError(f"detection limit must be positive, got {d_j}")
    others = np.delete(row, pivot_var)
    _check_positive(others, "dl_to_pivot")
    log_gmean = np.log(others).mean()
    return float(np.sqrt((D - 1.0) / D) * (np.log(d_j) - log_gmean))


def dl_to_pivot_rows(values: np.ndarray, rows: np.ndarray, d_j: float, pivot_var: int) -> np.ndarray:
    """Vectorized :func:`dl_to_pivot` for several rows of a matrix."""
    values = np.asarray(values, dtype=np.float64)
    D = values.shape[1]
    others = np.delete(values[rows], pivot_var, axis=1)
    _check_positive(others, "dl_to_pivot")
    log_gmean = np.log(others).mean(axis=1)
    return np.sqrt((D - 1.0) / D) * (np.log(d_j) - log_gmean)
