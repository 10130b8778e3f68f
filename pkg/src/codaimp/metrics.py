"""Validation criteria for imputed compositional data.

Three criteria compare an imputed matrix against the true one:

* RDCM -- relative difference between the covariance matrices of true
  and imputed data in pivot log-ratio coordinates, based on the
  Frobenius norm,
* CED -- mean Aitchison distance between true and imputed rows that
  contain at least one censored cell, normalized by the maximum pairwise
  Aitchison distance of the original data,
* curious imputations -- counts of imputed values outside the valid
  interval (0, d_j]: above the detection limit or non-positive.

A value exactly at d_j is valid (censoring clamps land there by
design); a value exactly at 0 is not.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import pdist

from .composition import DetectionLimits, _check_positive, pivot_forward

__all__ = ["MetricsReport", "rdcm", "rdcm_from_cov", "ced", "curious_count", "score"]


@dataclass
class MetricsReport:
    rdcm: float
    ced: float
    curious_above_dl: int
    curious_nonpositive: int
    n_imputed: int
    per_variable: dict[int, dict[str, int]] = field(default_factory=dict)

    @property
    def curious_above_dl_fraction(self) -> float:
        return self.curious_above_dl / self.n_imputed if self.n_imputed else 0.0

    @property
    def curious_nonpositive_fraction(self) -> float:
        return self.curious_nonpositive / self.n_imputed if self.n_imputed else 0.0

    def to_dict(self) -> dict:
        return {
            "rdcm": self.rdcm,
            "ced": self.ced,
            "curious_above_dl": self.curious_above_dl,
            "curious_above_dl_fraction": self.curious_above_dl_fraction,
            "curious_nonpositive": self.curious_nonpositive,
            "curious_nonpositive_fraction": self.curious_nonpositive_fraction,
            "n_imputed": self.n_imputed,
            "per_variable": {
                str(j): dict(counts) for j, counts in sorted(self.per_variable.items())
            },
        }


def _as_matrix(X, name: str) -> np.ndarray:
    values = np.asarray(getattr(X, "values", X), dtype=np.float64)
    if values.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {values.shape}")
    return values


def rdcm_from_cov(S: np.ndarray, S_star: np.ndarray, normalized: bool = True) -> float:
    """Frobenius-norm covariance difference, optionally relative to ||S||_F."""
    S = np.atleast_2d(np.asarray(S, dtype=np.float64))
    S_star = np.atleast_2d(np.asarray(S_star, dtype=np.float64))
    if S.shape != S_star.shape:
        raise ValueError(f"covariance shapes differ: {S.shape} vs {S_star.shape}")
    k = S.shape[0]
    diff = np.linalg.norm(S - S_star, "fro") / k
    if not normalized:
        return float(diff)
    return float(diff / np.linalg.norm(S, "fro"))


def rdcm(X_true, X_imp, normalized: bool = True) -> float:
    """Relative difference between covariance matrices.

    Both matrices are expressed in pivot log-ratio coordinates (pivot
    variable 0 -- any fixed isometric basis gives equivalent results and
    fixing one keeps runs reproducible) and their sample covariances S,
    S* compared as ``||S - S*||_F / ((D-1) ||S||_F)``.  The
    ``normalized=False`` variant drops the ``||S||_F`` division, giving
    the plain root-mean-square form for sensitivity checks.
    """
    true = _as_matrix(X_true, "X_true")
    imp = _as_matrix(X_imp, "X_imp")
    if true.shape != imp.shape:
        raise ValueError(f"shape mismatch: {true.shape} vs {imp.shape}")
    if true.shape[0] < 2:
        raise ValueError("covariance needs at least two rows")
    z_true = pivot_forward(true, 0).z
    z_imp = pivot_forward(imp, 0).z
    S = np.atleast_2d(np.cov(z_true, rowvar=False, ddof=1))
    S_star = np.atleast_2d(np.cov(z_imp, rowvar=False, ddof=1))
    return rdcm_from_cov(S, S_star, normalized=normalized)


def ced(X_true, X_imp, mask) -> float:
    """Compositional error deviation.

    Mean Aitchison distance between true and imputed rows over the rows
    containing at least one censored cell, divided by the maximum
    pairwise Aitchison distance of the original data.
    """
    true = _as_matrix(X_true, "X_true")
    imp = _as_matrix(X_imp, "X_imp")
    mask = np.asarray(mask, dtype=bool)
    if true.shape != imp.shape or mask.shape != true.shape:
        raise ValueError(
            f"shape mismatch: truth {true.shape}, imputed {imp.shape}, mask {mask.shape}"
        )
    _check_positive(true, "ced")
    _check_positive(imp, "ced")
    rows = np.where(mask.any(axis=1))[0]
    if rows.size == 0:
        raise ValueError("ced needs at least one row with a censored cell")

    # Aitchison distance equals Euclidean distance in any isometric
    # log-ratio basis, so all distances reduce to pivot-coordinate ones.
    z_true = pivot_forward(true, 0).z
    z_imp = pivot_forward(imp, 0).z
    numerator = float(np.linalg.norm(z_true[rows] - z_imp[rows], axis=1).mean())
    denominator = float(pdist(z_true).max()) if true.shape[0] > 1 else 0.0
    if denominator <= 1e-12 * max(1.0, float(np.abs(z_true).max())):
        raise ValueError(
            "all original rows are proportional; the maximum pairwise distance is zero"
        )
    return numerator / denominator


def curious_count(X_imp, mask, d: DetectionLimits) -> tuple[int, int]:
    """Count imputed values above the detection limit and at or below zero."""
    imp = _as_matrix(X_imp, "X_imp")
    mask = np.asarray(mask, dtype=bool)
    above = 0
    nonpositive = 0
    for j in np.where(mask.any(axis=0))[0]:
        col = imp[mask[:, j], j]
        above += int((col > d.require(int(j))).sum())
        nonpositive += int((col <= 0).sum())
    return above, nonpositive


def score(X_true, X_imp, mask, d: DetectionLimits) -> MetricsReport:
    """Full report: RDCM, CED and curious counts with per-variable detail."""
    imp = _as_matrix(X_imp, "X_imp")
    mask = np.asarray(mask, dtype=bool)
    above, nonpositive = curious_count(imp, mask, d)
    per_variable = {}
    for j in np.where(mask.any(axis=0))[0]:
        col = imp[mask[:, j], j]
        dj = d.require(int(j))
        per_variable[int(j)] = {
            "n_imputed": int(col.size),
            "above_dl": int((col > dj).sum()),
            "nonpositive": int((col <= 0).sum()),
        }
    return MetricsReport(
        rdcm=rdcm(X_true, imp),
        ced=ced(X_true, imp, mask),
        curious_above_dl=above,
        curious_nonpositive=nonpositive,
        n_imputed=int(mask.sum()),
        per_variable=per_variable,
    )
