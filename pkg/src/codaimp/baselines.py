"""Simplified competitor imputers for the benchmark harness.

Deliberately lightweight stand-ins covering the method taxonomy the
network imputers are compared against: a plain Euclidean k-nearest-
neighbour imputer (neither compositional nor detection-limit aware), its
Aitchison-distance counterpart (compositional, not limit aware), and the
two univariate references (65% of the detection limit; uniform draws
from (0, DL)).  The kNN baselines intentionally apply no detection-limit
clamp, which is what lets them produce curious imputations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .composition import CompositionMatrix, DetectionLimits
from .imputer import ImputationReport
from .initializers import init_dl65, init_uniform_dl

__all__ = ["BaselineConfig", "impute_baseline", "BASELINE_KINDS"]

BASELINE_KINDS = ("knn_euclidean", "knn_aitchison", "dl65", "uniform_dl")


@dataclass(frozen=True)
class BaselineConfig:
    kind: str
    k: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.kind not in BASELINE_KINDS:
            raise ValueError(f"unknown baseline {self.kind!r}; choose from {BASELINE_KINDS}")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")


def impute_baseline(
    X: CompositionMatrix, d: DetectionLimits, cfg: BaselineConfig
) -> ImputationReport:
    """Run one baseline imputer; all of them are single-pass."""
    warnings: list[str] = []
    if cfg.kind == "dl65":
        values = init_dl65(X, d).values
    elif cfg.kind == "uniform_dl":
        values = init_uniform_dl(X, d, cfg.seed).values
    elif cfg.kind == "knn_euclidean":
        values, warnings = _knn_euclidean(X, cfg.k)
    else:
        values, warnings = _knn_aitchison(X, cfg.k)
    return ImputationReport(
        x_imputed=values,
        mask=X.mask.copy(),
        iterations=0,
        delta_trace=[],
        converged=True,
        per_variable_order=[int(j) for j in np.where(X.mask.any(axis=0))[0]],
        warnings=warnings,
    )


def _knn_euclidean(X: CompositionMatrix, k: int) -> tuple[np.ndarray, list[str]]:
    """Donor-median kNN with Euclidean distances on commonly observed parts."""
    observed = ~X.mask
    values = X.values
    out = values.copy()
    warnings = []
    for i, j in np.argwhere(X.mask):
        i, j = int(i), int(j)
        donors = []
        for r in np.where(observed[:, j])[0]:
            r = int(r)
            if r == i:
                continue
            common = observed[i] & observed[r]
            if not common.any():
                continue
            diff = values[i, common] - values[r, common]
            donors.append((float(np.sqrt(np.dot(diff, diff))), r))
        if not donors:
            warnings.append(f"cell ({i}, {j}): no comparable donor; left unfilled at 0")
            continue
        donors.sort()
        out[i, j] = float(np.median([values[r, j] for _, r in donors[:k]]))
    return out, warnings


def _knn_aitchison(X: CompositionMatrix, k: int) -> tuple[np.ndarray, list[str]]:
    """The aknn initializer's donor scheme without any detection-limit clamp."""
    from .initializers import _common_subcomposition_distance

    observed = ~X.mask
    values = X.values
    out = values.copy()
    warnings = []
    for i, j in np.argwhere(X.mask):
        i, j = int(i), int(j)
        donors = []
        for r in np.where(observed[:, j])[0]:
            r = int(r)
            if r == i:
                continue
            dist = _common_subcomposition_distance(values, observed, i, r)
            if np.isfinite(dist):
                donors.append((dist, r))
        if not donors:
            warnings.append(f"cell ({i}, {j}): no comparable donor; left unfilled at 0")
            continue
        donors.sort()
        fills = []
        for _, r in donors[:k]:
            common = observed[i] & observed[r]
            scale = values[i, common].sum() / values[r, common].sum()
            fills.append(values[r, j] * scale)
        out[i, j] = float(np.median(fills))
    return out, warnings
