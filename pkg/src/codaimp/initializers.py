"""Initialization of rounded zeros before any log-ratio computation.

Log-ratios cannot be taken over zeros, so every masked cell must receive
a positive starting value before the EM-style algorithms run.  Three
initializers are provided:

* ``aknn``  -- k nearest neighbours under the Aitchison distance on the
  parts observed in both rows, filling with the donor median rescaled to
  the recipient row (the default),
* ``dl65``  -- 65% of the detection limit,
* ``uniform_dl`` -- an independent uniform draw from (0, DL).

All initializers leave observed cells bit-identical and fill masked
cells with values in (0, d_j).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .composition import CompositionMatrix, DetectionLimits

__all__ = ["InitConfig", "initialize", "init_aknn", "init_dl65", "init_uniform_dl"]

INIT_METHODS = ("aknn", "dl65", "uniform_dl")

# Initial fills stay strictly below the limit so censoring never starts
# saturated at d_j.
DL_CLAMP_FACTOR = 0.999


@dataclass(frozen=True)
class InitConfig:
    method: str = "aknn"
    k: int = 5
    rng_seed: int = 0

    def __post_init__(self):
        if self.method not in INIT_METHODS:
            raise ValueError(f"unknown init method {self.method!r}; choose from {INIT_METHODS}")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")


def initialize(
    X: CompositionMatrix, d: DetectionLimits, cfg: InitConfig
) -> tuple[CompositionMatrix, list[str]]:
    """Dispatch to the configured initializer."""
    if cfg.method == "aknn":
        return init_aknn(X, d, cfg.k)
    if cfg.method == "dl65":
        return init_dl65(X, d), []
    return init_uniform_dl(X, d, cfg.rng_seed), []


def _masked_columns(X: CompositionMatrix) -> np.ndarray:
    return np.where(X.mask.any(axis=0))[0]


def init_dl65(X: CompositionMatrix, d: DetectionLimits) -> CompositionMatrix:
    """Set every masked cell in column j to 0.65 * d_j."""
    d.validate_for(X.mask)
    values = X.values.copy()
    for j in _masked_columns(X):
        values[X.mask[:, j], j] = 0.65 * d.require(int(j))
    return X.with_values(values)


def init_uniform_dl(X: CompositionMatrix, d: DetectionLimits, seed: int) -> CompositionMatrix:
    """Fill each masked cell with an independent uniform draw from (0, d_j)."""
    d.validate_for(X.mask)
    rng = np.random.default_rng(seed)
    values = X.values.copy()
    for j in _masked_columns(X):
        rows = np.where(X.mask[:, j])[0]
        u = rng.random(rows.size)
        while np.any(u == 0.0):  # keep the interval open at 0
            u[u == 0.0] = rng.random(int((u == 0.0).sum()))
        values[rows, j] = u * d.require(int(j))
    return X.with_values(values)


def _common_subcomposition_distance(
    values: np.ndarray, observed: np.ndarray, i: int, r: int
) -> float:
    """Aitchison distance on the parts observed in both rows i and r.

    Returns inf when fewer than two common parts exist (no ratio to
    compare).
    """
    common = observed[i] & observed[r]
    if common.sum() < 2:
        return np.inf
    a = np.log(values[i, common]) - np.log(values[r, common])
    a -= a.mean()
    return float(np.sqrt(np.dot(a, a)))


def init_aknn(
    X: CompositionMatrix, d: DetectionLimits, k: int
) -> tuple[CompositionMatrix, list[str]]:
    """k-nearest-neighbour initialization under the Aitchison distance.

    For each masked cell (i, j), rows with part j observed are ranked by
    the Aitchison distance between the subcompositions of parts observed
    in both rows (ties broken by lowest row index).  The fill is the
    median over the k nearest donors of the donor's part j rescaled by
    the ratio of common-part totals (Aitchison distance ignores scale, so
    donor values must be re-anchored to the recipient row), clamped to
    0.999 * d_j.

    All fills are computed from the original observed values only, so the
    result does not depend on the order in which cells are processed.

    Returns the initialized matrix and a list of warning records for
    cells that fell back to the 65%-of-DL rule because no comparable
    donor was available.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    d.validate_for(X.mask)
    observed = ~X.mask
    if not observed.any(axis=1).all():
        i = int(np.where(~observed.any(axis=1))[0][0])
        raise ValueError(f"row {i} has no observed cells; aknn needs at least one per row")

    values = X.values.copy()
    out = X.values.copy()
    notes: list[str] = []

    for i, j in np.argwhere(X.mask):
        i, j = int(i), int(j)
        dj = d.require(j)
        donors = []
        for r in np.where(observed[:, j])[0]:
            r = int(r)
            if r == i:
                continue
            dist = _common_subcomposition_distance(values, observed, i, r)
            if np.isfinite(dist):
                donors.append((dist, r))
        if not donors:
            out[i, j] = 0.65 * dj
            notes.append(
                f"cell ({i}, {j}): no donor row shares observed parts; "
                "fell back to 65% of the detection limit"
            )
            continue
        donors.sort()  # (distance, row index): lowest index wins ties
        fills = []
        for _, r in donors[:k]:
            common = observed[i] & observed[r]
            scale = values[i, common].sum() / values[r, common].sum()
            fills.append(values[r, j] * scale)
        out[i, j] = min(float(np.median(fills)), DL_CLAMP_FACTOR * dj)

    return X.with_values(out), notes
