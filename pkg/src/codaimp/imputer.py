"""EM-style imputation of rounded zeros with per-variable networks.

Two algorithm variants share one outer loop.  The raw variant regresses
each censored variable on all others directly in part space.  The pivot
variant re-expresses the data in pivot log-ratio coordinates with the
censored variable isolated in the first coordinate, regresses that
coordinate on the remaining ones, transforms back and restores the
absolute scale of the observed parts.  Both iterate over all censored
variables until the imputed cells stabilize.

With ``censor=True`` predictions are clamped into (0, d_j]; with
``censor=False`` the identical loop runs without clamping, which is the
benchmark variant that is allowed to produce "curious" imputations
outside the valid interval.
"""

from __future__ import annotations

import warnings as _warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .composition import (
    CompositionMatrix,
    DetectionLimits,
    dl_to_pivot_rows,
    pivot_forward,
    pivot_inverse,
    readjust_absolute,
)
from .initializers import InitConfig, initialize
from .network import Network, NetworkConfig, fit, fit_new

__all__ = [
    "ImputerConfig",
    "ImputationReport",
    "impute",
    "impute_raw",
    "impute_pivot",
    "check_convergence",
]

ALGORITHMS = ("raw", "pivot")
ORDERS = ("fewest_first", "index")
DELTA_STATS = ("mean_abs", "sq_rel")

# Raw-space predictions <= 0 cannot be represented in log-ratio space;
# they are floored at this fraction of the detection limit.
POSITIVITY_FLOOR = 0.001


@dataclass(frozen=True)
class ImputerConfig:
    algorithm: str = "pivot"
    eps: float = 1.0
    maxiter: int = 10
    net: NetworkConfig = field(default_factory=NetworkConfig)
    init: InitConfig = field(default_factory=InitConfig)
    censor: bool = True
    order: str = "fewest_first"
    delta_stat: str = "mean_abs"
    warm_start: bool = False

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}")
        if self.eps < 0:
            raise ValueError(f"eps must be non-negative, got {self.eps}")
        if self.maxiter < 1:
            raise ValueError(f"maxiter must be >= 1, got {self.maxiter}")
        if self.order not in ORDERS:
            raise ValueError(f"order must be one of {ORDERS}, got {self.order!r}")
        if self.delta_stat not in DELTA_STATS:
            raise ValueError(
                f"delta_stat must be one of {DELTA_STATS}, got {self.delta_stat!r}"
            )


@dataclass
class ImputationReport:
    """Outcome of one imputation run.

    ``x_imputed`` holds the completed matrix; ``mask`` records which
    cells were imputed (per-cell provenance: everything else is the
    untouched input).  ``delta_trace`` is the per-iteration change
    statistic over imputed cells.
    """

    x_imputed: np.ndarray
    mask: np.ndarray
    iterations: int
    delta_trace: list[float]
    converged: bool
    per_variable_order: list[int]
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "delta_trace": [float(v) for v in self.delta_trace],
            "converged": self.converged,
            "per_variable_order": [int(j) for j in self.per_variable_order],
            "n_imputed_cells": int(self.mask.sum()),
            "warnings": list(self.warnings),
        }


def check_convergence(trace, eps: float, maxiter: int) -> tuple[bool, bool]:
    """(converged, stop) after the iterations recorded in ``trace``."""
    if len(trace) == 0:
        raise ValueError("convergence check needs at least one delta value")
    converged = trace[-1] <= eps
    return converged, converged or len(trace) >= maxiter


def _column_order(mask: np.ndarray, order: str) -> list[int]:
    cols = np.where(mask.any(axis=0))[0]
    if order == "fewest_first":
        cols = cols[np.argsort(mask[:, cols].sum(axis=0), kind="stable")]
    return [int(j) for j in cols]


def _delta(new: np.ndarray, old: np.ndarray, mask: np.ndarray, stat: str) -> float:
    if stat == "mean_abs":
        return float(np.abs(new[mask] - old[mask]).mean())
    rel = (new[mask] - old[mask]) / old[mask]
    return float(np.sum(rel * rel))


def _net_config_for(cfg: ImputerConfig, iteration: int, column: int) -> NetworkConfig:
    """Derive a deterministic per-fit seed from (base seed, iteration, column)."""
    base = cfg.net.rng_seed % (2**63)
    seed = np.random.SeedSequence([base, iteration, column]).generate_state(
        1, dtype=np.uint64
    )[0]
    return cfg.net.with_seed(int(seed))


def impute(X: CompositionMatrix, d: DetectionLimits, cfg: ImputerConfig) -> ImputationReport:
    """Run the configured algorithm variant."""
    if cfg.algorithm == "raw":
        return impute_raw(X, d, cfg)
    return impute_pivot(X, d, cfg)


def impute_raw(X: CompositionMatrix, d: DetectionLimits, cfg: ImputerConfig) -> ImputationReport:
    """Per-variable network regression directly in part space.

    Each censored column is regressed on all other columns using the rows
    where it is observed; the fitted net predicts the censored cells.
    With censoring on, predictions above d_j are set to d_j and
    non-positive predictions floored at ``POSITIVITY_FLOOR * d_j``.
    """
    return _run(X, d, cfg, _raw_sweep)


def impute_pivot(X: CompositionMatrix, d: DetectionLimits, cfg: ImputerConfig) -> ImputationReport:
    """Per-variable network regression in pivot log-ratio coordinates.

    For each censored column the data matrix is re-expressed with that
    column's relative information isolated in the first pivot coordinate,
    which is regressed on the remaining coordinates.  Predicted first
    coordinates above the row's detection-limit representation are
    clamped down to it, the coordinates are inverted, columns restored to
    their original order and rows rescaled so the observed parts keep
    their absolute values.
    """
    if not (~X.mask).any(axis=1).all():
        i = int(np.where(X.mask.all(axis=1))[0][0])
        raise ValueError(
            f"row {i} has every cell censored; the log-ratio algorithm needs at "
            "least one observed part per row"
        )
    return _run(X, d, cfg, _pivot_sweep)


def _run(X, d, cfg, sweep) -> ImputationReport:
    d.validate_for(X.mask)
    if X.n_masked == 0:
        return ImputationReport(
            x_imputed=X.values.copy(),
            mask=X.mask.copy(),
            iterations=0,
            delta_trace=[],
            converged=True,
            per_variable_order=[],
        )

    X_init, notes = initialize(X, d, cfg.init)
    values = X_init.values.copy()
    order = _column_order(X.mask, cfg.order)
    report = ImputationReport(
        x_imputed=values,
        mask=X.mask.copy(),
        iterations=0,
        delta_trace=[],
        converged=False,
        per_variable_order=order,
        warnings=list(notes),
    )
    nets: dict[int, Network] = {}
    skipped: set[int] = set()

    while True:
        r = report.iterations + 1
        old = values.copy()
        for j in order:
            obs = ~X.mask[:, j]
            if obs.sum() < 5:
                if j not in skipped:
                    skipped.add(j)
                    report.warnings.append(
                        f"column {j}: only {int(obs.sum())} observed rows; network "
                        "skipped, initialization kept"
                    )
                continue
            sweep(X, d, cfg, values, j, r, nets, report)
        report.iterations = r
        report.delta_trace.append(_delta(values, old, X.mask, cfg.delta_stat))
        report.converged, stop = check_convergence(report.delta_trace, cfg.eps, cfg.maxiter)
        if stop:
            break

    if not report.converged:
        msg = f"imputation did not converge within {cfg.maxiter} iterations"
        report.warnings.append(msg)
        _warnings.warn(msg)

    if cfg.censor:
        # Safety net: the absolute-value adjustment can move a clamped cell
        # past the limit by a rounding-sized amount.
        for j in np.where(X.mask.any(axis=0))[0]:
            dj = d.require(int(j))
            rows = X.mask[:, j]
            col = np.minimum(values[rows, j], dj)
            values[rows, j] = np.where(col <= 0, POSITIVITY_FLOOR * dj, col)

    report.x_imputed = values
    return report


def _fit_predict(cfg, iteration, column, nets, feats, target, obs, mis):
    net_cfg = _net_config_for(cfg, iteration, column)
    if cfg.warm_start and column in nets:
        net = nets[column]
        fit(net, feats[obs], target[obs], net_cfg)
    else:
        net, _ = fit_new(feats[obs], target[obs], net_cfg)
        nets[column] = net
    return net.predict(feats[mis])


def _raw_sweep(X, d, cfg, values, j, iteration, nets, report):
    obs = ~X.mask[:, j]
    mis = X.mask[:, j]
    feats = np.delete(values, j, axis=1)
    preds = _fit_predict(cfg, iteration, j, nets, feats, values[:, j], obs, mis)
    if cfg.censor:
        dj = d.require(j)
        preds = np.minimum(preds, dj)
        preds = np.where(preds <= 0, POSITIVITY_FLOOR * dj, preds)
    values[mis, j] = preds


def _pivot_sweep(X, d, cfg, values, j, iteration, nets, report):
    obs = ~X.mask[:, j]
    mis = X.mask[:, j]
    Z = pivot_forward(values, pivot_var=j)
    if not np.all(np.isfinite(Z.z)):
        i, c = np.argwhere(~np.isfinite(Z.z))[0]
        raise ValueError(
            f"non-finite pivot coordinate at row {i}, coordinate {c} while "
            f"processing column {j}"
        )

    feats = Z.z[:, 1:]
    target = Z.z[:, 0]
    if feats.shape[1] == 0:
        # D = 2 leaves no predictor coordinates: impute the mean observed
        # coordinate, i.e. the geometric mean of the observed ratios.
        key = f"column {j}: no predictor coordinates (D=2); using the mean observed coordinate"
        if key not in report.warnings:
            report.warnings.append(key)
        preds = np.full(int(mis.sum()), target[obs].mean())
    else:
        preds = _fit_predict(cfg, iteration, j, nets, feats, target, obs, mis)

    if cfg.censor:
        phi = dl_to_pivot_rows(values, np.where(mis)[0], d.require(j), j)
        preds = np.minimum(preds, phi)

    z_new = Z.z.copy()
    z_new[mis, 0] = preds
    proposal = pivot_inverse(replace(Z, z=z_new))
    if not np.all(np.isfinite(proposal)):
        i, c = np.argwhere(~np.isfinite(proposal))[0]
        raise ValueError(
            f"non-finite part value at row {i}, column {c} after inverting the "
            f"pivot transform for column {j}"
        )
    values[:] = readjust_absolute(proposal, X)
    if cfg.censor:
        values[mis, j] = np.minimum(values[mis, j], d.require(j))
