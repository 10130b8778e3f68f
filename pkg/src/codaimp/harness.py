"""Benchmark harness: artificial censoring, method runs, scoring, timing.

The experimental protocol takes a complete positive data matrix (a
synthetic draw or a user CSV), censors each variable at an empirical
quantile -- the quantile value becomes the artificial detection limit
and every cell strictly below it is set to zero -- runs each configured
method on the censored matrix, and scores the imputations against the
retained true values.  All methods see the identical censoring, so
comparisons are fair; timings are wall-clock per run and deliberately
qualitative.
"""

from __future__ import annotations

import json
import time
import warnings as _warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .baselines import BaselineConfig, impute_baseline
from .composition import CompositionMatrix, DetectionLimits, closure
from .imputer import POSITIVITY_FLOOR, ImputationReport, ImputerConfig, impute
from .initializers import InitConfig
from .metrics import MetricsReport, ced, rdcm
from .network import NetworkConfig

__all__ = [
    "SyntheticSpec",
    "ExperimentConfig",
    "MethodSpec",
    "RunResult",
    "ExperimentReport",
    "METHOD_NAMES",
    "method_category",
    "generate_synthetic",
    "apply_artificial_dl",
    "build_runner",
    "run_experiment",
    "write_report",
]

# Method labels follow the taxonomy the networks are benchmarked against:
# compositional or not x detection-limit aware or not.
_METHODS = {
    "deepImp": ("non-CoDa, non-DL", "ann", dict(algorithm="raw", censor=False)),
    "deepImp-dl": ("non-CoDa, DL", "ann", dict(algorithm="raw", censor=True)),
    "deepImpCoDa": ("CoDa, non-DL", "ann", dict(algorithm="pivot", censor=False)),
    "deepImpCoDa-dl": ("CoDa, DL", "ann", dict(algorithm="pivot", censor=True)),
    "knn": ("non-CoDa, non-DL", "baseline", dict(kind="knn_euclidean")),
    "aknn": ("CoDa, non-DL", "baseline", dict(kind="knn_aitchison")),
    "dl65": ("univariate, DL", "baseline", dict(kind="dl65")),
    "uniform-dl": ("univariate, DL", "baseline", dict(kind="uniform_dl")),
}
METHOD_NAMES = tuple(_METHODS)


def method_category(name: str) -> str:
    return _METHODS[name][0]


@dataclass(frozen=True)
class SyntheticSpec:
    """Latent log-normal factor model: ``X = exp(F @ L + noise)``.

    One strong factor with small noise gives highly correlated log-space
    columns (the regime where multivariate imputers shine); more factors
    or more noise weaken the structure.
    """

    n: int = 300
    D: int = 10
    n_factors: int = 1
    loading_scale: float = 1.0
    noise_scale: float = 0.1
    seed: int = 0
    close_rows: bool = False

    def __post_init__(self):
        if self.n < 2 or self.D < 2:
            raise ValueError(f"need n >= 2 and D >= 2, got n={self.n}, D={self.D}")
        if self.n_factors < 1:
            raise ValueError(f"n_factors must be >= 1, got {self.n_factors}")
        if self.noise_scale < 0 or self.loading_scale <= 0:
            raise ValueError("noise_scale must be >= 0 and loading_scale > 0")


def generate_synthetic(spec: SyntheticSpec) -> np.ndarray:
    """Deterministic strictly-positive draw from the factor model."""
    rng = np.random.default_rng(spec.seed)
    factors = rng.standard_normal((spec.n, spec.n_factors))
    loadings = rng.standard_normal((spec.n_factors, spec.D)) * spec.loading_scale
    noise = rng.standard_normal((spec.n, spec.D)) * spec.noise_scale
    X = np.exp(factors @ loadings + noise)
    if spec.close_rows:
        X = closure(X, 1.0)
    return X


def apply_artificial_dl(
    X, q: float
) -> tuple[CompositionMatrix, DetectionLimits, np.ndarray]:
    """Censor each variable at its empirical q-quantile.

    The quantile (linear interpolation, the NumPy default) becomes the
    artificial detection limit; cells strictly below it are masked and
    set to zero.  Returns the censored matrix, the limits, and the true
    values kept aside for scoring.  Constant columns cannot be censored
    and are skipped with a warning.
    """
    values = np.asarray(X, dtype=np.float64)
    if not 0.0 < q < 1.0:
        raise ValueError(f"censor quantile must be in (0, 1), got {q}")
    if np.any(values <= 0):
        i, j = np.argwhere(values <= 0)[0]
        raise ValueError(
            f"artificial censoring needs a complete positive matrix; "
            f"cell at row {i}, column {j} is {values[i, j]}"
        )
    n, D = values.shape
    d = np.quantile(values, q, axis=0, method="linear")
    mask = values < d
    for j in np.where(np.ptp(values, axis=0) == 0)[0]:
        _warnings.warn(f"column {j} is constant; skipped censoring it")
    observed = n - mask.sum(axis=0)
    if np.any(observed < 5):
        j = int(np.where(observed < 5)[0][0])
        raise ValueError(
            f"censoring at q={q} leaves only {int(observed[j])} observed rows in "
            f"column {j}; need at least 5"
        )
    censored = values.copy()
    censored[mask] = 0.0
    return CompositionMatrix(censored, mask), DetectionLimits(d), values


@dataclass(frozen=True)
class MethodSpec:
    """A method name plus per-method overrides.

    Supported overrides: ``k``, ``eps``, ``maxiter``, ``epochs``,
    ``patience``, ``dropout``, ``net_profile`` ('desk' or 'paper'),
    ``init`` ('aknn', 'dl65', 'uniform_dl').
    """

    name: str
    overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.name not in _METHODS:
            raise ValueError(
                f"unknown method {self.name!r}; valid names: {', '.join(METHOD_NAMES)}"
            )
        unknown = set(self.overrides) - {
            "k", "eps", "maxiter", "epochs", "patience", "dropout", "net_profile",
            "init", "censor",
        }
        if unknown:
            raise ValueError(f"unknown overrides for {self.name}: {sorted(unknown)}")


def _network_config(overrides: dict, seed: int) -> NetworkConfig:
    profile = overrides.get("net_profile", "desk")
    if profile not in ("desk", "paper"):
        raise ValueError(f"net_profile must be 'desk' or 'paper', got {profile!r}")
    kwargs = {"rng_seed": seed}
    if "epochs" in overrides:
        kwargs["epochs"] = int(overrides["epochs"])
    if "patience" in overrides:
        kwargs["patience"] = int(overrides["patience"])
    if "dropout" in overrides:
        kwargs["dropout_rate"] = float(overrides["dropout"])
    if profile == "paper":
        return NetworkConfig.paper_profile(**kwargs)
    return NetworkConfig.desk_profile(**kwargs)


def build_runner(spec: MethodSpec, seed: int):
    """Return a zero-argument-config callable (X, d) -> ImputationReport."""
    category, kind, params = _METHODS[spec.name]
    ov = spec.overrides
    if kind == "ann":
        cfg = ImputerConfig(
            algorithm=params["algorithm"],
            censor=bool(ov.get("censor", params["censor"])),
            eps=float(ov.get("eps", 1.0)),
            maxiter=int(ov.get("maxiter", 10)),
            net=_network_config(ov, seed),
            init=InitConfig(method=ov.get("init", "aknn"), k=int(ov.get("k", 5)), rng_seed=seed),
        )
        return lambda X, d: impute(X, d, cfg)
    cfg = BaselineConfig(kind=params["kind"], k=int(ov.get("k", 5)), seed=seed)
    return lambda X, d: impute_baseline(X, d, cfg)


@dataclass
class RunResult:
    method: str
    category: str
    seed: int
    metrics: MetricsReport | None
    wall_time: float
    iterations: int = 0
    converged: bool = True
    delta_trace: list[float] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    error: str | None = None


@dataclass(frozen=True)
class ExperimentConfig:
    source: SyntheticSpec | str = field(default_factory=SyntheticSpec)
    censor_quantile: float = 0.05
    methods: tuple[MethodSpec, ...] = (MethodSpec("dl65"),)
    seeds: tuple[int, ...] = (1, 2, 3)

    def __post_init__(self):
        if not self.methods:
            raise ValueError("at least one method is required")
        if not self.seeds:
            raise ValueError("at least one seed is required")
        if not 0.0 < self.censor_quantile < 1.0:
            raise ValueError(
                f"censor_quantile must be in (0, 1), got {self.censor_quantile}"
            )


@dataclass
class ExperimentReport:
    config_summary: dict
    n: int
    D: int
    n_masked: int
    results: list[RunResult]

    def medians(self) -> dict[str, dict[str, float]]:
        """Per-method medians of rdcm/ced over the successful seeds."""
        out: dict[str, dict[str, float]] = {}
        for method in dict.fromkeys(r.method for r in self.results):
            runs = [r for r in self.results if r.method == method and r.metrics is not None]
            if not runs:
                continue
            out[method] = {
                "rdcm": float(np.median([r.metrics.rdcm for r in runs])),
                "ced": float(np.median([r.metrics.ced for r in runs])),
                "curious_above_dl": float(np.median([r.metrics.curious_above_dl for r in runs])),
                "curious_nonpositive": float(
                    np.median([r.metrics.curious_nonpositive for r in runs])
                ),
            }
        return out

    def long_table(self) -> list[tuple[str, int, str, float]]:
        """Plot-ready rows (method, seed, metric, value); no timings."""
        rows = []
        for r in self.results:
            if r.metrics is None:
                continue
            m = r.metrics
            for metric, value in (
                ("rdcm", m.rdcm),
                ("ced", m.ced),
                ("curious_above_dl", float(m.curious_above_dl)),
                ("curious_above_dl_fraction", m.curious_above_dl_fraction),
                ("curious_nonpositive", float(m.curious_nonpositive)),
                ("curious_nonpositive_fraction", m.curious_nonpositive_fraction),
                ("iterations", float(r.iterations)),
            ):
                rows.append((r.method, r.seed, metric, float(value)))
        return rows

    def to_dict(self) -> dict:
        return {
            "config": self.config_summary,
            "data": {"n": self.n, "D": self.D, "n_masked": self.n_masked},
            "results": [
                {
                    "method": r.method,
                    "category": r.category,
                    "seed": r.seed,
                    "metrics": r.metrics.to_dict() if r.metrics else None,
                    "wall_time_s": r.wall_time,
                    "iterations": r.iterations,
                    "converged": r.converged,
                    "delta_trace": [float(v) for v in r.delta_trace],
                    "warnings": r.warnings,
                    "error": r.error,
                }
                for r in self.results
            ],
            "medians": self.medians(),
        }


def _sanitize_for_scoring(report: ImputationReport, d: DetectionLimits) -> np.ndarray:
    """Make non-positive imputations scoreable.

    Methods without detection-limit handling may impute values <= 0,
    which no log-ratio can represent.  Curious counts are taken on the
    raw output; for RDCM/CED those cells are shrunk to a small positive
    fraction of the limit, mirroring how such output would have to be
    repaired before any compositional analysis.
    """
    values = report.x_imputed.copy()
    for j in np.where(report.mask.any(axis=0))[0]:
        rows = report.mask[:, j]
        col = values[rows, j]
        bad = col <= 0
        if bad.any():
            col[bad] = POSITIVITY_FLOOR * d.require(int(j))
            values[rows, j] = col
    return values


def run_experiment(cfg: ExperimentConfig, data: np.ndarray | None = None) -> ExperimentReport:
    """Censor, impute with every (method, seed), score and time each run.

    ``data`` overrides the configured source with an in-memory complete
    matrix.  A failing run is recorded with its error message and the
    remaining runs proceed.
    """
    if data is None:
        if isinstance(cfg.source, SyntheticSpec):
            data = generate_synthetic(cfg.source)
            source_summary = {"type": "synthetic", **cfg.source.__dict__}
        else:
            from .dataio import read_matrix_csv

            _, data = read_matrix_csv(cfg.source)
            source_summary = {"type": "csv", "path": str(cfg.source)}
    else:
        source_summary = {"type": "in-memory"}

    X, d, X_true = apply_artificial_dl(data, cfg.censor_quantile)
    report = ExperimentReport(
        config_summary={
            "source": source_summary,
            "censor_quantile": cfg.censor_quantile,
            "methods": [
                {"name": m.name, "overrides": dict(m.overrides)} for m in cfg.methods
            ],
            "seeds": list(cfg.seeds),
        },
        n=X.n,
        D=X.D,
        n_masked=X.n_masked,
        results=[],
    )

    for spec in cfg.methods:
        for seed in cfg.seeds:
            runner = build_runner(spec, seed)
            start = time.perf_counter()
            try:
                run = runner(X, d)
                elapsed = time.perf_counter() - start
                # RDCM/CED on the sanitized matrix, curious counts on the
                # raw imputer output.
                above, nonpos, per_variable = _raw_curious(run, d)
                sanitized = _sanitize_for_scoring(run, d)
                metrics = MetricsReport(
                    rdcm=rdcm(X_true, sanitized),
                    ced=ced(X_true, sanitized, X.mask),
                    curious_above_dl=above,
                    curious_nonpositive=nonpos,
                    n_imputed=X.n_masked,
                    per_variable=per_variable,
                )
                result = RunResult(
                    method=spec.name,
                    category=method_category(spec.name),
                    seed=seed,
                    metrics=metrics,
                    wall_time=elapsed,
                    iterations=run.iterations,
                    converged=run.converged,
                    delta_trace=list(run.delta_trace),
                    warnings=list(run.warnings),
                )
            except Exception as exc:  # isolate per-run failures
                result = RunResult(
                    method=spec.name,
                    category=method_category(spec.name),
                    seed=seed,
                    metrics=None,
                    wall_time=time.perf_counter() - start,
                    error=f"{type(exc).__name__}: {exc}",
                )
            report.results.append(result)
    return report


def _raw_curious(run: ImputationReport, d: DetectionLimits):
    """Curious counts on the unsanitized imputer output."""
    from .metrics import curious_count

    above, nonpos = curious_count(run.x_imputed, run.mask, d)
    per_variable = {}
    for j in np.where(run.mask.any(axis=0))[0]:
        col = run.x_imputed[run.mask[:, j], j]
        dj = d.require(int(j))
        per_variable[int(j)] = {
            "n_imputed": int(col.size),
            "above_dl": int((col > dj).sum()),
            "nonpositive": int((col <= 0).sum()),
        }
    return above, nonpos, per_variable


def write_report(report: ExperimentReport, out_dir) -> tuple[Path, Path]:
    """Write ``report.json`` and the long-format ``results.csv``."""
    import csv

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    json_path = out / "report.json"
    with open(json_path, "w") as handle:
        json.dump(report.to_dict(), handle, indent=2, sort_keys=True)
        handle.write("\n")
    csv_path = out / "results.csv"
    with open(csv_path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["method", "seed", "metric", "value"])
        for method, seed, metric, value in report.long_table():
            writer.writerow([method, seed, metric, repr(value)])
    return json_path, csv_path
