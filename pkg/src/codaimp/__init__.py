"""Imputation of rounded zeros in compositional data.

Rounded zeros are measurements reported as 0 because the true value
fell below the instrument's detection limit; a valid imputation lies in
(0, DL].  This package imputes them with per-variable neural-network
regressions run in an EM-style chain, either directly in part space or
in pivot log-ratio coordinates, and ships the compositional geometry,
baseline imputers, validation metrics and a benchmark harness needed to
evaluate the results.
"""

from .baselines import BaselineConfig, impute_baseline
from .composition import (
    CompositionMatrix,
    DetectionLimits,
    PivotCoordinates,
    aitchison_distance,
    closure,
    dl_to_pivot,
    pivot_forward,
    pivot_inverse,
    readjust_absolute,
)
from .harness import (
    ExperimentConfig,
    MethodSpec,
    SyntheticSpec,
    apply_artificial_dl,
    generate_synthetic,
    run_experiment,
)
from .imputer import (
    ImputationReport,
    ImputerConfig,
    check_convergence,
    impute,
    impute_pivot,
    impute_raw,
)
from .initializers import InitConfig, init_aknn, init_dl65, init_uniform_dl
from .kernels import KERNEL_NAME
from .metrics import MetricsReport, ced, curious_count, rdcm
from .network import AdamParams, Network, NetworkConfig, TrainReport, fit, fit_new

__version__ = "0.1.0"

__all__ = [
    "AdamParams",
    "BaselineConfig",
    "CompositionMatrix",
    "DetectionLimits",
    "ExperimentConfig",
    "ImputationReport",
    "ImputerConfig",
    "InitConfig",
    "KERNEL_NAME",
    "MethodSpec",
    "MetricsReport",
    "Network",
    "NetworkConfig",
    "PivotCoordinates",
    "SyntheticSpec",
    "TrainReport",
    "aitchison_distance",
    "apply_artificial_dl",
    "ced",
    "check_convergence",
    "closure",
    "curious_count",
    "dl_to_pivot",
    "fit",
    "fit_new",
    "generate_synthetic",
    "impute",
    "impute_baseline",
    "impute_pivot",
    "impute_raw",
    "init_aknn",
    "init_dl65",
    "init_uniform_dl",
    "pivot_forward",
    "pivot_inverse",
    "rdcm",
    "readjust_absolute",
    "run_experiment",
]
