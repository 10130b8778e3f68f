"""Command-line front end.

Three subcommands:

* ``impute``  -- run one imputation method on a CSV of compositional
  data in which 0 encodes a rounded zero,
* ``bench``   -- run the benchmark protocol (artificial censoring at a
  quantile, several methods and seeds, scoring and timing),
* ``metrics`` -- score a completed imputation against a truth file.

Exit codes: 0 success, 2 usage or validation error, 1 internal error.
All randomness flows from ``--seed`` (default 0); repeating an
invocation with identical flags reproduces the output exactly.  Set
``CODAIMP_LOG=debug|info|warning`` to control log verbosity.
"""

from __future__ import annotations

import json
import logging
import os
import sys
from pathlib import Path

import click
import numpy as np

from . import dataio
from .composition import CompositionMatrix, DetectionLimits
from .harness import (
    METHOD_NAMES,
    ExperimentConfig,
    MethodSpec,
    SyntheticSpec,
    build_runner,
    run_experiment,
    write_report,
)
from .metrics import ced, curious_count, rdcm

log = logging.getLogger("codaimp")

_OVERRIDE_FLAGS = ("k", "eps", "maxiter", "epochs", "patience", "dropout", "net_profile")


def _setup_logging():
    level = os.environ.get("CODAIMP_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(message)s")


def _fail(message: str, code: int = 2):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _wrap(body):
    """Map validation errors to exit 2 and unexpected ones to exit 1."""
    try:
        body()
    except (ValueError, OSError) as exc:
        _fail(str(exc))
    except click.ClickException:
        raise
    except Exception as exc:  # internal error
        click.echo(f"internal error: {type(exc).__name__}: {exc}", err=True)
        sys.exit(1)


def _overrides_from_flags(**flags) -> dict:
    return {key: flags[key] for key in _OVERRIDE_FLAGS if flags.get(key) is not None}


@click.group()
def main():
    """Impute rounded zeros in compositional data with per-variable networks."""
    _setup_logging()


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=False))
@click.option("--output", "output_path", required=True, type=click.Path())
@click.option("--method", default="deepImpCoDa-dl", show_default=True,
              help=f"one of: {', '.join(METHOD_NAMES)}")
@click.option("--dl-file", type=click.Path(), default=None,
              help="detection-limit CSV (one row, same header as the data)")
@click.option("--dl-quantile", type=float, default=None,
              help="fallback: set each censored column's limit to this quantile "
                   "of its observed values")
@click.option("--k", type=int, default=None, help="neighbours for knn/aknn/init")
@click.option("--eps", type=float, default=None, help="convergence threshold")
@click.option("--maxiter", type=int, default=None, help="maximum EM iterations")
@click.option("--epochs", type=int, default=None)
@click.option("--patience", type=int, default=None)
@click.option("--dropout", type=float, default=None)
@click.option("--net-profile", "net_profile", type=click.Choice(["desk", "paper"]),
              default=None, help="network size profile (default desk)")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--no-censor", is_flag=True,
              help="disable detection-limit clamping (benchmark variant)")
@click.option("--report", "report_path", type=click.Path(), default=None,
              help="write a JSON run report (iterations, deltas, warnings)")
def impute(input_path, output_path, method, dl_file, dl_quantile, seed, no_censor,
           report_path, **flags):
    """Impute the rounded zeros of a CSV and write the completed matrix."""

    def body():
        if method not in METHOD_NAMES:
            _fail(f"unknown method {method!r}; valid names: {', '.join(METHOD_NAMES)}")
        header, values = dataio.read_matrix_csv(input_path)
        X = CompositionMatrix.from_raw(values)
        d = _resolve_limits(header, X, dl_file, dl_quantile)
        overrides = _overrides_from_flags(**flags)
        if no_censor:
            overrides["censor"] = False
        runner = build_runner(MethodSpec(method, overrides), seed)
        run = runner(X, d)
        dataio.write_matrix_csv(output_path, header, run.x_imputed)
        for note in run.warnings:
            log.warning("warning: %s", note)
        if report_path:
            payload = {"method": method, "seed": seed, **run.to_dict()}
            with open(report_path, "w") as handle:
                json.dump(payload, handle, indent=2, sort_keys=True)
                handle.write("\n")
        log.info("wrote %s", output_path)

    _wrap(body)


def _resolve_limits(header, X: CompositionMatrix, dl_file, dl_quantile) -> DetectionLimits:
    if dl_file is not None:
        d = DetectionLimits(dataio.read_limits_csv(dl_file, header))
    elif dl_quantile is not None:
        if not 0.0 < dl_quantile < 1.0:
            raise ValueError(f"--dl-quantile must be in (0, 1), got {dl_quantile}")
        limits = np.full(X.D, np.nan)
        for j in np.where(X.mask.any(axis=0))[0]:
            observed = X.values[~X.mask[:, j], j]
            limits[j] = np.quantile(observed, dl_quantile)
        d = DetectionLimits(limits)
    else:
        d = DetectionLimits.none(X.D)
    for j in np.where(X.mask.any(axis=0))[0]:
        if not d.has(int(j)):
            raise ValueError(
                f"column {header[j]!r} (index {j}) contains rounded zeros but has no "
                "detection limit; provide --dl-file or --dl-quantile"
            )
    return d


@main.command()
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="experiment JSON (source, censor_quantile, methods, seeds)")
@click.option("--out", "out_dir", type=click.Path(), default="bench_out", show_default=True)
@click.option("--input", "input_path", type=click.Path(), default=None,
              help="complete positive CSV to censor artificially (instead of synthetic)")
@click.option("--methods", default=None,
              help="comma-separated method names (overrides the config)")
@click.option("--seeds", default=None, help="comma-separated integer seeds")
@click.option("--quantile", type=float, default=None, help="censoring quantile")
@click.option("--n", type=int, default=None, help="synthetic rows")
@click.option("--cols", "--D", "n_cols", type=int, default=None, help="synthetic columns")
@click.option("--factors", type=int, default=None, help="synthetic latent factors")
@click.option("--noise-scale", type=float, default=None)
@click.option("--data-seed", type=int, default=None)
@click.option("--k", type=int, default=None)
@click.option("--eps", type=float, default=None)
@click.option("--maxiter", type=int, default=None)
@click.option("--epochs", type=int, default=None)
@click.option("--patience", type=int, default=None)
@click.option("--dropout", type=float, default=None)
@click.option("--net-profile", "net_profile", type=click.Choice(["desk", "paper"]), default=None)
def bench(config_path, out_dir, input_path, methods, seeds, quantile, n, n_cols,
          factors, noise_scale, data_seed, **flags):
    """Run the benchmark protocol and write report.json + results.csv."""

    def body():
        raw = {}
        if config_path:
            with open(config_path) as handle:
                raw = json.load(handle)

        source_cfg = dict(raw.get("source", {}))
        if input_path:
            source_cfg = {"type": "csv", "path": input_path}
        synth_kwargs = {k: v for k, v in source_cfg.items() if k != "type"}
        for key, value in (("n", n), ("D", n_cols), ("n_factors", factors),
                           ("noise_scale", noise_scale), ("seed", data_seed)):
            if value is not None:
                synth_kwargs[key] = value
        if source_cfg.get("type") == "csv":
            source = source_cfg["path"]
        else:
            source = SyntheticSpec(**synth_kwargs)

        shared = _overrides_from_flags(**flags)
        if methods:
            method_specs = [MethodSpec(name.strip(), dict(shared))
                            for name in methods.split(",") if name.strip()]
        else:
            method_specs = [
                MethodSpec(m["name"], {**m.get("overrides", {}), **shared})
                for m in raw.get("methods", [{"name": "dl65"}])
            ]
        seed_list = (
            tuple(int(s) for s in seeds.split(",")) if seeds
            else tuple(raw.get("seeds", (1, 2, 3)))
        )
        q = quantile if quantile is not None else raw.get("censor_quantile", 0.05)

        cfg = ExperimentConfig(
            source=source,
            censor_quantile=q,
            methods=tuple(method_specs),
            seeds=seed_list,
        )
        report = run_experiment(cfg)
        json_path, csv_path = write_report(report, out_dir)
        failures = [r for r in report.results if r.error]
        for r in failures:
            log.warning("run failed: %s seed %s: %s", r.method, r.seed, r.error)
        click.echo(f"wrote {json_path} and {csv_path}")

    _wrap(body)


@main.command()
@click.option("--truth", "truth_path", required=True, type=click.Path(),
              help="complete positive CSV with the true values")
@click.option("--imputed", "imputed_path", required=True, type=click.Path())
@click.option("--mask", "mask_path", type=click.Path(), default=None,
              help="0/1 CSV (no header) marking imputed cells")
@click.option("--observed", "observed_path", type=click.Path(), default=None,
              help="the pre-imputation CSV; its zeros define the mask")
@click.option("--dl-file", type=click.Path(), default=None,
              help="detection limits for the curious-imputation counts")
@click.option("--out", "out_path", type=click.Path(), default=None,
              help="write the JSON report here instead of stdout")
def metrics(truth_path, imputed_path, mask_path, observed_path, dl_file, out_path):
    """Score an imputed CSV against the truth (RDCM, CED, curious counts)."""

    def body():
        header, truth = dataio.read_matrix_csv(truth_path)
        header_imp, imputed = dataio.read_matrix_csv(imputed_path)
        if imputed.shape != truth.shape:
            raise ValueError(
                f"shape mismatch: truth {truth.shape} vs imputed {imputed.shape}"
            )
        if mask_path is not None:
            mask = dataio.read_mask_csv(mask_path, truth.shape)
        elif observed_path is not None:
            _, observed = dataio.read_matrix_csv(observed_path)
            if observed.shape != truth.shape:
                raise ValueError(
                    f"shape mismatch: truth {truth.shape} vs observed {observed.shape}"
                )
            mask = observed == 0
        else:
            raise ValueError("provide --mask or --observed to identify imputed cells")

        payload = {"n_imputed": int(mask.sum())}
        if mask.any():
            payload["rdcm"] = rdcm(truth, imputed)
            payload["ced"] = ced(truth, imputed, mask)
        else:
            payload["rdcm"] = 0.0
            payload["ced"] = 0.0
            payload["warnings"] = ["mask is empty; nothing was imputed"]
        if dl_file is not None:
            d = DetectionLimits(dataio.read_limits_csv(dl_file, header))
            above, nonpositive = curious_count(imputed, mask, d)
            payload["curious_above_dl"] = above
            payload["curious_nonpositive"] = nonpositive
        else:
            nonpositive = int((imputed[mask] <= 0).sum()) if mask.any() else 0
            payload["curious_above_dl"] = None
            payload["curious_nonpositive"] = nonpositive
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
        if out_path:
            Path(out_path).write_text(text)
        else:
            click.echo(text, nl=False)

    _wrap(body)


if __name__ == "__main__":
    main()
