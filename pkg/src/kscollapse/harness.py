"""Persistence of runs (CSV time series, JSON summary) and the sweep driver."""
from __future__ import annotations

import csv
import dataclasses
import glob as _glob
import io
import json
import logging
import math
import traceback
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import jsonschema
import numpy as np

from . import diagnostics as dg
from .config import ConfigError, RunConfig, dump_config, parse_config
from .records import CSV_FIELDS, CSV_HEADER, Outcome, RunRecord, Termination
from .runner import execute

log = logging.getLogger(__name__)

INDEX_HEADER = "run_id,geometry,tau,m_or_M,q,n,outcome,u_max,t_final"

_num = {"type": ["number", "null"]}
SUMMARY_SCHEMA = {
    "type": "object",
    "required": ["name", "geometry", "outcome", "termination", "t_final", "u_max", "theta",
                 "c1", "c2", "steps", "samples", "wall_time", "residuals"],
    "properties": {
        "name": {"type": "string"},
        "geometry": {"enum": ["interval", "radial"]},
        "outcome": {"enum": [o.value for o in Outcome]},
        "termination": {"enum": [t.value for t in Termination]},
        "t_final": {"type": "number"},
        "u_max": {"type": "number"},
        "theta": _num,
        "m_star": {"type": "number"},
        "M_over_m_star": {"type": "number"},
        "c1": {"type": "number"},
        "c2": {"type": "number"},
        "L_lower": _num,
        "threshold": {"type": "number"},
        "steps": {"type": "integer", "minimum": 0},
        "samples": {"type": "integer", "minimum": 1},
        "wall_time": {"type": "number", "minimum": 0},
        "residuals": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["n_cells", "identity_max", "bound_excess_max", "lyapunov_rise_max",
                             "mass_drift", "order"],
                "properties": {
                    "n_cells": {"type": "integer", "minimum": 1},
                    "identity_max": _num,
                    "bound_excess_max": _num,
                    "lyapunov_rise_max": _num,
                    "mass_drift": _num,
                    "order": _num,
                },
            },
        },
    },
}


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def timeseries_text(record: RunRecord) -> str:
    buf = io.StringIO()
    buf.write(CSV_HEADER + "\n")
    for row in record.rows:
        buf.write(",".join(_fmt(x) for x in row.values()) + "\n")
    return buf.getvalue()


def emit_timeseries(record: RunRecord, path) -> Path:
    """One CSV row per diagnostic sample, values at 17 significant digits."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        fh.write(timeseries_text(record))
    return path


def read_timeseries(path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(x) for x in r] for r in reader]
    if ",".join(header) != CSV_HEADER:
        raise ValueError(f"unexpected header in {path}")
    data = np.array(rows, dtype=float).reshape(-1, len(CSV_FIELDS))
    return {k: data[:, i] for i, k in enumerate(CSV_FIELDS)}


def _finite_or_none(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def residual_row(record: RunRecord) -> dict:
    """Worst identity residual, bound excess, Lyapunov rise and mass drift of one run."""
    idx, der, _ = record.moment_derivative()
    ident = np.array([record.rows[i].rhs_identity for i in idx])
    bound = np.array([record.rows[i].rhs_bound for i in idx])

    def worst(x, absolute=False):
        x = x[np.isfinite(x)]
        if x.size == 0:
            return None
        return float(np.max(np.abs(x) if absolute else x))

    L = record.column("L")
    mass = record.column("u_mass")
    return {
        "n_cells": int(record.config.n_cells),
        "identity_max": worst(der - ident, absolute=True),
        "bound_excess_max": worst(der - bound),
        "lyapunov_rise_max": worst(np.diff(L)) if L.size > 1 else None,
        "mass_drift": _finite_or_none(np.max(np.abs(mass - mass[0])) / mass[0]),
        "order": None,
    }


def refinement_table(cfg: RunConfig, levels: int, t_end: float | None = None,
                     first: RunRecord | None = None) -> list[dict]:
    """Residual rows on n_cells * 2^k, k < levels, with observed orders of the identity residual.

    The diagnostic cadence is scaled with the step count so samples land
    near the same times on every level.
    """
    rows = []
    for k in range(levels):
        if k == 0 and first is not None:
            rows.append(residual_row(first))
            continue
        c = cfg.with_(n_cells=cfg.n_cells * 2**k, diag_cadence=cfg.diag_cadence * 4**k)
        if t_end is not None:
            c = c.with_(controls=dataclasses.replace(c.controls, t_end=t_end))
        rows.append(residual_row(execute(c)))
    for prev, cur in zip(rows, rows[1:]):
        a, b = prev["identity_max"], cur["identity_max"]
        if a and b and a > 0 and b > 0:
            cur["order"] = math.log2(a / b)
    return rows


def summary_dict(record: RunRecord, residuals: list[dict] | None = None) -> dict:
    cfg = record.config
    out = {
        "name": cfg.name,
        "geometry": cfg.geometry,
        "outcome": record.outcome.value,
        "termination": record.termination.value,
        "t_final": float(record.t_final),
        "u_max": float(record.u_max_reached),
        "theta": _finite_or_none(record.theta),
        "c1": float(record.bounds.c1),
        "c2": float(record.bounds.c2),
        "L_lower": _finite_or_none(record.bounds.L_lower),
        "threshold": float(record.threshold),
        "steps": len(record.step_t) - 1,
        "samples": len(record.rows),
        "wall_time": float(record.wall_time),
        "residuals": residuals if residuals is not None else [residual_row(record)],
    }
    if cfg.geometry == "radial":
        ms = dg.m_star(cfg.n_dim)
        out["m_star"] = ms
        out["M_over_m_star"] = cfg.init.mass / ms
    return out


def validate_summary(summary: dict) -> None:
    jsonschema.validate(summary, SUMMARY_SCHEMA)


def emit_summary(record: RunRecord, path, residuals: list[dict] | None = None) -> Path:
    summary = summary_dict(record, residuals)
    validate_summary(summary)
    path = Path(path)
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def write_run(record: RunRecord, out_dir, residuals: list[dict] | None = None) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    emit_timeseries(record, out / "timeseries.csv")
    emit_summary(record, out / "summary.json", residuals)
    (out / "config.ini").write_text(dump_config(record.config))
    return out


def simulate(cfg: RunConfig, out_dir, refine: int = 0) -> RunRecord:
    rec = execute(cfg)
    residuals = None
    if refine > 0:
        residuals = refinement_table(cfg, refine + 1, first=rec)
    write_run(rec, out_dir, residuals)
    return rec


# ---------------------------------------------------------------------------
# sweeps


def load_configs(pattern: str) -> list[tuple[str, RunConfig]]:
    """Parse every file matching ``pattern`` (sorted by path); raises ConfigError."""
    out = []
    for path in sorted(_glob.glob(pattern)):
        try:
            cfg = parse_config(Path(path).read_text())
        except ConfigError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        if cfg.name == "run":
            cfg = cfg.with_(name=Path(path).stem)
        out.append((path, cfg))
    return out


def _run_one(args):
    run_id, cfg, out_dir = args
    run_dir = Path(out_dir) / run_id
    try:
        rec = execute(cfg)
        write_run(rec, run_dir)
        return run_id, rec.outcome.value, float(rec.u_max_reached), float(rec.t_final), None
    except Exception as exc:  # recorded per run, the sweep continues
        run_dir.mkdir(parents=True, exist_ok=True)
        (run_dir / "error.txt").write_text(traceback.format_exc())
        return run_id, "Failed", math.nan, math.nan, f"{type(exc).__name__}: {exc}"


def _index_line(run_id, cfg: RunConfig, outcome, u_max, t_final) -> str:
    radial = cfg.geometry == "radial"
    fields = [run_id, cfg.geometry, "" if radial else _fmt(cfg.tau), _fmt(cfg.init.mass),
              "" if radial else _fmt(cfg.q), str(cfg.n_dim), outcome,
              "" if math.isnan(u_max) else _fmt(u_max),
              "" if math.isnan(t_final) else _fmt(t_final)]
    return ",".join(fields)


def sweep(configs: list[RunConfig], out_dir, workers: int = 1) -> list[dict]:
    """Run every config into ``out_dir/<run_id>/`` and write ``out_dir/index.csv``.

    Run ids are the list position plus the config name, so identical configs
    get separate directories.  Runs share no state; the index is written
    once, after all runs, in list order.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    jobs = [(f"{k:04d}-{cfg.name}", cfg, str(out)) for k, cfg in enumerate(configs)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_one, jobs))
    else:
        results = [_run_one(j) for j in jobs]
    lines = [INDEX_HEADER]
    report = []
    for (run_id, cfg, _), (_, outcome, u_max, t_final, err) in zip(jobs, results):
        lines.append(_index_line(run_id, cfg, outcome, u_max, t_final))
        report.append({"run_id": run_id, "outcome": outcome, "error": err})
        if err:
            log.error("%s failed: %s", run_id, err)
    (out / "index.csv").write_text("\n".join(lines) + "\n")
    return report


__all__ = ["CSV_HEADER", "INDEX_HEADER", "SUMMARY_SCHEMA", "emit_timeseries", "emit_summary",
           "read_timeseries", "residual_row", "refinement_table", "summary_dict",
           "validate_summary", "write_run", "simulate", "load_configs", "sweep"]
