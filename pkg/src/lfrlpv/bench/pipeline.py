"""Benchmark orchestration: identify -> factorize -> embed -> evaluate -> export."""
from __future__ import annotations

import dataclasses
import json
import logging
import os
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, LfrLpvError
from ..ident.data import TRANSIENT_SKIP, Dataset, FitReport, compute_rmse
from ..ident.feedback import identify_feedback_lfr
from ..ident.wiener_hammerstein import identify_wiener_hammerstein
from ..lfr import simulate_nl_lfr
from ..lpv import embed, simulate_lpv_selfscheduled
from ..lti import simulate_lti
from ..static_nl import factorize
from .io import (atomic_write, csv_text, ingest_csv, load_models, read_columns, save_models)
from .spectrum import export_spectrum

log = logging.getLogger(__name__)

PIPELINES = ("wiener_hammerstein", "feedback_lfr", "simulate_only", "embed_only")


class StageError(LfrLpvError):
    """A pipeline stage failed; ``stage`` names it."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {cause}")


@dataclass
class BenchmarkConfig:
    pipeline: str = "wiener_hammerstein"
    estimation: str = None
    validation: str = None
    model: str = None
    input: str = None
    order: int = None
    delay: int = 1
    num_order: int = None
    nl_degree: int = 3
    tanh_neurons: int = None
    max_iter: int = 100
    grad_mode: str = "analytic"
    transient_skip: int = TRANSIENT_SKIP
    output_dir: str = "bench_out"
    seed: int = 1
    units: str = ""

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.pipeline not in PIPELINES:
            raise ConfigError(f"pipeline must be one of {PIPELINES}, got {self.pipeline!r}")
        if self.pipeline in ("wiener_hammerstein", "feedback_lfr", "embed_only") \
                and not self.estimation:
            raise ConfigError(f"pipeline {self.pipeline} needs an estimation dataset")
        if self.pipeline in ("simulate_only", "embed_only") and not self.model:
            raise ConfigError(f"pipeline {self.pipeline} needs a model document")
        if self.pipeline == "simulate_only" and not self.input:
            raise ConfigError("simulate_only needs an input CSV")
        if self.order is not None and self.order < 1:
            raise ConfigError("order must be at least 1")
        if self.nl_degree < 0:
            raise ConfigError("nl_degree must be non-negative")
        if self.transient_skip < 0:
            raise ConfigError("transient_skip must be non-negative")
        if self.grad_mode not in ("analytic", "fd"):
            raise ConfigError("grad_mode must be 'analytic' or 'fd'")

    @classmethod
    def from_file(cls, path, **overrides):
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot load config {path}: {exc}") from exc
        raw.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw):
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(raw) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**raw)


@dataclass
class PipelineResult:
    summary: dict = field(default_factory=dict)
    report: FitReport = None
    files: dict = field(default_factory=dict)
    table: str = ""


def rmse_table(summary, units=""):
    """Text table in the layout LTI + offset | NL | LPV, one row per dataset."""
    unit = f" ({units})" if units else ""
    cols = ("LTI + offset", "NL", "LPV")
    lines = [f"{'':16s}" + "".join(f"{c:>16s}" for c in cols)]
    for part in ("est", "val"):
        row = summary.get(part)
        if row is None:
            continue
        cells = "".join(f"{row[k]:>16.6g}" if row.get(k) is not None else f"{'-':>16s}"
                        for k in ("lti", "nl", "lpv"))
        lines.append(f"{'RMSE ' + part + unit:16s}" + cells)
    return "\n".join(lines)


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except LfrLpvError as exc:
        raise StageError(name, exc) from exc


def _load_data(config):
    est = _stage("ingest", ingest_csv, config.estimation, config.transient_skip)
    val = None
    if config.validation:
        val = _stage("ingest", ingest_csv, config.validation, config.transient_skip)
    if val is None:
        return est, Dataset(est.u, est.y, est.sample_period, None, est.transient_skip)
    return est, Dataset.concatenate(est, val, min(est.transient_skip, val.transient_skip),
                                    est.sample_period)


def _segments(data):
    segs = {"est": data.estimation()}
    val = data.validation()
    if val is not None:
        segs["val"] = val
    return segs


def _export(config, result, segs, sims, nl, lpv, smap, report):
    out = config.output_dir
    files = {
        "models": os.path.join(out, "models.json"),
        "report": os.path.join(out, "fit_report.json"),
        "time": os.path.join(out, "time_errors.csv"),
        "spectrum": os.path.join(out, "spectrum.csv"),
        "summary": os.path.join(out, "summary.txt"),
    }
    save_models(files["models"], nl, lpv, smap, report)
    if report is not None:
        atomic_write(files["report"], report.to_json() + "\n")
        files["cost_history"] = os.path.join(out, "cost_history.csv")
        atomic_write(files["cost_history"], report.cost_history_csv())
    else:
        del files["report"]
    part = "val" if "val" in segs else "est"
    seg = segs[part]
    y = seg.y
    cols = {"t": np.arange(y.size, dtype=float), "y_meas": y}
    if sims[part].get("lti") is not None:
        cols["e_lti"] = sims[part]["lti"] - y
    cols["e_nl"] = sims[part]["nl"] - y
    cols["e_lpv"] = sims[part]["lpv"] - y
    atomic_write(files["time"], csv_text(cols))
    spec_cols = {}
    for name, sig in cols.items():
        if name == "t":
            continue
        spec = export_spectrum(sig, seg.transient_skip)
        if not spec_cols:
            spec_cols["freq"] = spec.freqs
        spec_cols[name.replace("e_", "E_").replace("y_meas", "Y_meas")] = spec.magnitude
    atomic_write(files["spectrum"], csv_text(spec_cols))
    atomic_write(files["summary"], result.table + "\n")
    result.files = files


def _evaluate(segs, nl, lpv, smap, lin=None):
    """Simulate every model on every segment and compute RMSEs from the same arrays."""
    sims, summary = {}, {}
    for part, seg in segs.items():
        s = {"nl": simulate_nl_lfr(nl, seg.u).y,
             "lpv": simulate_lpv_selfscheduled(lpv, smap, seg.u).y}
        if lin is not None:
            model, offset = lin
            s["lti"] = simulate_lti(model, seg.u) + offset
        sims[part] = s
        summary[part] = {k: compute_rmse(v, seg.y, seg.transient_skip) for k, v in s.items()}
        summary[part].setdefault("lti", None)
    return sims, summary


def _identify(config, data):
    est = data.estimation()
    if config.pipeline == "wiener_hammerstein":
        order = config.order or 4
        res = _stage("identify", identify_wiener_hammerstein, data, order, config.nl_degree,
                     config.delay, config.num_order, config.max_iter, config.grad_mode,
                     tanh_neurons=config.tanh_neurons, seed=config.seed)
    else:
        order = config.order or 2
        res = _stage("identify", identify_feedback_lfr, data, order, config.nl_degree,
                     config.num_order, config.max_iter, config.grad_mode)
    lin = res.linear
    y_lin = simulate_lti(lin, est.u)
    offset = float(np.mean((est.y - y_lin)[est.transient_skip:]))
    return res.model, res.report, (lin, offset)


def run_pipeline(config):
    """Execute ``config.pipeline`` and write its artifacts to ``config.output_dir``."""
    config.validate()
    result = PipelineResult()
    if config.pipeline == "simulate_only":
        docs = _stage("load", load_models, config.model)
        if docs["nl_lfr"] is None:
            raise StageError("load", "model document has no nl_lfr section")
        cols = _stage("ingest", read_columns, config.input, ("u",))
        traj = _stage("simulate", simulate_nl_lfr, docs["nl_lfr"], cols["u"])
        path = os.path.join(config.output_dir, "simulation.csv")
        t = cols.get("t", np.arange(cols["u"].size, dtype=float))
        atomic_write(path, csv_text({"t": t, "u": cols["u"], "y": traj.y, "z": traj.z,
                                     "w": traj.w}))
        result.files = {"simulation": path}
        return result

    est, data = _load_data(config)
    segs = _segments(data)
    lin = None
    if config.pipeline == "embed_only":
        docs = _stage("load", load_models, config.model)
        nl = docs["nl_lfr"]
        if nl is None:
            raise StageError("load", "model document has no nl_lfr section")
        report = docs["fit_report"]
    else:
        nl, report, lin = _identify(config, data)

    z = _stage("embed", simulate_nl_lfr, nl, segs["est"].u).z
    if z.max() > z.min() and nl.f.kind != "polynomial":
        nl = nl.replace(f=nl.f.with_region((float(z.min()), float(z.max()))))
    fac = _stage("factorize", factorize, nl.f, seed=config.seed)
    lpv, smap = _stage("embed", embed, nl, fac, segs["est"].u)
    sims, summary = _stage("evaluate", _evaluate, segs, nl, lpv, smap, lin)
    result.summary = summary
    result.report = report
    result.table = rmse_table(summary, config.units)
    _export(config, result, segs, sims, nl, lpv, smap, report)
    log.info("RMSE summary\n%s", result.table)
    return result


def evaluate_models(config):
    """RMSE table for a stored model document on the configured dataset(s)."""
    docs = _stage("load", load_models, config.model)
    nl, lpv, smap = docs["nl_lfr"], docs["lpv_affine"], docs["scheduling_map"]
    if nl is None or lpv is None or smap is None:
        raise StageError("load", "model document needs nl_lfr, lpv_affine and scheduling_map")
    _, data = _load_data(config)
    segs = _segments(data)
    _, summary = _stage("evaluate", _evaluate, segs, nl, lpv, smap)
    return PipelineResult(summary, docs["fit_report"], {}, rmse_table(summary, config.units))
