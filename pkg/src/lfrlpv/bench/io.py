"""CSV ingestion/export and the JSON model document."""
from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile

import numpy as np

from ..errors import ParseError
from ..ident.data import TRANSIENT_SKIP, Dataset, FitReport
from ..lfr import NonlinearLfrModel
from ..lpv import AffineLpvModel, SchedulingMap
from ..lti import StateSpaceModel, TransferFunction
from ..static_nl import StaticNonlinearity

SCHEMA_VERSION = 1

_NL_FIELDS = {
    "polynomial": ("coeffs",),
    "tanh_network": ("input_weight", "bias", "output_weight", "output_bias"),
    "rbf_network": ("center", "width", "output_weight", "output_bias"),
}


def atomic_write(path, text):
    """Write ``text`` to ``path`` through a temporary file and a rename."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# --------------------------------------------------------------------------- CSV

def read_columns(path, required=()):
    """Parse a headed numeric CSV into a dict of float arrays."""
    try:
        with open(path, newline="") as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("file is empty", line=1) from None
    header = [h.strip() for h in header]
    for col in required:
        if col not in header:
            raise ParseError(f"missing required column {col!r}", line=1)
    rows = []
    for line_no, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} fields, got {len(row)}", line=line_no)
        values = []
        for cell in row:
            try:
                v = float(cell)
            except ValueError:
                raise ParseError(f"non-numeric cell {cell.strip()!r}", line=line_no) from None
            if not math.isfinite(v):
                raise ParseError(f"non-finite value {cell.strip()!r}", line=line_no)
            values.append(v)
        rows.append(values)
    if not rows:
        raise ParseError("no data rows", line=2)
    data = np.array(rows, dtype=float)
    return {name: data[:, k] for k, name in enumerate(header)}


def ingest_csv(path, transient_skip=TRANSIENT_SKIP):
    """Load a dataset from a CSV with columns ``u`` and ``y`` (``t`` optional).

    The transient skip is clipped so that at least one sample is retained.
    """
    cols = read_columns(path, required=("u", "y"))
    n = cols["u"].size
    period = None
    if "t" in cols and n > 1:
        period = float(np.median(np.diff(cols["t"])))
    return Dataset(cols["u"], cols["y"], period, None, min(transient_skip, n - 1))


def format_float(v):
    return repr(float(v))


def csv_text(columns):
    """Render named equal-length columns with round-trip exact floats."""
    names = list(columns)
    arrays = [np.asarray(columns[k]).reshape(-1) for k in names]
    lines = [",".join(names)]
    for row in zip(*arrays):
        lines.append(",".join(format_float(v) for v in row))
    return "\n".join(lines) + "\n"


def write_csv(path, columns):
    atomic_write(path, csv_text(columns))


# --------------------------------------------------------------------------- JSON

def _mat(a):
    return [[float(v) for v in row] for row in np.atleast_2d(np.asarray(a, dtype=float))]


def _col(v):
    return [[float(x)] for x in np.asarray(v, dtype=float).reshape(-1)]


def _row(v):
    return [[float(x) for x in np.asarray(v, dtype=float).reshape(-1)]]


def _vec(v):
    return [float(x) for x in np.asarray(v, dtype=float).reshape(-1)]


def _flat(v):
    return np.asarray(v, dtype=float).reshape(-1)


def _sq(v, n):
    a = np.asarray(v, dtype=float)
    return a.reshape(n, n) if a.size == n * n else a.reshape(0, 0)


def nonlinearity_to_dict(f):
    th = f.theta
    if f.kind == "polynomial":
        params = {"coeffs": _vec(th)}
    else:
        k = f.neurons
        names = _NL_FIELDS[f.kind]
        params = {names[0]: _vec(th[:k]), names[1]: _vec(th[k:2 * k]),
                  names[2]: _vec(th[2 * k:3 * k]), names[3]: float(th[3 * k])}
    return {"kind": f.kind, "params": params, "region": [float(v) for v in f.region]}


def nonlinearity_from_dict(d):
    kind = d["kind"]
    if kind not in _NL_FIELDS:
        raise ParseError(f"unknown nonlinearity kind {kind!r}")
    p = d["params"]
    theta = np.concatenate([np.atleast_1d(np.asarray(p[name], dtype=float))
                            for name in _NL_FIELDS[kind]])
    return StaticNonlinearity(kind, theta, tuple(d["region"]))


def state_space_to_dict(m):
    return {"A": _mat(m.A) if m.n else [], "B": _mat(m.B) if m.n else [],
            "C": _mat(m.C) if m.n else [], "D": _mat(m.D),
            "input_labels": list(m.input_labels), "output_labels": list(m.output_labels)}


def state_space_from_dict(d):
    D = np.asarray(d["D"], dtype=float)
    n = len(d["A"])
    p, m = D.shape
    B = np.asarray(d["B"], dtype=float).reshape(n, m)
    C = np.asarray(d["C"], dtype=float).reshape(p, n)
    return StateSpaceModel(_sq(d["A"], n), B, C, D, d.get("input_labels"), d.get("output_labels"))


def transfer_function_to_dict(tf):
    return {"num": _vec(tf.num), "den": _vec(tf.den)}


def transfer_function_from_dict(d):
    return TransferFunction(d["num"], d["den"])


def nl_lfr_to_dict(m):
    return {
        "n": m.n,
        "A": _mat(m.A) if m.n else [],
        "B_u": _col(m.B_u), "B_w": _col(m.B_w),
        "C_y": _row(m.C_y), "C_z": _row(m.C_z),
        "D_yu": m.D_yu, "D_yw": m.D_yw, "D_zu": m.D_zu, "D_zw": m.D_zw,
        "y_offset": m.y_offset,
        "nonlinearity": nonlinearity_to_dict(m.f),
    }


def nl_lfr_from_dict(d):
    n = int(d["n"])
    return NonlinearLfrModel(_sq(d["A"], n), _flat(d["B_u"]), _flat(d["B_w"]),
                             _flat(d["C_y"]), _flat(d["C_z"]), d["D_yu"], d["D_yw"],
                             d["D_zu"], nonlinearity_from_dict(d["nonlinearity"]),
                             d.get("y_offset", 0.0), d.get("D_zw", 0.0))


def lpv_to_dict(m):
    return {
        "n": m.n,
        "A": _mat(m.A) if m.n else [], "A_p": _mat(m.A_p) if m.n else [],
        "B_u": _col(m.B_u), "B_p": _col(m.B_p),
        "C_y": _row(m.C_y), "C_p": _row(m.C_p),
        "D_yu": m.D_yu, "D_p": m.D_p,
        "u_offset": m.u_offset, "y_offset_total": m.y_offset_total,
        "inherited_y_offset": m.inherited_y_offset,
        "x_offset": _vec(m.x_offset),
    }


def lpv_from_dict(d):
    n = int(d["n"])
    return AffineLpvModel(_sq(d["A"], n), _sq(d["A_p"], n), _flat(d["B_u"]), _flat(d["B_p"]),
                          _flat(d["C_y"]), _flat(d["C_p"]), d["D_yu"], d["D_p"],
                          d["u_offset"], d["y_offset_total"], _flat(d["x_offset"]),
                          d.get("inherited_y_offset", 0.0))


def scheduling_map_to_dict(s):
    return {"fbar": nonlinearity_to_dict(s.fbar), "C_z": _row(s.C_z), "D_zu": s.D_zu,
            "observed_range": [float(v) for v in s.observed_range],
            "z_coordinates": "offset-corrected input"}


def scheduling_map_from_dict(d):
    return SchedulingMap(nonlinearity_from_dict(d["fbar"]), _flat(d["C_z"]), d["D_zu"],
                         tuple(d["observed_range"]))


def model_document(nl=None, lpv=None, smap=None, report=None):
    doc = {"schema_version": SCHEMA_VERSION}
    if nl is not None:
        doc["nl_lfr"] = nl_lfr_to_dict(nl)
    if lpv is not None:
        doc["lpv_affine"] = lpv_to_dict(lpv)
    if smap is not None:
        doc["scheduling_map"] = scheduling_map_to_dict(smap)
    if report is not None:
        doc["fit_report"] = report.to_dict()
    return doc


def dumps_document(doc):
    return json.dumps(doc, indent=2) + "\n"


def save_models(path, nl=None, lpv=None, smap=None, report=None):
    atomic_write(path, dumps_document(model_document(nl, lpv, smap, report)))


def parse_document(text):
    """Parse a model document into a dict of model objects (missing sections are None)."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", line=exc.lineno) from exc
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ParseError(f"unsupported schema_version {doc.get('schema_version')!r}")
    try:
        return {
            "nl_lfr": nl_lfr_from_dict(doc["nl_lfr"]) if "nl_lfr" in doc else None,
            "lpv_affine": lpv_from_dict(doc["lpv_affine"]) if "lpv_affine" in doc else None,
            "scheduling_map": (scheduling_map_from_dict(doc["scheduling_map"])
                               if "scheduling_map" in doc else None),
            "fit_report": (FitReport.from_dict(doc["fit_report"])
                           if "fit_report" in doc else None),
        }
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed model document: {exc}") from exc


def load_models(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    return parse_document(text)
