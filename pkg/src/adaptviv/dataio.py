"""JSON persistence for pipes, cases, parameter sets, S-N curves and cluster models.

Every document carries ``schema_version`` and ``kind``. Files are written in a
canonical form (sorted keys, two-space indent, shortest round-trip float
repr) so that ``save(load(x))`` reproduces ``x`` byte for byte. Sensor
samples are embedded as comma-separated text, or base64 of little-endian
float64 when ``encoding`` is ``"base64"``.
"""
from __future__ import annotations

import base64
import csv
import io
import json
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .characterize import CaseRecord, FeatureVector, SensorSeries
from .clustering import ClusterModel
from .hydro import CeParameterSet
from .predictor import SNCurve
from .structural import CurrentProfile, PipeModel

SCHEMA_VERSION = 1

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_nonneg = {"type": "number", "minimum": 0}
_opt_nonneg = {"type": ["number", "null"], "minimum": 0}

PIPE_SCHEMA = {
    "type": "object",
    "required": ["name", "length", "outer_diameter", "bending_stiffness", "mean_tension"],
    "properties": {
        "name": {"type": "string"},
        "key": {"type": "string"},
        "length": _pos,
        "outer_diameter": _pos,
        "mass_ratio": _opt_nonneg,
        "mass_per_length": _opt_nonneg,
        "bending_stiffness": _nonneg,
        "mean_tension": _pos,
        "stress_per_curvature": _opt_nonneg,
    },
    "anyOf": [
        {"required": ["mass_per_length"], "properties": {"mass_per_length": _nonneg}},
        {"required": ["mass_ratio"], "properties": {"mass_ratio": _nonneg}},
    ],
}

PROFILE_SCHEMA = {
    "type": "object",
    "required": ["z", "U"],
    "properties": {
        "z": {"type": "array", "items": _nonneg, "minItems": 2},
        "U": {"type": "array", "items": _nonneg, "minItems": 2},
    },
}

SENSOR_SCHEMA = {
    "type": "object",
    "required": ["z", "dt", "stress"],
    "properties": {
        "z": _nonneg,
        "dt": _pos,
        "encoding": {"enum": ["csv", "base64"]},
        "stress": {"type": "string"},
    },
}

CASE_SCHEMA = {
    "type": "object",
    "required": ["schema_version", "kind", "name", "pipe", "profile", "sensors"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "kind": {"const": "case"},
        "name": {"type": "string"},
        "pipe": PIPE_SCHEMA,
        "profile": PROFILE_SCHEMA,
        "strouhal": _pos,
        "dominant_frequency": {"type": ["number", "null"], "exclusiveMinimum": 0},
        "measured_fatigue": {"type": ["array", "null"], "items": _nonneg},
        "sensors": {"type": "array", "items": SENSOR_SCHEMA, "minItems": 2},
        "meta": {"type": "object"},
    },
}

_curve = {
    "type": "object",
    "required": ["ce0", "ad_peak", "ce_max", "ad_zero"],
    "properties": {"ce0": _nonneg, "ad_peak": _pos, "ce_max": _pos, "ad_zero": _pos},
}

PARAMS_SCHEMA = {
    "type": "object",
    "required": ["schema_version", "kind", "fhat_min", "fhat_max", "low", "high"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "kind": {"const": "ce_params"},
        "fhat_min": _pos,
        "fhat_max": _pos,
        "low": _curve,
        "high": _curve,
        "added_mass": _nonneg,
        "damping": _nonneg,
    },
}

SN_SCHEMA = {
    "type": "object",
    "required": ["schema_version", "kind", "m", "log_a"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "kind": {"const": "sn_curve"},
        "m": _pos,
        "log_a": _num,
    },
}

MODEL_SCHEMA = {
    "type": "object",
    "required": ["schema_version", "kind", "algorithm", "k", "seed", "scaler", "labels"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "kind": {"const": "cluster_model"},
        "algorithm": {"enum": ["kmeans", "gmm", "spectral"]},
        "k": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer"},
        "labels": {"type": "array", "items": {"type": "integer"}},
    },
}


class SchemaError(ValueError):
    """Document does not match its schema; ``pointer`` locates the offending field."""

    def __init__(self, pointer, message):
        super().__init__(f"{pointer or '/'}: {message}")
        self.pointer = pointer


def _pointer(parts):
    return "".join("/" + str(p).replace("~", "~0").replace("/", "~1") for p in parts)


def validate(doc, schema):
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(doc), key=lambda e: (len(e.absolute_path), list(map(str, e.absolute_path))))
    if not errors:
        return
    err = errors[0]
    path = list(err.absolute_path)
    if err.validator == "required" and isinstance(err.instance, dict):
        missing = [p for p in err.validator_value if p not in err.instance]
        if missing:
            path.append(missing[0])
            raise SchemaError(_pointer(path), "required field is missing")
    raise SchemaError(_pointer(path), err.message)


def dumps(doc):
    return json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False, allow_nan=False) + "\n"


def write_json(path, doc):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(doc), encoding="utf-8")


def read_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _wrap(pointer, fn, *args):
    try:
        return fn(*args)
    except (ValueError, TypeError, KeyError) as exc:
        if isinstance(exc, SchemaError):
            raise
        raise SchemaError(pointer, str(exc)) from exc


# --- arrays ----------------------------------------------------------------

def encode_samples(values, encoding="csv"):
    values = np.asarray(values, dtype=float)
    if encoding == "csv":
        return ",".join(repr(float(v)) for v in values)
    if encoding == "base64":
        return base64.b64encode(values.astype("<f8").tobytes()).decode("ascii")
    raise ValueError(f"unknown sample encoding {encoding!r}")


def decode_samples(text, encoding="csv"):
    if encoding == "csv":
        return np.array([float(v) for v in text.split(",")]) if text else np.zeros(0)
    if encoding == "base64":
        return np.frombuffer(base64.b64decode(text), dtype="<f8").astype(float)
    raise ValueError(f"unknown sample encoding {encoding!r}")


# --- pipes -----------------------------------------------------------------

def pipe_from_doc(d):
    return PipeModel.from_dict(d)


def load_pipes(path=None):
    """Pipes keyed by short name; defaults to the bundled reference table."""
    if path is None:
        text = resources.files("adaptviv").joinpath("data/pipes.json").read_text(encoding="utf-8")
        doc = json.loads(text)
    else:
        doc = read_json(path)
    out = {}
    for i, entry in enumerate(doc["pipes"]):
        validate(entry, PIPE_SCHEMA)
        key = entry.get("key", entry["name"])
        out[key] = _wrap(f"/pipes/{i}", pipe_from_doc, entry)
    return out


def reference_pipe(key, stress_per_curvature=None):
    pipe = load_pipes()[key]
    if stress_per_curvature is None:
        return pipe
    d = pipe.to_dict()
    d["stress_per_curvature"] = stress_per_curvature
    return PipeModel.from_dict(d)


# --- cases -----------------------------------------------------------------

def case_to_doc(case, encoding="csv"):
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "case",
        "name": case.name,
        "pipe": case.pipe.to_dict(),
        "profile": case.profile.to_dict(),
        "strouhal": case.strouhal,
        "dominant_frequency": case.dominant_frequency,
        "measured_fatigue": None if case.measured_fatigue is None else [float(v) for v in case.measured_fatigue],
        "sensors": [
            {"z": float(s.position), "dt": float(s.dt), "encoding": encoding, "stress": encode_samples(s.stress, encoding)}
            for s in case.sensors
        ],
        "meta": case.meta,
    }


def case_from_doc(doc):
    validate(doc, CASE_SCHEMA)
    pipe = _wrap("/pipe", pipe_from_doc, doc["pipe"])
    profile = _wrap("/profile", CurrentProfile.from_dict, doc["profile"])
    sensors = []
    for i, s in enumerate(doc["sensors"]):
        enc = s.get("encoding", "csv")
        samples = _wrap(f"/sensors/{i}/stress", decode_samples, s["stress"], enc)
        sensors.append(_wrap(f"/sensors/{i}", SensorSeries, float(s["z"]), float(s["dt"]), samples))
    mf = doc.get("measured_fatigue")
    return _wrap(
        "",
        lambda: CaseRecord(
            name=doc["name"],
            pipe=pipe,
            profile=profile,
            sensors=sensors,
            measured_fatigue=None if mf is None else np.asarray(mf, dtype=float),
            dominant_frequency=doc.get("dominant_frequency"),
            strouhal=float(doc.get("strouhal", 0.2)),
            meta=doc.get("meta", {}),
        ),
    )


def save_case(case, path, encoding="csv"):
    write_json(path, case_to_doc(case, encoding))


def load_case(path):
    return case_from_doc(read_json(path))


def load_cases(directory):
    """All ``*.json`` cases in a directory, sorted by file name."""
    paths = sorted(Path(directory).glob("*.json"))
    if not paths:
        raise FileNotFoundError(f"no case files in {directory}")
    return [load_case(p) for p in paths]


# --- parameter sets, S-N curves, cluster models ------------------------------

def params_to_doc(params):
    return {"schema_version": SCHEMA_VERSION, "kind": "ce_params", **params.to_dict()}


def params_from_doc(doc):
    validate(doc, PARAMS_SCHEMA)
    return _wrap("", CeParameterSet.from_dict, doc)


def save_params(params, path):
    write_json(path, params_to_doc(params))


def load_params(path):
    return params_from_doc(read_json(path))


def save_param_sets(param_sets, path, skipped=None):
    """Per-cluster parameter sets: ``{"clusters": {label: params}, "skipped": {...}}``."""
    doc = {
        "schema_version": SCHEMA_VERSION,
        "kind": "ce_param_sets",
        "clusters": {str(k): params_to_doc(v) for k, v in param_sets.items()},
        "skipped": {str(k): v for k, v in (skipped or {}).items()},
    }
    write_json(path, doc)


def load_param_sets(path):
    """Either a per-cluster file or a single parameter set (returned under key ``"all"``)."""
    doc = read_json(path)
    if doc.get("kind") == "ce_param_sets":
        return {k: _wrap(f"/clusters/{k}", params_from_doc, v) for k, v in doc["clusters"].items()}
    return {"all": params_from_doc(doc)}


def sn_to_doc(sn):
    return {"schema_version": SCHEMA_VERSION, "kind": "sn_curve", **sn.to_dict()}


def sn_from_doc(doc):
    validate(doc, SN_SCHEMA)
    return _wrap("", SNCurve.from_dict, doc)


def save_sn(sn, path):
    write_json(path, sn_to_doc(sn))


def load_sn(path):
    return sn_from_doc(read_json(path))


def model_to_doc(model):
    return {"schema_version": SCHEMA_VERSION, "kind": "cluster_model", **model.to_dict()}


def model_from_doc(doc):
    validate(doc, MODEL_SCHEMA)
    return _wrap("", ClusterModel.from_dict, doc)


def save_model(model, path):
    write_json(path, model_to_doc(model))


def load_model(path):
    return model_from_doc(read_json(path))


# --- tables ----------------------------------------------------------------

FEATURE_HEADER = ["case", "n", "R31", "F"]


def write_features(path, rows):
    """``rows``: iterable of (case name, FeatureVector)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FEATURE_HEADER)
        for name, fv in rows:
            w.writerow([name, repr(fv.mode_order), repr(fv.stress_ratio), repr(fv.stiffness_ratio)])


def read_features(path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != FEATURE_HEADER:
            raise SchemaError("", f"feature table header must be {','.join(FEATURE_HEADER)}")
        rows = []
        for i, r in enumerate(reader):
            rows.append(
                (r["case"], _wrap(f"/{i}", lambda r=r: FeatureVector(float(r["n"]), float(r["R31"]), float(r["F"]))))
            )
    return rows


def write_labels(path, names, labels):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["case", "cluster"])
        for name, lab in zip(names, labels):
            w.writerow([name, int(lab)])


def read_labels(path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["case", "cluster"]:
            raise SchemaError("", "labels table header must be case,cluster")
        return {r["case"]: str(r["cluster"]) for r in reader}


def csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()
