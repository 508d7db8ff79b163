"""JSON configuration parsing, object construction and report serialization."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np

from rtlab import __version__
from rtlab.channels import KrausChannel, PerturbationSpec, index_map_from_pairs, make_named_channel
from rtlab.classifiers import ScoreClassifier, StochasticClassifier
from rtlab.errors import ConfigError, RTLabError
from rtlab.metrics import REPORT_KEYS
from rtlab.states import (DensityMatrix, LabeledEnsemble, hemisphere_oracle, lookup_oracle,
                          observable_sign_oracle)

CSV_COLUMNS = ("key", "label", "value", "standard_error", "method")


def load_schema() -> dict:
    text = resources.files("rtlab").joinpath("schema/config.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


# Line lookup -----------------------------------------------------------------

_WS = " \t\r\n"


def _node_lines(text: str) -> dict[tuple, int]:
    """1-based starting line of every value in a JSON document, keyed by path."""
    decoder = json.JSONDecoder()
    lines: dict[tuple, int] = {}

    def skip(i):
        while i < len(text) and text[i] in _WS:
            i += 1
        return i

    def value(i, path):
        i = skip(i)
        lines[path] = text.count("\n", 0, i) + 1
        ch = text[i]
        if ch == "{":
            i = skip(i + 1)
            if text[i] == "}":
                return i + 1
            while True:
                key, i = json.decoder.scanstring(text, skip(i) + 1)
                i = skip(i) + 1  # colon
                i = skip(value(i, path + (key,)))
                if text[i] == "}":
                    return i + 1
                i += 1
        if ch == "[":
            i = skip(i + 1)
            if text[i] == "]":
                return i + 1
            k = 0
            while True:
                i = skip(value(i, path + (k,)))
                k += 1
                if text[i] == "]":
                    return i + 1
                i += 1
        _, end = decoder.raw_decode(text, i)
        return end

    value(0, ())
    return lines


def _line_of(text: str, path) -> int | None:
    try:
        lines = _node_lines(text)
    except (ValueError, IndexError):
        return None
    path = tuple(path)
    while path not in lines and path:
        path = path[:-1]
    return lines.get(path)


def _path_str(path) -> str:
    return "".join(f"[{p}]" if isinstance(p, int) else f".{p}" for p in path).lstrip(".") or "<root>"


# Parsing ---------------------------------------------------------------------

@dataclass(frozen=True)
class RunConfig:
    """A schema-validated configuration tree and the text it came from."""

    tree: dict
    text: str = ""
    source: str = "<string>"

    def line(self, *path) -> int | None:
        return _line_of(self.text, path) if self.text else None

    def error(self, message: str, *path) -> ConfigError:
        where = _path_str(path)
        return ConfigError(f"{where}: {message}" if path else message, self.line(*path))


def _unexpected_keys(error) -> list:
    """Offending keys of an ``additionalProperties`` failure, so the line points at the key."""
    if error.validator != "additionalProperties" or not isinstance(error.instance, dict):
        return []
    known = set(error.schema.get("properties", {}))
    return sorted(k for k in error.instance if k not in known)


def parse_config(text: str, source: str = "<string>") -> RunConfig:
    """Decode and schema-check a configuration document.

    Raises:
        ConfigError: malformed JSON or a schema violation, with the line of
            the offending value.
    """
    try:
        tree = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}: invalid JSON: {exc.msg}", exc.lineno) from exc
    validator = jsonschema.Draft202012Validator(load_schema())
    error = jsonschema.exceptions.best_match(validator.iter_errors(tree))
    if error is not None:
        path = list(error.absolute_path)
        line_path = path + _unexpected_keys(error)[:1]
        raise ConfigError(f"{source}: {_path_str(path)}: {error.message}", _line_of(text, line_path))
    return RunConfig(tree, text, source)


def load_config(path) -> RunConfig:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc.strerror}") from exc
    return parse_config(text, str(p))


def serialize_config(cfg: RunConfig | dict) -> str:
    tree = cfg.tree if isinstance(cfg, RunConfig) else cfg
    return json.dumps(tree, sort_keys=True, indent=2) + "\n"


# Encodings ---------------------------------------------------------------------

def decode_matrix(raw) -> np.ndarray:
    return np.array([[complex(re, im) for re, im in row] for row in raw], dtype=complex)


def encode_matrix(m) -> list:
    m = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def decode_state(raw) -> DensityMatrix:
    if isinstance(raw, dict):
        return DensityMatrix.from_bloch(raw["theta"], raw.get("phi", 0.0))
    return DensityMatrix(decode_matrix(raw))


def _build(cfg: RunConfig, path: tuple, fn):
    try:
        return fn()
    except ConfigError:
        raise
    except (RTLabError, ValueError, KeyError, TypeError) as exc:
        raise cfg.error(str(exc), *path) from exc


def build_ensemble(cfg: RunConfig) -> LabeledEnsemble:
    node = cfg.tree["ensemble"]
    states = [_build(cfg, ("ensemble", "items", k, "state"), lambda it=it: decode_state(it["state"]))
              for k, it in enumerate(node["items"])]
    return _build(cfg, ("ensemble",), lambda: LabeledEnsemble.from_lists(
        [it["weight"] for it in node["items"]], states, [it["label"] for it in node["items"]],
        node.get("classes", ())))


def build_classifier(cfg: RunConfig, key: str = "classifier"):
    node = cfg.tree[key]
    kind = node["type"]

    def make():
        if kind == "povm":
            return StochasticClassifier(tuple(decode_matrix(m) for m in node["effects"]), node.get("classes"))
        if kind == "binary-povm":
            return StochasticClassifier.binary(decode_matrix(node["projector"]))
        if kind == "observable-sign":
            return ScoreClassifier.sign_of_observable(decode_matrix(node["operator"]), node.get("threshold", 0.0))
        return ScoreClassifier.fidelity_clustering(tuple(decode_state(s) for s in node["centroids"]),
                                                   node.get("classes"))

    return _build(cfg, (key,), make)


def channel_from_descriptor(node: dict) -> KrausChannel:
    kind = node["type"]
    if kind == "kraus":
        return KrausChannel(tuple(decode_matrix(m) for m in node["operators"]), "kraus")
    params = {k: v for k, v in node.items() if k != "type"}
    return make_named_channel(kind, **params)


def build_perturbation(cfg: RunConfig, n_items: int) -> PerturbationSpec:
    node = cfg.tree["perturbation"]
    kind = node["type"]

    def make():
        if kind == "index-map":
            return PerturbationSpec(index_map=index_map_from_pairs(n_items, node["pairs"]))
        if kind == "targets":
            return PerturbationSpec(targets=tuple(decode_state(s) for s in node["states"]))
        return PerturbationSpec(channel=channel_from_descriptor(node))

    return _build(cfg, ("perturbation",), make)


def build_oracle(cfg: RunConfig, e: LabeledEnsemble):
    node = cfg.tree["oracle"]
    kind = node["type"]

    def make():
        if kind == "hemisphere":
            return hemisphere_oracle(node.get("site", 0), node.get("n_qubits", 1))
        if kind == "observable-sign":
            return observable_sign_oracle(decode_matrix(node["operator"]))
        pairs = [(it.state, it.label) for it in e.items]
        pairs += [(decode_state(x["state"]), x["label"]) for x in node.get("extra", [])]
        return lookup_oracle(pairs)

    return _build(cfg, ("oracle",), make)


# Reports ---------------------------------------------------------------------

def _plain(v: Any):
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, np.generic):
        return _plain(v.item())
    if isinstance(v, float):
        if math.isnan(v):
            return None
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
    return v


def make_report(command: str, seed: int | None, metrics: list, relations: list = (), checks: list = (),
                extra: dict | None = None, normalize: bool = False) -> dict:
    """Assemble the report tree; ``normalize`` drops the wall-clock timestamp."""
    rel = [r.to_dict() if hasattr(r, "to_dict") else r for r in relations]
    meta = {"tool": "rtlab", "version": __version__, "command": command, "seed": seed}
    if not normalize:
        meta["timestamp"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    report = {"metadata": meta, "metrics": list(metrics), "relations": rel,
              "errata": sorted({r["relation_id"] for r in rel if r.get("erratum_flag")})}
    if checks:
        report["checks"] = [c.to_dict() if hasattr(c, "to_dict") else c for c in checks]
    if extra:
        report.update(extra)
    return _plain(report)


def report_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2, allow_nan=False) + "\n"


def sort_metric_rows(rows: list) -> list:
    """Fixed report keys first, in their canonical order; anything else after, as given."""
    order = {k: i for i, k in enumerate(REPORT_KEYS)}
    return sorted(rows, key=lambda r: order.get(r["key"], len(order)))


def metrics_csv(rows: list) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for r in rows:
        w.writerow({k: "" if r.get(k) is None else _csv_value(r.get(k)) for k in CSV_COLUMNS})
    return buf.getvalue()


def _csv_value(v):
    return repr(v) if isinstance(v, float) else v


def read_metrics_csv(text: str) -> list:
    """Inverse of :func:`metrics_csv` (numbers come back as floats)."""
    out = []
    for row in csv.DictReader(io.StringIO(text)):
        parsed = dict(row)
        for k in ("value", "standard_error"):
            parsed[k] = None if row[k] == "" else (float(row[k]) if row[k] not in ("inf", "-inf") else row[k])
        out.append(parsed)
    return out


def write_report(report: dict, out_path) -> tuple[Path, Path]:
    """Write the JSON report at ``out_path`` and its metrics table next to it as ``.csv``."""
    out = Path(out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    csv_path = out.with_suffix(".csv") if out.suffix != ".csv" else out.with_name(out.stem + ".metrics.csv")
    out.write_text(report_json(report), encoding="utf-8")
    csv_path.write_text(metrics_csv(report["metrics"]), encoding="utf-8")
    return out, csv_path
