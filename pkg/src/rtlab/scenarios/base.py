"""Scenario records, the registry and the two entry points."""

from __future__ import annotations

import json
import math
from collections.abc import Callable
from dataclasses import dataclass, field
from typing import Any

from rtlab.errors import ValidationError
from rtlab.relations.report import RelationReport

PROVENANCE = ("reference", "derived", "trivial")


@dataclass(frozen=True)
class Check:
    """One scenario assertion.

    ``asserted=False`` rows are informational: they are reported but never
    count as failures (used for known counterexamples and for comparisons
    against published constants).
    """

    name: str
    expected: Any
    actual: Any
    passed: bool
    provenance: str = "derived"
    asserted: bool = True
    detail: str = ""

    def __post_init__(self):
        if self.provenance not in PROVENANCE:
            raise ValidationError(f"provenance must be one of {PROVENANCE}")
        object.__setattr__(self, "passed", bool(self.passed))

    def to_dict(self) -> dict:
        return {"name": self.name, "expected": _plain(self.expected), "actual": _plain(self.actual),
                "passed": self.passed, "provenance": self.provenance, "asserted": self.asserted,
                "detail": self.detail}


def close(name: str, expected: float, actual: float, tol: float, provenance: str = "derived",
          asserted: bool = True, detail: str = "") -> Check:
    ok = abs(float(expected) - float(actual)) <= tol
    return Check(name, float(expected), float(actual), ok, provenance, asserted,
                 detail or f"|difference| = {abs(float(expected) - float(actual)):.3e}, tolerance {tol:.1e}")


def truth(name: str, actual: bool, provenance: str = "derived", asserted: bool = True, detail: str = "") -> Check:
    return Check(name, True, bool(actual), bool(actual), provenance, asserted, detail)


def from_report(report: RelationReport, provenance: str = "derived", asserted: bool = True) -> Check:
    detail = "; ".join(f"{n}: {'ok' if ok else 'FAILED'}" for n, ok in report.assumptions_checked + report.checks)
    return Check(f"{report.relation_id} ({report.relation_kind})", report.closed_form_value,
                 report.oracle_value, report.holds, provenance, asserted, detail)


def _plain(v):
    if isinstance(v, float):
        if math.isnan(v):
            return None
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
    if hasattr(v, "item") and not isinstance(v, (list, tuple, dict)):
        return _plain(v.item())
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    return v


@dataclass
class Scenario:
    id: int
    name: str
    params: dict
    seed: int
    ensemble: Any = None
    classifiers: dict = field(default_factory=dict)
    perturbations: dict = field(default_factory=dict)
    oracle: Any = None
    extras: dict = field(default_factory=dict)


@dataclass
class ScenarioResult:
    id: int
    name: str
    params: dict
    seed: int
    checks: list
    metrics: list
    relations: list

    @property
    def failures(self) -> list[Check]:
        return [c for c in self.checks if c.asserted and not c.passed]

    @property
    def passed(self) -> bool:
        return not self.failures


@dataclass(frozen=True)
class ScenarioSpec:
    id: int
    name: str
    summary: str
    defaults: dict
    build: Callable[[dict, int], Scenario]
    run: Callable[[Scenario], tuple[list, list, list]]


REGISTRY: dict[int, ScenarioSpec] = {}


def register(spec: ScenarioSpec) -> ScenarioSpec:
    if spec.id in REGISTRY:
        raise ValueError(f"scenario {spec.id} registered twice")
    REGISTRY[spec.id] = spec
    return spec


def _coerce(key: str, value, default):
    if isinstance(value, str) and not isinstance(default, str):
        try:
            value = json.loads(value)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"parameter {key}: cannot parse {value!r}") from exc
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ValidationError(f"parameter {key} must be true or false")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not float(value).is_integer():
            raise ValidationError(f"parameter {key} must be an integer, got {value!r}")
        return int(value)
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValidationError(f"parameter {key} must be a number, got {value!r}")
        return float(value)
    if isinstance(default, (list, tuple)):
        if not isinstance(value, (list, tuple)):
            raise ValidationError(f"parameter {key} must be a list")
        return [float(x) for x in value]
    return value


def resolve_params(spec: ScenarioSpec, params: dict | None) -> dict:
    params = dict(params or {})
    unknown = sorted(set(params) - set(spec.defaults))
    if unknown:
        raise ValidationError(f"scenario {spec.id} ({spec.name}) has no parameters {unknown}; "
                              f"known: {sorted(spec.defaults)}")
    out = {}
    for key, default in spec.defaults.items():
        out[key] = _coerce(key, params[key], default) if key in params else default
    return out


def get_spec(scenario_id: int) -> ScenarioSpec:
    from rtlab.scenarios import library  # noqa: F401  (fills the registry)
    if scenario_id not in REGISTRY:
        raise ValidationError(f"unknown scenario id {scenario_id}; valid ids are 1..{max(REGISTRY)}")
    return REGISTRY[scenario_id]


def build_scenario(scenario_id: int, params: dict | None = None, seed: int = 0) -> Scenario:
    """Construct scenario ``scenario_id`` deterministically from ``params`` and ``seed``."""
    if isinstance(seed, bool) or int(seed) != seed or seed < 0:
        raise ValidationError("seed must be a nonnegative integer")
    spec = get_spec(int(scenario_id))
    return spec.build(resolve_params(spec, params), int(seed))


def run_scenario(s: Scenario) -> ScenarioResult:
    checks, metrics, relations = get_spec(s.id).run(s)
    return ScenarioResult(s.id, s.name, dict(s.params), s.seed, list(checks), list(metrics), list(relations))


def metric_row(key: str, value, label: str = "", standard_error=None, method: str = "exact-sum") -> dict:
    return {"key": key, "label": label, "value": _plain(float(value)),
            "standard_error": None if standard_error is None else _plain(float(standard_error)), "method": method}
