"""Result record shared by every relation checker."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from rtlab.numerics import equality_tolerance


@dataclass(frozen=True)
class RelationReport:
    """Closed form vs. brute-force oracle (and optional reference constant).

    ``relation_kind`` is ``"identity"`` when the closed form should equal
    the oracle, or ``"upper-bound"`` when the oracle value must not exceed
    the closed form.

    ``erratum_flag`` is set exactly when a reference value is present, it
    disagrees with the oracle beyond ``tolerance``, and the closed form
    agrees with the oracle.
    """

    relation_id: str
    closed_form_value: float
    oracle_value: float
    reference_value: float | None = None
    relation_kind: str = "identity"
    tolerance: float = field(default_factory=equality_tolerance)
    assumptions_checked: tuple = ()
    checks: tuple = ()
    details: dict = field(default_factory=dict)
    skipped: bool = False

    @property
    def abs_discrepancy_closed_vs_oracle(self) -> float:
        if self.skipped:
            return math.nan
        return abs(self.closed_form_value - self.oracle_value)

    @property
    def closed_form_matches(self) -> bool:
        if self.skipped:
            return False
        if self.relation_kind == "upper-bound":
            return self.oracle_value <= self.closed_form_value + self.tolerance
        return self.abs_discrepancy_closed_vs_oracle <= self.tolerance

    @property
    def reference_matches(self) -> bool | None:
        if self.reference_value is None or self.skipped:
            return None
        if self.relation_kind == "upper-bound":
            return self.oracle_value <= self.reference_value + self.tolerance
        return abs(self.reference_value - self.oracle_value) <= self.tolerance

    @property
    def erratum_flag(self) -> bool:
        return self.reference_matches is False and self.closed_form_matches

    @property
    def assumptions_hold(self) -> bool:
        return all(ok for _, ok in self.assumptions_checked)

    @property
    def holds(self) -> bool:
        """Assumptions satisfied, closed form matches and every side check passed."""
        return (not self.skipped and self.assumptions_hold and self.closed_form_matches
                and all(ok for _, ok in self.checks))

    def to_dict(self) -> dict:
        return {
            "relation_id": self.relation_id,
            "relation_kind": self.relation_kind,
            "closed_form_value": _num(self.closed_form_value),
            "oracle_value": _num(self.oracle_value),
            "reference_value": _num(self.reference_value),
            "abs_discrepancy_closed_vs_oracle": _num(self.abs_discrepancy_closed_vs_oracle),
            "tolerance": self.tolerance,
            "erratum_flag": self.erratum_flag,
            "holds": self.holds,
            "skipped": self.skipped,
            "assumptions_checked": [[name, bool(ok)] for name, ok in self.assumptions_checked],
            "checks": [[name, bool(ok)] for name, ok in self.checks],
            "details": {k: _jsonable(v) for k, v in sorted(self.details.items())},
        }


def _num(x):
    if x is None:
        return None
    x = float(x)
    if math.isnan(x):
        return None
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def _jsonable(v):
    if isinstance(v, (bool, str)) or v is None:
        return v
    if isinstance(v, int):
        return v
    if isinstance(v, float):
        return _num(v)
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in sorted(v.items(), key=lambda kv: str(kv[0]))}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.generic):
        return _jsonable(v.item())
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    return str(v)
