"""``rtlab`` command line: metrics, scenario, scan and audit.

Exit codes: 0 success, 1 computation error, 2 configuration error,
3 scenario assertion failure (the report is still written).
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from contextlib import nullcontext
from decimal import Decimal, InvalidOperation
from pathlib import Path

from rtlab import metrics as mx
from rtlab import numerics as nx
from rtlab import io as rio
from rtlab.audit import audit_table, run_audit
from rtlab.channels import make_named_channel
from rtlab.classifiers import StochasticClassifier
from rtlab.errors import ConfigError, RTLabError, ValidationError
from rtlab.relations.quantum import noise_response_line
from rtlab.scenarios import build_scenario, get_spec, run_scenario
from rtlab.scenarios.base import metric_row

EXIT_OK, EXIT_COMPUTE, EXIT_CONFIG, EXIT_ASSERT = 0, 1, 2, 3
SCAN_FAMILIES = ("depolarizing", "bit-flip", "phase-flip")
_NEEDS_PERTURBATION = {"A_tilde", "A_star", "A_bar", "L_tilde_CI", "L_star_PC", "L_bar_ER"}
_NEEDS_ORACLE = {"A_bar", "L_bar_ER"}


class _Fail(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _config_tolerance(cfg):
    return nx.tolerance(cfg.tree["tolerance"]) if "tolerance" in cfg.tree else nullcontext()


# metrics -----------------------------------------------------------------------

def cmd_metrics(config_path, out_path, normalize: bool = False) -> int:
    cfg = rio.load_config(config_path)
    with _config_tolerance(cfg):
        return _metrics(cfg, out_path, normalize)


def _metrics(cfg, out_path, normalize: bool) -> int:
    tree = cfg.tree
    for key in ("ensemble", "classifier"):
        if key not in tree:
            raise cfg.error(f"missing required field {key!r}")
    requested = tree.get("metrics")
    if requested:
        needs_p = sorted(set(requested) & _NEEDS_PERTURBATION)
        if needs_p and "perturbation" not in tree:
            raise cfg.error(f"missing field 'perturbation' required by {needs_p}", "metrics")
        needs_o = sorted(set(requested) & _NEEDS_ORACLE)
        if needs_o and "oracle" not in tree:
            raise cfg.error(f"missing field 'oracle' required by {needs_o}", "metrics")
    e = rio.build_ensemble(cfg)
    h = rio.build_classifier(cfg)
    p = rio.build_perturbation(cfg, len(e)) if "perturbation" in tree else None
    oracle = rio.build_oracle(cfg, e) if "oracle" in tree else None
    try:
        values = mx.loss_report(h, e, p, oracle)
    except RTLabError as exc:
        raise _Fail(EXIT_COMPUTE, f"computation failed: {exc}") from exc
    keys = [k for k in mx.REPORT_KEYS if k in values and (not requested or k in requested)]
    rows = [metric_row(k, values[k].value, "", values[k].standard_error, values[k].method) for k in keys]
    report = rio.make_report("metrics", tree.get("seed"), rows, normalize=normalize,
                             extra={"config": tree})
    rio.write_report(report, out_path)
    return EXIT_OK


# scenario ----------------------------------------------------------------------

def _parse_params(pairs) -> dict:
    out = {}
    for raw in pairs or ():
        key, sep, value = raw.partition("=")
        if not sep or not key:
            raise ConfigError(f"--param expects key=value, got {raw!r}")
        if key in out:
            raise ConfigError(f"--param {key} given twice")
        out[key.strip()] = value.strip()
    return out


def cmd_scenario(scenario_id: int, params: dict, seed: int, out_path, normalize: bool = False) -> int:
    try:
        get_spec(scenario_id)
        s = build_scenario(scenario_id, params, seed)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc
    try:
        result = run_scenario(s)
    except RTLabError as exc:
        raise _Fail(EXIT_COMPUTE, f"scenario {scenario_id} failed to run: {exc}") from exc
    summary = {"id": result.id, "name": result.name, "params": result.params, "passed": result.passed,
               "failed_checks": [c.name for c in result.failures]}
    report = rio.make_report("scenario", seed, result.metrics, result.relations, result.checks,
                             extra={"scenario": summary}, normalize=normalize)
    rio.write_report(report, out_path)
    return EXIT_OK if result.passed else EXIT_ASSERT


# scan --------------------------------------------------------------------------

def parse_grid(spec: str) -> list[float]:
    """``a:b:step`` with both ends included; decimal arithmetic avoids drift."""
    parts = spec.split(":")
    if len(parts) != 3:
        raise ConfigError(f"grid must look like a:b:step, got {spec!r}")
    try:
        a, b, step = (Decimal(x) for x in parts)
    except InvalidOperation as exc:
        raise ConfigError(f"grid entries must be numbers, got {spec!r}") from exc
    if not all(x.is_finite() for x in (a, b, step)):
        raise ConfigError("grid entries must be finite")
    if step <= 0:
        raise ConfigError("grid step must be positive")
    if b < a:
        raise ConfigError(f"empty grid: end {b} is below start {a}")
    n = int((b - a) / step)
    return [float(a + k * step) for k in range(n + 1)]


def cmd_scan(noise: str, grid: str, config_path, out_path) -> int:
    family = noise.lower().replace("_", "-").replace("bitflip", "bit-flip").replace("phaseflip", "phase-flip")
    if family not in SCAN_FAMILIES:
        raise ConfigError(f"--noise must be one of {SCAN_FAMILIES}, got {noise!r}")
    values = parse_grid(grid)
    if values[0] < 0 or values[-1] > 1:
        raise ConfigError(f"grid {grid!r} leaves the probability range [0, 1]")
    cfg = rio.load_config(config_path)
    with _config_tolerance(cfg):
        return _scan(family, values, cfg, out_path)


def _scan(family: str, values: list[float], cfg, out_path) -> int:
    if "classifier" not in cfg.tree:
        raise cfg.error("missing required field 'classifier'")
    povm = rio.build_classifier(cfg)
    if not isinstance(povm, StochasticClassifier) or set(povm.classes) != {1, -1}:
        raise cfg.error("scan needs a two-outcome measurement with classes +1 and -1", "classifier")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["param", "slope", "intercept", "tradeoff_flag"])
    for v in values:
        try:
            line = noise_response_line(make_named_channel(family, p=v, dim=povm.dim), povm)
        except RTLabError as exc:
            raise _Fail(EXIT_COMPUTE, f"scan failed at {family} p={v}: {exc}") from exc
        w.writerow([repr(v), repr(line.slope), repr(line.intercept), "true" if line.tradeoff else "false"])
    out = Path(out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(buf.getvalue(), encoding="utf-8")
    return EXIT_OK


# audit -------------------------------------------------------------------------

def cmd_audit(out_path, normalize: bool = False) -> int:
    rows = run_audit()
    table = audit_table(rows)
    report = rio.make_report("audit", None, [], rows, normalize=normalize, extra={"table": table})
    out = Path(out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(rio.report_json(report), encoding="utf-8")
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(table[0]), lineterminator="\n")
    w.writeheader()
    for row in table:
        w.writerow({k: _cell(v) for k, v in row.items()})
    out.with_suffix(".csv").write_text(buf.getvalue(), encoding="utf-8")
    return EXIT_OK


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else str(v)
    return v


# entry point -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rtlab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    m = sub.add_parser("metrics", help="accuracy, robustness and losses for a configured ensemble")
    m.add_argument("--config", required=True)
    m.add_argument("--out", required=True)
    m.add_argument("--normalize", action="store_true", help="omit the timestamp")

    s = sub.add_parser("scenario", help="build and run one of the numbered scenarios")
    s.add_argument("--id", type=int, required=True, dest="scenario_id")
    s.add_argument("--param", action="append", default=[], metavar="KEY=VALUE")
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--normalize", action="store_true", help="omit the timestamp")

    g = sub.add_parser("scan", help="noise response line over a parameter grid")
    g.add_argument("--noise", required=True, help=f"one of {', '.join(SCAN_FAMILIES)}")
    g.add_argument("--grid", required=True, metavar="A:B:STEP")
    g.add_argument("--config", required=True, help="JSON file with a binary 'classifier'")
    g.add_argument("--out", required=True)

    a = sub.add_parser("audit", help="every relation on its canonical instance, with erratum flags")
    a.add_argument("--out", required=True)
    a.add_argument("--normalize", action="store_true", help="omit the timestamp")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "metrics":
            return cmd_metrics(args.config, args.out, args.normalize)
        if args.command == "scenario":
            if args.seed < 0 or args.seed >= 2 ** 64:
                raise ConfigError("--seed must be an unsigned 64-bit integer")
            return cmd_scenario(args.scenario_id, _parse_params(args.param), args.seed, args.out, args.normalize)
        if args.command == "scan":
            return cmd_scan(args.noise, args.grid, args.config, args.out)
        return cmd_audit(args.out, args.normalize)
    except ConfigError as exc:
        print(f"rtlab: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _Fail as exc:
        print(f"rtlab: {exc}", file=sys.stderr)
        return exc.code
    except (RTLabError, ValueError, ArithmeticError) as exc:
        print(f"rtlab: computation error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
