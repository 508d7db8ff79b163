"""Acceptance criteria, one function each.

Run directly (``python3 tests/test_acceptance.py``) for a PASS/FAIL table, or
through pytest, where every criterion is its own test and prints its line.
"""

from __future__ import annotations

import subprocess
import sys
import tempfile
from pathlib import Path

import numpy as np
import pytest

from rtlab import numerics as nx
from rtlab.audit import audit_table, run_audit
from rtlab.channels import make_named_channel, unitary_channel
from rtlab.classifiers import ScoreClassifier, StochasticClassifier
from rtlab.metrics import per_feature_gap_decomposition
from rtlab.relations import constants
from rtlab.relations import quantum as rq
from rtlab.relations.classical import check_gaussian_models, check_shortcut_model, random_shortcut_model
from rtlab.relations.classical import ShortcutModel
from rtlab.relations.linear import check_linear_loss_gap
from rtlab.relations.tables import (biased_tradeoff_value, check_biased_tradeoff, check_unbiased_tradeoff,
                                    random_biased_model, random_unbiased_model, unbiased_tradeoff_predict)
from rtlab.relations.thresholds import check_threshold_by_sampling
from rtlab.scenarios import build_scenario
from rtlab.scenarios.losses import eight_state_example
from rtlab.scenarios.quantum import Z_FEATURE, generic_feature_ensemble
from rtlab.states import DensityMatrix, LabeledEnsemble, class_aggregate, pushforward_ensemble

SEED = 20240601
Z = StochasticClassifier.binary(nx.PROJ_0)


def _audit_rows() -> dict:
    if not hasattr(_audit_rows, "cache"):
        _audit_rows.cache = {r["relation_id"]: r for r in audit_table(run_audit())}
    return _audit_rows.cache


def _random_ensemble(rng, n_per_class=2) -> LabeledEnsemble:
    states = [DensityMatrix(nx.random_density_matrix(rng, 2)) for _ in range(2 * n_per_class)]
    return LabeledEnsemble.uniform(states, [1] * n_per_class + [-1] * n_per_class)


def _random_channel(rng):
    kind = rng.integers(3)
    if kind == 0:
        return make_named_channel("pauli", p=rng.dirichlet(np.ones(4)).tolist())
    if kind == 1:
        return make_named_channel("depolarizing", p=float(rng.uniform()))
    return unitary_channel(nx.random_unitary(rng, 2))


# 1 ---------------------------------------------------------------------------

def criterion_1():
    rng = np.random.default_rng(SEED + 1)
    worst, by_k, skipped = 0.0, {}, 0
    for i in range(500):
        k = (2, 3, 5)[i % 3]
        r = check_unbiased_tradeoff(random_unbiased_model(rng, k), tol=1e-12)
        skipped += r.skipped
        d = abs(r.closed_form_value - r.oracle_value)
        by_k[k] = max(by_k.get(k, 0.0), d)
        worst = max(worst, d)
    ok = worst <= 1e-12 and skipped == 0
    return ok, f"max |discrepancy| {worst:.3e} (per K: " + ", ".join(
        f"K={k}: {v:.1e}" for k, v in sorted(by_k.items())) + f"), assumption failures {skipped}"


# 2 ---------------------------------------------------------------------------

def criterion_2():
    rng = np.random.default_rng(SEED + 2)
    worst, worst_printed, by_k, skipped = 0.0, 0.0, {}, 0
    for i in range(200):
        k = (2, 3, 5)[i % 3]
        alpha = float(rng.uniform(0.05, 0.95))
        r = check_biased_tradeoff(random_biased_model(rng, k, alpha), 0, alpha, tol=1e-12)
        skipped += r.skipped
        d = abs(r.closed_form_value - r.oracle_value)
        by_k[k] = max(by_k.get(k, 0.0), d)
        worst = max(worst, d)
        worst_printed = max(worst_printed, abs(r.reference_value - r.oracle_value))
    reduce_gap = 0.0
    for _ in range(200):
        k = int(rng.choice((2, 3, 5)))
        a, a_star, p_both = rng.uniform(size=3)
        reduce_gap = max(reduce_gap, abs(biased_tradeoff_value(a, a_star, 1 / k, k, p_both)
                                         - unbiased_tradeoff_predict(a, a_star).a_tilde))
    ok = worst <= 1e-12 and skipped == 0 and reduce_gap <= 1e-15
    return ok, (f"(2A-1) form max |discrepancy| {worst:.3e} (" + ", ".join(
        f"K={k}: {v:.1e}" for k, v in sorted(by_k.items())) + f"); printed (1-2A) form {worst_printed:.3e}; "
        f"alpha=1/K reduction {reduce_gap:.1e}; assumption failures {skipped}")


# 3 ---------------------------------------------------------------------------

def criterion_3():
    rng = np.random.default_rng(SEED + 3)
    worst_gap, bound_fail, worst_helstrom = 0.0, 0, 0.0
    for _ in range(300):
        e = _random_ensemble(rng)
        povm = StochasticClassifier.binary(nx.random_pure_state(rng, 2))
        r = rq.check_measurement_noise_gap(e, povm, _random_channel(rng), tol=1e-12)
        worst_gap = max(worst_gap, r.abs_discrepancy_closed_vs_oracle)
        bound = rq.measurement_noise_bound_report(r)
        bound_fail += not bound.closed_form_matches
        a, b = (DensityMatrix(nx.random_density_matrix(rng, 2)) for _ in range(2))
        pi = rq.helstrom_effect(a, b)
        worst_helstrom = max(worst_helstrom, abs(nx.expectation(pi, a.matrix - b.matrix) - nx.trace_distance(a, b)))
    ok = worst_gap <= 1e-12 and bound_fail == 0 and worst_helstrom <= 1e-12
    return ok, (f"formula vs direct {worst_gap:.1e}, bound violations {bound_fail}, "
                f"Helstrom saturation {worst_helstrom:.1e}")


# 4 ---------------------------------------------------------------------------

def criterion_4():
    worst, negative = 0.0, False
    for p in (0, 0.25, 0.5, 0.75, 1):
        line = rq.noise_response_line(make_named_channel("depolarizing", p=p), Z)
        worst = max(worst, abs(line.slope - (1 - p)), abs(line.intercept - p / 2))
        negative |= line.slope < 0
    anchors = []
    for ch, want in ((make_named_channel("pauli", p=[1, 0, 0, 0]), (1.0, 0.0)),
                     (make_named_channel("bit-flip", p=0.0), (1.0, 0.0)),
                     (make_named_channel("bit-flip", p=1.0), (-1.0, 1.0))):
        line = rq.noise_response_line(ch, Z)
        anchors.append(abs(line.slope - want[0]) <= 1e-12 and abs(line.intercept - want[1]) <= 1e-12)
    flagged = _audit_rows()["pauli_line_intercept"]["erratum_flag"]
    ok = worst <= 1e-12 and not negative and all(anchors) and flagged
    return ok, (f"depolarizing max error {worst:.1e}, slope never negative: {not negative}, "
                f"anchors {sum(anchors)}/3, printed Pauli intercept flagged: {flagged}")


# 5 ---------------------------------------------------------------------------

def criterion_5():
    s = build_scenario(6, {"epsilon_max": 0.05}, seed=SEED)
    cond = rq.adversarial_swap_condition(s.ensemble, 0.05)
    ok = cond.satisfied and cond.complement_residual <= 1e-12 and cond.max_distance <= 0.05
    return ok, (f"overlap condition {cond.satisfied} (min ratio {cond.min_overlap_ratio:.6f}), "
                f"|A~ - (1 - A)| {cond.complement_residual:.1e}, max tau {cond.max_distance:.4f}")


# 6 ---------------------------------------------------------------------------

def criterion_6():
    rng = np.random.default_rng(SEED + 6)
    violations, worst_excess, assumptions_ok = 0, -np.inf, True
    for i in range(50):
        f0 = (0.6, 0.75, 0.9)[i % 3]
        e = generic_feature_ensemble(rng, f0, 4)
        r = rq.check_feature_swap_bound(e, Z_FEATURE, Z, tol=1e-12)
        assumptions_ok &= r.assumptions_hold and all(v for _, v in r.checks[:3])
        excess = r.oracle_value - r.closed_form_value
        worst_excess = max(worst_excess, excess)
        violations += excess > 1e-12
    ok = violations == 0 and assumptions_ok
    return ok, (f"violations {violations}/50, largest A~ - bound {worst_excess:+.4f}, "
                f"assumptions and swap bookkeeping hold: {assumptions_ok}")


# 7 ---------------------------------------------------------------------------

def criterion_7():
    wrong, sign_wrong = [], 0
    for p1 in (0.0, 0.3, 0.9):
        for k in range(21):
            p2 = 0.05 * k
            inc = rq.incompatibility_check(make_named_channel("depolarizing", p=p1),
                                           make_named_channel("bit-flip", p=p2), Z)
            if inc.incompatible != (p2 > 0.5):
                wrong.append((p1, p2))
            sign_wrong += np.sign(inc.derivative) != np.sign(round((1 - 2 * p2) / (1 - p1), 12))
    ok = not wrong and sign_wrong == 0
    return ok, f"63 grid points, verdict mismatches {wrong or 0}, derivative sign mismatches {sign_wrong}"


# 8 ---------------------------------------------------------------------------

def criterion_8():
    e, p = eight_state_example()
    pushed = pushforward_ensemble(e, p)
    agg = {"loss_example_sigma_plus": class_aggregate(e, 1), "loss_example_sigma_minus": class_aggregate(e, -1),
           "loss_example_sigma_plus_perturbed": class_aggregate(pushed, 1),
           "loss_example_sigma_minus_perturbed": class_aggregate(pushed, -1)}
    worst_agg = max(np.max(np.abs(v.matrix - constants.reference(k))) for k, v in agg.items())
    rng = np.random.default_rng(SEED + 8)
    worst_id = 0.0
    for m in [nx.PROJ_0, nx.PAULI_Z] + [nx.random_hermitian(rng, 2) for _ in range(20)]:
        worst_id = max(worst_id, check_linear_loss_gap(m, e, p, tol=1e-12).abs_discrepancy_closed_vs_oracle)
    rows = _audit_rows()
    flags = [rows[k]["erratum_flag"] for k in ("eight_state_clean_loss", "eight_state_perturbed_loss")]
    oracle = (rows["eight_state_clean_loss"]["oracle"], rows["eight_state_perturbed_loss"]["oracle"])
    values_ok = abs(oracle[0] - 1 / 24) <= 1e-12 and abs(oracle[1] - 83 / 240) <= 1e-12
    ok = worst_agg <= 1e-15 and worst_id <= 1e-12 and all(flags) and values_ok
    return ok, (f"aggregates entrywise {worst_agg:.1e}, L - L~ identity {worst_id:.1e}, "
                f"oracle (L, L~) = ({oracle[0]:.6f}, {oracle[1]:.6f}), printed values flagged: {all(flags)}")


# 9 ---------------------------------------------------------------------------

def criterion_9():
    centroids = (DensityMatrix.diagonal([1, 0]), DensityMatrix.diagonal([0, 1]))
    h = ScoreClassifier.fidelity_clustering(centroids, (1, -1))
    e = LabeledEnsemble.uniform([DensityMatrix.from_bloch(0.5), DensityMatrix.from_bloch(1.1, 0.7),
                                 DensityMatrix.from_bloch(2.2, 2.0), DensityMatrix.from_bloch(2.8, 4.0)],
                                [1, 1, -1, -1])
    r = check_threshold_by_sampling(h, e, n_perturbations=10_000, seed=SEED)
    control = dict(r.checks)["negative control finds a flip beyond p_sigma - 1/2"]
    flips = sum(r.details["flip_counts"])
    ok = r.oracle_value == 1.0 and flips == 0 and control
    return ok, f"A* = {r.oracle_value} over 4 x 10^4 perturbations ({flips} changes), negative control: {control}"


# 10 --------------------------------------------------------------------------

def criterion_10():
    acc, pc, comp, short, trade = check_gaussian_models(0.5, 16, 0.6, 100_000, SEED)
    se = acc.details["standard_error"]
    a1 = acc.oracle_value
    a_ok = abs(a1 - 0.9772498680518208) <= 3 * se
    star_ok = pc.oracle_value == 0.0
    comp_ok = abs(comp.oracle_value - (1 - a1)) <= 3 * se
    t = trade.details
    trade_ok = t["A1"] > t["A2"] == 0.6 and t["A_tilde_1"] < t["A_tilde_2"] == 0.6
    rng = np.random.default_rng(SEED + 10)
    hits = violations = 0
    while hits < 100:
        m = random_shortcut_model(rng)
        m = ShortcutModel(m.p, m.q_pp, m.q_pp, m.q_pm, m.q_pm)
        r = check_shortcut_model(m)[-1]
        if r.skipped:
            continue
        hits += 1
        violations += not r.holds
    ok = a_ok and star_ok and comp_ok and trade_ok and violations == 0
    return ok, (f"A1 = {a1:.5f} +- {se:.5f} vs 0.97725, A*1 = {pc.oracle_value}, "
                f"|A~1 - (1 - A1)| = {abs(comp.oracle_value - (1 - a1)):.1e}, trade-off {trade_ok}, "
                f"sweep violations {violations}/100")


# 11 --------------------------------------------------------------------------

def criterion_11():
    rng = np.random.default_rng(SEED + 11)
    worst = 0.0
    for i in range(300):
        e = _random_ensemble(rng)
        h = (StochasticClassifier.binary(nx.random_pure_state(rng, 2)) if i % 2
             else ScoreClassifier.sign_of_observable(nx.random_hermitian(rng, 2)))
        worst = max(worst, rq.check_pushforward_identity(h, e, _random_channel(rng), tol=1e-12)
                    .abs_discrepancy_closed_vs_oracle)
    states = [DensityMatrix.from_bloch(t, f) for t, f in ((0.3, 0), (1.2, 1), (2.0, 2), (2.9, 3))]
    e = LabeledEnsemble.uniform(states, [1, -1, 1, -1])
    r = rq.check_pushforward_identity(ScoreClassifier.sign_of_observable(nx.PAULI_Z), e,
                                      make_named_channel("bit-flip", p=1.0), tol=1e-12)
    complement = abs(r.details["A2"] - (1 - r.details["A1"]))
    ok = worst <= 1e-12 and r.details["A_star"] == 0.0 and complement <= 1e-12
    return ok, (f"pushforward identity {worst:.1e} on 300 triples; A* = {r.details['A_star']}, "
                f"|A2 - (1 - A1)| = {complement:.1e}")


# 12 --------------------------------------------------------------------------

def criterion_12():
    worst_sum, product_fail, valid_fail, worst_excess = 0.0, 0, 0, -np.inf
    for seed in range(100):
        s = build_scenario(12, seed=SEED + seed)
        h, e, p = s.classifiers["h"], s.ensemble, s.perturbations["rotation"]
        worst_sum = max(worst_sum, abs(per_feature_gap_decomposition(h, e, p).residual))
        for k in (1.0, 2.0, 5.0):
            lip = per_feature_gap_decomposition(h, e, p, "lipschitz", g=lambda x, k=k: k * np.tanh(x),
                                                lipschitz_constant=k).lipschitz
            product_fail += not lip["product_bound_holds"]
            valid_fail += not lip["valid_bound_holds"]
            worst_excess = max(worst_excess, lip["measured_gap"] - lip["product_bound"])
    ok = worst_sum <= 1e-12 and product_fail == 0
    return ok, (f"gap sum residual {worst_sum:.1e}; 2K|E c sum H| bound violated in {product_fail}/300 "
                f"(largest excess {worst_excess:+.4f}); 2K E|sum H| bound violated in {valid_fail}/300")


# 13 --------------------------------------------------------------------------

def criterion_13():
    differing = []
    with tempfile.TemporaryDirectory() as tmp:
        for n in range(1, 13):
            outs = []
            for run in (0, 1):
                out = Path(tmp) / f"s{n}_{run}.json"
                subprocess.run([sys.executable, "-m", "rtlab.cli", "scenario", "--id", str(n), "--seed", "17",
                                "--out", str(out), "--normalize"], check=False, capture_output=True)
                outs.append(out.read_bytes() + out.with_suffix(".csv").read_bytes() if out.exists() else b"")
            if not outs[0] or outs[0] != outs[1]:
                differing.append(n)
    return not differing, f"scenarios with differing or missing reports: {differing or 'none'}"


CRITERIA = {n: globals()[f"criterion_{n}"] for n in range(1, 14)}


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, capsys):
    ok, detail = CRITERIA[number]()
    with capsys.disabled():
        print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}")
    assert ok, detail


def main() -> int:
    failed = 0
    for number, fn in sorted(CRITERIA.items()):
        ok, detail = fn()
        failed += not ok
        print(f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}", flush=True)
    print(f"{len(CRITERIA) - failed}/{len(CRITERIA)} criteria pass")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
