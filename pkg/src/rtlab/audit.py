"""Every relation checker on a fixed canonical instance, collected into one table.

Rows disagreeing with a published constant while the derived closed form
matches the brute-force value carry ``erratum_flag``.
"""

from __future__ import annotations

import numpy as np

from rtlab import metrics
from rtlab import numerics as nx
from rtlab.channels import make_named_channel
from rtlab.classifiers import ScoreClassifier, StochasticClassifier
from rtlab.relations import classical as rc
from rtlab.relations import constants
from rtlab.relations import quantum as rq
from rtlab.relations.linear import check_linear_loss_gap, check_two_perturbation_gap
from rtlab.relations.report import RelationReport
from rtlab.relations.tables import (check_biased_tradeoff, check_unbiased_tradeoff, random_biased_model,
                                    random_unbiased_model)
from rtlab.relations.thresholds import check_threshold_by_sampling
from rtlab.scenarios import build_scenario
from rtlab.scenarios.losses import eight_state_example, eight_state_loss_reports
from rtlab.scenarios.quantum import Z_FEATURE, generic_feature_ensemble, mirrored_feature_ensemble
from rtlab.states import DensityMatrix, LabeledEnsemble

AUDIT_SEED = 20240101
Z_MEASUREMENT = StochasticClassifier.binary(nx.PROJ_0)


def _tradeoff_rows(rng) -> list[RelationReport]:
    rows = []
    for k in (2, 3):
        r = check_unbiased_tradeoff(random_unbiased_model(rng, k))
        rows.append(_relabel(r, f"unbiased_tradeoff_K{k}"))
    for k, alpha in ((2, 0.7), (3, 0.5)):
        m = random_biased_model(rng, k, alpha)
        rows.append(_relabel(check_biased_tradeoff(m, 0, alpha), f"biased_tradeoff_K{k}"))
    return rows


def _relabel(r: RelationReport, new_id: str) -> RelationReport:
    return RelationReport(new_id, r.closed_form_value, r.oracle_value, r.reference_value, r.relation_kind,
                          r.tolerance, r.assumptions_checked, r.checks, r.details, r.skipped)


def _noise_rows(rng) -> list[RelationReport]:
    rows = []
    for label, ch in (("depolarizing_line", make_named_channel("depolarizing", p=0.4)),
                      ("pauli_line", make_named_channel("pauli", p=[0.7, 0.1, 0.1, 0.1])),
                      ("bit_flip_line", make_named_channel("bit-flip", p=0.3))):
        rows += rq.noise_line_reports(ch, Z_MEASUREMENT, label)
    p1, p2 = 0.5, 0.75
    inc = rq.incompatibility_check(make_named_channel("depolarizing", p=p1), make_named_channel("bit-flip", p=p2),
                                   Z_MEASUREMENT)
    printed = constants.evaluate("bit_flip_line_incompatibility", p2)
    rows.append(RelationReport("incompatible_bit_flip_slope", 1 - 2 * p2, inc.second.slope, printed[0]))
    rows.append(RelationReport("incompatible_bit_flip_intercept", p2, inc.second.intercept, printed[1]))
    rows.append(RelationReport("incompatible_derivative", (1 - 2 * p2) / (1 - p1), inc.derivative,
                               inc.reference_derivative, checks=(("incompatible", inc.incompatible),)))
    states = [DensityMatrix(nx.random_density_matrix(rng, 2)) for _ in range(4)]
    e = LabeledEnsemble.uniform(states, [1, 1, -1, -1])
    gap = rq.check_measurement_noise_gap(e, Z_MEASUREMENT, make_named_channel("pauli", p=[0.4, 0.3, 0.2, 0.1]))
    rows += [gap, rq.measurement_noise_bound_report(gap)]
    helstrom = rq.helstrom_effect(states[0], states[2])
    rows.append(RelationReport("helstrom_saturation", nx.trace_distance(states[0], states[2]),
                               nx.expectation(helstrom, states[0].matrix - states[2].matrix)))
    return rows


def _swap_rows(rng) -> list[RelationReport]:
    eps = 0.05
    tau = 0.9 * eps
    kets = []
    for _ in range(4):
        u = nx.random_unitary(rng, 2)
        kets.append((nx.ket_projector(u[:, 0]),
                     nx.ket_projector(u @ np.array([np.sqrt(1 - tau ** 2), tau]))))
    e = LabeledEnsemble.uniform([DensityMatrix(a) for a, _ in kets] + [DensityMatrix(b) for _, b in kets],
                                [1] * 4 + [-1] * 4)
    cond = rq.adversarial_swap_condition(e, eps)
    rows = [RelationReport("adversarial_swap_complement", 1 - cond.A_s, cond.A_tilde_s,
                           assumptions_checked=(("overlap condition", cond.satisfied),),
                           checks=(("within budget", cond.within_budget),),
                           details={"max_distance": cond.max_distance})]
    for label, ens in (("mirrored", mirrored_feature_ensemble(rng, 0.75, 4)),
                       ("generic", generic_feature_ensemble(rng, 0.6, 4))):
        r = rq.check_feature_swap_bound(ens, Z_FEATURE, Z_MEASUREMENT)
        rows.append(_relabel(r, f"feature_swap_bound_{label}"))
    h = ScoreClassifier.sign_of_observable(nx.PAULI_Z)
    flip = make_named_channel("bit-flip", p=1.0)
    rows.append(rq.check_pushforward_identity(h, e, flip))
    return rows


def _loss_rows() -> list[RelationReport]:
    e, p = eight_state_example()
    m = nx.PROJ_0
    gap = check_linear_loss_gap(m, e, p)
    rows = [gap, *eight_state_loss_reports(gap),
            check_two_perturbation_gap(m, e, p, make_named_channel("depolarizing", p=0.3))]
    acc = metrics.accuracy(StochasticClassifier.binary(m), e).value
    closed = 0.5 * nx.expectation(m, np.diag([0.5 - 7 / 12, 0.5 - 5 / 12])) + 0.5
    rows.append(RelationReport("eight_state_accuracy", closed, acc))
    return rows


def _threshold_rows() -> list[RelationReport]:
    c0, c1 = DensityMatrix.diagonal([1, 0]), DensityMatrix.diagonal([0, 1])
    h = ScoreClassifier.fidelity_clustering((c0, c1), (1, -1))
    e = LabeledEnsemble.uniform([DensityMatrix.from_bloch(0.6), DensityMatrix.from_bloch(2.4)], [1, -1])
    return [check_threshold_by_sampling(h, e, n_perturbations=500, seed=AUDIT_SEED)]


def _classical_rows(rng) -> list[RelationReport]:
    rows = rc.check_shortcut_model(rc.ShortcutModel(0.7, 0.95, 0.9, 0.1, 0.05))
    rows += rc.check_gaussian_models(0.5, 16, 0.6, 20_000, AUDIT_SEED)
    return rows


def _feature_rows() -> list[RelationReport]:
    s = build_scenario(12, seed=AUDIT_SEED)
    h, e, p = s.classifiers["h"], s.ensemble, s.perturbations["rotation"]
    dec = metrics.per_feature_gap_decomposition(h, e, p, "lipschitz", g=lambda x: 2 * np.tanh(x),
                                                lipschitz_constant=2.0)
    lip = dec.lipschitz
    return [RelationReport("feature_gap_sum", dec.total_gap, dec.sum_of_gaps),
            RelationReport("feature_gap_idealized", dec.total_gap, dec.idealized_gap),
            RelationReport("lipschitz_gap_bound_valid", lip["valid_bound"], lip["measured_gap"], None, "upper-bound"),
            RelationReport("lipschitz_gap_bound_product", lip["valid_bound"], lip["measured_gap"],
                           constants.evaluate("lipschitz_gap_bound", 2.0, dec.flip_component), "upper-bound")]


def run_audit() -> list[RelationReport]:
    """All audit rows, in a fixed order, from one seeded generator."""
    rng = np.random.default_rng(AUDIT_SEED)
    rows = _tradeoff_rows(rng) + _noise_rows(rng) + _swap_rows(rng) + _loss_rows() + _threshold_rows()
    rows += _classical_rows(rng) + _feature_rows()
    return rows


def audit_table(rows: list[RelationReport]) -> list[dict]:
    return [{"relation_id": r.relation_id, "closed_form": r.closed_form_value, "oracle": r.oracle_value,
             "reference": r.reference_value, "holds": r.holds, "erratum_flag": r.erratum_flag} for r in rows]
