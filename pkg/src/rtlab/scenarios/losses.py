"""Scenarios 9-10: linear and sign losses for ``h = sign Tr(M sigma)``."""

from __future__ import annotations

import numpy as np

from rtlab import metrics
from rtlab import numerics as nx
from rtlab.channels import PerturbationSpec
from rtlab.classifiers import ScoreClassifier, StochasticClassifier
from rtlab.relations import constants
from rtlab.relations.linear import check_linear_loss_gap, robust_split_decomposition
from rtlab.relations.report import RelationReport
from rtlab.relations.thresholds import margin_radius
from rtlab.scenarios.base import Check, Scenario, ScenarioSpec, close, from_report, metric_row, register, truth
from rtlab.states import DensityMatrix, LabeledEnsemble, class_aggregate, pushforward_ensemble

_D = DensityMatrix.diagonal


# 9 -------------------------------------------------------------------------

def eight_state_example() -> tuple[LabeledEnsemble, PerturbationSpec]:
    """The four labeled qubit states and their four perturbed images."""
    states = [_D([1, 0]), _D([0, 1]), _D([5 / 6, 1 / 6]), _D([1 / 3, 2 / 3])]
    images = [_D([0, 1]), _D([1 / 4, 3 / 4]), _D([5 / 6, 1 / 6]), _D([4 / 5, 1 / 5])]
    e = LabeledEnsemble.uniform(states, [1, 1, -1, -1])
    return e, PerturbationSpec(targets=tuple(images), declared_type="irrelevant", name="listed-images")


def eight_state_loss_reports(gap: RelationReport) -> list[RelationReport]:
    """Clean and perturbed loss of ``|0><0|`` against the exact fractions and the published coefficients.

    ``gap`` is :func:`check_linear_loss_gap` for ``M = |0><0|``, where
    ``Tr(M Z) = 1`` so each coefficient is the loss itself.
    """
    return [RelationReport("eight_state_clean_loss", 1 / 24, gap.details["L"],
                           constants.reference("loss_example_clean_coefficient")),
            RelationReport("eight_state_perturbed_loss", 83 / 240, gap.details["L_tilde"],
                           constants.reference("loss_example_perturbed_coefficient"))]


def _build_eight_state(params: dict, seed: int) -> Scenario:
    e, p = eight_state_example()
    m = nx.PROJ_0
    return Scenario(9, "eight-state-linear-loss", params, seed, ensemble=e,
                    classifiers={"sign": ScoreClassifier.sign_of_observable(m),
                                 "projector": StochasticClassifier.binary(m)},
                    perturbations={"listed": p})


def _run_eight_state(s: Scenario):
    e, p = s.ensemble, s.perturbations["listed"]
    pushed = pushforward_ensemble(e, p)
    aggs = {"loss_example_sigma_plus": class_aggregate(e, 1), "loss_example_sigma_minus": class_aggregate(e, -1),
            "loss_example_sigma_plus_perturbed": class_aggregate(pushed, 1),
            "loss_example_sigma_minus_perturbed": class_aggregate(pushed, -1)}
    checks = [close(f"aggregate {key[len('loss_example_'):]}", 0.0,
                    float(np.max(np.abs(agg.matrix - constants.reference(key)))), 1e-15, "reference")
              for key, agg in aggs.items()]
    m = nx.PROJ_0
    gap = check_linear_loss_gap(m, e, p)
    l_clean, l_pert = gap.details["L"], gap.details["L_tilde"]
    scale = nx.expectation(m, nx.PAULI_Z)  # Tr(M Z) = 1 for M = |0><0|
    checks += [close("L", 1 / 24, l_clean, 1e-12), close("L~", 83 / 240, l_pert, 1e-12),
               from_report(gap), close("L - L~", -73 / 240, gap.oracle_value, 1e-12)]
    for key, measured, label in (("loss_example_clean_coefficient", l_clean / scale, "L"),
                                 ("loss_example_perturbed_coefficient", l_pert / scale, "L~")):
        ref = constants.reference(key)
        checks.append(Check(f"published coefficient of {label}", ref, measured, abs(ref - measured) <= 1e-12,
                            "reference", asserted=False, detail="informational: direct evaluation differs"))
    acc = metrics.accuracy(s.classifiers["projector"], e).value
    checks.append(close("A for the |0><0| measurement", 11 / 24, acc, 1e-12))
    rows = [metric_row("L", l_clean, "linear"), metric_row("L_tilde_CI", l_pert, "linear"),
            metric_row("A", acc, "projector")]
    return checks, rows, [gap] + eight_state_loss_reports(gap)


register(ScenarioSpec(9, "eight-state-linear-loss",
                      "linear losses of a fixed observable on four listed states and their images",
                      {}, _build_eight_state, _run_eight_state))


# 10 ------------------------------------------------------------------------

def _build_sign_loss(params: dict, seed: int) -> Scenario:
    states = [_D([0.9, 0.1]), _D([0.8, 0.2]), _D([0.1, 0.9]), _D([0.2, 0.8])]
    images = [_D([0.3, 0.7]), _D([0.35, 0.65]), _D([0.7, 0.3]), _D([0.65, 0.35])]
    e = LabeledEnsemble.uniform(states, [1, 1, -1, -1])
    p = PerturbationSpec(targets=tuple(images), declared_type="irrelevant", name="near-opposite-class")
    cands = {"+Z": ScoreClassifier.sign_of_observable(nx.PAULI_Z),
             "-Z": ScoreClassifier.sign_of_observable(-nx.PAULI_Z)}
    return Scenario(10, "sign-loss-reversal", params, seed, ensemble=e, classifiers=cands,
                    perturbations={"near": p}, extras={"partner": [2, 3, 0, 1]})


def sign_loss(h: ScoreClassifier, e: LabeledEnsemble, states=None) -> float:
    """Unnormalized ``-sum_i c_i h(sigma_i)``."""
    states = e.states if states is None else states
    return float(-sum(it.label * h.predict(s) for it, s in zip(e.items, states)))


def _run_sign_loss(s: Scenario):
    e, p = s.ensemble, s.perturbations["near"]
    images = p.images(e)
    checks = []
    for i, j in enumerate(s.extras["partner"]):
        # Each state sits close to the image of its partner in the other class.
        sigma = e.items[i].state
        d = nx.trace_distance(sigma, images[j])
        margin = margin_radius(float(max(np.real(np.diag(sigma.matrix)))))
        checks.append(truth(f"item {i}: distance to partner image below p - 1/2", d < margin, "reference",
                            detail=f"{d:.3f} < {margin:.3f}"))
    losses = {k: sign_loss(h, e) for k, h in s.classifiers.items()}
    best = min(losses, key=losses.get)
    h = s.classifiers[best]
    l_clean, l_pert = sign_loss(h, e), sign_loss(h, e, images)
    ref = constants.reference("sign_loss_pair")
    n = len(e)
    flipped = all(h.predict(img) == -h.predict(it.state) for it, img in zip(e.items, images))
    split = robust_split_decomposition(h, e, p)
    checks += [
        truth("sign-loss minimizer is +Z", best == "+Z"),
        close("L (unnormalized)", ref[0], l_clean, 0.0, "reference"),
        close("L~ (unnormalized)", ref[1], l_pert, 0.0, "reference"),
        close("L (normalized)", -1.0, l_clean / n, 0.0, "derived"),
        close("L~ (normalized)", 1.0, l_pert / n, 0.0, "derived"),
        truth("every prediction flips (no robust items)", flipped and metrics.prediction_change_robustness(
            h, e, p).value == 0.0),
        Check("linear scores flip exactly", [], split["violators"], not split["violators"], "derived", asserted=False,
              detail="informational: the scores move toward the other class without exact negation"),
    ]
    rows = [metric_row("L", l_clean, "sign, unnormalized"), metric_row("L_tilde_CI", l_pert, "sign, unnormalized"),
            metric_row("L", l_clean / n, "sign, normalized"), metric_row("L_tilde_CI", l_pert / n, "sign, normalized"),
            metric_row("L", split["L"], "linear"), metric_row("L_tilde_CI", split["L_tilde"], "linear")]
    return checks, rows, []


register(ScenarioSpec(10, "sign-loss-reversal",
                      "small perturbations that turn the best sign loss into the worst",
                      {}, _build_sign_loss, _run_sign_loss))
