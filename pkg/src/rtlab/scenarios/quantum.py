"""Scenarios 5-8: measurement classifiers on qubits under noise and swaps."""

from __future__ import annotations

import numpy as np

from rtlab import metrics
from rtlab import numerics as nx
from rtlab.channels import KrausChannel, classify_perturbation, make_named_channel, swap_perturbation
from rtlab.classifiers import StochasticClassifier
from rtlab.errors import ValidationError
from rtlab.relations import constants
from rtlab.relations import quantum as rq
from rtlab.scenarios.base import Check, Scenario, ScenarioSpec, close, from_report, metric_row, register, truth
from rtlab.states import DensityMatrix, FeatureOperator, LabeledEnsemble, ensemble_lookup_oracle

Z_MEASUREMENT = StochasticClassifier.binary(nx.PROJ_0)


def _random_ensemble(rng: np.random.Generator, n_per_class: int = 2) -> LabeledEnsemble:
    states = [DensityMatrix(nx.random_density_matrix(rng, 2)) for _ in range(2 * n_per_class)]
    return LabeledEnsemble.uniform(states, [1] * n_per_class + [-1] * n_per_class)


def _random_pauli(rng: np.random.Generator) -> KrausChannel:
    return make_named_channel("pauli", p=rng.dirichlet(np.ones(4)).tolist())


# 5 -------------------------------------------------------------------------

def _build_noise_lines(params: dict, seed: int) -> Scenario:
    channels = {"depolarizing": make_named_channel("depolarizing", p=params["p"]),
                "pauli": make_named_channel("pauli", p=params["pauli"]),
                "bit_flip": make_named_channel("bit-flip", p=params["bitflip"]),
                "full_bit_flip": make_named_channel("bit-flip", p=1.0)}
    rng = np.random.default_rng(seed)
    triples = [(_random_ensemble(rng), Z_MEASUREMENT if k % 2 else
                StochasticClassifier.binary(nx.random_pure_state(rng, 2)), _random_pauli(rng))
               for k in range(params["n_random"])]
    return Scenario(5, "noise-response-lines", params, seed, classifiers={"z": Z_MEASUREMENT},
                    perturbations=channels, extras={"triples": triples})


def _run_noise_lines(s: Scenario):
    ch = s.perturbations
    lines = {k: rq.noise_response_line(c, Z_MEASUREMENT) for k, c in ch.items()}
    checks, relations = [], []
    for key in ("depolarizing", "pauli", "bit_flip"):
        rows = rq.noise_line_reports(ch[key], Z_MEASUREMENT, key)
        relations += rows
        for r in rows:
            checks.append(from_report(r))
            if r.reference_value is not None:
                asserted = key == "depolarizing"
                checks.append(Check(f"{r.relation_id} against the published constant", r.reference_value,
                                    r.oracle_value, bool(r.reference_matches), "reference", asserted,
                                    "" if asserted else "informational: published value disagrees"))
    dep = lines["depolarizing"]
    checks.append(truth("depolarizing slope >= 0 (no trade-off)", dep.slope >= -1e-12 and not dep.tradeoff,
                        "reference"))
    full = lines["full_bit_flip"]
    checks.append(close("full bit-flip slope", -1.0, full.slope, 1e-12, "reference"))
    checks.append(close("full bit-flip intercept", 1.0, full.intercept, 1e-12, "reference"))
    gaps = [rq.check_measurement_noise_gap(e, povm, n) for e, povm, n in s.extras["triples"]]
    worst = max(g.abs_discrepancy_closed_vs_oracle for g in gaps)
    checks.append(close("aggregate gap formula vs item sums (max over random cases)", 0.0, worst, 1e-12))
    checks.append(truth("trace-distance bound and Heisenberg form hold on every random case",
                        all(g.holds for g in gaps)))
    relations += gaps[:3] + [rq.measurement_noise_bound_report(g) for g in gaps[:3]]
    metrics_rows = []
    for key, line in lines.items():
        metrics_rows += [metric_row("slope", line.slope, key), metric_row("intercept", line.intercept, key)]
    return checks, metrics_rows, relations


register(ScenarioSpec(5, "noise-response-lines",
                      "affine accuracy response to depolarizing, Pauli and bit-flip noise",
                      {"p": 0.4, "pauli": [0.7, 0.1, 0.1, 0.1], "bitflip": 0.3, "n_random": 20},
                      _build_noise_lines, _run_noise_lines))


# 6 -------------------------------------------------------------------------

def _pure_pair(rng: np.random.Generator, tau: float) -> tuple[np.ndarray, np.ndarray]:
    """Two pure qubit states at trace distance ``tau`` (overlap ``1 - tau^2``)."""
    u = nx.random_unitary(rng, 2)
    half = np.arcsin(tau)
    a = u @ np.array([1.0, 0.0])
    b = u @ np.array([np.cos(half), np.sin(half)])
    return nx.ket_projector(a), nx.ket_projector(b)


def _pair_ensemble(pairs) -> LabeledEnsemble:
    plus = [DensityMatrix(a) for a, _ in pairs]
    minus = [DensityMatrix(b) for _, b in pairs]
    return LabeledEnsemble.uniform(plus + minus, [1] * len(plus) + [-1] * len(minus))


def _build_adversarial_swap(params: dict, seed: int) -> Scenario:
    eps, frac = params["epsilon_max"], params["distance_fraction"]
    if not 0 < eps < 1 or not 0 < frac <= 1:
        raise ValidationError("need 0 < epsilon_max < 1 and 0 < distance_fraction <= 1")
    rng = np.random.default_rng(seed)
    e = _pair_ensemble([_pure_pair(rng, frac * eps) for _ in range(params["n_pairs"])])
    # Pairs whose overlap sits exactly at the threshold 1 - epsilon.
    loose = _pair_ensemble([_pure_pair(rng, np.sqrt(eps)) for _ in range(params["n_pairs"])])
    return Scenario(6, "small-maximal-tradeoff-swap", params, seed, ensemble=e,
                    perturbations={"swap": swap_perturbation(e)}, oracle=ensemble_lookup_oracle(e),
                    extras={"threshold_pairs": loose})


def _run_adversarial_swap(s: Scenario):
    eps = s.params["epsilon_max"]
    cond = rq.adversarial_swap_condition(s.ensemble, eps)
    kind = classify_perturbation(cond.perturbation, s.ensemble, s.oracle, eps)
    loose = rq.adversarial_swap_condition(s.extras["threshold_pairs"], eps)
    checks = [
        truth("overlap condition satisfied", cond.satisfied, "reference",
              detail=f"min ratio {cond.min_overlap_ratio:.6f} vs {constants.evaluate('swap_overlap_condition', eps)}"),
        close("A~ = 1 - A", 0.0, cond.complement_residual, 1e-12, "reference"),
        truth("every pair moves at most epsilon_max", cond.within_budget, "reference",
              detail=f"max distance {cond.max_distance:.6f}"),
        truth("swap is small and class-changing (type II)", kind.type == "II", "derived"),
        Check("pairs at overlap exactly 1 - epsilon move more than epsilon", eps, loose.max_distance,
              loose.max_distance > eps, "derived", asserted=False,
              detail="informational: the overlap condition alone gives distance sqrt(epsilon)"),
    ]
    rows = [metric_row("A", cond.A_s, "helstrom"), metric_row("A_tilde", cond.A_tilde_s, "helstrom"),
            metric_row("max_distance", cond.max_distance), metric_row("min_overlap_ratio", cond.min_overlap_ratio)]
    return checks, rows, []


register(ScenarioSpec(6, "small-maximal-tradeoff-swap",
                      "class swap of nearly identical pure pairs that inverts accuracy",
                      {"epsilon_max": 0.05, "n_pairs": 4, "distance_fraction": 0.9},
                      _build_adversarial_swap, _run_adversarial_swap))


# 7 -------------------------------------------------------------------------

Z_FEATURE = FeatureOperator("z", nx.PAULI_Z)


def mirrored_feature_ensemble(rng: np.random.Generator, f0: float, k: int) -> LabeledEnsemble:
    """Class -1 copies class +1 state by state; feature signs follow the label with weight f0."""
    up = [sample for sample in _hemisphere_states(rng, k, 1)]
    down = [sample for sample in _hemisphere_states(rng, k, -1)]
    w_agree, w_disagree = f0 / (2 * k), (1 - f0) / (2 * k)
    states = up + down + down + up
    weights = [w_agree] * k + [w_disagree] * k + [w_agree] * k + [w_disagree] * k
    labels = [1] * (2 * k) + [-1] * (2 * k)
    return LabeledEnsemble.from_lists(weights, states, labels)


def _hemisphere_states(rng: np.random.Generator, k: int, sign: int) -> list[DensityMatrix]:
    out = []
    for _ in range(k):
        z = sign * rng.uniform(0.2, 1.0)
        phi = rng.uniform(0, 2 * np.pi)
        r = np.sqrt(1 - z * z) * rng.uniform(0, 1)
        out.append(DensityMatrix.from_bloch_vector([r * np.cos(phi), r * np.sin(phi), z]))
    return out


def generic_feature_ensemble(rng: np.random.Generator, f0: float, k: int) -> LabeledEnsemble:
    groups = [(1, 1, f0), (1, -1, 1 - f0), (-1, -1, f0), (-1, 1, 1 - f0)]
    states, weights, labels = [], [], []
    for label, sign, frac in groups:
        states += _hemisphere_states(rng, k, sign)
        weights += [frac / (2 * k)] * k
        labels += [label] * k
    return LabeledEnsemble.from_lists(weights, states, labels)


def _build_feature_swap(params: dict, seed: int) -> Scenario:
    f0, k = params["f0"], params["k"]
    if not 0.5 < f0 < 1 or k < 1:
        raise ValidationError("need 1/2 < f0 < 1 and k >= 1")
    rng = np.random.default_rng(seed)
    e = mirrored_feature_ensemble(rng, f0, k)
    counterexample = None
    for attempt in range(200):
        cand = generic_feature_ensemble(np.random.default_rng([seed, attempt]), f0, k)
        r = rq.check_feature_swap_bound(cand, Z_FEATURE, Z_MEASUREMENT)
        if not r.closed_form_matches:
            counterexample = (attempt, r)
            break
    return Scenario(7, "feature-partition-swap", params, seed, ensemble=e, classifiers={"z": Z_MEASUREMENT},
                    perturbations={"swap": rq.feature_swap_perturbation(e, Z_FEATURE)},
                    extras={"counterexample": counterexample})


def _run_feature_swap(s: Scenario):
    e, swap = s.ensemble, s.perturbations["swap"]
    report = rq.check_feature_swap_bound(e, Z_FEATURE, Z_MEASUREMENT)
    twice = LabeledEnsemble.from_lists(e.weights, swap.images(e), e.labels)
    back = metrics.robustness_accuracy(Z_MEASUREMENT, twice, swap).value
    checks = [from_report(report, "reference"),
              close("A~ = 1 - A on the mirrored ensemble", 1 - report.details["A_s"], report.oracle_value, 1e-12),
              close("swap applied twice restores A", report.details["A_s"], back, 1e-12, "trivial")]
    found = s.extras["counterexample"]
    if found is None:
        checks.append(Check("generic ensemble violating the bound", "found", "none in 200 draws", True,
                            "derived", asserted=False))
    else:
        attempt, r = found
        checks.append(Check("generic ensemble violating the bound", r.closed_form_value, r.oracle_value, False,
                            "derived", asserted=False,
                            detail=f"informational: draw {attempt} has A~ above f0/(1-f0) (1-A)"))
    rows = [metric_row("A", report.details["A_s"], "z measurement"),
            metric_row("A_tilde", report.oracle_value, "z measurement"),
            metric_row("bound", report.closed_form_value)]
    return checks, rows, [report] + ([found[1]] if found else [])


register(ScenarioSpec(7, "feature-partition-swap",
                      "swapping feature partitions inside each class and the resulting accuracy bound",
                      {"f0": 0.75, "k": 4}, _build_feature_swap, _run_feature_swap))


# 8 -------------------------------------------------------------------------

def _build_incompatible(params: dict, seed: int) -> Scenario:
    p1, p2 = params["p1"], params["p2"]
    return Scenario(8, "incompatible-noise", params, seed, classifiers={"z": Z_MEASUREMENT},
                    perturbations={"depolarizing": make_named_channel("depolarizing", p=p1),
                                   "bit_flip": make_named_channel("bit-flip", p=p2)})


def _run_incompatible(s: Scenario):
    p1, p2 = s.params["p1"], s.params["p2"]
    inc = rq.incompatibility_check(s.perturbations["depolarizing"], s.perturbations["bit_flip"], Z_MEASUREMENT)
    expected = (1 - 2 * p2) / (1 - p1)
    grid_ok = True
    for q1 in (0.0, 0.3, 0.9):
        for k in range(21):
            q2 = 0.05 * k
            if abs(q2 - 0.5) < 1e-12:
                continue
            r = rq.incompatibility_check(make_named_channel("depolarizing", p=q1),
                                         make_named_channel("bit-flip", p=q2), Z_MEASUREMENT)
            grid_ok &= r.incompatible == (q2 > 0.5)
    printed = constants.evaluate("bit_flip_line_incompatibility", p2)
    line = inc.second
    checks = [
        close("dA2/dA1 = (1 - 2 p2)/(1 - p1)", expected, inc.derivative, 1e-12),
        truth("incompatible exactly when p2 > 1/2 (grid)", grid_ok),
        truth("published derivative has the same sign", inc.reference_derivative is None
              or np.sign(inc.reference_derivative) == np.sign(inc.derivative), "reference"),
        Check("published bit-flip line (slope, intercept)", list(printed), [line.slope, line.intercept],
              bool(np.allclose(printed, (line.slope, line.intercept), atol=1e-12)), "reference", asserted=False,
              detail="informational: measured line is (1 - 2p, p)"),
    ]
    rows = [metric_row("derivative", inc.derivative), metric_row("incompatible", float(inc.incompatible)),
            metric_row("slope", inc.first.slope, "depolarizing"), metric_row("slope", line.slope, "bit-flip")]
    return checks, rows, []


register(ScenarioSpec(8, "incompatible-noise",
                      "two noise channels whose robustness accuracies move in opposite directions",
                      {"p1": 0.5, "p2": 0.75}, _build_incompatible, _run_incompatible))
