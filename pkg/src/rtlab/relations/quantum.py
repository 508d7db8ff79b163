"""Relations for measurement classifiers on qubit ensembles under noise."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from rtlab import metrics
from rtlab import numerics as nx
from rtlab.channels import KrausChannel, PerturbationSpec, as_perturbation, swap_perturbation
from rtlab.classifiers import StochasticClassifier
from rtlab.errors import ValidationError
from rtlab.numerics import equality_tolerance
from rtlab.relations import constants
from rtlab.relations.report import RelationReport
from rtlab.states import (DensityMatrix, FeatureOperator, LabeledEnsemble, class_aggregate,
                          feature_partition_aggregates, pushforward_ensemble)

HELSTROM_ATOL = 1e-12
AFFINE_ATOL = 1e-10


def helstrom_effect(sigma_a, sigma_b) -> np.ndarray:
    """Projector onto the strictly positive eigenspace of ``sigma_a - sigma_b``.

    Eigenvalues within 1e-12 of zero are left out, so equal inputs give the
    zero projector.
    """
    a, b = nx.check_density(sigma_a), nx.check_density(sigma_b)
    if a.shape != b.shape:
        raise ValidationError("dimension mismatch")
    w, v = nx.hermitian_eigendecomposition(a - b)
    keep = v[:, w > HELSTROM_ATOL]
    return keep @ keep.conj().T


def _binary_povm(povm: StochasticClassifier) -> np.ndarray:
    if set(povm.classes) != {1, -1}:
        raise ValidationError("binary measurement with outcomes (+1, -1) required")
    return povm.effect(1)


def generalized_trace_distance(x, y) -> float:
    """Half the trace norm of ``x - y``; also defined for unnormalized operators."""
    return 0.5 * nx.trace_norm(np.asarray(x) - np.asarray(y))


def check_measurement_noise_gap(e: LabeledEnsemble, povm: StochasticClassifier, n,
                                tol: float | None = None) -> RelationReport:
    """Aggregate formula for ``A~_s - A_s`` and its trace-distance bound.

    Closed form: ``(1/2) Tr(Pi_1 (S~+ - S+ + S- - S~-))`` from class
    aggregates, with ``S~ = n(S)``.  Oracle: the item-by-item difference
    of the two accuracies.  Side checks: the Heisenberg-picture version
    agrees, and the gap is at most ``tau(S_A, S_B)`` with
    ``S_A = (S~+ + S-)/2`` and ``S_B = (S+ + S~-)/2``.
    """
    tol = equality_tolerance() if tol is None else tol
    e.require_binary()
    pi1 = _binary_povm(povm)
    spec = as_perturbation(n)
    unbiased = e.is_unbiased()
    sp, sm = class_aggregate(e, 1), class_aggregate(e, -1)
    pushed = pushforward_ensemble(e, spec)
    tsp, tsm = class_aggregate(pushed, 1), class_aggregate(pushed, -1)
    closed = 0.5 * nx.expectation(pi1, tsp.matrix - sp.matrix + sm.matrix - tsm.matrix)
    a_s = metrics.accuracy(povm, e).value
    at_s = metrics.robustness_accuracy(povm, e, spec).value
    oracle = at_s - a_s
    sigma_a = 0.5 * (tsp.matrix + sm.matrix)
    sigma_b = 0.5 * (sp.matrix + tsm.matrix)
    bound = nx.trace_distance(sigma_a, sigma_b)
    checks = [("gap within trace-distance bound", abs(oracle) <= bound + tol)]
    heis = None
    if spec.channel is not None:
        pt = spec.channel.adjoint(pi1)
        heis = 0.5 * nx.expectation(pt - pi1, sp.matrix - sm.matrix)
        checks.append(("Heisenberg form agrees", abs(heis - closed) <= tol))
    return RelationReport(
        "measurement_noise_gap", closed, oracle, None, "identity", tol,
        (("binary labels", True), ("unbiased classes", unbiased)), tuple(checks),
        {"A_s": a_s, "A_tilde_s": at_s, "trace_distance_bound": bound, "heisenberg_value": heis})


def measurement_noise_bound_report(gap: RelationReport) -> RelationReport:
    """The bound part of :func:`check_measurement_noise_gap` as its own row."""
    return RelationReport("measurement_noise_gap_bound", gap.details["trace_distance_bound"],
                          abs(gap.oracle_value), None, "upper-bound", gap.tolerance,
                          gap.assumptions_checked)


# Affine response of accuracy to a channel.

@dataclass(frozen=True)
class NoiseLine:
    slope: float
    intercept: float
    derived_slope: float | None
    derived_intercept: float | None
    reference_slope: float | None
    reference_intercept: float | None
    affine_residual: float
    rank_one_projector: bool

    @property
    def tradeoff(self) -> bool:
        return self.slope < -equality_tolerance()

    @property
    def is_affine(self) -> bool:
        return self.affine_residual <= AFFINE_ATOL


def _two_item(plus: np.ndarray, minus: np.ndarray) -> LabeledEnsemble:
    return LabeledEnsemble.from_lists([0.5, 0.5], [DensityMatrix(plus), DensityMatrix(minus)], [1, -1])


def _derived_line(n: KrausChannel):
    p = dict(n.params)
    if n.name == "depolarizing":
        return 1 - p["p"], p["p"] / 2
    if n.name == "pauli":
        q = p["p1"] + p["p2"]
        return 1 - 2 * q, q
    if n.name == "bit-flip":
        return 1 - 2 * p["p"], p["p"]
    if n.name in ("phase-flip", "identity"):
        return 1.0, 0.0
    return None, None


def _reference_line(n: KrausChannel):
    p = dict(n.params)
    if n.name == "depolarizing":
        return constants.evaluate("depolarizing_line", p["p"])
    if n.name == "pauli":
        return constants.evaluate("pauli_line", p["p1"] + p["p2"])
    if n.name == "bit-flip":
        return constants.evaluate("pauli_line", p["p"])
    if n.name == "phase-flip":
        return constants.evaluate("pauli_line", 0.0)
    return None, None


def noise_response_line(channel: KrausChannel, povm: StochasticClassifier, n_validation: int = 3,
                        seed: int = 0) -> NoiseLine:
    """Exact affine map ``A_s -> A~_s`` induced by ``channel`` on two-state ensembles.

    The slope and intercept come from two ensembles.  One has the two
    eigenvectors of ``Pi_1`` as class states (``A_s = 1``).  The other has
    both classes maximally mixed (``A_s = 1/2``).  Further seeded random
    ensembles measure how far the channel is from inducing an affine map.
    """
    pi1 = _binary_povm(povm)
    if channel.dim != pi1.shape[0]:
        raise ValidationError("channel and measurement dimensions differ")
    w, v = nx.hermitian_eigendecomposition(pi1)
    rank_one = nx.is_projector(pi1) and int(round(np.trace(pi1).real)) == 1
    top, bottom = np.outer(v[:, -1], v[:, -1].conj()), np.outer(v[:, 0], v[:, 0].conj())
    mixed = np.eye(pi1.shape[0]) / pi1.shape[0]

    def point(plus, minus):
        ens = _two_item(plus, minus)
        return metrics.accuracy(povm, ens).value, metrics.robustness_accuracy(povm, ens, channel).value

    a_hi, t_hi = point(top, bottom)
    a_mid, t_mid = point(mixed, mixed)
    if abs(a_hi - a_mid) <= 1e-12:
        raise ValidationError("measurement does not separate the extreme ensembles")
    slope = (t_hi - t_mid) / (a_hi - a_mid)
    intercept = t_mid - slope * a_mid
    rng = np.random.default_rng(seed)
    residual = 0.0
    for _ in range(n_validation):
        a3, t3 = point(nx.random_density_matrix(rng, pi1.shape[0]), nx.random_density_matrix(rng, pi1.shape[0]))
        residual = max(residual, abs(t3 - (slope * a3 + intercept)))
    ds, di = _derived_line(channel)
    rs, ri = _reference_line(channel)
    return NoiseLine(slope, intercept, ds, di, rs, ri, residual, rank_one)


def noise_line_reports(channel: KrausChannel, povm: StochasticClassifier, label: str) -> list[RelationReport]:
    """Slope and intercept rows: derived closed form vs. measured line vs. reference."""
    line = noise_response_line(channel, povm)
    assumptions = (("rank-one projector measurement", line.rank_one_projector), ("affine response", line.is_affine))
    out = []
    for part, measured, derived, ref in (("slope", line.slope, line.derived_slope, line.reference_slope),
                                         ("intercept", line.intercept, line.derived_intercept,
                                          line.reference_intercept)):
        if derived is None:
            continue
        out.append(RelationReport(f"{label}_{part}", derived, measured, ref, "identity",
                                  assumptions_checked=assumptions, details=dict(channel.params)))
    return out


@dataclass(frozen=True)
class Incompatibility:
    derivative: float
    incompatible: bool
    first: NoiseLine
    second: NoiseLine
    reference_derivative: float | None


def incompatibility_check(n1: KrausChannel, n2: KrausChannel, povm: StochasticClassifier) -> Incompatibility:
    """``dA2/dA1 = slope2 / slope1`` through the shared clean accuracy.

    Raises:
        ValidationError: when the first channel's slope vanishes ("degenerate
            first channel") or either channel does not induce an affine map.
    """
    l1, l2 = noise_response_line(n1, povm), noise_response_line(n2, povm)
    if not (l1.is_affine and l2.is_affine):
        raise ValidationError("channel response is not affine in the clean accuracy")
    if abs(l1.slope) <= 1e-12:
        raise ValidationError("degenerate first channel: its response slope is zero")
    deriv = l2.slope / l1.slope
    ref = None
    if n1.name == "depolarizing" and n2.name == "bit-flip" and n1.params["p"] < 1:
        ref = constants.evaluate("bit_flip_vs_depolarizing_derivative", n1.params["p"], n2.params["p"])
    return Incompatibility(deriv, deriv < -1e-12, l1, l2, ref)


# Swaps between classes and between feature partitions.

@dataclass(frozen=True)
class SwapCondition:
    satisfied: bool
    min_overlap_ratio: float
    max_distance: float
    max_distance_bound: float
    within_budget: bool
    A_s: float
    A_tilde_s: float
    complement_residual: float
    perturbation: PerturbationSpec


def adversarial_swap_condition(e: LabeledEnsemble, epsilon_max: float,
                               povm: StochasticClassifier | None = None) -> SwapCondition:
    """Overlap test for a small class swap that inverts accuracy.

    Pairs the k-th positive with the k-th negative item and evaluates
    ``min_k |(w-_k / w+_k) Tr(s+_k s-_k)|`` against ``1 - epsilon_max``.
    Then it applies the swap and measures every pair's trace distance (and
    the bound ``sqrt(1 - F)``) and the residual of ``A~_s = 1 - A_s``.
    The measurement defaults to the optimal discriminator of the two class
    aggregates.
    """
    e.require_binary()
    swap = swap_perturbation(e, "class-swap")
    pos = [i for i, it in enumerate(e.items) if it.label == 1]
    ratios, dists, bounds = [], [], []
    for i in pos:
        j = swap.index_map[i]
        wi, wj = e.items[i].weight, e.items[j].weight
        if wi <= 0:
            raise ValidationError(f"item {i} has zero weight; overlap ratio undefined")
        si, sj = e.items[i].state, e.items[j].state
        ratios.append(abs(wj / wi * nx.expectation(si.matrix, sj.matrix)))
        dists.append(nx.trace_distance(si, sj))
        bounds.append(np.sqrt(max(0.0, 1 - nx.fidelity(si, sj))))
    if povm is None:
        povm = StochasticClassifier.binary(helstrom_effect(class_aggregate(e, 1), class_aggregate(e, -1)))
    a = metrics.accuracy(povm, e).value
    at = metrics.robustness_accuracy(povm, e, swap).value
    min_ratio = float(min(ratios))
    return SwapCondition(min_ratio >= 1 - epsilon_max, min_ratio, float(max(dists)), float(max(bounds)),
                         bool(max(dists) <= epsilon_max), a, at, abs(at - (1 - a)), swap)


def feature_swap_perturbation(e: LabeledEnsemble, f0: FeatureOperator) -> PerturbationSpec:
    return swap_perturbation(e, "feature-swap", f0)


def check_feature_swap_bound(e: LabeledEnsemble, f0_op: FeatureOperator, povm: StochasticClassifier,
                             tol: float | None = None) -> RelationReport:
    """Accuracy bound after swapping the feature partitions inside each class.

    The upper-bound row compares the measured ``A~_s`` with
    ``f0/(1-f0) (1 - A_s)``.  Side rows check three things: that the
    partition formulas for ``A_s`` and ``A~_s`` match item-level sums, that
    the swap realizes the four aggregate exchanges, and the gap bound
    ``(2 f0 + 1) tau(S_A, S_B)`` on the unnormalized combinations.
    """
    tol = equality_tolerance() if tol is None else tol
    e.require_binary()
    pi1 = _binary_povm(povm)
    part = feature_partition_aggregates(e, f0_op)
    f_plus, f_minus = part.agreement(1), part.agreement(-1)
    f0 = f_plus
    assumptions = (("unbiased classes", e.is_unbiased()),
                   ("equal feature agreement in both classes", abs(f_plus - f_minus) <= 1e-12),
                   ("feature positively correlated (f0 > 1/2)", f0 > 0.5))
    swap = feature_swap_perturbation(e, f0_op)
    pushed = pushforward_ensemble(e, swap)
    s = {k: v.matrix for k, v in part.aggregates.items()}
    # Aggregates of images, taken over the ORIGINAL partition membership.
    tilde = {}
    for key, idx in part.members.items():
        w = [e.items[i].weight for i in idx]
        tilde[key] = DensityMatrix.mixture(w, [pushed.items[i].state for i in idx]).matrix
    exchanges = [((1, 1), (1, -1)), ((1, -1), (1, 1)), ((-1, -1), (-1, 1)), ((-1, 1), (-1, -1))]
    swap_ok = all(np.max(np.abs(tilde[a] - s[b])) <= 1e-12 for a, b in exchanges)

    def tr(m):
        return nx.expectation(pi1, m)

    a_formula = (0.5 * f0 * tr(s[(1, 1)]) + 0.5 * (1 - f0) * tr(s[(1, -1)])
                 + 0.5 * f0 * (1 - tr(s[(-1, -1)])) + 0.5 * (1 - f0) * (1 - tr(s[(-1, 1)])))
    at_formula = (0.5 * f0 * tr(tilde[(1, 1)]) + 0.5 * (1 - f0) * tr(tilde[(1, -1)])
                  + 0.5 * f0 * (1 - tr(tilde[(-1, -1)])) + 0.5 * (1 - f0) * (1 - tr(tilde[(-1, 1)])))
    a_s = metrics.accuracy(povm, e).value
    at_s = metrics.robustness_accuracy(povm, e, swap).value
    bar_a = 4 * f0 * (tilde[(1, 1)] + tilde[(-1, 1)] + s[(1, -1)] + s[(-1, -1)]) + 2 * (tilde[(1, -1)] + s[(-1, 1)])
    bar_b = 4 * f0 * (tilde[(1, -1)] + tilde[(-1, -1)] + s[(-1, 1)] + s[(1, 1)]) + 2 * (tilde[(-1, 1)] + s[(1, -1)])
    gap_bound = constants.evaluate("feature_swap_distance_factor", f0) * generalized_trace_distance(bar_a, bar_b)
    bound = constants.evaluate("feature_swap_bound", f0, a_s) if f0 < 1 else np.inf
    checks = (("partition formula reproduces A_s", abs(a_formula - a_s) <= tol),
              ("partition formula reproduces A~_s", abs(at_formula - at_s) <= tol),
              ("swap exchanges the four aggregates", swap_ok),
              ("gap within (2 f0 + 1) tau bound", abs(at_s - a_s) <= gap_bound + tol))
    return RelationReport(
        "feature_swap_bound", bound, at_s, None, "upper-bound", tol, assumptions, checks,
        {"f0": f0, "A_s": a_s, "A_tilde_s": at_s, "gap": at_s - a_s, "gap_bound": gap_bound})


def check_pushforward_identity(h, e: LabeledEnsemble, n, tol: float | None = None) -> RelationReport:
    """Robustness accuracy equals plain accuracy on the pushed-forward ensemble.

    When no prediction survives the perturbation (``A* = 0``) it also
    checks ``A(pushforward) = 1 - A`` for binary problems.
    """
    tol = equality_tolerance() if tol is None else tol
    spec = as_perturbation(n)
    at = metrics.robustness_accuracy(h, e, spec).value
    a2 = metrics.accuracy(h, pushforward_ensemble(e, spec)).value
    a1 = metrics.accuracy(h, e).value
    checks = []
    a_star = None
    if not isinstance(h, StochasticClassifier):
        a_star = metrics.prediction_change_robustness(h, e, spec).value
        if a_star <= tol and e.is_binary:
            checks.append(("A2 = 1 - A1 when every prediction flips", abs(a2 - (1 - a1)) <= tol))
    return RelationReport("pushforward_identity", a2, at, None, "identity", tol, (("perturbation total", True),),
                          tuple(checks), {"A1": a1, "A2": a2, "A_star": a_star})
