"""Accuracy, robustness and loss quantities as exact ensemble sums.

Every function takes a classifier ``h`` (a :class:`ScoreClassifier` or a
:class:`StochasticClassifier`), a :class:`LabeledEnsemble` and, where
relevant, a perturbation (channel or :class:`PerturbationSpec`).

Three perturbed-accuracy notions are distinguished:

* corrupted-instance: perturbed input scored against the original label;
* prediction-change: perturbed prediction compared with the clean one;
* error-region: perturbed input scored against the oracle's label of the
  perturbed state.
"""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np

from rtlab.channels import as_perturbation
from rtlab.classifiers import FeatureSumScore, ScoreClassifier, StochasticClassifier, quantum_feature
from rtlab.errors import OracleError, TieError, ValidationError
from rtlab.search import SearchBudget, minimal_breaking_distance
from rtlab.states import DensityMatrix, FeatureOperator, LabeledEnsemble

PROB_ATOL = 1e-10
KINDS = ("corrupted-instance", "prediction-change", "error-region")
LOSSES = ("zero-one", "linear")

REPORT_KEYS = ("A", "A_tilde", "A_star", "A_bar", "L", "L_tilde_CI", "L_star_PC", "L_bar_ER",
               "Delta_tilde", "Delta_star", "Delta_bar")


@dataclass(frozen=True)
class MetricValue:
    value: float
    kind: str
    method: str = "exact-sum"
    standard_error: float | None = None
    notes: str = ""

    def __post_init__(self):
        if self.kind in ("A", "A_tilde", "A_star", "A_bar") and not (
                -PROB_ATOL <= self.value <= 1 + PROB_ATOL):
            raise ValidationError(f"probability metric {self.kind} = {self.value} outside [0, 1]")

    def __float__(self) -> float:
        return float(self.value)


@dataclass(frozen=True)
class ErrorDecomposition:
    generalisation_error: float
    approximation_error: float
    excess_risk: float


def error_decomposition(loss_train_on_true: float, loss_trueopt_on_true: float,
                        loss_bayes_on_true: float) -> ErrorDecomposition:
    """Split the excess risk into generalisation and approximation parts."""
    vals = (loss_train_on_true, loss_trueopt_on_true, loss_bayes_on_true)
    if not all(np.isfinite(v) for v in vals):
        raise ValidationError("losses must be finite")
    g = loss_train_on_true - loss_trueopt_on_true
    a = loss_trueopt_on_true - loss_bayes_on_true
    return ErrorDecomposition(g, a, g + a)


def _check_dims(h, e: LabeledEnsemble) -> None:
    dim = getattr(h, "dim", None)
    if dim is None and isinstance(h, ScoreClassifier):
        dims = {getattr(s, "dim", None) for s in h.scores} - {None}
        dim = dims.pop() if len(dims) == 1 else None
    if dim is not None and dim != e.dim:
        raise ValidationError(f"classifier dimension {dim} does not match ensemble dimension {e.dim}")


def _label_probability(h, sigma: DensityMatrix, label: int) -> float:
    if isinstance(h, StochasticClassifier):
        if label not in h.classes:
            return 0.0
        return h.probability(sigma, label)
    return 1.0 if h.predict(sigma) == label else 0.0


def _agreement(h, a: DensityMatrix, b: DensityMatrix) -> float:
    """Probability that the predictions on ``a`` and ``b`` coincide."""
    if isinstance(h, StochasticClassifier):
        return float(np.dot(h.predict_distribution(a), h.predict_distribution(b)))
    return 1.0 if h.predict(a) == h.predict(b) else 0.0


def _images(e: LabeledEnsemble, p) -> list[DensityMatrix]:
    return as_perturbation(p).images(e)


def _oracle_labels(images, oracle) -> list[int]:
    labels = []
    for i, s in enumerate(images):
        try:
            labels.append(int(oracle(s)))
        except OracleError as exc:
            raise OracleError(f"oracle undefined on the image of item {i}: {exc}") from exc
    return labels


def _weighted(e: LabeledEnsemble, values: Sequence[float]) -> float:
    return float(np.dot(e.weights, np.asarray(values, dtype=float)))


def accuracy(h, e: LabeledEnsemble) -> MetricValue:
    """Probability that ``h`` returns the true class."""
    _check_dims(h, e)
    return MetricValue(_weighted(e, [_label_probability(h, it.state, it.label) for it in e.items]), "A")


def robustness_accuracy(h, e: LabeledEnsemble, p) -> MetricValue:
    """Accuracy on perturbed inputs against the original labels."""
    _check_dims(h, e)
    images = _images(e, p)
    return MetricValue(_weighted(e, [_label_probability(h, s, it.label)
                                     for it, s in zip(e.items, images)]), "A_tilde")


def prediction_change_robustness(h, e: LabeledEnsemble, p) -> MetricValue:
    """Probability the prediction survives the perturbation.

    For measurement classifiers this is the joint agreement
    ``sum_j Tr(Pi_j sigma) Tr(Pi_j sigma~)`` of independent shots.
    """
    _check_dims(h, e)
    images = _images(e, p)
    method_note = "joint-agreement" if isinstance(h, StochasticClassifier) else ""
    return MetricValue(_weighted(e, [_agreement(h, it.state, s) for it, s in zip(e.items, images)]),
                       "A_star", notes=method_note)


def error_region_robustness_accuracy(h, e: LabeledEnsemble, p, oracle) -> MetricValue:
    """Accuracy on perturbed inputs against the oracle's label of each image."""
    if oracle is None:
        raise ValidationError("error-region quantities need a ground-truth oracle")
    _check_dims(h, e)
    images = _images(e, p)
    labels = _oracle_labels(images, oracle)
    return MetricValue(_weighted(e, [_label_probability(h, s, c) for s, c in zip(images, labels)]), "A_bar")


def linear_score(h) -> Callable[[DensityMatrix], float]:
    if not isinstance(h, ScoreClassifier) or h.decision != "sign":
        raise ValidationError("linear loss needs a sign-decision score classifier")
    score, thr = h.scores[0], h.threshold
    if h.classes != (1, -1):
        raise ValidationError("linear loss needs classes (+1, -1)")
    return lambda s: score(s) - thr


_LOSS_KEYS = {None: "L", "corrupted-instance": "L_tilde_CI", "prediction-change": "L_star_PC",
              "error-region": "L_bar_ER"}


def robust_loss(h, e: LabeledEnsemble, p=None, kind: str | None = "corrupted-instance",
                loss: str = "zero-one", oracle=None) -> MetricValue:
    """Expected loss on perturbed inputs.

    Args:
        h: classifier; the linear loss needs a sign-decision score model
            whose score ``H`` gives the loss ``-c H``.
        e: labeled ensemble.
        p: perturbation; ``None`` (with ``kind=None``) gives the clean loss.
        kind: which reference label the perturbed prediction is scored
            against: the original class, the clean prediction, or the
            oracle's class of the perturbed state.
        loss: ``"zero-one"`` or ``"linear"``.
        oracle: required for ``kind="error-region"``.

    Returns:
        MetricValue keyed ``L``, ``L_tilde_CI``, ``L_star_PC`` or ``L_bar_ER``.
    """
    if loss not in LOSSES:
        raise ValidationError(f"loss must be one of {LOSSES}")
    if p is None:
        kind = None
    elif kind not in KINDS:
        raise ValidationError(f"kind must be one of {KINDS}")
    key = _LOSS_KEYS[kind]
    _check_dims(h, e)
    images = list(e.states) if p is None else _images(e, p)
    if kind is None or kind == "corrupted-instance":
        refs = list(e.labels)
    elif kind == "error-region":
        if oracle is None:
            raise ValidationError("error-region loss needs a ground-truth oracle")
        refs = _oracle_labels(images, oracle)
    else:
        refs = None

    if loss == "zero-one":
        if kind == "prediction-change":
            vals = [1.0 - _agreement(h, it.state, s) for it, s in zip(e.items, images)]
        else:
            vals = [1.0 - _label_probability(h, s, c) for s, c in zip(images, refs)]
        return MetricValue(_weighted(e, vals), key)

    score = linear_score(h)
    if kind == "prediction-change":
        refs = [h.predict(it.state) for it in e.items]
    vals = [-c * score(s) for s, c in zip(images, refs)]
    return MetricValue(_weighted(e, vals), key)


def loss_report(h, e: LabeledEnsemble, p=None, oracle=None) -> dict[str, MetricValue]:
    """All accuracy-type and loss-type report keys computable from the inputs."""
    out = {"A": accuracy(h, e)}
    linear = isinstance(h, ScoreClassifier) and h.decision == "sign" and h.classes == (1, -1)
    loss = "linear" if linear else "zero-one"
    out["L"] = robust_loss(h, e, None, None, loss)
    if p is not None:
        out["A_tilde"] = robustness_accuracy(h, e, p)
        out["A_star"] = prediction_change_robustness(h, e, p)
        out["L_tilde_CI"] = robust_loss(h, e, p, "corrupted-instance", loss)
        out["L_star_PC"] = robust_loss(h, e, p, "prediction-change", loss)
        if oracle is not None:
            out["A_bar"] = error_region_robustness_accuracy(h, e, p, oracle)
            out["L_bar_ER"] = robust_loss(h, e, p, "error-region", loss, oracle)
    return out


# Adversarial radii ---------------------------------------------------------

def adversarial_radius(h, sigma: DensityMatrix, kind: str = "prediction-change", label: int | None = None,
                       oracle=None, budget=None):
    """Smallest trace-distance move found that breaks the chosen condition.

    See :func:`rtlab.search.minimal_breaking_distance` for the search.  For
    ``corrupted-instance`` the reference class is ``label`` (or the
    oracle's class of ``sigma``); ``error-region`` needs the oracle.
    """
    if kind not in KINDS:
        raise ValidationError(f"kind must be one of {KINDS}")
    budget = SearchBudget() if budget is None else budget
    if kind == "prediction-change":
        ref = _safe_predict(h, sigma)

        def broken(rho):
            return ref is None or _safe_predict(h, rho) != ref
    elif kind == "corrupted-instance":
        truth = label if label is not None else (oracle(sigma) if oracle is not None else None)
        if truth is None:
            raise ValidationError("corrupted-instance radius needs the true label or an oracle")

        def broken(rho):
            return _safe_predict(h, rho) != truth
    else:
        if oracle is None:
            raise ValidationError("error-region radius needs an oracle")

        def broken(rho):
            return _safe_predict(h, rho) != oracle(rho)
    lower = _margin_lower_bound(h, sigma) if kind == "prediction-change" else 0.0
    return minimal_breaking_distance(sigma, broken, budget, lower_bound=lower,
                                     seed_states=_seed_states(h))


def _safe_predict(h, rho) -> int | None:
    """Prediction, or ``None`` on a tie (a tie counts as a broken decision)."""
    try:
        return h.predict(rho)
    except TieError:
        return None


def _margin_lower_bound(h, sigma: DensityMatrix) -> float:
    """``max(0, p_sigma - 1/2)`` for two-outcome measurement classifiers."""
    if isinstance(h, StochasticClassifier) and len(h.povm) == 2:
        return max(0.0, h.top_score(sigma) - 0.5)
    return 0.0


def _seed_states(h) -> list[np.ndarray]:
    """Eigenvectors of the classifier's operators: good search directions."""
    ops = []
    if isinstance(h, StochasticClassifier):
        ops = list(h.povm)
    elif isinstance(h, ScoreClassifier):
        for s in h.scores:
            if hasattr(s, "operator"):
                ops.append(np.asarray(s.operator))
            elif hasattr(s, "centroid"):
                ops.append(np.asarray(s.centroid))
            elif isinstance(s, FeatureSumScore):
                ops += [f.operator for f in s.features if f.is_linear]
    seeds = []
    for op in ops:
        _, v = np.linalg.eigh((op + op.conj().T) / 2)
        seeds += [np.outer(v[:, k], v[:, k].conj()) for k in range(v.shape[1])]
    return seeds


def expected_adversarial_radius(h, e: LabeledEnsemble, kind: str = "prediction-change", oracle=None,
                                budget=None) -> MetricValue:
    """Weighted mean of per-item radii (``inf`` when any item has no witness)."""
    key = {"corrupted-instance": "Delta_tilde", "prediction-change": "Delta_star", "error-region": "Delta_bar"}[kind]
    radii = [adversarial_radius(h, it.state, kind, label=it.label, oracle=oracle, budget=budget).radius
             for it in e.items]
    return MetricValue(_weighted(e, radii), key, method="numeric-search", notes="trace distance; upper bound")


# Features ---------------------------------------------------------------

def feature_usefulness(f: FeatureOperator, e: LabeledEnsemble) -> float:
    """Label correlation ``E[c f(sigma)]``."""
    e.require_binary()
    return _weighted(e, [it.label * quantum_feature(it.state, f) for it in e.items])


def feature_robustness(f: FeatureOperator, e: LabeledEnsemble, family: Sequence) -> float:
    """Worst-case label correlation over a finite perturbation family.

    Each item contributes the minimum of ``c f(N(sigma))`` over the family.
    """
    e.require_binary()
    if not family:
        raise ValidationError("perturbation family is empty")
    per_pert = np.array([[it.label * quantum_feature(s, f) for it, s in zip(e.items, _images(e, p))]
                         for p in family])
    return _weighted(e, per_pert.min(axis=0))


@dataclass(frozen=True)
class FeatureGap:
    name: str
    clean: float
    perturbed: float
    gap: float
    role: str  # robust | non-robust | partial


@dataclass(frozen=True)
class GapDecomposition:
    """Per-feature accounting of the linear accuracy gap ``A - A~``.

    ``A`` here is the negative linear loss ``E[c H(sigma)]``.  Each score
    component splits as ``H_l = r_l + n_l`` with ``r_l = (H_l + H_l~)/2``
    (survives the perturbation) and ``n_l = (H_l - H_l~)/2`` (flips sign),
    so that ``A - A~ = 2 E[c sum_l n_l]`` exactly.
    """

    features: tuple
    total_gap: float
    sum_of_gaps: float
    residual: float
    robust: tuple
    non_robust: tuple
    partial: tuple
    idealized: bool
    idealized_gap: float | None
    flip_component: float
    lipschitz: dict = field(default_factory=dict)


def per_feature_gap_decomposition(h: ScoreClassifier, e: LabeledEnsemble, p, loss: str = "linear",
                                  g: Callable[[np.ndarray], np.ndarray] | None = None,
                                  lipschitz_constant: float | None = None,
                                  role_atol: float = 1e-9) -> GapDecomposition:
    """Decompose the accuracy gap of a feature-sum classifier feature by feature.

    Args:
        h: sign-decision classifier whose single score is a feature sum.
        e: binary labeled ensemble.
        p: perturbation.
        loss: ``"linear"`` for the exact decomposition, ``"lipschitz"`` to
            also evaluate the bounds for the wrapped score ``g(c H)``.
        g: vectorized wrapper for the Lipschitz variant.
        lipschitz_constant: Lipschitz constant ``K`` of ``g``.
        role_atol: tolerance for labelling a feature robust or non-robust.

    The Lipschitz entry reports the measured gap
    ``|E g(c H(sigma)) - E g(c H(sigma~))|``, the product bound
    ``2K |E[c sum n_l]|`` and the always-valid bound ``2K E|sum n_l|``.
    """
    if not (isinstance(h, ScoreClassifier) and len(h.scores) == 1 and isinstance(h.scores[0], FeatureSumScore)):
        raise ValidationError("gap decomposition needs a classifier with one feature-sum score")
    if loss not in ("linear", "lipschitz"):
        raise ValidationError("loss must be 'linear' or 'lipschitz'")
    e.require_binary()
    score: FeatureSumScore = h.scores[0]
    images = _images(e, p)
    c = np.array(e.labels, dtype=float)
    w = e.weights
    clean = np.array([score.components(it.state) for it in e.items])   # items x features
    pert = np.array([score.components(s) for s in images])
    per_clean = w @ (c[:, None] * clean)
    per_pert = w @ (c[:, None] * pert)
    gaps = per_clean - per_pert
    total = float(w @ (c * clean.sum(axis=1)) - w @ (c * pert.sum(axis=1)))

    feats, robust, nonrobust, partial = [], [], [], []
    for k, f in enumerate(score.features):
        if np.all(np.abs(pert[:, k] - clean[:, k]) <= role_atol):
            role = "robust"
            robust.append(f.name)
        elif np.all(np.abs(pert[:, k] + clean[:, k]) <= role_atol):
            role = "non-robust"
            nonrobust.append(f.name)
        else:
            role = "partial"
            partial.append(f.name)
        feats.append(FeatureGap(f.name, float(per_clean[k]), float(per_pert[k]), float(gaps[k]), role))

    idx_nr = [k for k, ft in enumerate(feats) if ft.role == "non-robust"]
    idealized = not partial
    ideal_gap = float(2 * (w @ (c * clean[:, idx_nr].sum(axis=1)))) if idealized else None
    flip = (clean - pert) / 2
    flip_component = float(w @ (c * flip.sum(axis=1)))

    lip: dict = {}
    if loss == "lipschitz":
        if g is None or lipschitz_constant is None or lipschitz_constant < 0:
            raise ValidationError("lipschitz variant needs g and a nonnegative Lipschitz constant")
        hc = clean.sum(axis=1) - h.threshold
        hp = pert.sum(axis=1) - h.threshold
        measured = abs(float(w @ np.asarray(g(c * hc)) - w @ np.asarray(g(c * hp))))
        kk = float(lipschitz_constant)
        product_bound = 2 * kk * abs(flip_component)
        valid_bound = 2 * kk * float(w @ np.abs(flip.sum(axis=1)))
        lip = {"K": kk, "measured_gap": measured, "product_bound": product_bound, "valid_bound": valid_bound,
               "product_bound_holds": measured <= product_bound + 1e-12,
               "valid_bound_holds": measured <= valid_bound + 1e-12}
    return GapDecomposition(tuple(feats), total, float(gaps.sum()), float(gaps.sum() - total), tuple(robust),
                            tuple(nonrobust), tuple(partial), idealized, ideal_gap, flip_component, lip)
