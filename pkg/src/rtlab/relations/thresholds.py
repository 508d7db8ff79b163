"""Sufficient trace-distance radii under which predictions cannot change."""

from __future__ import annotations

import math
from collections.abc import Sequence

import numpy as np

from rtlab import numerics as nx
from rtlab.classifiers import ScoreClassifier
from rtlab.errors import TieError, ValidationError
from rtlab.relations.report import RelationReport
from rtlab.states import DensityMatrix, LabeledEnsemble

BOUNDARY_ATOL = 1e-12


def robustness_threshold(p_sigma: float) -> float:
    """``delta (1 - sqrt(1 - delta^2))`` with ``delta = sqrt(1 - 4 p (1 - p)) / 2``.

    ``p_sigma`` is the winning-class probability of a state and must lie
    in ``[1/2, 1]``.
    """
    if not 0.5 - 1e-12 <= p_sigma <= 1 + 1e-12:
        raise ValidationError(f"p_sigma = {p_sigma} outside [1/2, 1]")
    p = min(max(p_sigma, 0.5), 1.0)
    delta = math.sqrt(max(0.0, 1 - 4 * p * (1 - p))) / 2
    return delta * (1 - math.sqrt(1 - delta ** 2))


def margin_radius(p_sigma: float) -> float:
    """The simpler radius ``p_sigma - 1/2`` for two-outcome projector models."""
    return max(0.0, p_sigma - 0.5)


def _top_scores(h, e: LabeledEnsemble) -> np.ndarray:
    return np.array([h.top_score(it.state) for it in e.items])


def dataset_robustness_threshold(h, e: LabeledEnsemble) -> float:
    """Threshold of the least confidently classified item."""
    return robustness_threshold(float(np.min(_top_scores(h, e))))


def partial_robustness_threshold(p_values: Sequence[float], weights: Sequence[float] | None = None,
                                 a: float | None = None, tau: float | None = None) -> float:
    """Trade a guaranteed unchanged-prediction mass ``a`` against a radius ``tau``.

    Pass exactly one of ``a`` or ``tau``.  Given ``a``, the result is the
    threshold of the largest ``p`` such that items with ``p_A >= p`` carry
    at least mass ``a`` (``inf`` for ``a = 0``).  Given ``tau``, the result
    is the mass of items whose own threshold exceeds ``tau``.
    """
    p = np.asarray(p_values, dtype=float)
    if p.size == 0:
        raise ValidationError("empty list of margin probabilities")
    w = np.full(p.size, 1.0 / p.size) if weights is None else np.asarray(weights, dtype=float)
    if w.shape != p.shape or np.any(w < 0) or abs(w.sum() - 1) > 1e-12:
        raise ValidationError("weights must be nonnegative, one per value, summing to 1")
    if (a is None) == (tau is None):
        raise ValidationError("give exactly one of a or tau")
    if tau is not None:
        if tau < 0:
            raise ValidationError("tau must be nonnegative")
        return float(sum(wi for pi, wi in zip(p, w) if robustness_threshold(pi) > tau))
    if not 0 <= a <= 1:
        raise ValidationError("a must lie in [0, 1]")
    if a == 0:
        return math.inf
    order = np.argsort(-p, kind="stable")
    mass = 0.0
    for k in order:
        mass += w[k]
        if mass >= a - 1e-12:
            return robustness_threshold(float(p[k]))
    return robustness_threshold(float(p.min()))


def _perturb_within(rng: np.random.Generator, sigma: np.ndarray, radius: float) -> tuple[np.ndarray, float]:
    """Random state at trace distance at most ``radius`` from ``sigma``.

    Mixes ``sigma`` toward a random state ``omega``: the distance of
    ``(1 - t) sigma + t omega`` is exactly ``t tau(sigma, omega)``.
    """
    rank = int(rng.integers(1, sigma.shape[0] + 1))
    omega = nx.random_density_matrix(rng, sigma.shape[0], rank)
    full = nx.trace_distance(sigma, omega)
    target = radius * rng.random()
    t = 1.0 if full <= target else target / full
    rho = (1 - t) * sigma + t * omega
    return rho, t * full


def _safe(h, rho) -> int | None:
    try:
        return h.predict(DensityMatrix(rho) if not isinstance(rho, DensityMatrix) else rho)
    except TieError:
        return None


def negative_control_flip(h: ScoreClassifier, sigma: DensityMatrix, steps: int = 400):
    """Distance of the first prediction change on the segment toward another centroid.

    Returns ``(distance, target_class)`` of the closest flip found, or
    ``None`` if no segment flips the prediction.
    """
    ref = h.predict(sigma)
    best = None
    for score, cls in zip(h.scores, h.classes):
        if cls == ref or not hasattr(score, "centroid"):
            continue
        target = score.centroid.matrix
        for t in np.linspace(0, 1, steps + 1)[1:]:
            rho = (1 - t) * sigma.matrix + t * target
            if _safe(h, rho) != ref:
                d = nx.trace_distance(sigma.matrix, rho)
                if best is None or d < best[0]:
                    best = (d, cls)
                break
    return best


def check_threshold_by_sampling(h: ScoreClassifier, e: LabeledEnsemble, n_perturbations: int = 10_000,
                                seed: int = 0, negative_control: bool = True) -> RelationReport:
    """Sample perturbations inside each item's radius and count prediction changes.

    Every item gets ``n_perturbations`` random states within
    ``robustness_threshold(p_sigma) * (1 - 1e-6)``.  The predicted value is
    ``A* = 1``; the oracle is the observed weighted fraction of unchanged
    predictions.  The negative control walks toward another centroid and
    must find a change beyond ``p_sigma - 1/2``.
    """
    if n_perturbations < 1:
        raise ValidationError("n_perturbations must be positive")
    p_sig = _top_scores(h, e)
    on_boundary = [i for i, v in enumerate(p_sig) if v <= 0.5 + BOUNDARY_ATOL]
    if on_boundary:
        raise ValidationError(f"items {on_boundary} sit on the decision boundary")
    rng = np.random.default_rng(seed)
    changed = np.zeros(len(e))
    max_used = 0.0
    for i, it in enumerate(e.items):
        ref = h.predict(it.state)
        radius = robustness_threshold(float(p_sig[i])) * (1 - 1e-6)
        flips = 0
        for _ in range(n_perturbations):
            rho, dist = _perturb_within(rng, it.state.matrix, radius)
            max_used = max(max_used, dist)
            if _safe(h, rho) != ref:
                flips += 1
        changed[i] = flips / n_perturbations
    unchanged = float(e.weights @ (1 - changed))
    checks = []
    details = {"n_perturbations": n_perturbations, "seed": seed, "max_distance_sampled": max_used,
               "flip_counts": [int(round(c * n_perturbations)) for c in changed]}
    if negative_control:
        found = [negative_control_flip(h, it.state) for it in e.items]
        dists = [f[0] for f in found if f is not None]
        ok = bool(dists) and all(f is None or f[0] > margin_radius(float(p)) - 1e-9 for f, p in zip(found, p_sig))
        checks.append(("negative control finds a flip beyond p_sigma - 1/2", ok))
        details["negative_control_distances"] = [None if f is None else f[0] for f in found]
    return RelationReport("robustness_threshold_sampling", 1.0, unchanged, None, "identity", 0.0,
                          (("no item on the decision boundary", True),), tuple(checks), details)
