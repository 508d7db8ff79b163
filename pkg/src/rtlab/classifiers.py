"""Deterministic score classifiers, POVM classifiers and the Gaussian toy models."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from rtlab import numerics as nx
from rtlab.errors import TieError, ValidationError
from rtlab.states import DensityMatrix, FeatureOperator

POVM_ATOL = 1e-10


def quantum_feature(sigma: DensityMatrix, f: FeatureOperator) -> float:
    """``Tr(Lambda sigma)`` for linear features, ``Tr(sigma^2)`` for purity."""
    if f.kind == "purity":
        return sigma.purity()
    if f.operator.shape[0] != sigma.dim:
        raise ValidationError(f"feature {f.name!r} has dimension {f.operator.shape[0]}, state has {sigma.dim}")
    return sigma.expectation(f.operator)


# Score functions.  Each is a small immutable callable on states.

@dataclass(frozen=True, eq=False)
class LinearObservableScore:
    operator: np.ndarray

    def __post_init__(self):
        op = nx.check_hermitian(self.operator, "score observable")
        op.setflags(write=False)
        object.__setattr__(self, "operator", op)

    @property
    def dim(self) -> int:
        return self.operator.shape[0]

    def __call__(self, sigma: DensityMatrix) -> float:
        return sigma.expectation(self.operator)


@dataclass(frozen=True, eq=False)
class FidelityScore:
    """Fidelity between the input and a centroid state."""

    centroid: DensityMatrix

    @property
    def dim(self) -> int:
        return self.centroid.dim

    def __call__(self, sigma: DensityMatrix) -> float:
        return nx.fidelity(self.centroid, sigma)


@dataclass(frozen=True, eq=False)
class TraceDistanceScore:
    """``1 - trace_distance(sigma, centroid)``."""

    centroid: DensityMatrix

    @property
    def dim(self) -> int:
        return self.centroid.dim

    def __call__(self, sigma: DensityMatrix) -> float:
        return 1.0 - nx.trace_distance(sigma, self.centroid)


@dataclass(frozen=True, eq=False)
class FeatureSumScore:
    """Weighted sum ``sum_l w_l f_l(sigma)`` of features."""

    features: tuple

    def __post_init__(self):
        feats = tuple(self.features)
        if not feats:
            raise ValidationError("a feature-sum score needs at least one feature")
        object.__setattr__(self, "features", feats)

    @property
    def dim(self) -> int | None:
        for f in self.features:
            if f.is_linear:
                return f.operator.shape[0]
        return None

    def components(self, sigma: DensityMatrix) -> np.ndarray:
        return np.array([f.weight * quantum_feature(sigma, f) for f in self.features])

    def __call__(self, sigma: DensityMatrix) -> float:
        return float(np.sum(self.components(sigma)))


@dataclass(frozen=True, eq=False)
class ScoreClassifier:
    """Deterministic classifier built from real-valued scores.

    With ``decision="argmax"`` the class ``classes[k]`` of the largest
    score wins (``classes`` defaults to ``1..K``).  With
    ``decision="sign"`` there is a single score ``H``; ``H > threshold``
    gives ``classes[0]`` and ``H < threshold`` gives ``classes[1]``
    (default ``(+1, -1)``).  Ties within 1e-12 raise :class:`TieError`.
    """

    scores: tuple
    decision: str = "argmax"
    threshold: float = 0.0
    classes: tuple | None = None

    def __post_init__(self):
        scores = tuple(self.scores)
        object.__setattr__(self, "scores", scores)
        if self.decision == "argmax":
            if len(scores) < 2:
                raise ValidationError("argmax decision needs at least two scores")
            default = tuple(range(1, len(scores) + 1))
        elif self.decision == "sign":
            if len(scores) != 1:
                raise ValidationError("sign decision takes exactly one score")
            default = (1, -1)
        else:
            raise ValidationError(f"unknown decision rule {self.decision!r}")
        classes = default if self.classes is None else tuple(int(c) for c in self.classes)
        expected = len(default)
        if len(classes) != expected or len(set(classes)) != expected:
            raise ValidationError(f"decision rule needs {expected} distinct classes, got {classes}")
        object.__setattr__(self, "classes", classes)
        if not np.isfinite(self.threshold):
            raise ValidationError("threshold must be finite")

    @classmethod
    def sign_of_observable(cls, operator, threshold: float = 0.0, classes=(1, -1)) -> "ScoreClassifier":
        return cls((LinearObservableScore(operator),), "sign", threshold, classes)

    @classmethod
    def fidelity_clustering(cls, centroids, classes=None) -> "ScoreClassifier":
        return cls(tuple(FidelityScore(c) for c in centroids), "argmax", classes=classes)

    @classmethod
    def feature_sum(cls, features, threshold: float = 0.0) -> "ScoreClassifier":
        return cls((FeatureSumScore(tuple(features)),), "sign", threshold)

    def score_values(self, sigma: DensityMatrix) -> np.ndarray:
        return np.array([s(sigma) for s in self.scores], dtype=float)

    def decision_value(self, sigma: DensityMatrix) -> float:
        """Signed margin ``H - threshold`` for sign rules; top-two gap for argmax."""
        vals = self.score_values(sigma)
        if self.decision == "sign":
            return float(vals[0] - self.threshold)
        top = np.sort(vals)
        return float(top[-1] - top[-2])

    def predict(self, sigma: DensityMatrix) -> int:
        vals = self.score_values(sigma)
        if self.decision == "sign":
            h = vals[0] - self.threshold
            if abs(h) <= nx.equality_tolerance():
                raise TieError(f"score {vals[0]:.15g} equals threshold {self.threshold}", self.classes)
            return self.classes[0] if h > 0 else self.classes[1]
        best = float(np.max(vals))
        tied = [self.classes[k] for k, v in enumerate(vals) if best - v <= nx.equality_tolerance()]
        if len(tied) > 1:
            raise TieError(f"scores tie at {best:.15g} between classes {tied}", tied)
        return tied[0]

    def top_score(self, sigma: DensityMatrix) -> float:
        """Largest score; for fidelity clustering this is the margin probability."""
        return float(np.max(self.score_values(sigma)))


def predict(c: ScoreClassifier, sigma: DensityMatrix) -> int:
    return c.predict(sigma)


@dataclass(frozen=True, eq=False)
class StochasticClassifier:
    """Single-shot measurement classifier: outcome ``j`` has probability ``Tr(Pi_j sigma)``.

    ``classes`` names the outcome of each effect and defaults to ``1..K``.
    :meth:`binary` builds the two-outcome classifier labelled ``(+1, -1)``.
    """

    povm: tuple
    classes: tuple | None = None

    def __post_init__(self):
        effects = tuple(nx.check_effect(p, f"effect {k}", POVM_ATOL) for k, p in enumerate(self.povm))
        if len(effects) < 2:
            raise ValidationError("a POVM needs at least two effects")
        dims = {p.shape[0] for p in effects}
        if len(dims) != 1:
            raise ValidationError(f"POVM effects have mixed dimensions {sorted(dims)}")
        dim = dims.pop()
        err = float(np.max(np.abs(sum(effects) - np.eye(dim))))
        if err > POVM_ATOL:
            raise ValidationError(f"POVM effects do not sum to identity (error {err:.3e})")
        for p in effects:
            p.setflags(write=False)
        classes = tuple(range(1, len(effects) + 1)) if self.classes is None else tuple(int(c) for c in self.classes)
        if len(classes) != len(effects) or len(set(classes)) != len(classes):
            raise ValidationError(f"need one distinct class per effect, got {classes}")
        object.__setattr__(self, "povm", effects)
        object.__setattr__(self, "classes", classes)

    @classmethod
    def binary(cls, pi_plus) -> "StochasticClassifier":
        p = np.asarray(pi_plus, dtype=complex)
        return cls((p, np.eye(p.shape[0]) - p), (1, -1))

    @property
    def dim(self) -> int:
        return self.povm[0].shape[0]

    def effect(self, label: int) -> np.ndarray:
        try:
            return self.povm[self.classes.index(label)]
        except ValueError:
            raise ValidationError(f"class {label} is not an outcome of this POVM") from None

    def predict_distribution(self, sigma: DensityMatrix) -> np.ndarray:
        if sigma.dim != self.dim:
            raise ValidationError(f"POVM dimension {self.dim} does not match state dimension {sigma.dim}")
        raw = np.array([sigma.expectation(p) for p in self.povm])
        if np.any(raw < -POVM_ATOL) or np.any(raw > 1 + POVM_ATOL):
            raise ValidationError(f"outcome probabilities {raw} outside [0, 1]")
        probs = np.clip(raw, 0.0, 1.0)
        total = probs.sum()
        return probs / total if total != 1.0 else probs

    def probability(self, sigma: DensityMatrix, label: int) -> float:
        return float(self.predict_distribution(sigma)[self.classes.index(label)])

    def predict(self, sigma: DensityMatrix) -> int:
        """Most likely outcome (the induced deterministic classifier)."""
        probs = self.predict_distribution(sigma)
        best = float(np.max(probs))
        tied = [self.classes[k] for k, v in enumerate(probs) if best - v <= nx.equality_tolerance()]
        if len(tied) > 1:
            raise TieError(f"outcome probabilities tie at {best:.15g}", tied)
        return tied[0]

    def top_score(self, sigma: DensityMatrix) -> float:
        return float(np.max(self.predict_distribution(sigma)))

    def sample(self, sigma: DensityMatrix, rng: np.random.Generator, shots: int = 1) -> np.ndarray:
        """Simulated single-shot outcomes (demonstration only)."""
        probs = self.predict_distribution(sigma)
        return np.asarray(self.classes)[rng.choice(len(probs), size=shots, p=probs)]


def predict_distribution(s: StochasticClassifier, sigma: DensityMatrix) -> np.ndarray:
    return s.predict_distribution(sigma)


# Classical Gaussian toy models.

GAUSSIAN_VARIANTS = ("H1-mean", "H2-first-coordinate")
MC_CHUNK = 1 << 14


@dataclass(frozen=True)
class GaussianFeatureModel:
    """Two-class data with one weakly correlated and ``d`` Gaussian coordinates.

    The class ``c`` is ``+1`` or ``-1`` with equal probability.  The first
    coordinate equals ``c`` with probability ``p`` and ``-c`` otherwise.
    The remaining ``d`` coordinates are independent ``Normal(eta*c, 1)``.
    ``H1-mean`` predicts the sign of their mean; ``H2-first-coordinate``
    predicts the first coordinate.
    """

    d: int
    eta: float
    p: float
    variant: str = "H1-mean"

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise ValidationError(f"d must be a positive integer, got {self.d}")
        if not (self.eta >= 0 and np.isfinite(self.eta)):
            raise ValidationError(f"eta must be nonnegative and finite, got {self.eta}")
        if not 0 < self.p < 1:
            raise ValidationError(f"p must lie in (0, 1), got {self.p}")
        if self.variant not in GAUSSIAN_VARIANTS:
            raise ValidationError(f"variant must be one of {GAUSSIAN_VARIANTS}")


@dataclass(frozen=True)
class GaussianMetrics:
    A: float
    A_star: float
    A_tilde: float
    se_A: float
    se_A_star: float
    se_A_tilde: float
    n_samples: int
    method: str


def gaussian_mean_accuracy(eta: float, d: int) -> float:
    """Exact accuracy ``Phi(eta sqrt(d))`` of the mean-of-coordinates rule."""
    return float(ndtr(eta * np.sqrt(d)))


def _binomial_se(p: float, n: int) -> float:
    return float(np.sqrt(max(p * (1 - p), 0.0) / n))


def gaussian_model_metrics(m: GaussianFeatureModel, n_samples: int, seed: int) -> GaussianMetrics:
    """Accuracy, prediction-change robustness and robustness accuracy.

    The perturbation exchanges the two class-conditional Gaussians by
    flipping the sign of coordinates ``2..d+1`` and leaves the first
    coordinate alone.  ``H1-mean`` is estimated by Monte Carlo in fixed
    chunks, each with its own child seed, so the estimate does not depend
    on how chunks are scheduled.  ``H2-first-coordinate`` is exact.
    """
    if n_samples < 1000:
        raise ValidationError("n_samples must be at least 1000")
    if m.variant == "H2-first-coordinate":
        return GaussianMetrics(m.p, 1.0, m.p, 0.0, 0.0, 0.0, n_samples, "exact-sum")
    n_chunks = -(-n_samples // MC_CHUNK)
    children = np.random.SeedSequence(seed).spawn(n_chunks)
    correct = kept = robust = 0
    remaining = n_samples
    for child in children:
        size = min(MC_CHUNK, remaining)
        remaining -= size
        rng = np.random.default_rng(child)
        c = np.where(rng.random(size) < 0.5, 1.0, -1.0)
        x = rng.standard_normal((size, m.d)) + m.eta * c[:, None]
        h = np.sign(x.mean(axis=1))
        h_pert = np.sign((-x).mean(axis=1))
        correct += int(np.sum(h == c))
        kept += int(np.sum(h_pert == h))
        robust += int(np.sum(h_pert == c))
    a, a_star, a_tilde = correct / n_samples, kept / n_samples, robust / n_samples
    return GaussianMetrics(a, a_star, a_tilde, _binomial_se(a, n_samples), _binomial_se(a_star, n_samples),
                           _binomial_se(a_tilde, n_samples), n_samples, "monte-carlo")
