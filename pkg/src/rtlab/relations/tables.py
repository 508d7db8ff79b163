"""Accuracy/robustness identities on joint label tables P(truth, clean, noisy).

Classes are indexed ``0..K-1`` here.  A table ``joint[t, c, n]`` gives the
probability that the true class is ``t``, the clean prediction is ``c``
and the prediction on the perturbed input is ``n``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from rtlab.errors import ValidationError
from rtlab.numerics import equality_tolerance
from rtlab.relations import constants
from rtlab.relations.report import RelationReport

TABLE_ATOL = 1e-12


@dataclass(frozen=True, eq=False)
class JointLabelModel:
    joint: np.ndarray

    def __post_init__(self):
        t = np.array(self.joint, dtype=float)
        if t.ndim != 3 or len(set(t.shape)) != 1 or t.shape[0] < 2:
            raise ValidationError(f"joint table must be K x K x K with K >= 2, got shape {t.shape}")
        if np.any(t < -TABLE_ATOL):
            raise ValidationError("joint table has negative entries")
        if abs(t.sum() - 1) > TABLE_ATOL:
            raise ValidationError(f"joint table sums to {t.sum():.15g}")
        truth = t.sum(axis=(1, 2))
        k = t.shape[0]
        if np.max(np.abs(truth - 1 / k)) > TABLE_ATOL:
            raise ValidationError(f"true-class marginal {truth.tolist()} is not uniform")
        t = np.clip(t, 0.0, None)
        t.setflags(write=False)
        object.__setattr__(self, "joint", t)

    @classmethod
    def from_factors(cls, clean_given_truth_joint, noise) -> "JointLabelModel":
        """Table ``q[t, c] * noise[n, c]`` in which the noisy prediction depends only on the clean one.

        ``noise[n, c]`` is ``P(noisy = n | clean = c)``.
        """
        q = np.asarray(clean_given_truth_joint, dtype=float)
        p = np.asarray(noise, dtype=float)
        if q.shape != p.shape or q.ndim != 2:
            raise ValidationError("factor shapes must both be K x K")
        if np.max(np.abs(p.sum(axis=0) - 1)) > TABLE_ATOL:
            raise ValidationError("noise columns must be conditional distributions")
        return cls(q[:, :, None] * p.T[None, :, :])

    @property
    def K(self) -> int:
        return self.joint.shape[0]

    def accuracy(self) -> float:
        return float(sum(self.joint[t, t, :].sum() for t in range(self.K)))

    def robustness(self) -> float:
        """``P(clean == noisy)``."""
        return float(sum(self.joint[:, c, c].sum() for c in range(self.K)))

    def robustness_accuracy(self) -> float:
        return float(sum(self.joint[t, :, t].sum() for t in range(self.K)))

    def model_marginal(self) -> np.ndarray:
        return self.joint.sum(axis=(0, 2))

    def both_predict(self, a: int) -> float:
        """``P(clean == noisy == a)``."""
        return float(self.joint[:, a, a].sum())

    def conditional_independence_gap(self) -> float:
        """Largest ``|P(n | c, t) - P(n | c)|`` over inhabited ``(t, c)``."""
        tc = self.joint.sum(axis=2)
        c_marg = tc.sum(axis=0)
        nc = self.joint.sum(axis=0)  # [c, n]
        gap = 0.0
        for c in range(self.K):
            if c_marg[c] <= 0:
                continue
            pn_c = nc[c] / c_marg[c]
            for t in range(self.K):
                if tc[t, c] > 1e-15:
                    gap = max(gap, float(np.max(np.abs(self.joint[t, c] / tc[t, c] - pn_c))))
        return gap


def _balanced_matrix(rng: np.random.Generator, rows: np.ndarray, cols: np.ndarray,
                     diagonal_boost: float) -> np.ndarray:
    """Positive matrix with the given row and column sums (Sinkhorn scaling)."""
    k = len(rows)
    m = rng.random((k, k)) + diagonal_boost * np.eye(k) + 1e-3
    for _ in range(10_000):
        m *= (rows / m.sum(axis=1))[:, None]
        m *= (cols / m.sum(axis=0))[None, :]
        if max(np.max(np.abs(m.sum(axis=1) - rows)), np.max(np.abs(m.sum(axis=0) - cols))) < 1e-15:
            break
    return m


def _random_noise(rng: np.random.Generator, k: int, stay: float) -> np.ndarray:
    p = rng.dirichlet(np.ones(k), size=k).T       # columns sum to one
    p = (1 - stay) * p + stay * np.eye(k)
    return p / p.sum(axis=0, keepdims=True)


def random_unbiased_model(rng: np.random.Generator, K: int) -> JointLabelModel:
    """Random table with uniform truth and model marginals and noise depending only on the clean prediction."""
    u = np.full(K, 1.0 / K)
    q = _balanced_matrix(rng, u, u, rng.uniform(0, 6))
    return JointLabelModel.from_factors(q, _random_noise(rng, K, rng.uniform(0, 1)))


def random_biased_model(rng: np.random.Generator, K: int, alpha: float, biased_class: int = 0) -> JointLabelModel:
    """As :func:`random_unbiased_model`, with ``P(clean = biased_class) = alpha``."""
    if not 0 < alpha < 1:
        raise ValidationError("alpha must lie in (0, 1)")
    cols = np.full(K, (1 - alpha) / (K - 1))
    cols[biased_class] = alpha
    q = _balanced_matrix(rng, np.full(K, 1.0 / K), cols, rng.uniform(0, 6))
    return JointLabelModel.from_factors(q, _random_noise(rng, K, rng.uniform(0, 1)))


@dataclass(frozen=True)
class TradeoffPrediction:
    a_tilde: float
    gap: float  # |A~ - A| = |(1 - 2A)(1 - A*)|


def unbiased_tradeoff_predict(A: float, A_star: float) -> TradeoffPrediction:
    """Robustness accuracy ``A*(2A - 1) + (1 - A)`` from accuracy and robustness."""
    for name, v in (("A", A), ("A_star", A_star)):
        if not -1e-12 <= v <= 1 + 1e-12:
            raise ValidationError(f"{name} = {v} outside [0, 1]")
    return TradeoffPrediction(A_star * (2 * A - 1) + (1 - A), abs((1 - 2 * A) * (1 - A_star)))


def _independence_assumption(m: JointLabelModel, tol: float):
    gap = m.conditional_independence_gap()
    return ("noisy prediction independent of truth given clean prediction", gap <= max(tol, 1e-12)), gap


def check_unbiased_tradeoff(m: JointLabelModel, tol: float | None = None) -> RelationReport:
    """Compare the unbiased accuracy/robustness relation with the table's own ``A~``."""
    tol = equality_tolerance() if tol is None else tol
    marg = m.model_marginal()
    model_ok = bool(np.max(np.abs(marg - 1 / m.K)) <= max(tol, 1e-12))
    ci, gap = _independence_assumption(m, tol)
    assumptions = (("uniform true-class marginal", True), ("uniform model marginal", model_ok), ci)
    a, a_star, a_tilde = m.accuracy(), m.robustness(), m.robustness_accuracy()
    skipped = not (model_ok and ci[1])
    closed = unbiased_tradeoff_predict(a, a_star).a_tilde
    return RelationReport(
        "unbiased_tradeoff", closed, a_tilde, None, "identity", tol, assumptions, (),
        {"K": m.K, "A": a, "A_star": a_star, "independence_gap": gap}, skipped)


def biased_tradeoff_value(A: float, A_star: float, alpha: float, K: int, p_both: float) -> float:
    """Single-biased-class relation with the ``(2A - 1)`` leading factor.

    At ``alpha = 1/K`` it reduces to :func:`unbiased_tradeoff_predict`.
    """
    return ((2 * A - 1) * (K - 1) / ((1 - alpha) * K)) * (
        A_star + ((1 - alpha) / (alpha * (K - 1)) - 1) * p_both) + (1 - A)


def check_biased_tradeoff(m: JointLabelModel, biased_class: int, alpha: float,
                          tol: float | None = None) -> RelationReport:
    tol = equality_tolerance() if tol is None else tol
    k = m.K
    target = np.full(k, (1 - alpha) / (k - 1))
    target[biased_class] = alpha
    marg_ok = bool(np.max(np.abs(m.model_marginal() - target)) <= max(tol, 1e-12))
    ci, gap = _independence_assumption(m, tol)
    assumptions = (("uniform true-class marginal", True), ("single biased model class", marg_ok), ci)
    a, a_star, a_tilde = m.accuracy(), m.robustness(), m.robustness_accuracy()
    p_both = m.both_predict(biased_class)
    closed = biased_tradeoff_value(a, a_star, alpha, k, p_both)
    published = constants.evaluate("biased_tradeoff", a, a_star, alpha, k, p_both)
    return RelationReport(
        "biased_tradeoff", closed, a_tilde, published, "identity", tol, assumptions, (),
        {"K": k, "alpha": alpha, "A": a, "A_star": a_star, "p_both_biased": p_both, "independence_gap": gap},
        not (marg_ok and ci[1]))
