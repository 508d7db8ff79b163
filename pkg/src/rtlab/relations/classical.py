"""Two-model classical examples: a shortcut feature ``x1`` versus all features.

The label agrees with the sign ``g`` of ``x1`` with probability ``p``; the
remaining coordinates are drawn from ``D_c``.  The perturbation swaps
``D_+`` and ``D_-`` and leaves ``x1`` alone, so the model that reads only
``x1`` keeps accuracy ``p`` while the model ``f`` that uses everything can
lose.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from rtlab.classifiers import GaussianFeatureModel, gaussian_mean_accuracy, gaussian_model_metrics
from rtlab.errors import ValidationError
from rtlab.numerics import equality_tolerance
from rtlab.relations import constants
from rtlab.relations.report import RelationReport


@dataclass(frozen=True)
class ShortcutModel:
    """Conditionals ``q[(g, s)] = P_{D_s}(f = +1 | g)`` for ``g, s`` in ``{+1, -1}``."""

    p: float
    q_pp: float  # g=+1, D+
    q_mp: float  # g=-1, D+
    q_pm: float  # g=+1, D-
    q_mm: float  # g=-1, D-

    def __post_init__(self):
        for name in ("p", "q_pp", "q_mp", "q_pm", "q_mm"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise ValidationError(f"{name} = {v} outside [0, 1]")

    def q(self, g: int, s: int) -> float:
        return {(1, 1): self.q_pp, (-1, 1): self.q_mp, (1, -1): self.q_pm, (-1, -1): self.q_mm}[(g, s)]

    @property
    def a(self) -> float:
        return 1 - self.q_pp + self.q_mm

    @property
    def b(self) -> float:
        return 1 - self.q_mp + self.q_pm


def shortcut_closed_forms(m: ShortcutModel) -> tuple[float, float]:
    """``(A1, A~1) = (1 - p a/2 - (1-p) b/2,  (1-p) a/2 + p b/2)``."""
    return 1 - 0.5 * m.p * m.a - 0.5 * (1 - m.p) * m.b, 0.5 * (1 - m.p) * m.a + 0.5 * m.p * m.b


def shortcut_enumeration(m: ShortcutModel) -> tuple[float, float]:
    """Accuracies of ``f`` by summing over label, shortcut sign and prediction."""
    acc = rob = 0.0
    for c in (1, -1):
        for g in (1, -1):
            pg = m.p if g == c else 1 - m.p
            for pred in (1, -1):
                clean = m.q(g, c) if pred == 1 else 1 - m.q(g, c)
                swapped = m.q(g, -c) if pred == 1 else 1 - m.q(g, -c)
                if pred == c:
                    acc += 0.5 * pg * clean
                    rob += 0.5 * pg * swapped
    return acc, rob


def random_shortcut_model(rng: np.random.Generator, p_low: float = 0.5) -> ShortcutModel:
    return ShortcutModel(float(rng.uniform(p_low, 1)), *(float(x) for x in rng.random(4)))


def check_shortcut_model(m: ShortcutModel, tol: float | None = None) -> list[RelationReport]:
    """Closed forms against enumeration, plus the implication ``A1 > p > 1/2  =>  A~1 < p``."""
    tol = equality_tolerance() if tol is None else tol
    (a_cf, at_cf), (a_en, at_en) = shortcut_closed_forms(m), shortcut_enumeration(m)
    premise = a_en > m.p and m.p > 0.5
    rows = [RelationReport("shortcut_accuracy", a_cf, a_en, None, "identity", tol),
            RelationReport("shortcut_robustness_accuracy", at_cf, at_en, None, "identity", tol)]
    rows.append(RelationReport("shortcut_tradeoff", m.p, at_en, None, "upper-bound", 0.0,
                               (("A1 > p > 1/2", premise),), (("strict", at_en < m.p),),
                               {"p": m.p, "A1": a_en}, skipped=not premise))
    return rows


def check_gaussian_models(eta: float, d: int, p: float, n_samples: int, seed: int) -> list[RelationReport]:
    """Monte Carlo vs. the Gaussian tail for the mean rule, and the shortcut rule's exact values.

    ``tolerance`` on the Monte Carlo rows is three standard errors.
    """
    m1 = gaussian_model_metrics(GaussianFeatureModel(d, eta, p, "H1-mean"), n_samples, seed)
    m2 = gaussian_model_metrics(GaussianFeatureModel(d, eta, p, "H2-first-coordinate"), n_samples, seed)
    exact = gaussian_mean_accuracy(eta, d)
    printed = constants.evaluate("gaussian_mean_accuracy", eta, d)
    tradeoff = m1.A > m2.A and m1.A_tilde < m2.A_tilde
    return [
        RelationReport("gaussian_mean_accuracy", exact, m1.A, printed, "identity", 3 * m1.se_A,
                       details={"standard_error": m1.se_A, "n_samples": n_samples}),
        RelationReport("gaussian_mean_prediction_change", 0.0, m1.A_star, None, "identity", 0.0),
        RelationReport("gaussian_mean_complement", 1 - m1.A, m1.A_tilde, None, "identity",
                       3 * max(m1.se_A_tilde, 1e-300)),
        RelationReport("gaussian_shortcut_values", p, m2.A, None, "identity", 0.0,
                       checks=(("A* = 1", m2.A_star == 1.0), ("A~ = A", m2.A_tilde == m2.A))),
        RelationReport("gaussian_tradeoff", 1.0, float(tradeoff), None, "identity", 0.0,
                       details={"A1": m1.A, "A2": m2.A, "A_tilde_1": m1.A_tilde, "A_tilde_2": m2.A_tilde}),
    ]
