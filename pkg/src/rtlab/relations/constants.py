"""Reference constants and formulas as published, kept verbatim in one table.

Verbatim includes the mistakes.  Checkers compare these against the
brute-force oracle, and disagreements surface as erratum flags in the
audit.  Nothing in this module is used to compute an oracle value.
"""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ReferenceConstant:
    key: str
    description: str
    value: object


def _ref(key: str, description: str, value) -> ReferenceConstant:
    return ReferenceConstant(key, description, value)


REFERENCE: dict[str, ReferenceConstant] = {c.key: c for c in (
    _ref("gaussian_mean_accuracy",
         "accuracy of the mean-of-coordinates rule, written 1 - erf(eta sqrt d)",
         lambda eta, d: 1.0 - math.erf(eta * math.sqrt(d))),
    _ref("biased_tradeoff",
         "single-biased-class relation with leading factor (1 - 2A)",
         lambda a, a_star, alpha, k, p_both: ((1 - 2 * a) * (k - 1) / ((1 - alpha) * k))
         * (a_star + ((1 - alpha) / (alpha * (k - 1)) - 1) * p_both) + (1 - a)),
    _ref("depolarizing_line", "(slope, intercept) of A -> A~ under depolarizing noise",
         lambda p: (1 - p, p / 2)),
    _ref("pauli_line", "(slope, intercept) of A -> A~ under Pauli noise, q = p1 + p2",
         lambda q: (1 - 2 * q, 1.5 * q)),
    _ref("bit_flip_line_incompatibility", "(slope, intercept) of the bit-flip line in the incompatibility example",
         lambda p: (0.5 - p, (0.5 + p) / 2)),
    _ref("bit_flip_vs_depolarizing_derivative", "dA2/dA1 for depolarizing p1 then bit-flip p2",
         lambda p1, p2: (0.5 - p2) / (1 - p1)),
    _ref("swap_overlap_condition", "pairwise overlap threshold for a small maximal-trade-off swap",
         lambda eps: 1 - eps),
    _ref("feature_swap_bound", "upper bound on A~ after the feature-partition swap",
         lambda f0, a: f0 / (1 - f0) * (1 - a)),
    _ref("feature_swap_distance_factor", "prefactor of the trace distance in the feature-swap gap bound",
         lambda f0: 2 * f0 + 1),
    _ref("loss_example_sigma_plus", "positive-class aggregate of the eight-state linear-loss example",
         np.diag([0.5, 0.5])),
    _ref("loss_example_sigma_minus", "negative-class aggregate of the eight-state example",
         np.diag([21 / 36, 15 / 36])),
    _ref("loss_example_sigma_plus_perturbed", "perturbed positive-class aggregate of the eight-state example",
         np.diag([1 / 8, 7 / 8])),
    _ref("loss_example_sigma_minus_perturbed", "perturbed negative-class aggregate of the eight-state example",
         np.diag([49 / 60, 11 / 60])),
    _ref("loss_example_clean_coefficient", "clean linear loss as a multiple of Tr(M Z)", 1 / 12),
    _ref("loss_example_perturbed_coefficient", "perturbed linear loss as a multiple of Tr(M Z)", -83 / 120),
    _ref("sign_loss_pair", "(L, L~) of the four-state sign-loss example, unnormalized", (-4.0, 4.0)),
    _ref("lipschitz_gap_bound", "gap bound 2K |E c sum_{non-robust} H_l| for K-Lipschitz wrappers",
         lambda k, flip_component: 2 * k * abs(flip_component)),
)}


def reference(key: str):
    return REFERENCE[key].value


def evaluate(key: str, *args) -> object:
    value = REFERENCE[key].value
    return value(*args) if isinstance(value, Callable) else value
