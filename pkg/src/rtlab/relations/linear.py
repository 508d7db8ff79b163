"""Linear-loss identities for sign classifiers ``h = sign Tr(M sigma)``."""

from __future__ import annotations

import numpy as np

from rtlab import metrics
from rtlab import numerics as nx
from rtlab.channels import as_perturbation
from rtlab.classifiers import ScoreClassifier
from rtlab.numerics import equality_tolerance
from rtlab.relations.report import RelationReport
from rtlab.states import LabeledEnsemble, class_aggregate, pushforward_ensemble

SPLIT_ATOL = 1e-9


def _aggregates(e: LabeledEnsemble, p=None):
    src = e if p is None else pushforward_ensemble(e, as_perturbation(p))
    return class_aggregate(src, 1).matrix, class_aggregate(src, -1).matrix


def _assumptions(e: LabeledEnsemble):
    return (("binary labels", e.is_binary), ("unbiased classes", e.is_unbiased()))


def check_linear_loss_gap(m, e: LabeledEnsemble, p, tol: float | None = None) -> RelationReport:
    """``L - L~ = Tr(M (T- - T+))`` with ``T+- = (S+- + S~-+) / 2``.

    The oracle is the difference of the two directly evaluated linear
    losses ``-E[c Tr(M sigma)]``.
    """
    tol = equality_tolerance() if tol is None else tol
    e.require_binary()
    h = ScoreClassifier.sign_of_observable(m)
    sp, sm = _aggregates(e)
    tp, tm = _aggregates(e, p)
    t_plus, t_minus = (sp + tm) / 2, (sm + tp) / 2
    closed = nx.expectation(m, t_minus - t_plus)
    l_clean = metrics.robust_loss(h, e, None, None, "linear").value
    l_pert = metrics.robust_loss(h, e, p, "corrupted-instance", "linear").value
    return RelationReport("linear_loss_gap", closed, l_clean - l_pert, None, "identity", tol,
                          _assumptions(e), (), {"L": l_clean, "L_tilde": l_pert})


def check_two_perturbation_gap(m, e: LabeledEnsemble, p1, p2, tol: float | None = None) -> RelationReport:
    """``L1 - L2 = Tr(M (N- - N+))`` with ``N+- = (O1+- + O2-+) / 2``."""
    tol = equality_tolerance() if tol is None else tol
    e.require_binary()
    h = ScoreClassifier.sign_of_observable(m)
    o1p, o1m = _aggregates(e, p1)
    o2p, o2m = _aggregates(e, p2)
    closed = nx.expectation(m, (o1m + o2p) / 2 - (o1p + o2m) / 2)
    l1 = metrics.robust_loss(h, e, p1, "corrupted-instance", "linear").value
    l2 = metrics.robust_loss(h, e, p2, "corrupted-instance", "linear").value
    return RelationReport("two_perturbation_loss_gap", closed, l1 - l2, None, "identity", tol,
                          _assumptions(e), (), {"L1": l1, "L2": l2})


def robust_split_decomposition(h: ScoreClassifier, e: LabeledEnsemble, p, tol: float | None = None) -> dict:
    """Split items into score-preserving and score-flipping sets.

    ``R`` holds items with ``H(sigma~) = H(sigma)`` and ``Rbar`` items with
    ``H(sigma~) = -H(sigma)`` (both within 1e-9).  With ``W`` the weight of
    ``R``, ``L_R`` and ``L_Rbar`` are the weight-normalized losses of the
    two groups, so ``L = W L_R + (1 - W) L_Rbar``, ``L~ = W L_R - (1 - W)
    L_Rbar`` and ``(L - L~)/2 = (1 - W) L_Rbar``.  Items in neither group
    are listed under ``violators`` and the identity is skipped.
    """
    tol = equality_tolerance() if tol is None else tol
    score = metrics.linear_score(h)
    spec = as_perturbation(p)
    images = spec.images(e)
    clean = np.array([score(it.state) for it in e.items])
    pert = np.array([score(s) for s in images])
    c = np.array(e.labels, dtype=float)
    w = e.weights
    rob = np.abs(pert - clean) <= SPLIT_ATOL
    flip = (np.abs(pert + clean) <= SPLIT_ATOL) & ~rob
    violators = [i for i in range(len(e)) if not (rob[i] or flip[i])]
    l_clean = float(-(w @ (c * clean)))
    l_pert = float(-(w @ (c * pert)))
    w_r = float(w[rob].sum())
    out = {"K_count": int(rob.sum()), "M": len(e), "robust_weight": w_r, "violators": violators,
           "L": l_clean, "L_tilde": l_pert, "L_R": None, "L_Rbar": None, "identity_residual": None,
           "identity_holds": None, "A_star": metrics.prediction_change_robustness(h, e, spec).value}
    if violators:
        return out
    l_r = float(-(w[rob] @ (c[rob] * clean[rob])) / w_r) if w_r > 0 else 0.0
    l_rbar = float(-(w[flip] @ (c[flip] * clean[flip])) / (1 - w_r)) if w_r < 1 else 0.0
    residual = (l_clean - l_pert) / 2 - (1 - w_r) * l_rbar
    out.update(L_R=l_r, L_Rbar=l_rbar, identity_residual=residual, identity_holds=abs(residual) <= tol)
    return out
