"""Scenarios 11-12: many weak features, and per-feature gap accounting."""

from __future__ import annotations

import numpy as np

from rtlab import metrics
from rtlab import numerics as nx
from rtlab.channels import unitary_channel
from rtlab.classifiers import ScoreClassifier
from rtlab.errors import ValidationError
from rtlab.scenarios.base import Scenario, ScenarioSpec, close, metric_row, register, truth
from rtlab.scenarios.classical import spot_check_z_features
from rtlab.states import DensityMatrix, FeatureOperator, LabeledEnsemble, sample_bloch_vectors


# 11 ------------------------------------------------------------------------

def band_error_probability(xi: float, band_half_width: float) -> float:
    """Single-feature error ``P(sign f_l != c)`` for the uniform band model.

    The Bloch z-value of each weak qubit is ``2 c xi + r`` with ``r``
    uniform on ``[-(s - 2 xi), s - 2 xi]``, ``s = sin(band_half_width)``,
    so every state stays inside the band and ``f_l = z/2`` has mean ``c xi``.
    """
    s = np.sin(band_half_width)
    if not 0 < 2 * xi < s:
        raise ValidationError(f"need 0 < 2 xi < sin(band_half_width) = {s:.4f}, got xi = {xi}")
    return float((s - 4 * xi) / (2 * (s - 2 * xi)))


def _build_weak_features(params: dict, seed: int) -> Scenario:
    d, n, xi, w, eta = params["d"], params["n_samples"], params["xi"], params["band_half_width"], params["eta"]
    if d < 1 or n < 1000:
        raise ValidationError("need d >= 1 and n_samples >= 1000")
    if not 0 <= eta < 0.5:
        raise ValidationError("eta must lie in [0, 1/2)")
    p_bar = band_error_probability(xi, w)
    rng = np.random.default_rng(seed)
    c = np.repeat([1.0, -1.0], n // 2)
    c = np.concatenate([c, [1.0] * (n - c.size)])
    region = {1.0: "upper-hemisphere", -1.0: "lower-hemisphere"}
    z0 = np.empty(n)
    for label in (1.0, -1.0):
        sel = c == label
        z0[sel] = sample_bloch_vectors(rng, int(sel.sum()), region[label])[:, 2]
    a = np.sin(w) - 2 * xi
    z = 2 * xi * c[:, None] + rng.uniform(-a, a, size=(n, d))
    return Scenario(11, "weak-feature-aggregation", params, seed,
                    perturbations={"swap": "bit-flip on weak sites 1..d"},
                    extras={"c": c, "z0": z0, "z": z, "p_bar": p_bar, "spot": spot_check_z_features(z, rng)})


def _acc(pred: np.ndarray, c: np.ndarray) -> float:
    return float(np.mean(pred == c))


def _run_weak_features(s: Scenario):
    c, z0, z, p_bar = s.extras["c"], s.extras["z0"], s.extras["z"], s.extras["p_bar"]
    n, d = z.shape
    eta = s.params["eta"]
    h0 = np.where(z0 / 2 - eta > 0, 1.0, -1.0)
    a0 = _acc(h0, c)
    single = _acc(np.sign(z[:, 0]), c)
    agg = np.sign(z.sum(axis=1))
    agg_swapped = np.sign(-z.sum(axis=1))
    a_agg, at_agg = _acc(agg, c), _acc(agg_swapped, c)
    se = float(np.sqrt(p_bar * (1 - p_bar) / n))
    checks = [
        close("feature values through explicit states", 0.0, s.extras["spot"], 1e-12, "trivial"),
        close("single feature accuracy = 1 - p_bar (4 standard errors)", 1 - p_bar, single, 4 * se),
        truth("aggregate accuracy above 1 - p_bar", a_agg > 1 - p_bar, "derived",
              detail=f"A = {a_agg:.4f}, 1 - p_bar = {1 - p_bar:.4f}"),
        truth("aggregate robustness accuracy below its accuracy", at_agg < a_agg, "derived",
              detail=f"A~ = {at_agg:.4f}"),
        close("first-qubit accuracy = 1 - eta (4 standard errors)", 1 - eta, a0,
              4 * np.sqrt(max(eta * (1 - eta), 1e-300) / n) + 1e-12, "reference"),
    ]
    rows = [metric_row("A", a0, "first qubit", method="monte-carlo"),
            metric_row("A_tilde", a0, "first qubit", method="monte-carlo"),
            metric_row("p_bar", p_bar, "exact")]
    for k in sorted({1, 4, 16, d} & set(range(1, d + 1))):
        part = np.sign(z[:, :k].sum(axis=1))
        acc = _acc(part, c)
        rows.append(metric_row("A", acc, f"sum of {k} weak features",
                               float(np.sqrt(acc * (1 - acc) / n)), "monte-carlo"))
    rows.append(metric_row("A_tilde", at_agg, f"sum of {d} weak features", method="monte-carlo"))
    return checks, rows, []


register(ScenarioSpec(11, "weak-feature-aggregation",
                      "one robust qubit against the sum of many weakly correlated band qubits",
                      {"d": 64, "xi": 0.05, "eta": 0.0, "band_half_width": 0.3, "n_samples": 100_000},
                      _build_weak_features, _run_weak_features))


# 12 ------------------------------------------------------------------------

def _unit(rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)


def _pauli_dot(v) -> np.ndarray:
    return v[0] * nx.PAULI_X + v[1] * nx.PAULI_Y + v[2] * nx.PAULI_Z


def _build_decomposition(params: dict, seed: int) -> Scenario:
    nq, n_items = params["n_qubits"], params["n_items"]
    robust = sorted({int(r) for r in params["robust_sites"]})
    if nq < 1 or nq > 6 or any(not 0 <= r < nq for r in robust):
        raise ValidationError("need 1 <= n_qubits <= 6 and robust sites inside the register")
    if n_items < 2 or n_items % 2:
        raise ValidationError("n_items must be an even number >= 2")
    rng = np.random.default_rng(seed)
    dim = 2 ** nq
    states = [DensityMatrix(nx.random_density_matrix(rng, dim)) for _ in range(n_items)]
    e = LabeledEnsemble.uniform(states, [1] * (n_items // 2) + [-1] * (n_items // 2))
    feats, locals_ = [], []
    for site in range(nq):
        axis = _unit(rng)
        lam = 0.5 * _pauli_dot(axis)
        feats.append(FeatureOperator(f"site{site}", nx.embed_local(lam, site, nq), weight=float(rng.uniform(0.5, 2))))
        if site in robust:
            locals_.append(nx.I2)
        else:
            # A pi rotation about an axis orthogonal to lambda's axis negates lambda.
            ortho = np.cross(axis, _unit(rng))
            locals_.append(_pauli_dot(ortho / np.linalg.norm(ortho)))
    u = nx.kron_all(*locals_)
    h = ScoreClassifier.feature_sum(feats)
    return Scenario(12, "per-feature-gap-decomposition", params, seed, ensemble=e, classifiers={"h": h},
                    perturbations={"rotation": unitary_channel(u, "site-rotations")},
                    extras={"robust": [f"site{r}" for r in robust],
                            "non_robust": [f"site{k}" for k in range(nq) if k not in robust]})


def _run_decomposition(s: Scenario):
    h, e, p = s.classifiers["h"], s.ensemble, s.perturbations["rotation"]
    k = s.params["K"]
    dec = metrics.per_feature_gap_decomposition(h, e, p, "lipschitz", g=lambda x: k * np.tanh(x),
                                                lipschitz_constant=k)
    ident = metrics.per_feature_gap_decomposition(h, e, p, "lipschitz", g=lambda x: x, lipschitz_constant=1.0)
    lip = dec.lipschitz
    checks = [
        close("per-feature gaps sum to the total", 0.0, dec.residual, 1e-12),
        truth("roles match the construction", list(dec.robust) == s.extras["robust"]
              and list(dec.non_robust) == s.extras["non_robust"] and not dec.partial, "trivial"),
        close("twice the non-robust correlation equals the gap", dec.total_gap, dec.idealized_gap, 1e-12,
              "reference"),
        truth("wrapped gap within 2K E|sum of flipping parts|", lip["valid_bound_holds"], "derived",
              detail=f"{lip['measured_gap']:.4f} <= {lip['valid_bound']:.4f}"),
        truth("wrapped gap within 2K |E c sum of flipping parts|", lip["product_bound_holds"], "reference",
              asserted=False, detail=f"informational: {lip['measured_gap']:.4f} vs {lip['product_bound']:.4f}"),
        close("identity wrapper reproduces the linear gap", ident.lipschitz["product_bound"],
              ident.lipschitz["measured_gap"], 1e-12, "trivial"),
    ]
    rows = [metric_row("gap", f.gap, f.name) for f in dec.features]
    rows += [metric_row("gap", dec.total_gap, "total"), metric_row("lipschitz_gap", lip["measured_gap"]),
             metric_row("lipschitz_valid_bound", lip["valid_bound"]),
             metric_row("lipschitz_product_bound", lip["product_bound"])]
    return checks, rows, []


register(ScenarioSpec(12, "per-feature-gap-decomposition",
                      "splitting the accuracy gap of a feature-sum classifier into robust and flipping parts",
                      {"n_qubits": 3, "robust_sites": [0], "n_items": 16, "K": 2.0},
                      _build_decomposition, _run_decomposition))
