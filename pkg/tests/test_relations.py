import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rtlab import numerics as nx
from rtlab.channels import PerturbationSpec, make_named_channel, unitary_channel
from rtlab.classifiers import ScoreClassifier, StochasticClassifier
from rtlab.errors import ValidationError
from rtlab.relations import (JointLabelModel, RelationReport, ShortcutModel, adversarial_swap_condition,
                             biased_tradeoff_value, check_biased_tradeoff, check_linear_loss_gap,
                             check_measurement_noise_gap, check_pushforward_identity, check_shortcut_model,
                             check_threshold_by_sampling, check_two_perturbation_gap, check_unbiased_tradeoff,
                             helstrom_effect, incompatibility_check, noise_response_line,
                             partial_robustness_threshold, random_biased_model, random_unbiased_model,
                             robust_split_decomposition, robustness_threshold, shortcut_closed_forms,
                             shortcut_enumeration, unbiased_tradeoff_predict)
from rtlab.relations import constants
from rtlab.states import DensityMatrix, LabeledEnsemble

from conftest import random_qubit_ensemble

Z = StochasticClassifier.binary(nx.PROJ_0)
seeds = st.integers(min_value=0, max_value=2 ** 32 - 1)
unit = st.floats(min_value=0, max_value=1)


class TestReport:
    def test_erratum_flag_needs_closed_form_match_and_reference_mismatch(self):
        assert RelationReport("r", 1.0, 1.0, 2.0).erratum_flag
        assert not RelationReport("r", 1.0, 1.0, 1.0).erratum_flag
        assert not RelationReport("r", 3.0, 1.0, 2.0).erratum_flag
        assert not RelationReport("r", 1.0, 1.0).erratum_flag

    def test_upper_bound_kind(self):
        assert RelationReport("b", 1.0, 0.5, relation_kind="upper-bound").holds
        assert not RelationReport("b", 0.5, 1.0, relation_kind="upper-bound").holds

    def test_skipped_rows_never_hold(self):
        r = RelationReport("s", 1.0, 1.0, skipped=True)
        assert not r.holds and math.isnan(r.abs_discrepancy_closed_vs_oracle)

    def test_to_dict_is_plain(self):
        d = RelationReport("r", 1.0, 1.0, 2.0, details={"x": np.float64(1.5)}).to_dict()
        assert d["relation_id"] == "r" and d["erratum_flag"] is True


class TestTables:
    @given(seeds)
    def test_two_class_identity(self, seed):
        r = check_unbiased_tradeoff(random_unbiased_model(np.random.default_rng(seed), 2))
        assert not r.skipped and r.abs_discrepancy_closed_vs_oracle <= 1e-12

    def test_predicted_gap(self):
        t = unbiased_tradeoff_predict(0.8, 0.6)
        assert t.a_tilde == pytest.approx(0.6 * 0.6 + 0.2)
        assert t.gap == pytest.approx(abs(0.8 - t.a_tilde))

    def test_three_class_tables_break_the_two_class_identity(self, rng):
        worst = max(check_unbiased_tradeoff(random_unbiased_model(rng, 3)).abs_discrepancy_closed_vs_oracle
                    for _ in range(20))
        assert worst > 1e-3

    def test_three_class_identity_with_symmetric_noise_is_different(self):
        # Uniform truth, perfect diagonal clean predictions, noise spread evenly off the diagonal.
        k, stay = 3, 0.7
        q = np.eye(k) / k
        noise = np.full((k, k), (1 - stay) / (k - 1)) + (stay - (1 - stay) / (k - 1)) * np.eye(k)
        m = JointLabelModel.from_factors(q, noise)
        assert m.accuracy() == pytest.approx(1.0)
        assert m.robustness_accuracy() == pytest.approx(stay)
        assert unbiased_tradeoff_predict(1.0, m.robustness()).a_tilde == pytest.approx(stay)

    @given(seeds, st.floats(min_value=0.1, max_value=0.9))
    def test_biased_two_class_identity(self, seed, alpha):
        m = random_biased_model(np.random.default_rng(seed), 2, alpha)
        r = check_biased_tradeoff(m, 0, alpha)
        assert not r.skipped and r.abs_discrepancy_closed_vs_oracle <= 1e-12

    @given(unit, unit, unit, st.sampled_from([2, 3, 5]))
    def test_biased_value_reduces_at_uniform_bias(self, a, a_star, p_both, k):
        assert biased_tradeoff_value(a, a_star, 1 / k, k, p_both) == pytest.approx(
            unbiased_tradeoff_predict(a, a_star).a_tilde, abs=1e-15)

    def test_table_validation(self):
        with pytest.raises(ValidationError):
            random_biased_model(np.random.default_rng(0), 2, 1.0)
        with pytest.raises(ValidationError):
            unbiased_tradeoff_predict(1.5, 0.5)


class TestNoiseLines:
    @pytest.mark.parametrize("p", [0, 0.25, 0.5, 0.75, 1])
    def test_depolarizing_line(self, p):
        line = noise_response_line(make_named_channel("depolarizing", p=p), Z)
        assert (line.slope, line.intercept) == pytest.approx((1 - p, p / 2), abs=1e-12)
        assert not line.tradeoff and line.is_affine

    @given(st.lists(unit, min_size=4, max_size=4).filter(lambda v: sum(v) > 0))
    def test_pauli_line_from_bloch_action(self, raw):
        p = np.asarray(raw) / sum(raw)
        q = p[1] + p[2]
        line = noise_response_line(make_named_channel("pauli", p=p.tolist()), Z)
        assert (line.slope, line.intercept) == pytest.approx((1 - 2 * q, q), abs=1e-12)

    def test_full_flip_anchors(self):
        line = noise_response_line(make_named_channel("bit-flip", p=1.0), Z)
        assert (line.slope, line.intercept) == pytest.approx((-1, 1))
        assert line.tradeoff

    def test_incompatibility(self):
        inc = incompatibility_check(make_named_channel("depolarizing", p=0.5), make_named_channel("bit-flip", p=0.75),
                                    Z)
        assert inc.incompatible
        assert inc.derivative == pytest.approx(-1.0)
        ok = incompatibility_check(make_named_channel("depolarizing", p=0.5), make_named_channel("bit-flip", p=0.2),
                                   Z)
        assert not ok.incompatible


class TestMeasurementGap:
    @settings(max_examples=40)
    @given(seeds)
    def test_formula_and_bound(self, seed):
        rng = np.random.default_rng(seed)
        e = random_qubit_ensemble(rng)
        povm = StochasticClassifier.binary(nx.random_pure_state(rng, 2))
        r = check_measurement_noise_gap(e, povm, unitary_channel(nx.random_unitary(rng, 2)))
        assert r.holds

    @given(seeds)
    def test_helstrom_saturates_trace_distance(self, seed):
        rng = np.random.default_rng(seed)
        a, b = (DensityMatrix(nx.random_density_matrix(rng, 3)) for _ in range(2))
        pi = helstrom_effect(a, b)
        assert nx.is_projector(pi)
        assert nx.expectation(pi, a.matrix - b.matrix) == pytest.approx(nx.trace_distance(a, b), abs=1e-12)


class TestSwaps:
    def test_near_parallel_pairs_invert_accuracy(self, rng):
        kets = []
        for _ in range(3):
            u = nx.random_unitary(rng, 2)
            kets.append((u[:, 0], u @ np.array([np.sqrt(1 - 0.04 ** 2), 0.04])))
        e = LabeledEnsemble.uniform([DensityMatrix.from_ket(a) for a, _ in kets] +
                                    [DensityMatrix.from_ket(b) for _, b in kets], [1] * 3 + [-1] * 3)
        c = adversarial_swap_condition(e, 0.05)
        assert c.satisfied and c.within_budget
        assert c.complement_residual <= 1e-12
        assert c.max_distance == pytest.approx(0.04, abs=1e-12)

    def test_pushforward_identity_under_full_flip(self):
        e = LabeledEnsemble.uniform([DensityMatrix.from_bloch(t) for t in (0.3, 2.9, 1.0, 2.2)], [1, -1, 1, -1])
        r = check_pushforward_identity(ScoreClassifier.sign_of_observable(nx.PAULI_Z), e,
                                       make_named_channel("bit-flip", p=1.0))
        assert r.holds and r.details["A_star"] == 0.0


class TestLinear:
    def _ensemble(self):
        e = LabeledEnsemble.uniform([DensityMatrix.from_bloch(t) for t in (0.3, 2.9, 1.0, 2.2)], [1, -1, 1, -1])
        return e

    @given(seeds)
    def test_loss_gap_identity(self, seed):
        rng = np.random.default_rng(seed)
        e = self._ensemble()
        r = check_linear_loss_gap(nx.random_hermitian(rng, 2), e, make_named_channel("depolarizing", p=0.4))
        assert r.holds

    def test_two_perturbation_gap(self, rng):
        e = self._ensemble()
        r = check_two_perturbation_gap(nx.PAULI_Z, e, make_named_channel("bit-flip", p=0.2),
                                       make_named_channel("phase-flip", p=0.7))
        assert r.holds

    def test_split_into_kept_and_flipped_items(self):
        e = self._ensemble()
        h = ScoreClassifier.sign_of_observable(nx.PAULI_Z)
        targets = [it.state if k < 2 else DensityMatrix.from_bloch(np.pi - t)
                   for k, (it, t) in enumerate(zip(e.items, (0.3, 2.9, 1.0, 2.2)))]
        d = robust_split_decomposition(h, e, PerturbationSpec(targets=tuple(targets)))
        assert d["violators"] == [] and d["robust_weight"] == pytest.approx(0.5)
        assert d["identity_holds"]
        assert d["L"] == pytest.approx(0.5 * d["L_R"] + 0.5 * d["L_Rbar"], abs=1e-12)
        assert d["L_tilde"] == pytest.approx(0.5 * d["L_R"] - 0.5 * d["L_Rbar"], abs=1e-12)

    def test_split_reports_violators(self):
        e = self._ensemble()
        h = ScoreClassifier.sign_of_observable(nx.PAULI_Z)
        d = robust_split_decomposition(h, e, make_named_channel("depolarizing", p=0.5))
        assert d["violators"] == [0, 1, 2, 3] and d["identity_holds"] is None


class TestThresholds:
    def test_threshold_values(self):
        assert robustness_threshold(0.5) == 0.0
        delta = 0.5
        assert robustness_threshold(1.0) == pytest.approx(delta * (1 - math.sqrt(1 - delta ** 2)))
        with pytest.raises(ValidationError):
            robustness_threshold(0.2)

    @given(st.floats(min_value=0.5, max_value=1), st.floats(min_value=0.5, max_value=1))
    def test_threshold_is_monotone(self, a, b):
        lo, hi = sorted((a, b))
        assert robustness_threshold(lo) <= robustness_threshold(hi) + 1e-15

    def test_partial_threshold_modes(self):
        p = [0.9, 0.6, 0.8]
        assert partial_robustness_threshold(p, a=0) == math.inf
        assert partial_robustness_threshold(p, a=2 / 3) == pytest.approx(robustness_threshold(0.8))
        assert partial_robustness_threshold(p, tau=robustness_threshold(0.7)) == pytest.approx(2 / 3)
        with pytest.raises(ValidationError):
            partial_robustness_threshold(p)

    def test_sampling_inside_threshold_changes_nothing(self):
        h = ScoreClassifier.fidelity_clustering((DensityMatrix.diagonal([1, 0]), DensityMatrix.diagonal([0, 1])),
                                                (1, -1))
        e = LabeledEnsemble.uniform([DensityMatrix.from_bloch(0.6), DensityMatrix.from_bloch(2.4)], [1, -1])
        r = check_threshold_by_sampling(h, e, n_perturbations=300, seed=5)
        assert r.holds and r.oracle_value == 1.0

    def test_boundary_items_rejected(self):
        h = ScoreClassifier.fidelity_clustering((DensityMatrix.diagonal([1, 0]), DensityMatrix.diagonal([0, 1])),
                                                (1, -1))
        e = LabeledEnsemble.uniform([DensityMatrix.from_bloch(np.pi / 2)], [1])
        with pytest.raises(ValidationError, match="boundary"):
            check_threshold_by_sampling(h, e, n_perturbations=10)


class TestShortcut:
    @given(unit, unit, unit, unit, unit)
    def test_closed_forms_match_enumeration(self, p, a, b, c, d):
        m = ShortcutModel(p, a, b, c, d)
        assert shortcut_closed_forms(m) == pytest.approx(shortcut_enumeration(m), abs=1e-12)

    def test_tradeoff_rows(self):
        rows = check_shortcut_model(ShortcutModel(0.7, 0.95, 0.95, 0.1, 0.1))
        assert [r.relation_id for r in rows] == ["shortcut_accuracy", "shortcut_robustness_accuracy",
                                                "shortcut_tradeoff"]
        assert all(r.holds for r in rows)


def test_reference_constants_are_evaluable():
    assert constants.evaluate("depolarizing_line", 0.4) == (0.6, 0.2)
    assert constants.evaluate("loss_example_clean_coefficient") == 1 / 12
    with pytest.raises(KeyError):
        constants.reference("missing")
