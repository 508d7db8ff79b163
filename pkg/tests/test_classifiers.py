import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rtlab import numerics as nx
from rtlab.classifiers import (GaussianFeatureModel, ScoreClassifier, StochasticClassifier, gaussian_mean_accuracy,
                               gaussian_model_metrics, quantum_feature)
from rtlab.errors import TieError, ValidationError
from rtlab.states import DensityMatrix, FeatureOperator

angles = st.floats(min_value=0.01, max_value=np.pi - 0.01)


@given(angles)
def test_z_measurement_probabilities(theta):
    h = StochasticClassifier.binary(nx.PROJ_0)
    dist = h.predict_distribution(DensityMatrix.from_bloch(theta))
    assert dist == pytest.approx([np.cos(theta / 2) ** 2, np.sin(theta / 2) ** 2], abs=1e-12)


def test_povm_validation():
    with pytest.raises(ValidationError, match="identity"):
        StochasticClassifier((nx.PROJ_0, nx.PROJ_0))
    with pytest.raises(ValidationError):
        StochasticClassifier((nx.I2,))
    with pytest.raises(ValidationError):
        StochasticClassifier((nx.PROJ_0, nx.PROJ_1), classes=(1, 1))
    with pytest.raises(ValidationError):
        StochasticClassifier.binary(nx.PROJ_0).predict_distribution(DensityMatrix.maximally_mixed(3))


def test_trine_povm_and_sampling(rng):
    kets = [np.array([np.cos(a), np.sin(a)]) for a in (0, 2 * np.pi / 3, 4 * np.pi / 3)]
    h = StochasticClassifier(tuple(2 / 3 * nx.ket_projector(k) for k in kets), classes=(0, 1, 2))
    rho = DensityMatrix.from_ket(kets[0])
    assert h.predict(rho) == 0
    assert h.probability(rho, 0) == pytest.approx(2 / 3)
    shots = h.sample(rho, rng, 30_000)
    assert np.mean(shots == 0) == pytest.approx(2 / 3, abs=0.01)


def test_stochastic_predict_tie():
    with pytest.raises(TieError):
        StochasticClassifier.binary(nx.PROJ_0).predict(DensityMatrix.maximally_mixed(2))


def test_sign_of_observable_and_threshold():
    h = ScoreClassifier.sign_of_observable(nx.PAULI_Z, threshold=0.5)
    assert h.predict(DensityMatrix.from_bloch(0.1)) == 1
    assert h.predict(DensityMatrix.from_bloch(1.2)) == -1
    with pytest.raises(TieError):
        h.predict(DensityMatrix.from_bloch(np.pi / 3))
    assert h.decision_value(DensityMatrix.from_bloch(0.0)) == pytest.approx(0.5)


def test_fidelity_clustering_score_is_overlap():
    h = ScoreClassifier.fidelity_clustering((DensityMatrix.diagonal([1, 0]), DensityMatrix.diagonal([0, 1])),
                                            (1, -1))
    rho = DensityMatrix.from_bloch(0.8)
    assert h.score_values(rho) == pytest.approx([np.cos(0.4) ** 2, np.sin(0.4) ** 2], abs=1e-12)
    assert h.top_score(rho) == pytest.approx(np.cos(0.4) ** 2, abs=1e-12)
    assert h.predict(rho) == 1
    with pytest.raises(TieError):
        h.predict(DensityMatrix.maximally_mixed(2))


def test_feature_sum_adds_weighted_features():
    f = (FeatureOperator("z", nx.PAULI_Z, weight=2.0), FeatureOperator("x", nx.PAULI_X, weight=-1.0))
    h = ScoreClassifier.feature_sum(f)
    rho = DensityMatrix.from_bloch_vector([0.3, 0, 0.4])
    assert h.score_values(rho)[0] == pytest.approx(2 * 0.4 - 0.3)
    assert h.scores[0].components(rho) == pytest.approx([0.8, -0.3])


def test_purity_feature():
    rho = DensityMatrix.diagonal([0.75, 0.25])
    assert quantum_feature(rho, FeatureOperator("p", kind="purity")) == pytest.approx(0.625)


def test_score_classifier_validation():
    with pytest.raises(ValidationError):
        ScoreClassifier((), "argmax")
    with pytest.raises(ValidationError):
        ScoreClassifier.sign_of_observable(nx.PAULI_Z, classes=(1, 1))
    with pytest.raises(ValidationError):
        ScoreClassifier.sign_of_observable(nx.PAULI_Z, threshold=float("nan"))


class TestGaussian:
    def test_exact_tail(self):
        assert gaussian_mean_accuracy(0.5, 16) == pytest.approx(0.9772498680518208, abs=1e-15)

    def test_monte_carlo_within_three_se(self):
        m = gaussian_model_metrics(GaussianFeatureModel(9, 0.3, 0.7), 50_000, 3)
        assert abs(m.A - gaussian_mean_accuracy(0.3, 9)) <= 3 * m.se_A
        assert m.A_star == 0.0
        assert m.A_tilde == pytest.approx(1 - m.A, abs=1e-12)

    def test_seed_determinism_and_shortcut_variant(self):
        a = gaussian_model_metrics(GaussianFeatureModel(4, 0.5, 0.6), 20_000, 11)
        assert a == gaussian_model_metrics(GaussianFeatureModel(4, 0.5, 0.6), 20_000, 11)
        s = gaussian_model_metrics(GaussianFeatureModel(4, 0.5, 0.6, "H2-first-coordinate"), 20_000, 0)
        assert (s.A, s.A_star, s.A_tilde) == (0.6, 1.0, 0.6)

    @pytest.mark.parametrize("kwargs", [dict(d=0, eta=1, p=0.5), dict(d=2, eta=-1, p=0.5),
                                        dict(d=2, eta=1, p=1.0), dict(d=2, eta=1, p=0.5, variant="x")])
    def test_parameter_validation(self, kwargs):
        with pytest.raises(ValidationError):
            GaussianFeatureModel(**kwargs)

    def test_sample_floor(self):
        with pytest.raises(ValidationError):
            gaussian_model_metrics(GaussianFeatureModel(2, 1.0, 0.6), 10, 0)
