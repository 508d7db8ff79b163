import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rtlab import numerics as nx
from rtlab.errors import EmptyPartitionError, OracleError, TieError, ValidationError
from rtlab.states import (DensityMatrix, FeatureOperator, LabeledEnsemble, class_aggregate,
                          feature_partition_aggregates, hemisphere_oracle, lookup_oracle, observable_sign_oracle,
                          pushforward_ensemble, sample_bloch_qubit, sample_bloch_vectors)
from rtlab.channels import make_named_channel

angles = st.floats(min_value=0, max_value=np.pi)
azimuths = st.floats(min_value=0, max_value=2 * np.pi)


class TestDensityMatrix:
    def test_rejects_bad_trace_negative_and_non_hermitian(self):
        with pytest.raises(ValidationError, match="trace"):
            DensityMatrix(np.diag([0.5, 0.6]))
        with pytest.raises(ValidationError, match="negative"):
            DensityMatrix(np.diag([1.2, -0.2]))
        with pytest.raises(ValidationError):
            DensityMatrix(np.array([[0.5, 0.1], [0.2, 0.5]]))

    def test_matrix_is_read_only(self):
        rho = DensityMatrix.maximally_mixed(2)
        with pytest.raises(ValueError):
            rho.matrix[0, 0] = 1

    @given(angles, azimuths)
    def test_bloch_round_trip(self, theta, phi):
        rho = DensityMatrix.from_bloch(theta, phi)
        r = rho.bloch_vector()
        expected = [np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)]
        assert np.allclose(r, expected, atol=1e-12)
        assert rho.purity() == pytest.approx(1.0, abs=1e-12)
        assert DensityMatrix.from_bloch_vector(r).allclose(rho, atol=1e-12)

    def test_bloch_vector_outside_ball(self):
        with pytest.raises(ValidationError):
            DensityMatrix.from_bloch_vector([1, 1, 0])

    def test_mixture_renormalizes(self):
        m = DensityMatrix.mixture([2, 2], [DensityMatrix.diagonal([1, 0]), DensityMatrix.diagonal([0, 1])])
        assert m.allclose(np.eye(2) / 2)

    def test_bloch_vector_only_for_qubits(self):
        with pytest.raises(ValidationError):
            DensityMatrix.maximally_mixed(3).bloch_vector()


class TestEnsemble:
    def test_weights_must_sum_to_one(self):
        s = DensityMatrix.maximally_mixed(2)
        with pytest.raises(ValidationError, match="sum"):
            LabeledEnsemble.from_lists([0.5, 0.4], [s, s], [1, -1])
        with pytest.raises(ValidationError):
            LabeledEnsemble.from_lists([1.5, -0.5], [s, s], [1, -1])

    def test_dimensions_and_classes_validated(self):
        with pytest.raises(ValidationError, match="dimension"):
            LabeledEnsemble.uniform([DensityMatrix.maximally_mixed(2), DensityMatrix.maximally_mixed(3)], [1, -1])
        with pytest.raises(ValidationError, match="declared"):
            LabeledEnsemble.uniform([DensityMatrix.maximally_mixed(2)], [5], classes=(1, -1))
        with pytest.raises(ValidationError):
            LabeledEnsemble(())

    def test_class_aggregate_is_conditional_mixture(self):
        a, b, c = DensityMatrix.diagonal([1, 0]), DensityMatrix.diagonal([0, 1]), DensityMatrix.from_bloch(1.0)
        e = LabeledEnsemble.from_lists([0.25, 0.25, 0.5], [a, b, c], [1, 1, -1])
        assert class_aggregate(e, 1).allclose(np.eye(2) / 2)
        assert class_aggregate(e, -1).allclose(c.matrix)
        assert e.class_weight(1) == pytest.approx(0.5)
        assert e.is_unbiased()

    def test_pushforward_keeps_weights_and_relabels(self):
        e = LabeledEnsemble.uniform([DensityMatrix.from_bloch(0.2), DensityMatrix.from_bloch(2.9)], [1, -1])
        flip = make_named_channel("bit-flip", p=1.0)
        same = pushforward_ensemble(e, flip)
        assert same.labels == e.labels and np.allclose(same.weights, e.weights)
        relabelled = pushforward_ensemble(e, flip, hemisphere_oracle())
        assert relabelled.labels == (-1, 1)


class TestFeaturePartition:
    def test_fractions_and_aggregates(self):
        up, down = DensityMatrix.from_bloch(0.3), DensityMatrix.from_bloch(2.8)
        e = LabeledEnsemble.from_lists([0.3, 0.2, 0.3, 0.2], [up, down, down, up], [1, 1, -1, -1])
        part = feature_partition_aggregates(e, FeatureOperator("z", nx.PAULI_Z))
        assert part.agreement(1) == pytest.approx(0.6)
        assert part.agreement(-1) == pytest.approx(0.6)
        assert part.aggregates[(1, 1)].allclose(up.matrix)

    def test_ties_and_empty_partitions(self):
        eq = DensityMatrix.from_bloch(np.pi / 2)
        z = FeatureOperator("z", nx.PAULI_Z)
        e = LabeledEnsemble.uniform([eq, DensityMatrix.from_bloch(2.8)], [1, -1])
        with pytest.raises(TieError):
            feature_partition_aggregates(e, z)
        e = LabeledEnsemble.uniform([DensityMatrix.from_bloch(0.2), DensityMatrix.from_bloch(2.8)], [1, -1])
        with pytest.raises(EmptyPartitionError):
            feature_partition_aggregates(e, z)
        part = feature_partition_aggregates(e, z, allow_empty=True)
        assert part.fractions[(1, -1)] == 0

    def test_feature_needs_operator(self):
        with pytest.raises(ValidationError):
            FeatureOperator("bad")
        assert not FeatureOperator("p", kind="purity").is_linear


class TestSampling:
    @pytest.mark.parametrize("region,check", [
        ("upper-hemisphere", lambda z: z > 0),
        ("lower-hemisphere", lambda z: z < 0),
        ("equator-band", lambda z: np.abs(z) <= np.sin(0.2) + 1e-15),
    ])
    def test_regions(self, rng, region, check):
        v = sample_bloch_vectors(rng, 2000, region, half_width=0.2)
        assert np.allclose(np.linalg.norm(v, axis=1), 1)
        assert np.all(check(v[:, 2]))

    def test_uniform_z_on_full_sphere(self, rng):
        z = sample_bloch_vectors(rng, 40_000)[:, 2]
        assert abs(z.mean()) < 0.02
        assert np.var(z) == pytest.approx(1 / 3, abs=0.01)

    def test_seeded_draw_is_deterministic(self):
        assert sample_bloch_qubit(7).allclose(sample_bloch_qubit(7).matrix, atol=0)

    def test_unknown_region(self, rng):
        with pytest.raises(ValidationError):
            sample_bloch_vectors(rng, 1, "torus")
        with pytest.raises(ValidationError):
            sample_bloch_vectors(rng, 1, "equator-band")


class TestOracles:
    def test_hemisphere_boundary_goes_down(self):
        o = hemisphere_oracle()
        assert o(DensityMatrix.from_bloch(0.1)) == 1
        assert o(DensityMatrix.from_bloch(np.pi / 2)) == -1
        with pytest.raises(OracleError):
            o(DensityMatrix.maximally_mixed(4))

    def test_hemisphere_on_second_qubit(self):
        o = hemisphere_oracle(site=1, n_qubits=2)
        rho = DensityMatrix(np.kron(nx.PROJ_1, nx.PROJ_0))
        assert o(rho) == 1

    def test_observable_sign_zero_is_undefined(self):
        o = observable_sign_oracle(nx.PAULI_Z)
        with pytest.raises(OracleError):
            o(DensityMatrix.maximally_mixed(2))

    def test_lookup_conflicts_and_misses(self):
        s = DensityMatrix.from_bloch(0.4)
        o = lookup_oracle([(s, 1), (s, -1)])
        with pytest.raises(OracleError, match="conflicting"):
            o(s)
        with pytest.raises(OracleError, match="not in"):
            lookup_oracle([(s, 1)])(DensityMatrix.maximally_mixed(2))
