import numpy as np
import pytest

from rtlab import numerics as nx
from rtlab.states import DensityMatrix, LabeledEnsemble


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_qubit_ensemble(rng, n_per_class=2) -> LabeledEnsemble:
    states = [DensityMatrix(nx.random_density_matrix(rng, 2)) for _ in range(2 * n_per_class)]
    return LabeledEnsemble.uniform(states, [1] * n_per_class + [-1] * n_per_class)
