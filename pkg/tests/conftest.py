import numpy as np
import pytest

from varpflow.manufactured import problem_data, standard_case
from varpflow.solver import SolverConfig, truncation_loop


@pytest.fixture(scope="session")
def case():
    return standard_case()


@pytest.fixture(scope="session")
def data(case):
    return problem_data(case)


@pytest.fixture(scope="session")
def solutions(case, data):
    """Accepted standard-case solutions keyed by grid size."""
    return {n: truncation_loop(data, SolverConfig(n_modes=n, A=2.0, mean_c=case.mean_c))
            for n in (16, 32, 64)}


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
