# dynkin/tests/conftest.py
import numpy as np
import pytest

from mesh.grids import GridSet
from problem import preset_experiment1, preset_experiment2, preset_experiment3, problem_from_mapping
from schemes.solver_sl import SolverConfig, solve


def grids_for(problem, n, l, m):
    return GridSet.uniform(problem.horizon, problem.domain, n, l, problem.scenario_count, m)


def sl_solve(problem, n, l, m, **flags):
    grids = grids_for(problem, n, l, m)
    return solve(problem, SolverConfig.for_problem(problem, grids, **flags))


@pytest.fixture
def exp1():
    return preset_experiment1()


@pytest.fixture
def exp2():
    return preset_experiment2()


@pytest.fixture
def exp3():
    return preset_experiment3()


@pytest.fixture
def constant_problem():
    """Two scenarios, g ≡ 3, no obstacles, no source."""
    return problem_from_mapping({
        "scenarios": "2", "terminal_1": "3", "terminal_2": "3", "drift": "0.1", "diffusion": "0.2",
    })


@pytest.fixture
def rng():
    return np.random.default_rng(20240517)


@pytest.fixture
def make_grids():
    return grids_for


@pytest.fixture
def solve_sl():
    return sl_solve
