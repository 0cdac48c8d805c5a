import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from emlaopt.bilevel import map_eta_fns
from emlaopt.effmap import build_efficiency_map
from emlaopt.manipulator import rnea
from emlaopt.presets import (
    actuators,
    benchmark_problem,
    default_manipulator,
    default_map_grid,
)
from emlaopt.trajopt import solve_inner


@pytest.fixture(scope="session")
def model():
    return default_manipulator()


@pytest.fixture(scope="session")
def model_no_gravity():
    return default_manipulator(gravity=0.0)


@pytest.fixture(scope="session")
def acts():
    return actuators()


@pytest.fixture(scope="session")
def maps(acts):
    return [build_efficiency_map(a, *default_map_grid(a)) for a in acts]


@pytest.fixture(scope="session")
def eta_fns(maps):
    return map_eta_fns(maps)


@pytest.fixture(scope="session")
def small_problem(model):
    return benchmark_problem(model, n_partitions=20, n_ctrl=10)


@pytest.fixture(scope="session")
def dynamics(model):
    return lambda q, qd, qdd: rnea(model, q, qd, qdd)


@pytest.fixture(scope="session")
def solved_half(small_problem, dynamics):
    return solve_inner(small_problem, dynamics, weights=np.array([0.5, 0.5]))


@pytest.fixture(scope="session")
def solved_effort(small_problem, dynamics):
    return solve_inner(small_problem, dynamics, weights=np.array([1.0, 0.0]))


@pytest.fixture(scope="session")
def solved_power(small_problem, dynamics):
    return solve_inner(small_problem, dynamics, weights=np.array([0.0, 1.0]))
