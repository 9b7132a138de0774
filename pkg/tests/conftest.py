import numpy as np
import pytest

from grid.admittance import build_admittance
from grid.case_parser import parse_matpower_case
from grid.cases import load_builtin_case
from measurement.plan import default_plan
from measurement.quadratic import build_measurement_matrices
from pipeline.dataset import NoiseConfig, generate_dataset
from pipeline.loads import synth_load_series

# Slack at 1+j0, PQ load 0.5 + j0.2 p.u. behind a lossless x = 0.1 line
TWO_BUS_CASE = """function mpc = twobus
mpc.version = '2';
mpc.baseMVA = 100;
mpc.bus = [
\t1\t3\t0\t0\t0\t0\t1\t1\t0\t1\t1\t1.1\t0.9;
\t2\t1\t50\t20\t0\t0\t1\t1\t0\t1\t1\t1.1\t0.9;
];
mpc.gen = [
\t1\t0\t0\t300\t-300\t1\t100\t1\t250\t10;
];
mpc.branch = [
\t1\t2\t0\t0.1\t0\t250\t250\t250\t0\t0\t1\t-360\t360;
];
"""

# Triangle of identical lines, bus 3 generator-backed
THREE_BUS_CASE = """function mpc = threebus
mpc.baseMVA = 100;
mpc.bus = [
\t1\t3\t0\t0\t0\t0\t1\t1.0\t0\t1\t1\t1.1\t0.9;
\t2\t1\t40\t10\t0\t5\t1\t1.0\t0\t1\t1\t1.1\t0.9;
\t3\t2\t30\t15\t0\t0\t1\t1.0\t0\t1\t1\t1.1\t0.9;
];
mpc.gen = [
\t1\t0\t0\t300\t-300\t1.0\t100\t1\t250\t10;
\t3\t20\t0\t300\t-300\t1.01\t100\t1\t250\t10;
];
mpc.branch = [
\t1\t2\t0.01\t0.1\t0\t250\t250\t250\t0\t0\t1\t-360\t360;
\t1\t3\t0.01\t0.1\t0\t250\t250\t250\t0\t0\t1\t-360\t360;
\t2\t3\t0.01\t0.1\t0\t250\t250\t250\t0\t0\t1\t-360\t360;
];
"""

# Closed-form solution of the two-bus power flow
TWO_BUS_STATE = np.array([1.0, 0.0, 0.9769696007084728, -0.05])


@pytest.fixture
def two_bus_grid():
    return parse_matpower_case(TWO_BUS_CASE, name="twobus")


@pytest.fixture
def three_bus_grid():
    return parse_matpower_case(THREE_BUS_CASE, name="threebus")


@pytest.fixture
def two_bus_forms(two_bus_grid):
    plan = default_plan(two_bus_grid)
    return build_measurement_matrices(build_admittance(two_bus_grid), plan)


@pytest.fixture(scope="session")
def case14():
    return load_builtin_case("case14")


@pytest.fixture(scope="session")
def case14_plan(case14):
    return default_plan(case14)


@pytest.fixture(scope="session")
def case14_forms(case14, case14_plan):
    return build_measurement_matrices(build_admittance(case14), case14_plan)


@pytest.fixture(scope="session")
def case14_dataset(case14, case14_plan):
    """40 noisy samples on the 14-bus system"""
    series = synth_load_series(case14, 40, seed=3)
    return generate_dataset(case14, series, case14_plan, noise=NoiseConfig(), seed=11)


@pytest.fixture(scope="session")
def case14_clean_dataset(case14, case14_plan):
    series = synth_load_series(case14, 12, seed=5)
    return generate_dataset(case14, series, case14_plan, noise=NoiseConfig(sigma_flow=0.0, sigma_mag=0.0), seed=2)


@pytest.fixture
def two_bus_text():
    return TWO_BUS_CASE


@pytest.fixture
def three_bus_text():
    return THREE_BUS_CASE


@pytest.fixture
def two_bus_state():
    return TWO_BUS_STATE.copy()


@pytest.fixture(scope="session")
def case57():
    return load_builtin_case("case57")
