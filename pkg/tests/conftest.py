import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from roughnet.examples import get_example
from roughnet.theorem import verify_main_theorem

settings.register_profile(
    "deterministic",
    derandomize=True,
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("deterministic")


@pytest.fixture(scope="session")
def e1():
    return get_example("flat-product")


@pytest.fixture(scope="session")
def e1_graph():
    return get_example("flat-product", distance_mode="graph")


@pytest.fixture(scope="session")
def e2():
    return get_example("heisenberg")


@pytest.fixture(scope="session")
def e3():
    return get_example("warped")


@pytest.fixture(scope="session")
def e1_report(e1):
    # the full pipeline is the slow part of the suite; share one run
    return verify_main_theorem(e1)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
