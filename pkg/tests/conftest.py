import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

import sharptail as st


@pytest.fixture(scope="session")
def gaussian():
    return st.GaussianModel(1.0)


@pytest.fixture(scope="session")
def bernoulli():
    return st.BinomialModel(1, 0.5)


@pytest.fixture(scope="session")
def unit_weight():
    return st.ConstantWeight(1.0)


@pytest.fixture(scope="session")
def uniform_weight():
    return st.UniformWeight(0.0, 1.0)


@pytest.fixture(scope="session")
def reference_curves(gaussian, uniform_weight):
    """Gaussian summands, U(0,1) weights, theta_star = 1: J = (0, 1/3)."""
    return st.build_curves(uniform_weight, gaussian, 1.0)


@pytest.fixture(scope="session")
def reference_fluctuations(gaussian, uniform_weight, reference_curves):
    """2000 replicas of the reference configuration at n = 10^4.

    Shared between the fluctuation tests and the acceptance suite; this is
    the most expensive fixture in the suite (about a minute).
    """
    from sharptail.fclt import sample_fluctuations

    return [
        sample_fluctuations(uniform_weight, gaussian, reference_curves,
                            10_000, [0.1, 0.2, 0.3], r, 2024)
        for r in range(2000)
    ]
