import numpy as np
import pytest

from blog.simgen import SimScenario, simulate


@pytest.fixture(scope="session")
def small_panel():
    """One deterministic panel: 2 influential features, 3 inert ones."""
    return simulate(SimScenario(n_targets=2, n_noise=3, seed=1))


@pytest.fixture(scope="session")
def medium_panel():
    """Larger deterministic panel for screen-level checks."""
    return simulate(SimScenario(n_targets=5, n_noise=20, seed=4))


@pytest.fixture
def rng():
    return np.random.default_rng([2026])
