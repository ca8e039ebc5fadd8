import numpy as np
import pytest

from twoway_cvqkd import gaussian_core as gc
from twoway_cvqkd.finite_size import EstimationBudget
from twoway_cvqkd.protocols import ModeMatchMatrix, TwoWayParams


def random_symplectic(n, rng, layers=3):
    """Random symplectic built from squeezers, phase shifts and beam splitters."""
    s = gc.SymplecticTransform(np.eye(2 * n))
    for _ in range(layers):
        for i in range(n):
            s = gc.squeezer(rng.uniform(-1.0, 1.0), i, n) @ s
            s = gc.phase_rotation(rng.uniform(0, 2 * np.pi), i, n) @ s
        if n > 1:
            for _ in range(n):
                a, b = rng.choice(n, size=2, replace=False)
                s = gc.beam_splitter(rng.uniform(0.05, 0.95), int(a), int(b), n) @ s
    return s


def random_state(n, rng, max_nu=20.0):
    """Random physical covariance matrix with known symplectic spectrum."""
    nus = np.sort(rng.uniform(1.0, max_nu, size=n))[::-1]
    gamma = gc.direct_sum(*(gc.thermal(v) for v in nus))
    return gc.apply_symplectic(random_symplectic(n, rng), gamma), nus


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# operating point used throughout the reported results
IDEAL = TwoWayParams(v_a=20.0, v_b=20.0, t_a=0.8, alpha=0.2, excess_noise=0.1, beta=0.95)
PRACTICAL = TwoWayParams(v_a=20.0, v_b=20.0, t_a=0.8, alpha=0.2, excess_noise=0.1, beta=0.95,
                         eta=ModeMatchMatrix.uniform(0.97))
BUDGET = EstimationBudget.split(10 ** 8)
