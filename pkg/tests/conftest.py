import numpy as np
import pytest

from mediator_bai import BanditModel, MediatorSet


@pytest.fixture(scope="session")
def table1_model():
    return BanditModel("gaussian", [1.5, 1.0, 0.7, 0.5])


@pytest.fixture(scope="session")
def table1_mediators():
    return MediatorSet(
        [
            [0.1, 0.8, 0.1, 0.0],
            [0.0, 0.1, 0.8, 0.1],
            [0.0, 0.1, 0.1, 0.8],
            [0.2, 0.0, 0.4, 0.4],
        ]
    )


def random_gaussian_model(rng, n_arms, min_gap=0.25):
    """Random unit-variance Gaussian model with a clearly unique best arm."""
    means = np.sort(rng.normal(0.0, 1.0, n_arms))[::-1]
    means[0] = means[1] + max(min_gap, means[0] - means[1])
    return BanditModel("gaussian", means)


def random_mediators(rng, n_mediators, n_arms, uniform_mix=0.2):
    """Random row-stochastic policies, mixed toward uniform so every arm is covered."""
    rows = rng.dirichlet(np.ones(n_arms), size=n_mediators)
    rows = (1.0 - uniform_mix) * rows + uniform_mix / n_arms
    return MediatorSet(rows / rows.sum(axis=1, keepdims=True))
