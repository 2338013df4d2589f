import numpy as np
import pytest

from bgm import (
    BernoulliMixture,
    EnsembleMember,
    MultiplicativeEnsemble,
    TabularDensity,
    TabularLogDensity,
)


def random_tabular(d, seed, concentration=1.0):
    """A dense random probability table over {0,1}^d."""
    rng = np.random.default_rng(seed)
    raw = rng.gamma(concentration, size=1 << d) + 1e-6
    return TabularDensity.normalized(d, raw)


def random_mob(d, k, seed):
    rng = np.random.default_rng(seed)
    pi = rng.dirichlet(np.ones(k) * 5)
    theta = rng.uniform(0.15, 0.85, size=(k, d))
    return BernoulliMixture(pi, theta)


def tabular_member(d, log_values, alpha):
    return EnsembleMember(
        TabularLogDensity(d, np.asarray(log_values, dtype=float)), alpha
    )


def mob_ensemble(d, k, seed, extra_members=()):
    base = random_mob(d, k, seed)
    members = (EnsembleMember(base, 1.0),) + tuple(extra_members)
    return MultiplicativeEnsemble(members)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
