import math

import numpy as np
import pytest

from bgm import (
    EnsembleMember,
    GaussianMixture,
    MultiplicativeEnsemble,
    TabularDensity,
    TabularLogDensity,
    all_binary_states,
    enumerate_log_partition,
    exact_kl,
    grid_quadrature_2d,
)
from bgm.errors import InvalidInputError
from bgm.oracles import state_index

from conftest import random_mob, random_tabular


def tabular_ensemble(d, log_values, alpha=1.0):
    return MultiplicativeEnsemble(
        (EnsembleMember(TabularLogDensity(d, log_values), alpha),)
    )


class TestEnumeration:
    def test_state_index_roundtrip(self):
        states = all_binary_states(6)
        assert np.array_equal(state_index(states), np.arange(64))

    def test_constant_density(self):
        ens = tabular_ensemble(10, np.zeros(1 << 10))
        assert enumerate_log_partition(ens) == pytest.approx(math.log(1024), abs=1e-9)

    def test_normalized_mob_is_zero(self):
        mob = random_mob(d=8, k=3, seed=4)
        ens = MultiplicativeEnsemble((EnsembleMember(mob, 1.0),))
        assert enumerate_log_partition(ens) == pytest.approx(0.0, abs=1e-9)

    def test_dimension_guard(self):
        ens = tabular_ensemble(3, np.zeros(8))
        with pytest.raises(InvalidInputError):
            enumerate_log_partition(ens, d=21)

    def test_order_stability(self, rng):
        # Chunked streaming must agree with a single-shot log-sum-exp.
        d = 8
        lv = rng.normal(size=1 << d) * 5
        ens = tabular_ensemble(d, lv)
        from scipy.special import logsumexp

        direct = logsumexp(lv)
        assert enumerate_log_partition(ens) == pytest.approx(direct, abs=1e-12)
        perm = rng.permutation(1 << d)
        # permuting the table relabels states but keeps the partition sum
        ens_perm = tabular_ensemble(d, lv[perm])
        assert enumerate_log_partition(ens_perm) == pytest.approx(direct, abs=1e-12)


class TestExactKl:
    def test_self_divergence_zero(self):
        p = random_tabular(6, seed=0)
        ens = tabular_ensemble(6, p.log_probs)
        assert exact_kl(p, ens) == pytest.approx(0.0, abs=1e-12)

    def test_missing_support_is_infinite(self):
        d = 4
        p = TabularDensity(d, np.full(16, 1 / 16))
        lv = np.full(16, -np.inf)
        lv[:8] = 0.0
        assert exact_kl(p, tabular_ensemble(d, lv)) == np.inf

    def test_uniform_vs_half_support(self):
        # P uniform over half the states, Q uniform everywhere: KL = log 2.
        d = 4
        p_half = TabularDensity.normalized(d, np.r_[np.ones(8), np.zeros(8)])
        ens_uniform = tabular_ensemble(d, np.zeros(16))
        assert exact_kl(p_half, ens_uniform) == pytest.approx(math.log(2), abs=1e-12)

    def test_nonnegativity(self, rng):
        for s in range(5):
            p = random_tabular(5, seed=100 + s)
            q = random_tabular(5, seed=200 + s)
            ens = tabular_ensemble(5, q.log_probs)
            assert exact_kl(p, ens) >= -1e-12

    def test_round_delta_matches_expansion(self, rng):
        # Two independent computations of the KL reduction from appending a
        # member: direct difference of exact divergences vs the expanded form
        # alpha * E_P[log h] - log E_Q[h^alpha].
        d = 6
        p = random_tabular(d, seed=11)
        q_prev = random_tabular(d, seed=12)
        log_h = rng.normal(size=1 << d)
        alpha = 0.6

        ens_prev = tabular_ensemble(d, q_prev.log_probs)
        ens_next = MultiplicativeEnsemble(
            ens_prev.members + (EnsembleMember(TabularLogDensity(d, log_h), alpha),)
        )
        delta_direct = exact_kl(p, ens_prev) - exact_kl(p, ens_next)

        e_p_log_h = float(p.probs @ log_h)
        log_e_q_h_alpha = float(
            np.log(np.sum(q_prev.probs * np.exp(alpha * log_h)))
        )
        delta_expanded = alpha * e_p_log_h - log_e_q_h_alpha
        assert delta_direct == pytest.approx(delta_expanded, abs=1e-9)


class TestGridQuadrature:
    def test_standard_gaussian_normalizes(self):
        g = GaussianMixture([1.0], [[0.0, 0.0]], [np.eye(2)])
        integral = grid_quadrature_2d(
            g.log_density, ((-10, 10), (-10, 10)), 512
        )
        assert integral == pytest.approx(1.0, abs=1e-3)

    def test_four_mode_target_normalizes(self):
        c = 3.0
        centers = [[c, c], [c, -c], [-c, c], [-c, -c]]
        g = GaussianMixture([0.25] * 4, centers, [np.eye(2)] * 4)
        integral = grid_quadrature_2d(
            g.log_density, ((-13, 13), (-13, 13)), 512
        )
        assert integral == pytest.approx(1.0, abs=1e-3)

    def test_linearity_in_scale(self):
        g = GaussianMixture([1.0], [[0.0, 0.0]], [np.eye(2)])
        c = 4.2

        def scaled(pts):
            return g.log_density(pts) + math.log(c)

        i1 = grid_quadrature_2d(g.log_density, ((-9, 9), (-9, 9)), 400)
        i2 = grid_quadrature_2d(scaled, ((-9, 9), (-9, 9)), 400)
        assert i2 == pytest.approx(c * i1, rel=1e-3)


class TestTabularDensity:
    def test_sampling_matches_probs(self):
        p = random_tabular(4, seed=3)
        draws = p.sample(200_000, seed=9)
        counts = np.bincount(state_index(draws.values).astype(int), minlength=16)
        freq = counts / counts.sum()
        stderr = np.sqrt(p.probs * (1 - p.probs) / 200_000)
        assert np.all(np.abs(freq - p.probs) < 5 * stderr + 1e-4)

    def test_rejects_unnormalized(self):
        with pytest.raises(InvalidInputError):
            TabularDensity(2, np.array([0.5, 0.2, 0.2, 0.2]))
