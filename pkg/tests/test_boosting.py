import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bgm import (
    DataMatrix,
    EmConfig,
    EnsembleMember,
    MultiplicativeEnsemble,
    NegativeSamplerConfig,
    PointWeights,
    RoundSpec,
    TabularLogDensity,
    TrainConfig,
    assign_alpha,
    avg_nll,
    check_conditions_additive,
    check_conditions_multiplicative,
    enumerate_log_partition,
    exact_kl,
    genbgm_weights,
    run_additive,
    run_discbgm,
    run_genbgm,
    run_hybrid,
)
from bgm.errors import InvalidInputError
from bgm.inference import MhConfig
from bgm.oracles import ensemble_log_probs

from conftest import random_tabular, tabular_member

GEN = RoundSpec(kind="generative")


def tabular_base_ensemble(p_like):
    return MultiplicativeEnsemble(
        (tabular_member(p_like.d, p_like.log_probs, 1.0),)
    )


class TestGenbgmWeights:
    def test_beta_zero_is_uniform(self):
        w = genbgm_weights(np.array([-1.0, -2.0, -3.0]), beta=0.0)
        assert np.allclose(w.w, 1.0 / 3.0, atol=1e-15)

    def test_inverse_proportionality(self):
        w = genbgm_weights(np.log([1.0, 2.0]), beta=1.0)
        assert np.allclose(w.w, [2.0 / 3.0, 1.0 / 3.0], atol=1e-12)

    def test_constant_cancellation_exact(self):
        # with a shift that adds exactly in floating point, the outputs are
        # bit-identical: the algorithm never sees the constant
        logq = np.array([-3.0, -2.0, 0.0, 5.0, 1.5])
        for log_c in (-8.0, 2.0, 64.0):
            a = genbgm_weights(logq, beta=0.75).w
            b = genbgm_weights(logq + log_c, beta=0.75).w
            assert np.array_equal(a, b)

    @given(st.floats(min_value=0.0, max_value=1.0))
    @settings(max_examples=30, deadline=None)
    def test_scale_invariance_property(self, beta):
        rng = np.random.default_rng(0)
        logq = rng.normal(size=25)
        a = genbgm_weights(logq, beta).w
        b = genbgm_weights(logq + 11.3, beta).w
        assert np.allclose(a, b, rtol=1e-12, atol=1e-15)

    def test_zero_density_points_take_all_mass(self):
        logq = np.array([-np.inf, 0.0, 1.0])
        w = genbgm_weights(logq, beta=1.0)
        assert w.w[0] == 1.0

    def test_all_infinite_densities_rejected(self):
        with pytest.raises(InvalidInputError):
            genbgm_weights(np.array([np.inf, np.inf]), beta=0.5)

    def test_beta_range_enforced(self):
        with pytest.raises(InvalidInputError):
            genbgm_weights(np.zeros(3), beta=1.5)


class TestAssignAlpha:
    def test_named_values(self):
        assert assign_alpha("unity", 3, 5) == 1.0
        assert assign_alpha("uniform", 1, 2) == pytest.approx(1.0 / 3.0)
        assert assign_alpha("decay", 2, 4) == 0.25

    def test_unknown_heuristic(self):
        with pytest.raises(InvalidInputError):
            assign_alpha("harmonic", 1, 2)

    def test_round_bounds(self):
        with pytest.raises(InvalidInputError):
            assign_alpha("unity", 0, 2)


class TestOracleLadders:
    def test_exact_ratio_recovers_target(self):
        # injecting the exact density ratio with weight one zeroes the KL
        d = 8
        p = random_tabular(d, seed=1)
        q0 = random_tabular(d, seed=2)
        ens = tabular_base_ensemble(q0)
        log_ratio = p.log_probs - ensemble_log_probs(ens)
        boosted = ens.with_member(
            EnsembleMember(TabularLogDensity(d, log_ratio), 1.0, "discriminator")
        )
        assert exact_kl(p, boosted) <= 1e-9

    @pytest.mark.parametrize("beta", [0.0, 0.25, 0.5, 1.0])
    def test_reweighted_oracle_never_hurts(self, beta):
        # optimal generative round: h proportional to (p/q)^beta
        d = 8
        p = random_tabular(d, seed=3)
        q0 = random_tabular(d, seed=4)
        ens = tabular_base_ensemble(q0)
        kl = exact_kl(p, ens)
        for _ in range(3):
            log_h = beta * (p.log_probs - ensemble_log_probs(ens))
            ens = ens.with_member(
                EnsembleMember(TabularLogDensity(d, log_h), 1.0)
            )
            kl_next = exact_kl(p, ens)
            delta = kl - kl_next
            assert delta >= -1e-9
            if beta == 0.0:
                assert abs(delta) <= 1e-12
            kl = kl_next

    def test_adversarial_ratio_peaks_at_alpha_zero(self):
        # label-flipped oracle classifier: h = q/p; no positive weight helps
        d = 8
        p = random_tabular(d, seed=5)
        q0 = random_tabular(d, seed=6)
        ens = tabular_base_ensemble(q0)
        kl0 = exact_kl(p, ens)
        log_h = ensemble_log_probs(ens) - p.log_probs
        deltas = []
        for alpha in np.linspace(0.0, 1.0, 11):
            boosted = ens.with_member(
                EnsembleMember(TabularLogDensity(d, log_h), float(alpha))
            )
            deltas.append(kl0 - exact_kl(p, boosted))
        deltas = np.array(deltas)
        assert np.all(deltas <= 1e-12)
        assert abs(deltas[0]) <= 1e-12
        assert np.argmax(deltas) == 0

    def test_constant_member_changes_nothing(self):
        d = 6
        p = random_tabular(d, seed=7)
        q0 = random_tabular(d, seed=8)
        ens = tabular_base_ensemble(q0)
        kl = exact_kl(p, ens)
        for alpha, c in ((0.3, 0.1), (1.0, 7.0)):
            boosted = ens.with_member(
                EnsembleMember(
                    TabularLogDensity(d, np.full(1 << d, math.log(c))), alpha
                )
            )
            probes = np.array([[0.0] * d, [1.0] * d])
            shift = boosted.log_unnorm_density(probes) - ens.log_unnorm_density(
                probes
            )
            assert np.allclose(shift, alpha * math.log(c), atol=1e-12)
            assert exact_kl(p, boosted) == pytest.approx(kl, abs=1e-12)

    def test_alpha_zero_round_keeps_nll(self):
        d = 6
        p = random_tabular(d, seed=9)
        q0 = random_tabular(d, seed=10)
        ens = tabular_base_ensemble(q0)
        data = p.sample(500, seed=11)
        log_z = enumerate_log_partition(ens)
        nll = avg_nll(ens, data, log_z)
        noisy = tabular_member(d, np.random.default_rng(12).normal(size=1 << d), 0.0)
        boosted = ens.with_member(noisy)
        assert avg_nll(boosted, data, enumerate_log_partition(boosted)) == pytest.approx(
            nll, abs=1e-10
        )


class TestConditionCheckers:
    def test_constant_model_reports_equality(self):
        log_c = math.log(0.37)
        report = check_conditions_multiplicative(
            np.full(1000, log_c), np.full(800, log_c)
        )
        assert report.sufficient_lhs == pytest.approx(log_c, abs=1e-12)
        assert report.sufficient_rhs == pytest.approx(log_c, abs=1e-12)
        assert report.sufficient_holds and report.necessary_holds
        assert report.n_p == 1000 and report.n_q == 800

    def test_exact_ratio_margin_estimates_kl(self):
        d = 8
        p = random_tabular(d, seed=13)
        q = random_tabular(d, seed=14)
        ens = tabular_base_ensemble(q)
        log_h = p.log_probs - ensemble_log_probs(ens)
        h = TabularLogDensity(d, log_h)
        n = 40_000
        p_samples = p.sample(n, seed=15)
        q_samples = q.sample(n, seed=16)
        report = check_conditions_multiplicative(
            h.log_density(p_samples.values), h.log_density(q_samples.values)
        )
        kl = exact_kl(p, ens)
        margin = report.sufficient_lhs - report.sufficient_rhs
        # E_P[log p/q] = KL and log E_Q[p/q] = 0; allow Monte Carlo noise
        assert margin == pytest.approx(kl, abs=4.0 / math.sqrt(n) * 10)
        assert report.sufficient_holds

    def test_adversarial_ratio_fails_necessary(self):
        d = 8
        p = random_tabular(d, seed=17)
        q = random_tabular(d, seed=18)
        ens = tabular_base_ensemble(q)
        log_h = ensemble_log_probs(ens) - p.log_probs
        h = TabularLogDensity(d, log_h)
        n = 40_000
        report = check_conditions_multiplicative(
            h.log_density(p.sample(n, seed=19).values),
            h.log_density(q.sample(n, seed=20).values),
        )
        # lhs - rhs estimates -(KL(P||Q) + KL(Q||P)) < 0
        q_as_p = np.exp(ensemble_log_probs(ens))
        kl_pq = exact_kl(p, ens)
        kl_qp = float(q_as_p @ (np.log(q_as_p) - p.log_probs))
        expected = -(kl_pq + kl_qp)
        got = report.necessary_lhs - report.necessary_rhs
        assert got == pytest.approx(expected, abs=0.15)
        assert not report.necessary_holds

    def test_additive_boundary(self):
        report = check_conditions_additive(np.zeros(500))
        assert report.sufficient_lhs == 0.0
        assert report.necessary_lhs == pytest.approx(1.0, abs=1e-12)
        assert report.sufficient_holds and report.necessary_holds

    def test_additive_oracle_margin(self):
        d = 7
        p = random_tabular(d, seed=21)
        q = random_tabular(d, seed=22)
        ens = tabular_base_ensemble(q)
        log_ratio_table = p.log_probs - ensemble_log_probs(ens)
        n = 40_000
        samples = p.sample(n, seed=23)
        report = check_conditions_additive(
            TabularLogDensity(d, log_ratio_table).log_density(samples.values)
        )
        assert report.sufficient_lhs == pytest.approx(
            exact_kl(p, ens), abs=0.1
        )

    def test_additive_zero_mass_support_point(self):
        ratios = np.array([0.5, -np.inf, 0.2])
        report = check_conditions_additive(ratios)
        assert report.sufficient_lhs == -np.inf
        assert not report.sufficient_holds


def _toy_real_data(seed=0, n=300):
    rng = np.random.default_rng(seed)
    x = np.concatenate(
        [rng.normal(-2.0, 0.7, size=n // 2), rng.normal(2.0, 0.7, size=n - n // 2)]
    )[:, None]
    return DataMatrix.real(x)


def _toy_binary_data(seed=0, n=400, d=6):
    from conftest import random_mob

    return random_mob(d, 2, seed).ancestral_sample(n, seed + 1)


FAST_EM = EmConfig(k=2, seed=0, n_restarts=2, max_iters=100)
FAST_TRAIN = TrainConfig(epochs=8, seed=0, hidden=(16, 16))
FAST_MH = MhConfig(burn_in=60, n_chains=8, seed=0)


class TestRunOrchestration:
    def test_genbgm_t0_is_base_mle(self):
        data = _toy_real_data()
        ens = run_genbgm(data, FAST_EM, [], seed=3)
        assert len(ens.members) == 1
        assert ens.members[0].alpha == 1.0
        assert ens.members[0].kind == "generator"
        # the lone member maximizes the unweighted likelihood: refitting with
        # the same derived seed reproduces it exactly
        child = np.random.SeedSequence(3).spawn(1)[0]
        from bgm.mixtures import fit_gmm_weighted

        direct = fit_gmm_weighted(
            data, None, replace(FAST_EM, seed=int(child.generate_state(1)[0]))
        )
        assert np.array_equal(direct.mu, ens.members[0].learner.mu)

    def test_genbgm_round_kinds_enforced(self):
        data = _toy_real_data()
        with pytest.raises(InvalidInputError):
            run_genbgm(data, FAST_EM, [RoundSpec(kind="discriminative", fdiv="nce")])

    def test_discbgm_round_kinds_enforced(self):
        data = _toy_real_data()
        with pytest.raises(InvalidInputError):
            run_discbgm(data, FAST_EM, [GEN])

    def test_hybrid_matches_genbgm(self):
        data = _toy_binary_data()
        base = EmConfig(k=2, seed=0, n_restarts=2)
        rounds = [RoundSpec(kind="generative", beta=1.0)] * 2
        a = run_genbgm(data, base, rounds, heuristic="uniform", seed=7)
        b = run_hybrid(data, base, rounds, heuristic="uniform", seed=7)
        for ma, mb in zip(a.members, b.members):
            assert np.array_equal(ma.learner.theta, mb.learner.theta)
            assert ma.alpha == mb.alpha

    def test_hybrid_matches_discbgm(self):
        data = _toy_binary_data()
        base = EmConfig(k=2, seed=0, n_restarts=2)
        rounds = [RoundSpec(kind="discriminative", fdiv="nce", learner_cfg=FAST_TRAIN)]
        neg = NegativeSamplerConfig(mh=FAST_MH)
        a = run_discbgm(data, base, rounds, neg_cfg=neg, seed=8)
        b = run_hybrid(data, base, rounds, neg_cfg=neg, seed=8)
        ca, cb = a.members[1].learner.clf, b.members[1].learner.clf
        for Wa, Wb in zip(ca.weights + ca.biases, cb.weights + cb.biases):
            assert np.array_equal(Wa, Wb)

    def test_full_run_determinism(self):
        data = _toy_binary_data(seed=5)
        rounds = [
            RoundSpec(kind="discriminative", fdiv="hd", learner_cfg=FAST_TRAIN),
            RoundSpec(kind="generative", beta=0.5),
        ]
        kwargs = dict(
            heuristic="decay",
            neg_cfg=NegativeSamplerConfig(mh=FAST_MH),
            seed=11,
        )
        a = run_hybrid(data, FAST_EM, rounds, **kwargs)
        b = run_hybrid(data, FAST_EM, rounds, **kwargs)
        pa = a.members[2].learner
        pb = b.members[2].learner
        assert np.array_equal(pa.theta, pb.theta)
        ca, cb = a.members[1].learner.clf, b.members[1].learner.clf
        assert all(
            np.array_equal(x, y)
            for x, y in zip(ca.weights + ca.biases, cb.weights + cb.biases)
        )

    def test_round_log_records(self):
        data = _toy_binary_data(seed=6)
        log = []
        run_discbgm(
            data,
            FAST_EM,
            [RoundSpec(kind="discriminative", fdiv="nce", learner_cfg=FAST_TRAIN)] * 2,
            neg_cfg=NegativeSamplerConfig(mh=FAST_MH),
            seed=12,
            round_log=log,
        )
        assert [r["round"] for r in log] == [1, 2]
        assert "train_objective" in log[0]
        assert "mh_diagnostics" in log[1]  # second round needed the chain
        assert "mh_diagnostics" not in log[0]

    def test_explicit_alpha_overrides_heuristic(self):
        data = _toy_binary_data(seed=7)
        rounds = [RoundSpec(kind="generative", alpha=0.25)]
        ens = run_genbgm(data, FAST_EM, rounds, heuristic="unity", seed=1)
        assert ens.members[1].alpha == 0.25

    def test_hybrid_2d_demo_improves_on_base(self):
        # end-to-end: misspecified 2-D base, one classifier round, one
        # reweighted mixture round; the boosted fit must beat the base
        from bgm.experiment import make_four_gaussian_target
        from bgm import avg_nll, grid_quadrature_2d

        target = make_four_gaussian_target(3.0)
        train = target.ancestral_sample(800, seed=100)
        test = target.ancestral_sample(800, seed=101)
        em = EmConfig(k=2, seed=0, n_restarts=3)
        base = run_hybrid(train, em, [], seed=9)
        rounds = [
            RoundSpec(
                kind="discriminative",
                fdiv="nce",
                learner_cfg=TrainConfig(epochs=60, hidden=(64, 64)),
            ),
            RoundSpec(kind="generative", beta=1.0),
        ]
        ens = run_hybrid(
            train,
            em,
            rounds,
            heuristic="decay",
            neg_cfg=NegativeSamplerConfig(
                mh=MhConfig(
                    proposal="gaussian_rw", step=0.5, burn_in=200, n_chains=400
                )
            ),
            seed=9,
        )
        log_z = float(
            np.log(
                grid_quadrature_2d(
                    ens.log_unnorm_density, ((-11, 11), (-11, 11)), 384
                )
            )
        )
        assert avg_nll(ens, test, log_z) < avg_nll(base, test, 0.0)


class TestRunAdditive:
    def test_alpha_zero_grid_keeps_base(self):
        data = _toy_real_data(seed=2)
        base_only = run_additive(data, FAST_EM, [], seed=4)
        frozen = run_additive(data, FAST_EM, [GEN], alpha_grid=(0.0,), seed=4)
        assert len(frozen.members) == 2
        assert frozen.members[1].alpha_hat == 0.0
        probes = np.linspace(-4, 4, 50)[:, None]
        assert np.allclose(
            base_only.log_density(probes), frozen.log_density(probes), atol=1e-12
        )

    def test_weights_stay_normalized(self):
        data = _toy_real_data(seed=3)
        ens = run_additive(data, FAST_EM, [GEN, GEN], seed=5)
        total = sum(m.alpha_hat for m in ens.members)
        assert total == pytest.approx(1.0, abs=1e-12)

    def test_line_search_improves_validation(self):
        # misspecified base (one Gaussian for a two-mode target) plus a
        # two-component round: the line search should take the new member
        data = _toy_real_data(seed=8, n=600)
        base = EmConfig(k=1, seed=0, n_restarts=2)
        k2 = EmConfig(k=2, seed=0, n_restarts=2)
        log = []
        run_additive(
            data, base, [RoundSpec(kind="generative", learner_cfg=k2)], seed=6,
            round_log=log,
        )
        assert log[0]["alpha_hat"] > 0.0

    def test_rejects_discriminative_rounds(self):
        data = _toy_real_data()
        with pytest.raises(InvalidInputError):
            run_additive(
                data, FAST_EM, [RoundSpec(kind="discriminative", fdiv="nce")]
            )
