"""Round orchestration for boosted density estimation.

Multiplicative runs grow an ensemble q~_t = h_t^{alpha_t} * q~_{t-1} where
each intermediate model is either a generative mixture fit by weighted MLE
on reweighted data, or a density ratio extracted from a real-vs-model
classifier.  Additive runs grow a convex mixture with a per-round line
search over the new member's weight.  Condition checkers estimate the
sufficient/necessary inequalities that certify a round cannot hurt the fit.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import logsumexp

from .classifiers import (
    DensityRatioLearner,
    TrainConfig,
    get_fdiv,
    objective_value,
    train_fdiv_classifier,
)
from .core import (
    DISCRIMINATOR,
    GENERATOR,
    AdditiveEnsemble,
    AdditiveMember,
    DataMatrix,
    EnsembleMember,
    MultiplicativeEnsemble,
    PointWeights,
)
from .errors import InvalidInputError
from .inference import GAUSSIAN_RW, UNIFORM_DISCRETE, MhConfig, mh_sample
from .mixtures import (
    EmConfig,
    fit_gmm_weighted,
    fit_mob_weighted,
    weighted_log_likelihood,
)

logger = logging.getLogger(__name__)

GENERATIVE = "generative"
DISCRIMINATIVE = "discriminative"

HEURISTICS = ("unity", "uniform", "decay")

DEFAULT_ALPHA_GRID = tuple(np.linspace(0.0, 1.0, 21))


@dataclass(frozen=True)
class RoundSpec:
    """Per-round recipe: which kind of intermediate model and how to fit it.

    alpha None means the run-level heuristic assigns the weight; a float is
    an explicit override.  beta applies to generative rounds, fdiv to
    discriminative ones.
    """

    kind: str
    beta: float = 1.0
    fdiv: str | None = None
    learner_cfg: EmConfig | TrainConfig | None = None
    alpha: float | None = None

    def __post_init__(self):
        if self.kind not in (GENERATIVE, DISCRIMINATIVE):
            raise InvalidInputError(f"unknown round kind {self.kind!r}")
        if not 0.0 <= self.beta <= 1.0:
            raise InvalidInputError("beta must lie in [0, 1]")
        if self.alpha is not None and not 0.0 <= self.alpha <= 1.0:
            raise InvalidInputError("explicit alpha must lie in [0, 1]")
        if self.kind == DISCRIMINATIVE and self.fdiv is None:
            raise InvalidInputError("discriminative rounds need an f-divergence")


@dataclass(frozen=True)
class NegativeSamplerConfig:
    """How DiscBGM draws model samples: pool size and the MH kernel used
    once the ensemble is no longer the base model alone."""

    n_negatives: int | None = None  # None: match the data size
    mh: MhConfig = field(default_factory=MhConfig)


_CONDITION_SLACK = 1e-12  # equality up to summation noise counts as holding


@dataclass(frozen=True)
class ConditionReport:
    """Sample estimates of the round-improvement inequalities.

    The boolean verdicts compare lhs >= rhs with 1e-12 slack so that exact
    boundary cases (e.g. a constant intermediate model) report as holding.
    """

    sufficient_lhs: float
    sufficient_rhs: float
    necessary_lhs: float
    necessary_rhs: float
    sufficient_holds: bool
    necessary_holds: bool
    n_p: int
    n_q: int

    def to_dict(self) -> dict:
        return {
            "sufficient_lhs": self.sufficient_lhs,
            "sufficient_rhs": self.sufficient_rhs,
            "necessary_lhs": self.necessary_lhs,
            "necessary_rhs": self.necessary_rhs,
            "sufficient_holds": self.sufficient_holds,
            "necessary_holds": self.necessary_holds,
            "n_p": self.n_p,
            "n_q": self.n_q,
        }


def assign_alpha(heuristic: str, t: int, total_rounds: int) -> float:
    """Model weight for round t of total_rounds under a named heuristic."""
    if not 1 <= t <= total_rounds:
        raise InvalidInputError(f"round index {t} outside 1..{total_rounds}")
    if heuristic == "unity":
        return 1.0
    if heuristic == "uniform":
        return 1.0 / (total_rounds + 1)
    if heuristic == "decay":
        return 2.0 ** -t
    raise InvalidInputError(f"unknown heuristic {heuristic!r}")


def genbgm_weights(prev_log_densities, beta: float) -> PointWeights:
    """Reweighting for a generative round: w_i proportional to q~(x_i)^-beta.

    With the empirical data distribution uniform over the training rows, the
    data-density factor is a constant and cancels; so does any normalizer of
    q~, which is why the unnormalized ensemble density is a valid input.
    """
    if not 0.0 <= beta <= 1.0:
        raise InvalidInputError("beta must lie in [0, 1]")
    logq = np.asarray(prev_log_densities, dtype=float)
    if np.any(np.isnan(logq)):
        raise InvalidInputError("log densities must not contain NaN")
    m = logq.size
    if beta == 0.0:
        return PointWeights.uniform(m)
    scores = -beta * logq  # +inf where the model assigns zero density
    shift = np.max(scores)
    if shift == -np.inf:
        raise InvalidInputError("all weights are zero (infinite log densities)")
    if np.isposinf(shift):
        raw = np.isposinf(scores).astype(float)
    else:
        raw = np.exp(scores - shift)
    return PointWeights.normalized(raw)


def _family_fit(data: DataMatrix):
    if data.is_binary():
        return fit_mob_weighted
    if data.is_real():
        return fit_gmm_weighted
    raise InvalidInputError("mixed binary/real columns are not supported")


def _seed_int(seed_seq) -> int:
    return int(seed_seq.generate_state(1)[0])


def _fit_base(data, base_cfg, seed_seq):
    fit = _family_fit(data)
    cfg = replace(base_cfg, seed=_seed_int(seed_seq))
    model = fit(data, None, cfg)
    return model


def _draw_negatives(ens, data, k, neg_cfg, seed_seq):
    """k model samples: ancestral from the base while the ensemble is just
    the base, otherwise an MH chain targeting the current ensemble.

    Continuous chains start from base-model draws so every mode the base
    covers is represented; a random-walk kernel alone cannot hop between
    well-separated modes within a short burn-in."""
    if ens.n_rounds == 0:
        return ens.members[0].learner.ancestral_sample(k, _seed_int(seed_seq)), None
    binary = data.is_binary()
    chain_seed_seq, init_seed_seq = seed_seq.spawn(2)
    mh_cfg = replace(
        neg_cfg.mh,
        seed=_seed_int(chain_seed_seq),
        proposal=UNIFORM_DISCRETE if binary else GAUSSIAN_RW,
    )
    if binary:
        init = "proposal-draw"
    else:
        init = ens.members[0].learner.ancestral_sample(
            mh_cfg.n_chains, _seed_int(init_seed_seq)
        ).values
    n_per_chain = -(-k // mh_cfg.n_chains)
    samples, diag = mh_sample(
        ens, mh_cfg, n_per_chain, init=init, return_diagnostics=True
    )
    trimmed = DataMatrix(samples.values[:k], samples.column_kind)
    return trimmed, diag


def _run_multiplicative(
    data: DataMatrix,
    base_cfg: EmConfig,
    rounds,
    heuristic: str = "unity",
    neg_cfg: NegativeSamplerConfig | None = None,
    seed: int = 0,
    round_log: list | None = None,
    base_alpha: float = 1.0,
) -> MultiplicativeEnsemble:
    neg_cfg = neg_cfg or NegativeSamplerConfig()
    ss = np.random.SeedSequence(seed)
    children = ss.spawn(2 * len(rounds) + 1)
    base = _fit_base(data, base_cfg, children[0])
    ens = MultiplicativeEnsemble((EnsembleMember(base, base_alpha, GENERATOR),))
    total = len(rounds)
    fit = _family_fit(data)

    for t, spec in enumerate(rounds, start=1):
        alpha = spec.alpha if spec.alpha is not None else assign_alpha(
            heuristic, t, total
        )
        record = {"round": t, "kind": spec.kind, "alpha": alpha}
        if spec.kind == GENERATIVE:
            logq = ens.log_unnorm_density(data.values)
            weights = genbgm_weights(logq, spec.beta)
            cfg = spec.learner_cfg if isinstance(spec.learner_cfg, EmConfig) else base_cfg
            cfg = replace(cfg, seed=_seed_int(children[2 * t - 1]))
            model = fit(data, weights, cfg)
            member = EnsembleMember(model, alpha, GENERATOR)
            record["beta"] = spec.beta
            record["weighted_log_likelihood"] = weighted_log_likelihood(
                model, data, weights
            )
        else:
            k = neg_cfg.n_negatives or data.m
            negatives, diag = _draw_negatives(
                ens, data, k, neg_cfg, children[2 * t - 1]
            )
            fdiv = get_fdiv(spec.fdiv)
            cfg = (
                spec.learner_cfg
                if isinstance(spec.learner_cfg, TrainConfig)
                else TrainConfig()
            )
            cfg = replace(cfg, seed=_seed_int(children[2 * t]))
            clf = train_fdiv_classifier(data, negatives, fdiv, cfg)
            member = EnsembleMember(
                DensityRatioLearner(clf, fdiv, gamma=k / data.m), alpha, DISCRIMINATOR
            )
            record["fdiv"] = fdiv.name
            record["gamma"] = k / data.m
            record["n_negatives"] = k
            record["train_objective"] = objective_value(
                fdiv.name,
                clf.raw_score(data.values),
                clf.raw_score(negatives.values),
            )
            if diag is not None:
                record["mh_diagnostics"] = diag
        ens = ens.with_member(member)
        if round_log is not None:
            round_log.append(record)
    return ens


def run_genbgm(
    data: DataMatrix,
    base_cfg: EmConfig,
    rounds,
    heuristic: str = "unity",
    seed: int = 0,
    round_log: list | None = None,
    base_alpha: float = 1.0,
) -> MultiplicativeEnsemble:
    """Generative multiplicative boosting: every round reweights the data
    against the current ensemble and fits a mixture by weighted MLE.

    base_alpha tempers the base model's exponent; the default keeps the
    plain product form, while weighting schedules that cover the base model
    (e.g. a uniform 1/(T+1) over every member) pass it explicitly."""
    if any(r.kind != GENERATIVE for r in rounds):
        raise InvalidInputError("run_genbgm accepts generative rounds only")
    return _run_multiplicative(
        data, base_cfg, rounds, heuristic, None, seed, round_log, base_alpha
    )


def run_discbgm(
    data: DataMatrix,
    base_cfg: EmConfig,
    rounds,
    heuristic: str = "unity",
    neg_cfg: NegativeSamplerConfig | None = None,
    seed: int = 0,
    round_log: list | None = None,
) -> MultiplicativeEnsemble:
    """Discriminative multiplicative boosting: every round trains a
    real-vs-model classifier and appends the implied density ratio."""
    if any(r.kind != DISCRIMINATIVE for r in rounds):
        raise InvalidInputError("run_discbgm accepts discriminative rounds only")
    return _run_multiplicative(
        data, base_cfg, rounds, heuristic, neg_cfg, seed, round_log
    )


def run_hybrid(
    data: DataMatrix,
    base_cfg: EmConfig,
    rounds,
    heuristic: str = "unity",
    neg_cfg: NegativeSamplerConfig | None = None,
    seed: int = 0,
    round_log: list | None = None,
) -> MultiplicativeEnsemble:
    """Any mix of generative and discriminative rounds on one ensemble."""
    return _run_multiplicative(
        data, base_cfg, rounds, heuristic, neg_cfg, seed, round_log
    )


def _holdout_split(m: int, fraction: float, rng) -> tuple[np.ndarray, np.ndarray]:
    n_val = min(m - 1, max(1, int(round(fraction * m))))
    perm = rng.permutation(m)
    return np.sort(perm[n_val:]), np.sort(perm[:n_val])


def run_additive(
    data: DataMatrix,
    base_cfg: EmConfig,
    rounds,
    alpha_grid=DEFAULT_ALPHA_GRID,
    seed: int = 0,
    validation_fraction: float = 0.1,
    round_log: list | None = None,
) -> AdditiveEnsemble:
    """Additive boosting with residual reweighting and a per-round line
    search over the new member's mixture weight.

    The base model is an unweighted MLE fit on all rows (identical to a
    standalone base fit with the same seed).  Intermediate models fit on a
    90% split with weights proportional to 1/q_{t-1}(x_i); each round's
    weight maximizes held-out log-likelihood over alpha_grid, and the member
    weights are renormalized so they always sum to one.
    """
    if any(r.kind != GENERATIVE for r in rounds):
        raise InvalidInputError("additive boosting accepts generative rounds only")
    ss = np.random.SeedSequence(seed)
    children = ss.spawn(len(rounds) + 2)
    fit = _family_fit(data)

    base = _fit_base(data, base_cfg, children[0])
    ens = AdditiveEnsemble((AdditiveMember(base, 1.0),))

    split_rng = np.random.default_rng(children[1])
    fit_idx, val_idx = _holdout_split(data.m, validation_fraction, split_rng)
    fit_data = DataMatrix(data.values[fit_idx], data.column_kind)
    val_X = data.values[val_idx]

    for t, spec in enumerate(rounds, start=1):
        logq_fit = ens.log_density(fit_data.values)
        weights = genbgm_weights(logq_fit, 1.0)  # residual weights 1/q
        cfg = spec.learner_cfg if isinstance(spec.learner_cfg, EmConfig) else base_cfg
        cfg = replace(cfg, seed=_seed_int(children[t + 1]))
        model = fit(fit_data, weights, cfg)

        logq_val = ens.log_density(val_X)
        logh_val = model.log_density(val_X)
        best_alpha, best_ll = None, -np.inf
        for alpha in alpha_grid:
            if alpha == 0.0:
                ll = float(np.mean(logq_val))
            elif alpha == 1.0:
                ll = float(np.mean(logh_val))
            else:
                mixed = np.logaddexp(
                    math.log1p(-alpha) + logq_val, math.log(alpha) + logh_val
                )
                ll = float(np.mean(mixed))
            if ll > best_ll:
                best_alpha, best_ll = float(alpha), ll
        members = tuple(
            AdditiveMember(mem.learner, mem.alpha_hat * (1.0 - best_alpha))
            for mem in ens.members
        ) + (AdditiveMember(model, best_alpha),)
        ens = AdditiveEnsemble(members)
        if round_log is not None:
            round_log.append(
                {
                    "round": t,
                    "kind": GENERATIVE,
                    "alpha_hat": best_alpha,
                    "validation_log_likelihood": best_ll,
                }
            )
    return ens


def check_conditions_multiplicative(log_h_p, log_h_q) -> ConditionReport:
    """Estimate the multiplicative-round improvement inequalities.

    log_h_p holds log h at samples from the data distribution, log_h_q at
    samples from the previous-round ensemble.  Sufficient: mean log h under
    the data at least log of the mean of h under the model.  Necessary: mean
    log h under the data at least mean log h under the model.
    """
    log_h_p = np.asarray(log_h_p, dtype=float)
    log_h_q = np.asarray(log_h_q, dtype=float)
    suff_lhs = float(np.mean(log_h_p))
    suff_rhs = float(logsumexp(log_h_q) - math.log(log_h_q.size))
    nec_rhs = float(np.mean(log_h_q))
    return ConditionReport(
        sufficient_lhs=suff_lhs,
        sufficient_rhs=suff_rhs,
        necessary_lhs=suff_lhs,
        necessary_rhs=nec_rhs,
        sufficient_holds=bool(suff_lhs >= suff_rhs - _CONDITION_SLACK),
        necessary_holds=bool(suff_lhs >= nec_rhs - _CONDITION_SLACK),
        n_p=log_h_p.size,
        n_q=log_h_q.size,
    )


def check_conditions_additive(log_ratios_p) -> ConditionReport:
    """Estimate the additive-round improvement inequalities from
    log(h / q_{t-1}) at samples from the data distribution.

    Sufficient: mean log-ratio >= 0.  Necessary: mean ratio >= 1 (reported
    on the plain ratio scale)."""
    lr = np.asarray(log_ratios_p, dtype=float)
    suff_lhs = float(np.mean(lr))
    with np.errstate(over="ignore"):
        nec_lhs = float(np.exp(logsumexp(lr) - math.log(lr.size)))
    return ConditionReport(
        sufficient_lhs=suff_lhs,
        sufficient_rhs=0.0,
        necessary_lhs=nec_lhs,
        necessary_rhs=1.0,
        sufficient_holds=bool(suff_lhs >= -_CONDITION_SLACK),
        necessary_holds=bool(nec_lhs >= 1.0 - _CONDITION_SLACK),
        n_p=lr.size,
        n_q=0,
    )
