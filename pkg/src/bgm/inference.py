"""Partition-function estimation, MCMC sampling, and unnormalized-model
classification for boosted ensembles."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .core import BINARY, REAL, DataMatrix
from .errors import EstimationFailureError, InvalidInputError, SamplerError

logger = logging.getLogger(__name__)

UNIFORM_DISCRETE = "uniform_discrete"
GAUSSIAN_RW = "gaussian_rw"


@dataclass(frozen=True)
class LogZEstimate:
    """Importance-sampled log-partition estimate with quality diagnostics."""

    log_z: float
    stderr: float
    ess: float
    n: int
    proposal_id: str

    def __post_init__(self):
        if self.ess > self.n + 1e-9:
            raise InvalidInputError("effective sample size cannot exceed n")
        if self.stderr < 0:
            raise InvalidInputError("stderr must be nonnegative")


@dataclass(frozen=True)
class MhConfig:
    proposal: str = UNIFORM_DISCRETE
    step: float = 0.5  # gaussian_rw only
    burn_in: int = 1000
    thin: int = 1
    n_chains: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.proposal not in (UNIFORM_DISCRETE, GAUSSIAN_RW):
            raise InvalidInputError(f"unknown proposal {self.proposal!r}")
        if self.burn_in < 0 or self.thin < 1 or self.n_chains < 1:
            raise InvalidInputError("burn_in >= 0, thin >= 1, n_chains >= 1 required")


def estimate_log_partition(ens, proposal, n: int, seed: int) -> LogZEstimate:
    """Importance-sample log Z of the unnormalized ensemble.

    The proposal must be a generative model covering the ensemble's support
    (finite proposal log-density wherever the ensemble has mass); that is the
    caller's responsibility.  Returns the log-mean of the importance weights
    with a delta-method standard error and the effective sample size.
    """
    if n < 1:
        raise InvalidInputError("need n >= 1 draws")
    draws = proposal.ancestral_sample(n, seed)
    log_w = ens.log_unnorm_density(draws.values) - proposal.log_density(draws.values)
    shift = np.max(log_w)
    if not np.isfinite(shift):
        raise EstimationFailureError("all importance weights are zero")
    w = np.exp(log_w - shift)
    mean_w = float(np.mean(w))
    log_z = float(shift + np.log(mean_w))
    if n > 1:
        var_w = float(np.var(w, ddof=1))
        stderr = float(np.sqrt(var_w / n) / mean_w)
    else:
        stderr = float("inf")
    ess = float(w.sum() ** 2 / np.sum(w * w))
    return LogZEstimate(
        log_z=log_z,
        stderr=stderr,
        ess=min(ess, float(n)),
        n=n,
        proposal_id=type(proposal).__name__,
    )


def _initial_states(ens, cfg: MhConfig, init, rngs):
    d = ens.d
    if isinstance(init, str):
        if init != "proposal-draw":
            raise InvalidInputError(f"unknown init {init!r}")
        states = np.empty((cfg.n_chains, d))
        for c, rng in enumerate(rngs):
            if cfg.proposal == UNIFORM_DISCRETE:
                states[c] = rng.integers(0, 2, size=d).astype(float)
            else:
                states[c] = cfg.step * rng.standard_normal(d)
    else:
        arr = np.asarray(init, dtype=float)
        if arr.ndim == 1:
            if arr.shape != (d,):
                raise InvalidInputError(f"init point must have shape ({d},)")
            states = np.tile(arr, (cfg.n_chains, 1))
        elif arr.shape == (cfg.n_chains, d):
            states = arr.copy()  # one starting point per chain
        else:
            raise InvalidInputError(
                f"init must be a ({d},) point or ({cfg.n_chains}, {d}) array"
            )
    logq = ens.log_unnorm_density(states)
    if not np.all(np.isfinite(logq)):
        raise SamplerError("ensemble log-density is not finite at an initial state")
    return states, logq


def mh_sample(
    ens,
    cfg: MhConfig,
    n_per_chain: int,
    init="proposal-draw",
    return_diagnostics: bool = False,
):
    """Metropolis-Hastings draws targeting the unnormalized ensemble.

    Both proposals are symmetric, so a move is accepted with probability
    min(1, q~(x') / q~(x)).  Chains are independent, advance in lockstep
    (one batched target evaluation per step), and each owns a private
    random stream derived from (seed, chain index), so the output is
    reproducible and unchanged by how many chains run alongside.

    Returns n_chains * n_per_chain rows, chain-major.
    """
    if n_per_chain < 1:
        raise InvalidInputError("need n_per_chain >= 1")
    d = ens.d
    rngs = [
        np.random.default_rng(child)
        for child in np.random.SeedSequence(cfg.seed).spawn(cfg.n_chains)
    ]
    states, logq = _initial_states(ens, cfg, init, rngs)

    keep = np.empty((cfg.n_chains, n_per_chain, d))
    kept = 0
    accepted = 0
    total_steps = cfg.burn_in + cfg.thin * n_per_chain
    proposals = np.empty_like(states)
    log_u = np.empty(cfg.n_chains)
    for step in range(1, total_steps + 1):
        for c, rng in enumerate(rngs):
            if cfg.proposal == UNIFORM_DISCRETE:
                proposals[c] = rng.integers(0, 2, size=d).astype(float)
            else:
                proposals[c] = states[c] + cfg.step * rng.standard_normal(d)
            log_u[c] = np.log(rng.random())
        logq_prop = ens.log_unnorm_density(proposals)
        with np.errstate(invalid="ignore"):
            accept = log_u < (logq_prop - logq)
        accept |= logq_prop >= logq  # covers the ratio >= 1 and -inf == -inf cases
        states[accept] = proposals[accept]
        logq[accept] = logq_prop[accept]
        accepted += int(accept.sum())
        if step > cfg.burn_in and (step - cfg.burn_in) % cfg.thin == 0:
            keep[:, kept, :] = states
            kept += 1

    rate = accepted / (total_steps * cfg.n_chains)
    if rate < 0.001 or rate > 0.999:
        logger.warning("MH acceptance rate %.4f outside [0.001, 0.999]", rate)
    kind = BINARY if cfg.proposal == UNIFORM_DISCRETE else REAL
    samples = DataMatrix(keep.reshape(-1, d), (kind,) * d)
    if return_diagnostics:
        return samples, {
            "acceptance_rate": rate,
            "n_chains": cfg.n_chains,
            "n_per_chain": n_per_chain,
            "burn_in": cfg.burn_in,
            "thin": cfg.thin,
        }
    return samples


def _sigmoid(x):
    out = np.empty_like(x, dtype=float)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _conditional_probs(ens, X, j) -> np.ndarray:
    """P(x_j = 1 | rest) for every row of X, from unnormalized densities."""
    X1 = X.copy()
    X0 = X.copy()
    X1[:, j] = 1.0
    X0[:, j] = 0.0
    log1 = ens.log_unnorm_density(X1)
    log0 = ens.log_unnorm_density(X0)
    with np.errstate(invalid="ignore"):
        diff = log1 - log0
    degenerate = np.isneginf(log1) & np.isneginf(log0)
    if np.any(degenerate):
        logger.warning(
            "conditional_predict: %d degenerate inputs with zero density "
            "either way; returning 0.5",
            int(degenerate.sum()),
        )
        diff = np.where(degenerate, 0.0, diff)
    return _sigmoid(diff)


def conditional_predict(ens, x, j: int) -> float:
    """P(x_j = 1 | remaining coordinates of x); dimension j must be binary.

    The ensemble normalizer cancels in the ratio, so this works on
    unnormalized models.
    """
    point = np.asarray(x, dtype=float)
    if point.ndim != 1:
        raise InvalidInputError("conditional_predict takes a single point")
    if not 0 <= j < point.size:
        raise InvalidInputError(f"dimension index {j} out of range")
    return float(_conditional_probs(ens, point[None, :], j)[0])


def eval_one_out_accuracy(ens, test: DataMatrix, threshold: float = 0.5) -> dict:
    """Predict every variable from the others over the whole test set.

    Returns the overall accuracy and the number of predictions (rows x dims).
    Probability exactly at the threshold predicts 1.
    """
    if not test.is_binary():
        raise InvalidInputError("one-out evaluation needs binary data")
    X = test.values
    correct = 0
    for j in range(test.d):
        probs = _conditional_probs(ens, X, j)
        pred = (probs >= threshold).astype(float)
        correct += int(np.sum(pred == X[:, j]))
    n_predictions = test.m * test.d
    return {"accuracy": correct / n_predictions, "n_predictions": n_predictions}
