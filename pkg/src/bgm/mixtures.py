"""Weighted maximum-likelihood mixture learners.

Gaussian and Bernoulli mixtures fit by EM against a weighted empirical
distribution.  Uniform weights recover standard EM exactly; reweighted fits
realize the boosted objective of maximizing the expected log-likelihood
under a reweighted data distribution.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .core import DataMatrix, PointWeights
from .errors import InternalConsistencyError, InvalidInputError

logger = logging.getLogger(__name__)

_DEGENERATE_MASS = 1e-10
_LOG_2PI = np.log(2.0 * np.pi)


@dataclass(frozen=True)
class EmConfig:
    """Knobs for the EM fits; defaults follow the library-wide conventions."""

    k: int
    max_iters: int = 500
    rel_tol: float = 1e-6
    n_restarts: int = 5
    seed: int = 0
    cov_floor: float = 1e-6
    eps_theta: float = 1e-3

    def __post_init__(self):
        if self.k < 1:
            raise InvalidInputError("k must be >= 1")
        if self.max_iters < 1:
            raise InvalidInputError("max_iters must be >= 1")
        if self.rel_tol <= 0:
            raise InvalidInputError("rel_tol must be positive")
        if self.n_restarts < 1:
            raise InvalidInputError("n_restarts must be >= 1")


def _floor_covariance(sigma: np.ndarray, cov_floor: float) -> np.ndarray:
    """Symmetrize and clip eigenvalues from below."""
    sym = 0.5 * (sigma + sigma.T)
    vals, vecs = np.linalg.eigh(sym)
    vals = np.maximum(vals, cov_floor)
    return (vecs * vals) @ vecs.T


class GaussianMixture:
    """Full-covariance Gaussian mixture with log-domain evaluation."""

    def __init__(self, pi, mu, sigma):
        pi = np.asarray(pi, dtype=float)
        mu = np.asarray(mu, dtype=float)
        sigma = np.asarray(sigma, dtype=float)
        if abs(pi.sum() - 1.0) > 1e-12 or np.any(pi < 0):
            raise InvalidInputError("mixing weights must be nonnegative and sum to 1")
        k, d = mu.shape
        if pi.shape != (k,) or sigma.shape != (k, d, d):
            raise InvalidInputError("inconsistent mixture parameter shapes")
        self.pi = pi
        self.mu = mu
        self.sigma = sigma
        self._chol = []
        for j in range(k):
            try:
                self._chol.append(np.linalg.cholesky(sigma[j]))
            except np.linalg.LinAlgError as exc:
                raise InternalConsistencyError(
                    f"component {j} covariance is not positive definite"
                ) from exc
        with np.errstate(divide="ignore"):
            self._log_pi = np.log(pi)

    @property
    def k(self) -> int:
        return self.pi.size

    @property
    def d(self) -> int:
        return self.mu.shape[1]

    def component_log_density(self, X) -> np.ndarray:
        """Per-component Gaussian log densities, shape (n, k)."""
        X = np.asarray(X, dtype=float)
        n, d = X.shape
        out = np.empty((n, self.k))
        for j in range(self.k):
            L = self._chol[j]
            diff = X - self.mu[j]
            sol = np.linalg.solve(L, diff.T)
            maha = np.sum(sol * sol, axis=0)
            log_det = 2.0 * np.sum(np.log(np.diag(L)))
            out[:, j] = -0.5 * (d * _LOG_2PI + log_det + maha)
        return out

    def log_density(self, X) -> np.ndarray:
        comp = self.component_log_density(np.atleast_2d(np.asarray(X, dtype=float)))
        return logsumexp(comp + self._log_pi, axis=1)

    def ancestral_sample(self, n: int, seed: int) -> DataMatrix:
        if n < 1:
            raise InvalidInputError("need n >= 1 samples")
        rng = np.random.default_rng(seed)
        comp = rng.choice(self.k, size=n, p=self.pi)
        z = rng.standard_normal((n, self.d))
        out = np.empty((n, self.d))
        for j in range(self.k):
            rows = comp == j
            out[rows] = self.mu[j] + z[rows] @ self._chol[j].T
        return DataMatrix.real(out)


class BernoulliMixture:
    """Product-Bernoulli mixture over {0,1}^d."""

    def __init__(self, pi, theta):
        pi = np.asarray(pi, dtype=float)
        theta = np.asarray(theta, dtype=float)
        if abs(pi.sum() - 1.0) > 1e-12 or np.any(pi < 0):
            raise InvalidInputError("mixing weights must be nonnegative and sum to 1")
        if theta.ndim != 2 or theta.shape[0] != pi.size:
            raise InvalidInputError("inconsistent mixture parameter shapes")
        if np.any(theta <= 0) or np.any(theta >= 1):
            raise InvalidInputError("theta must lie strictly inside (0, 1)")
        self.pi = pi
        self.theta = theta
        self._log_theta = np.log(theta)
        self._log_1m_theta = np.log1p(-theta)
        with np.errstate(divide="ignore"):
            self._log_pi = np.log(pi)

    @property
    def k(self) -> int:
        return self.pi.size

    @property
    def d(self) -> int:
        return self.theta.shape[1]

    def component_log_density(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return X @ self._log_theta.T + (1.0 - X) @ self._log_1m_theta.T

    def log_density(self, X) -> np.ndarray:
        comp = self.component_log_density(np.atleast_2d(np.asarray(X, dtype=float)))
        return logsumexp(comp + self._log_pi, axis=1)

    def ancestral_sample(self, n: int, seed: int) -> DataMatrix:
        if n < 1:
            raise InvalidInputError("need n >= 1 samples")
        rng = np.random.default_rng(seed)
        comp = rng.choice(self.k, size=n, p=self.pi)
        u = rng.random((n, self.d))
        return DataMatrix.binary((u < self.theta[comp]).astype(float))


def weighted_log_likelihood(model, data: DataMatrix, weights: PointWeights) -> float:
    """sum_i w_i log h(x_i); the objective both EM fits maximize."""
    logd = model.log_density(data.values)
    mask = weights.w > 0
    return float(np.dot(weights.w[mask], logd[mask]))


def _kmeanspp_centers(X, w, k, rng) -> np.ndarray:
    """Weighted k-means++ seeding; returns k rows of X as centers."""
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]))
    probs = w / w.sum()
    idx = rng.choice(n, p=probs)
    centers[0] = X[idx]
    d2 = np.sum((X - centers[0]) ** 2, axis=1)
    for j in range(1, k):
        scores = probs * d2
        total = scores.sum()
        if total <= 0:
            idx = rng.choice(n, p=probs)
        else:
            idx = rng.choice(n, p=scores / total)
        centers[j] = X[idx]
        d2 = np.minimum(d2, np.sum((X - centers[j]) ** 2, axis=1))
    return centers


def _init_responsibilities(X, w, k, rng) -> np.ndarray:
    """Hard assignment to weighted k-means++ centers."""
    centers = _kmeanspp_centers(X, w, k, rng)
    d2 = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    resp = np.zeros((X.shape[0], k))
    resp[np.arange(X.shape[0]), np.argmin(d2, axis=1)] = 1.0
    return resp


def _check_weights(data: DataMatrix, weights: PointWeights):
    if weights.m != data.m:
        raise InvalidInputError(
            f"weights have length {weights.m} for {data.m} data rows"
        )


class _GmmFamily:
    """M-step and bookkeeping for the Gaussian family."""

    def __init__(self, X, w, cfg):
        self.X = X
        self.w = w
        self.cfg = cfg
        wmean = w @ X
        diff = X - wmean
        self.global_cov = _floor_covariance(
            (diff * w[:, None]).T @ diff, cfg.cov_floor
        )

    def m_step(self, resp, rng):
        X, w, cfg = self.X, self.w, self.cfg
        k = resp.shape[1]
        wr = resp * w[:, None]
        nk = wr.sum(axis=0)
        mu = np.empty((k, X.shape[1]))
        sigma = np.empty((k, X.shape[1], X.shape[1]))
        for j in range(k):
            if nk[j] < _DEGENERATE_MASS:
                logger.warning(
                    "component %d lost responsibility mass; re-seeding", j
                )
                idx = rng.choice(X.shape[0], p=w / w.sum())
                mu[j] = X[idx]
                sigma[j] = self.global_cov
                nk[j] = _DEGENERATE_MASS
                continue
            mu[j] = wr[:, j] @ X / nk[j]
            diff = X - mu[j]
            sigma[j] = _floor_covariance(
                (diff * wr[:, j][:, None]).T @ diff / nk[j], cfg.cov_floor
            )
        pi = nk / nk.sum()
        return GaussianMixture(pi, mu, sigma)


class _MobFamily:
    """M-step and bookkeeping for the Bernoulli family."""

    def __init__(self, X, w, cfg):
        self.X = X
        self.w = w
        self.cfg = cfg

    def m_step(self, resp, rng):
        X, w, cfg = self.X, self.w, self.cfg
        k = resp.shape[1]
        wr = resp * w[:, None]
        nk = wr.sum(axis=0)
        theta = np.empty((k, X.shape[1]))
        for j in range(k):
            if nk[j] < _DEGENERATE_MASS:
                logger.warning(
                    "component %d lost responsibility mass; re-seeding", j
                )
                idx = rng.choice(X.shape[0], p=w / w.sum())
                theta[j] = X[idx]
                nk[j] = _DEGENERATE_MASS
            else:
                theta[j] = wr[:, j] @ X / nk[j]
        theta = np.clip(theta, cfg.eps_theta, 1.0 - cfg.eps_theta)
        pi = nk / nk.sum()
        return BernoulliMixture(pi, theta)


def _em_fit(family, X, w, cfg, rng):
    """One restart of weighted EM; returns (model, weighted log-likelihood)."""
    resp = _init_responsibilities(X, w, cfg.k, rng)
    model = family.m_step(resp, rng)
    prev_ll = -np.inf
    for _ in range(cfg.max_iters):
        comp = model.component_log_density(X)
        joint = comp + model._log_pi
        lse = logsumexp(joint, axis=1)
        ll = float(w @ lse)
        resp = np.exp(joint - lse[:, None])
        model = family.m_step(resp, rng)
        if np.isfinite(prev_ll) and ll - prev_ll < cfg.rel_tol * max(1.0, abs(prev_ll)):
            prev_ll = ll
            break
        prev_ll = ll
    return model, prev_ll


def _fit_weighted(family_cls, data, weights, cfg):
    _check_weights(data, weights)
    if data.m < cfg.k:
        raise InvalidInputError(f"need at least k={cfg.k} rows, got {data.m}")
    keep = weights.w > 0  # drop zero-weight rows: they contribute nothing
    X = data.values[keep].astype(float)
    w = weights.w[keep]
    if X.shape[0] < cfg.k:
        raise InvalidInputError("fewer positively weighted rows than components")
    family = family_cls(X, w, cfg)
    best_model, best_ll = None, -np.inf
    for child in np.random.SeedSequence(cfg.seed).spawn(cfg.n_restarts):
        rng = np.random.default_rng(child)
        model, ll = _em_fit(family, X, w, cfg, rng)
        if ll > best_ll:
            best_model, best_ll = model, ll
    return best_model


def fit_gmm_weighted(
    data: DataMatrix, weights: PointWeights | None, cfg: EmConfig
) -> GaussianMixture:
    """Weighted-MLE Gaussian mixture; best of cfg.n_restarts EM restarts."""
    if not data.is_real():
        raise InvalidInputError("Gaussian mixtures need real-valued data")
    if weights is None:
        weights = PointWeights.uniform(data.m)
    return _fit_weighted(_GmmFamily, data, weights, cfg)


def fit_mob_weighted(
    data: DataMatrix, weights: PointWeights | None, cfg: EmConfig
) -> BernoulliMixture:
    """Weighted-MLE Bernoulli mixture; theta clipped after every M-step."""
    if not data.is_binary():
        raise InvalidInputError("Bernoulli mixtures need binary data")
    if weights is None:
        weights = PointWeights.uniform(data.m)
    return _fit_weighted(_MobFamily, data, weights, cfg)
