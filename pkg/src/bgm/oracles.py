"""Brute-force ground-truth engines for small domains.

Exact enumeration over {0,1}^d (d <= 20) and 2-D midpoint quadrature.  These
are verification tools for tests and acceptance checks, not inference paths;
they are deliberately simple and never used at benchmark scale.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .core import DataMatrix
from .errors import InvalidInputError

MAX_ENUM_DIM = 20
_CHUNK = 1 << 14


def all_binary_states(d: int) -> np.ndarray:
    """All 2^d binary states as a (2^d, d) float array, row i = bits of i.

    The first column is the most significant bit, matching state_index.
    """
    if d > MAX_ENUM_DIM:
        raise InvalidInputError(f"enumeration refused for d={d} > {MAX_ENUM_DIM}")
    idx = np.arange(1 << d, dtype=np.int64)
    shifts = np.arange(d - 1, -1, -1, dtype=np.int64)
    return ((idx[:, None] >> shifts[None, :]) & 1).astype(float)


def state_index(X) -> np.ndarray:
    """Map binary rows to their state indices (inverse of all_binary_states)."""
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    d = arr.shape[1]
    if d > MAX_ENUM_DIM:
        raise InvalidInputError(f"enumeration refused for d={d} > {MAX_ENUM_DIM}")
    weights = 1 << np.arange(d - 1, -1, -1, dtype=np.int64)
    return np.rint(arr).astype(np.int64) @ weights


@dataclass(frozen=True)
class TabularDensity:
    """Explicit probability table over {0,1}^d; the stand-in for a true P."""

    d: int
    probs: np.ndarray

    def __post_init__(self):
        if self.d > MAX_ENUM_DIM:
            raise InvalidInputError(f"d={self.d} exceeds the enumeration guard")
        p = np.asarray(self.probs, dtype=float)
        if p.shape != (1 << self.d,):
            raise InvalidInputError(
                f"probs must have length 2^{self.d}, got {p.shape}"
            )
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise InvalidInputError("probs must be finite and nonnegative")
        if abs(p.sum() - 1.0) > 1e-12:
            raise InvalidInputError(f"probs sum to {p.sum()!r}, expected 1")
        object.__setattr__(self, "probs", p)

    @classmethod
    def normalized(cls, d: int, raw) -> "TabularDensity":
        raw = np.asarray(raw, dtype=float)
        return cls(d, raw / raw.sum())

    @property
    def log_probs(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.probs)

    def log_density(self, X) -> np.ndarray:
        return self.log_probs[state_index(X)]

    def sample(self, n: int, seed: int) -> DataMatrix:
        rng = np.random.default_rng(seed)
        idx = rng.choice(self.probs.size, size=n, p=self.probs)
        return DataMatrix.binary(all_binary_states(self.d)[idx])


@dataclass(frozen=True)
class TabularLogDensity:
    """Unnormalized log-density table over {0,1}^d, usable as a learner.

    Holds arbitrary log values (e.g. an exact density ratio) so that oracle
    intermediate models can be injected into ensembles.
    """

    d: int
    log_values: np.ndarray

    def __post_init__(self):
        lv = np.asarray(self.log_values, dtype=float)
        if lv.shape != (1 << self.d,):
            raise InvalidInputError(
                f"log_values must have length 2^{self.d}, got {lv.shape}"
            )
        if np.any(np.isnan(lv)):
            raise InvalidInputError("log_values must not contain NaN")
        object.__setattr__(self, "log_values", lv)

    def log_density(self, X) -> np.ndarray:
        return self.log_values[state_index(X)]


def enumerate_log_partition(ens, d: int | None = None) -> float:
    """log sum over {0,1}^d of the unnormalized ensemble density.

    Streams the state space in chunks through a max-shifted log-sum-exp so
    the result is stable to within ~1e-12 of any summation order.
    """
    if d is None:
        d = ens.d
    if d > MAX_ENUM_DIM:
        raise InvalidInputError(f"enumeration refused for d={d} > {MAX_ENUM_DIM}")
    n_states = 1 << d
    chunk_lses = []
    for start in range(0, n_states, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, n_states), dtype=np.int64)
        shifts = np.arange(d - 1, -1, -1, dtype=np.int64)
        states = ((idx[:, None] >> shifts[None, :]) & 1).astype(float)
        logq = ens.log_unnorm_density(states)
        chunk_lses.append(logsumexp(logq))
    return float(logsumexp(np.array(chunk_lses)))


def ensemble_log_probs(ens, d: int | None = None) -> np.ndarray:
    """Exact normalized log probabilities of the ensemble on {0,1}^d."""
    if d is None:
        d = ens.d
    states = all_binary_states(d)
    logq = ens.log_unnorm_density(states)
    return logq - logsumexp(logq)


def exact_kl(p: TabularDensity, ens) -> float:
    """KL(P || normalized ensemble) in nats, by exhaustive enumeration.

    Zero-probability states of P contribute nothing; a state with p > 0 and
    zero ensemble density makes the divergence +inf.
    """
    logq = ensemble_log_probs(ens, p.d)
    mask = p.probs > 0
    if np.any(np.isneginf(logq[mask])):
        return float("inf")
    terms = p.probs[mask] * (p.log_probs[mask] - logq[mask])
    return float(terms.sum())


def grid_quadrature_2d(log_density_fn, bounds, resolution) -> float:
    """Midpoint-rule integral of exp(log density) over a rectangle.

    bounds is ((x_lo, x_hi), (y_lo, y_hi)); resolution is the number of cells
    per axis (scalar or pair).  Accuracy is the caller's responsibility via
    the resolution choice.
    """
    (x_lo, x_hi), (y_lo, y_hi) = bounds
    if np.isscalar(resolution):
        rx = ry = int(resolution)
    else:
        rx, ry = (int(r) for r in resolution)
    xs = x_lo + (np.arange(rx) + 0.5) * (x_hi - x_lo) / rx
    ys = y_lo + (np.arange(ry) + 0.5) * (y_hi - y_lo) / ry
    cell = (x_hi - x_lo) / rx * (y_hi - y_lo) / ry
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    logd = np.asarray(log_density_fn(pts), dtype=float)
    with np.errstate(over="ignore"):
        return float(np.exp(logsumexp(logd)) * cell)
