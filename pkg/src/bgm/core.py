"""Ensemble containers and the log-domain algebra for boosted densities.

All densities are stored and combined as logs: multiplicative ensembles sum
weighted member log-densities, additive ensembles combine members through a
max-shifted log-sum-exp.  A log-density of -inf is a valid value (zero
density) and propagates through evaluation instead of raising.

A "learner" is any object exposing

    log_density(X) -> (n,) array of log densities for an (n, d) batch
    d              -> input dimension

Mixture models, classifier-derived density ratios, and tabular oracles all
satisfy this protocol.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import InvalidInputError

BINARY = "binary"
REAL = "real"

_WEIGHT_SUM_TOL = 1e-12


def _as_matrix(values) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 2:
        raise InvalidInputError(f"expected a 2-D array, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class DataMatrix:
    """m x d matrix of observations with a per-column kind tag."""

    values: np.ndarray
    column_kind: tuple[str, ...]

    def __post_init__(self):
        arr = _as_matrix(self.values)
        object.__setattr__(self, "values", arr)
        m, d = arr.shape
        if m < 1 or d < 1:
            raise InvalidInputError(f"data must be at least 1x1, got {m}x{d}")
        kinds = tuple(self.column_kind)
        object.__setattr__(self, "column_kind", kinds)
        if len(kinds) != d:
            raise InvalidInputError(
                f"column_kind has {len(kinds)} entries for {d} columns"
            )
        if any(k not in (BINARY, REAL) for k in kinds):
            raise InvalidInputError(f"unknown column kind in {kinds}")
        if not np.all(np.isfinite(arr)):
            raise InvalidInputError("data contains non-finite entries")
        for j, kind in enumerate(kinds):
            if kind == BINARY:
                col = arr[:, j]
                if not np.all((col == 0.0) | (col == 1.0)):
                    raise InvalidInputError(
                        f"binary column {j} contains values outside {{0, 1}}"
                    )

    @classmethod
    def real(cls, values) -> "DataMatrix":
        arr = _as_matrix(values)
        return cls(arr, (REAL,) * arr.shape[1])

    @classmethod
    def binary(cls, values) -> "DataMatrix":
        arr = _as_matrix(values)
        return cls(arr, (BINARY,) * arr.shape[1])

    @property
    def m(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def is_binary(self) -> bool:
        return all(k == BINARY for k in self.column_kind)

    def is_real(self) -> bool:
        return all(k == REAL for k in self.column_kind)


@dataclass(frozen=True)
class PointWeights:
    """Normalized nonnegative per-example weights."""

    w: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.w, dtype=float)
        if arr.ndim != 1:
            raise InvalidInputError("weights must be a vector")
        if arr.size < 1:
            raise InvalidInputError("weights must be nonempty")
        if not np.all(np.isfinite(arr)) or np.any(arr < 0):
            raise InvalidInputError("weights must be finite and nonnegative")
        if abs(arr.sum() - 1.0) > _WEIGHT_SUM_TOL:
            raise InvalidInputError(f"weights sum to {arr.sum()!r}, expected 1")
        object.__setattr__(self, "w", arr)

    @classmethod
    def uniform(cls, m: int) -> "PointWeights":
        if m < 1:
            raise InvalidInputError("need at least one point")
        return cls(np.full(m, 1.0 / m))

    @classmethod
    def normalized(cls, raw) -> "PointWeights":
        arr = np.asarray(raw, dtype=float)
        total = arr.sum()
        if not np.isfinite(total) or total <= 0:
            raise InvalidInputError("raw weights must have positive finite mass")
        return cls(arr / total)

    @property
    def m(self) -> int:
        return self.w.size


GENERATOR = "generator"
DISCRIMINATOR = "discriminator"


@dataclass(frozen=True)
class EnsembleMember:
    """One intermediate model with its exponent weight."""

    learner: object
    alpha: float
    kind: str = GENERATOR

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise InvalidInputError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.kind not in (GENERATOR, DISCRIMINATOR):
            raise InvalidInputError(f"unknown member kind {self.kind!r}")


@dataclass(frozen=True)
class LogPartition:
    """Compact record of a partition-function estimate and its provenance."""

    estimate: float
    stderr: float
    sample_size: int
    method: str  # "importance_sampling" | "enumeration" | "grid"


def _eval_points(x, d: int):
    """Normalize a probe to an (n, d) batch; report whether to squeeze back."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 1:
        if arr.shape[0] != d:
            raise InvalidInputError(
                f"point has dimension {arr.shape[0]}, ensemble expects {d}"
            )
        return arr[None, :], True
    if arr.ndim == 2:
        if arr.shape[1] != d:
            raise InvalidInputError(
                f"batch has dimension {arr.shape[1]}, ensemble expects {d}"
            )
        return arr, False
    raise InvalidInputError(f"expected a point or batch, got shape {arr.shape}")


@dataclass(frozen=True)
class MultiplicativeEnsemble:
    """Ordered geometric product of members: log q~ = sum_t alpha_t log h_t.

    The ensemble is never normalized in place; callers obtain log Z from the
    inference or oracle routines and carry it separately.
    """

    members: tuple[EnsembleMember, ...]
    log_z: LogPartition | None = None

    def __post_init__(self):
        members = tuple(self.members)
        if not members:
            raise InvalidInputError("ensemble needs at least one member")
        if members[0].kind != GENERATOR:
            raise InvalidInputError("the base member must be a generator")
        object.__setattr__(self, "members", members)

    @property
    def d(self) -> int:
        return self.members[0].learner.d

    @property
    def n_rounds(self) -> int:
        return len(self.members) - 1

    def with_member(self, member: EnsembleMember) -> "MultiplicativeEnsemble":
        return MultiplicativeEnsemble(self.members + (member,), self.log_z)

    def with_log_z(self, log_z: LogPartition) -> "MultiplicativeEnsemble":
        return MultiplicativeEnsemble(self.members, log_z)

    def log_unnorm_density(self, x):
        """Log of the unnormalized ensemble density at a point or batch."""
        X, squeeze = _eval_points(x, self.d)
        total = np.zeros(X.shape[0])
        for mem in self.members:
            if mem.alpha == 0.0:
                continue  # 0 * (-inf) would poison the sum
            total = total + mem.alpha * mem.learner.log_density(X)
        return float(total[0]) if squeeze else total


@dataclass(frozen=True)
class AdditiveMember:
    learner: object
    alpha_hat: float

    def __post_init__(self):
        if self.alpha_hat < 0.0:
            raise InvalidInputError("alpha_hat must be nonnegative")


@dataclass(frozen=True)
class AdditiveEnsemble:
    """Convex mixture of member densities: q = sum_t alpha_hat_t h_t."""

    members: tuple[AdditiveMember, ...]

    def __post_init__(self):
        members = tuple(self.members)
        if not members:
            raise InvalidInputError("ensemble needs at least one member")
        total = sum(mem.alpha_hat for mem in members)
        if abs(total - 1.0) > _WEIGHT_SUM_TOL:
            raise InvalidInputError(f"member weights sum to {total!r}, expected 1")
        object.__setattr__(self, "members", members)

    @property
    def d(self) -> int:
        return self.members[0].learner.d

    def log_density(self, x):
        """Log mixture density via max-shifted log-sum-exp; -inf when all zero."""
        X, squeeze = _eval_points(x, self.d)
        terms = []
        for mem in self.members:
            if mem.alpha_hat == 0.0:
                continue
            terms.append(math.log(mem.alpha_hat) + mem.learner.log_density(X))
        stacked = np.stack(terms, axis=0)
        with np.errstate(over="ignore"):
            out = logsumexp(stacked, axis=0)
        return float(out[0]) if squeeze else out


def avg_nll(ens, data: DataMatrix, log_z: float = 0.0) -> float:
    """Average negative log-likelihood in nats per example.

    For multiplicative ensembles pass the log-partition estimate; additive
    and normalized models use log_z = 0.
    """
    if data.m < 1:
        raise InvalidInputError("empty data")
    if isinstance(ens, MultiplicativeEnsemble):
        logq = ens.log_unnorm_density(data.values)
    elif isinstance(ens, AdditiveEnsemble):
        logq = ens.log_density(data.values)
    else:  # bare learner
        logq = ens.log_density(data.values)
    return float(np.mean(log_z - logq))
