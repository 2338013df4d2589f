"""Binary classifiers exposing density ratios through f-divergence bounds.

A small fully-connected network with ReLU hidden layers produces a raw score
v(x).  An f-divergence spec maps v to the classifier output r = g(v), to the
Fenchel conjugate term f*(r), and to the implied log density ratio.  Training
maximizes the variational bound

    mean over data of r(x)  -  mean over model samples of f*(r(x))

with Adam; for the cross-entropy instance this is exactly the (negative)
binary cross-entropy objective.  Everything runs in double precision and a
single thread so trajectories are bitwise reproducible from the seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import DataMatrix
from .errors import InvalidInputError, TrainingFailureError

NCE = "nce"
HD = "hd"


@dataclass(frozen=True)
class FDivSpec:
    """Descriptor of one f-divergence: generator, conjugate, and ratio maps.

    output_map sends the raw score into dom f*; ratio_map inverts f'; the
    fused log_ratio_map computes log [f']^{-1}(output_map(v)) directly from v
    without the intermediate exponentials.
    """

    name: str
    f: Callable[[np.ndarray], np.ndarray]
    f_prime: Callable[[np.ndarray], np.ndarray]
    f_star: Callable[[np.ndarray], np.ndarray]
    output_map: Callable[[np.ndarray], np.ndarray]
    ratio_map: Callable[[np.ndarray], np.ndarray]
    log_ratio_map: Callable[[np.ndarray], np.ndarray]


def _nce_f(u):
    u = np.asarray(u, dtype=float)
    return u * np.log(u) - (1.0 + u) * np.log1p(u)


def _nce_f_star(t):
    t = np.asarray(t, dtype=float)
    # -log(1 - e^t) on t < 0
    return -np.log(-np.expm1(t))


NCE_SPEC = FDivSpec(
    name=NCE,
    f=_nce_f,
    f_prime=lambda u: np.log(u) - np.log1p(u),
    f_star=_nce_f_star,
    output_map=lambda v: -np.logaddexp(0.0, -v),  # log sigmoid(v)
    ratio_map=lambda r: 1.0 / np.expm1(-r),  # e^r / (1 - e^r)
    log_ratio_map=lambda v: np.asarray(v, dtype=float),
)

HD_SPEC = FDivSpec(
    name=HD,
    f=lambda u: (np.sqrt(u) - 1.0) ** 2,
    f_prime=lambda u: 1.0 - 1.0 / np.sqrt(u),
    f_star=lambda t: t / (1.0 - t),  # on t < 1
    output_map=lambda v: -np.expm1(-v),  # 1 - e^{-v} < 1 for finite v
    ratio_map=lambda r: (1.0 - r) ** -2,
    log_ratio_map=lambda v: 2.0 * np.asarray(v, dtype=float),
)

_SPECS = {NCE: NCE_SPEC, HD: HD_SPEC}


def get_fdiv(name: str) -> FDivSpec:
    try:
        return _SPECS[name.lower()]
    except KeyError:
        raise InvalidInputError(f"unknown f-divergence {name!r}") from None


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    batch_size: int = 100
    learning_rate: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    validation_fraction: float = 0.1
    seed: int = 0
    hidden: tuple[int, ...] = (100, 100)
    head_scale: float = 0.0  # 0: score head starts uninformative (v = 0)

    def __post_init__(self):
        if self.epochs < 1:
            raise InvalidInputError("epochs must be >= 1")
        if not 0.0 < self.validation_fraction < 1.0:
            raise InvalidInputError("validation_fraction must lie in (0, 1)")
        if self.batch_size < 1:
            raise InvalidInputError("batch_size must be >= 1")


class MlpClassifier:
    """ReLU MLP scoring function v(x); float64 parameters throughout.

    gamma records the negative/positive pool-size ratio from training and
    feeds the class-imbalance correction of the implied density ratio.
    """

    def __init__(self, weights, biases, gamma: float = 1.0):
        self.weights = [np.asarray(W, dtype=float) for W in weights]
        self.biases = [np.asarray(b, dtype=float) for b in biases]
        if self.weights[-1].shape[1] != 1:
            raise InvalidInputError("output layer must produce a scalar score")
        self.gamma = float(gamma)

    @classmethod
    def initialize(cls, d, hidden=(100, 100), seed=0, head_scale=0.0):
        """He-initialized hidden layers; the score head starts at head_scale.

        A zero head makes the initial classifier exactly uninformative
        (v = 0, implied ratio 1), which is the natural starting point for a
        ratio estimator.
        """
        rng = np.random.default_rng(seed)
        dims = [d, *hidden, 1]
        weights, biases = [], []
        for i in range(len(dims) - 1):
            fan_in = dims[i]
            scale = math.sqrt(2.0 / fan_in)
            if i == len(dims) - 2:
                scale = head_scale
            weights.append(scale * rng.standard_normal((dims[i], dims[i + 1])))
            biases.append(np.zeros(dims[i + 1]))
        return cls(weights, biases)

    @property
    def layer_dims(self) -> list[int]:
        return [self.weights[0].shape[0]] + [W.shape[1] for W in self.weights]

    @property
    def d(self) -> int:
        return self.weights[0].shape[0]

    def copy(self) -> "MlpClassifier":
        return MlpClassifier(
            [W.copy() for W in self.weights],
            [b.copy() for b in self.biases],
            self.gamma,
        )

    def _forward(self, X):
        """Forward pass keeping pre-activations for backprop."""
        acts = [np.asarray(X, dtype=float)]
        zs = []
        h = acts[0]
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ W + b
            zs.append(z)
            h = np.maximum(z, 0.0) if i < len(self.weights) - 1 else z
            acts.append(h)
        return acts, zs

    def raw_score(self, X) -> np.ndarray:
        """v(x) for an (n, d) batch."""
        acts, _ = self._forward(X)
        return acts[-1][:, 0]

    def _backprop(self, acts, zs, dv):
        """Gradients of sum_i dv_i * v(x_i) w.r.t. all parameters."""
        grads_W = [None] * len(self.weights)
        grads_b = [None] * len(self.biases)
        delta = np.asarray(dv, dtype=float)[:, None]
        for i in range(len(self.weights) - 1, -1, -1):
            grads_W[i] = acts[i].T @ delta
            grads_b[i] = delta.sum(axis=0)
            if i > 0:
                delta = (delta @ self.weights[i].T) * (zs[i - 1] > 0)
        return grads_W, grads_b


# Per-objective value and d(value)/dv terms.  Positive rows carry weight
# 1/n_pos, negative rows -1/n_neg, so the caller can backprop one combined
# batch.  The NCE entry doubles as the plain cross-entropy objective.
def _nce_terms(v_pos, v_neg):
    val = float(
        np.mean(-np.logaddexp(0.0, -v_pos)) - np.mean(np.logaddexp(0.0, v_neg))
    )
    sig_pos = 1.0 / (1.0 + np.exp(-v_pos))
    sig_neg = 1.0 / (1.0 + np.exp(-v_neg))
    return val, (1.0 - sig_pos) / v_pos.size, -sig_neg / v_neg.size


def _hd_terms(v_pos, v_neg):
    with np.errstate(over="raise"):
        try:
            e_neg = np.exp(-v_pos)
            e_pos = np.exp(v_neg)
        except FloatingPointError:
            return float("nan"), None, None
    val = float(np.mean(-np.expm1(-v_pos)) - np.mean(np.expm1(v_neg)))
    return val, e_neg / v_pos.size, -e_pos / v_neg.size


_OBJECTIVES = {NCE: _nce_terms, HD: _hd_terms}


def objective_value(name: str, v_pos, v_neg) -> float:
    val, _, _ = _OBJECTIVES[name](np.asarray(v_pos, float), np.asarray(v_neg, float))
    return val


class _Adam:
    def __init__(self, params, cfg: TrainConfig):
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0
        self.cfg = cfg

    def ascend(self, params, grads):
        cfg = self.cfg
        self.t += 1
        lr_t = cfg.learning_rate * math.sqrt(
            1.0 - cfg.beta2**self.t
        ) / (1.0 - cfg.beta1**self.t)
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m += (1.0 - cfg.beta1) * (g - m)
            v += (1.0 - cfg.beta2) * (g * g - v)
            p += lr_t * m / (np.sqrt(v) + cfg.adam_eps)


def _split_validation(n, fraction, rng):
    n_val = min(n - 1, max(1, int(round(fraction * n))))
    perm = rng.permutation(n)
    return perm[n_val:], perm[:n_val]


def _train(pos: DataMatrix, neg: DataMatrix, objective: str, cfg: TrainConfig):
    if pos.m < 2 or neg.m < 2:
        raise InvalidInputError("need at least two rows in each pool")
    if pos.d != neg.d:
        raise InvalidInputError("positive and negative pools differ in dimension")
    terms = _OBJECTIVES[objective]

    ss = np.random.SeedSequence(cfg.seed).spawn(3)
    split_rng = np.random.default_rng(ss[0])
    shuffle_rng = np.random.default_rng(ss[2])

    pos_fit, pos_val = _split_validation(pos.m, cfg.validation_fraction, split_rng)
    neg_fit, neg_val = _split_validation(neg.m, cfg.validation_fraction, split_rng)
    Xp, Xp_val = pos.values[pos_fit], pos.values[pos_val]
    Xn, Xn_val = neg.values[neg_fit], neg.values[neg_val]

    clf = MlpClassifier.initialize(
        pos.d,
        hidden=cfg.hidden,
        seed=ss[1].generate_state(1)[0],
        head_scale=cfg.head_scale,
    )
    params = clf.weights + clf.biases
    opt = _Adam(params, cfg)

    def validation_objective():
        val, _, _ = terms(clf.raw_score(Xp_val), clf.raw_score(Xn_val))
        return val

    best_obj = validation_objective()
    best = clf.copy()

    n_batches = min(
        -(-Xp.shape[0] // cfg.batch_size), -(-Xn.shape[0] // cfg.batch_size)
    )
    for epoch in range(1, cfg.epochs + 1):
        perm_p = shuffle_rng.permutation(Xp.shape[0])
        perm_n = shuffle_rng.permutation(Xn.shape[0])
        for b in range(n_batches):
            bp = Xp[perm_p[b * cfg.batch_size : (b + 1) * cfg.batch_size]]
            bn = Xn[perm_n[b * cfg.batch_size : (b + 1) * cfg.batch_size]]
            X = np.vstack([bp, bn])
            acts, zs = clf._forward(X)
            v = acts[-1][:, 0]
            val, g_pos, g_neg = terms(v[: bp.shape[0]], v[bp.shape[0] :])
            if not np.isfinite(val):
                raise TrainingFailureError(
                    "objective became non-finite", epoch=epoch
                )
            dv = np.concatenate([g_pos, g_neg])
            gW, gb = clf._backprop(acts, zs, dv)
            opt.ascend(params, gW + gb)
        obj = validation_objective()
        if not np.isfinite(obj):
            raise TrainingFailureError(
                "validation objective became non-finite", epoch=epoch
            )
        if obj > best_obj:
            best_obj = obj
            best = clf.copy()

    best.gamma = neg.m / pos.m
    return best


def train_fdiv_classifier(
    pos: DataMatrix, neg: DataMatrix, fdiv: FDivSpec, cfg: TrainConfig
) -> MlpClassifier:
    """Maximize the variational f-divergence bound between the two pools.

    Returns the parameter snapshot with the best validation objective seen
    during training (the initial parameters count as a candidate).
    """
    return _train(pos, neg, fdiv.name, cfg)


def train_ce_classifier(
    pos: DataMatrix, neg: DataMatrix, cfg: TrainConfig
) -> MlpClassifier:
    """Maximize mean log c on pos plus mean log(1-c) on neg, c = sigmoid(v)."""
    return _train(pos, neg, NCE, cfg)


def log_density_ratio(clf: MlpClassifier, fdiv: FDivSpec, gamma: float, x):
    """log h(x) implied by the classifier under the given f-divergence.

    The logistic case uses the raw score directly (log[c/(1-c)] = v) plus the
    class-imbalance correction log gamma; the Hellinger case is -2 log(1-r).
    """
    if gamma <= 0:
        raise InvalidInputError("gamma must be positive")
    arr = np.asarray(x, dtype=float)
    squeeze = arr.ndim == 1
    v = clf.raw_score(np.atleast_2d(arr))
    out = fdiv.log_ratio_map(v)
    if fdiv.name == NCE:
        out = out + math.log(gamma)
    return float(out[0]) if squeeze else out


@dataclass(frozen=True)
class DensityRatioLearner:
    """Ensemble-member adapter around a trained classifier."""

    clf: MlpClassifier
    fdiv: FDivSpec
    gamma: float = 1.0

    @property
    def d(self) -> int:
        return self.clf.d

    def log_density(self, X) -> np.ndarray:
        return log_density_ratio(self.clf, self.fdiv, self.gamma, np.atleast_2d(X))


def gradient_check(
    clf: MlpClassifier, objective, pos, neg, step: float = 1e-5
) -> float:
    """Max relative error of analytic vs central-finite-difference gradients.

    objective is "ce" or an FDivSpec (or its name).  Use a small probe batch
    in double precision; the return value should be < 1e-4 for a correct
    backward pass.
    """
    if isinstance(objective, FDivSpec):
        name = objective.name
    else:
        name = str(objective).lower()
        if name == "ce":
            name = NCE
    terms = _OBJECTIVES[name]
    Xp = np.asarray(pos, dtype=float)
    Xn = np.asarray(neg, dtype=float)

    acts, zs = clf._forward(np.vstack([Xp, Xn]))
    v = acts[-1][:, 0]
    _, g_pos, g_neg = terms(v[: Xp.shape[0]], v[Xp.shape[0] :])
    gW, gb = clf._backprop(acts, zs, np.concatenate([g_pos, g_neg]))
    analytic = gW + gb

    def value():
        val, _, _ = terms(clf.raw_score(Xp), clf.raw_score(Xn))
        return val

    max_rel = 0.0
    for p, g in zip(clf.weights + clf.biases, analytic):
        flat_p = p.reshape(-1)
        flat_g = g.reshape(-1)
        for i in range(flat_p.size):
            orig = flat_p[i]
            flat_p[i] = orig + step
            up = value()
            flat_p[i] = orig - step
            down = value()
            flat_p[i] = orig
            numeric = (up - down) / (2.0 * step)
            denom = max(abs(flat_g[i]) + abs(numeric), 1e-8)
            max_rel = max(max_rel, abs(flat_g[i] - numeric) / denom)
    return max_rel
