"""Config-driven experiment runner: data ingestion, boosting runs,
evaluation, sampling, and artifact export.

An experiment is one JSON document; the command line only selects the
config file, the output directory, and optional seed overrides, so every
run is fully declarative and hashable.  Outputs: metrics.json (aggregate
and per-seed results, byte-identical across reruns of the same config),
run_info.json (wall-clock and timestamps, kept separate so metrics stay
deterministic), per-seed round_<t>.json and model files, and optional
grid.csv / samples.csv artifacts.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .boosting import (
    NegativeSamplerConfig,
    RoundSpec,
    check_conditions_additive,
    check_conditions_multiplicative,
    run_additive,
    run_discbgm,
    run_genbgm,
    run_hybrid,
)
from .classifiers import TrainConfig
from .core import (
    AdditiveEnsemble,
    BINARY,
    DataMatrix,
    EnsembleMember,
    LogPartition,
    MultiplicativeEnsemble,
    avg_nll,
)
from .errors import BgmError, InvalidInputError, ParseError
from .inference import (
    GAUSSIAN_RW,
    MhConfig,
    estimate_log_partition,
    eval_one_out_accuracy,
    mh_sample,
)
from .mixtures import EmConfig, GaussianMixture, fit_gmm_weighted, fit_mob_weighted
from .oracles import enumerate_log_partition, grid_quadrature_2d
from .serialize import ensemble_from_dict, ensemble_to_dict

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1

TASKS = (
    "fit",
    "eval-nll",
    "eval-classify",
    "sample",
    "synthetic-mog",
    "weights-sweep",
    "check-conditions",
)

CSV01 = "csv01"
CSV_REAL = "csv_real"


def load_dataset(path, format: str) -> DataMatrix:
    """Parse a comma-separated dataset file, one example per line.

    csv01 accepts only 0/1 tokens; csv_real accepts finite decimal reals.
    Malformed input reports the offending line number.
    """
    if format not in (CSV01, CSV_REAL):
        raise InvalidInputError(f"unknown dataset format {format!r}")
    rows = []
    width = None
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            tokens = line.split(",")
            if width is None:
                width = len(tokens)
            elif len(tokens) != width:
                raise ParseError(
                    f"expected {width} columns, found {len(tokens)}", line=lineno
                )
            if format == CSV01:
                row = []
                for tok in tokens:
                    tok = tok.strip()
                    if tok == "0":
                        row.append(0.0)
                    elif tok == "1":
                        row.append(1.0)
                    else:
                        raise ParseError(
                            f"token {tok!r} is not 0 or 1", line=lineno
                        )
            else:
                try:
                    row = [float(tok) for tok in tokens]
                except ValueError:
                    raise ParseError(
                        f"non-numeric token in {line!r}", line=lineno
                    ) from None
                if not all(math.isfinite(v) for v in row):
                    raise ParseError("non-finite value", line=lineno)
            rows.append(row)
    if not rows:
        raise ParseError("dataset file is empty", line=0)
    values = np.asarray(rows, dtype=float)
    kind = BINARY if format == CSV01 else "real"
    matrix = DataMatrix(values, (kind,) * values.shape[1])
    logger.info("loaded %s: %d rows x %d columns", path, matrix.m, matrix.d)
    return matrix


def make_four_gaussian_target(center: float = 3.0) -> GaussianMixture:
    """The synthetic 2-D target: four unit-covariance Gaussians placed
    symmetrically at (+-center, +-center), equally weighted."""
    c = float(center)
    centers = [[c, c], [c, -c], [-c, c], [-c, -c]]
    return GaussianMixture([0.25] * 4, centers, [np.eye(2)] * 4)


# --------------------------------------------------------------------------
# configuration


def _em_from_dict(doc: dict | None, default_k: int = 2) -> EmConfig:
    doc = dict(doc or {})
    doc.setdefault("k", default_k)
    return EmConfig(**doc)


def _train_from_dict(doc: dict | None) -> TrainConfig:
    doc = dict(doc or {})
    if "hidden" in doc:
        doc["hidden"] = tuple(doc["hidden"])
    return TrainConfig(**doc)


def _mh_from_dict(doc: dict | None) -> MhConfig:
    return MhConfig(**dict(doc or {}))


def _round_from_dict(doc: dict) -> RoundSpec:
    kind = doc.get("kind")
    if kind == "generative":
        return RoundSpec(
            kind=kind,
            beta=doc.get("beta", 1.0),
            learner_cfg=_em_from_dict(doc["em"]) if "em" in doc else None,
            alpha=doc.get("alpha"),
        )
    if kind == "discriminative":
        return RoundSpec(
            kind=kind,
            fdiv=doc.get("fdiv", "nce"),
            learner_cfg=_train_from_dict(doc.get("train")),
            alpha=doc.get("alpha"),
        )
    raise InvalidInputError(f"unknown round kind {kind!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated, resolved form of the experiment JSON document."""

    task: str
    raw: dict
    seeds: tuple[int, ...]
    out_dir: str

    def __post_init__(self):
        if self.task not in TASKS:
            raise InvalidInputError(f"unknown task {self.task!r}")
        if not self.seeds:
            raise InvalidInputError("seeds must be nonempty")

    @property
    def config_hash(self) -> str:
        canon = dict(self.raw)
        canon["task"] = self.task
        canon["seeds"] = list(self.seeds)
        blob = json.dumps(canon, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    @classmethod
    def from_dict(cls, doc: dict, task=None, out_dir=None, seeds=None):
        doc = dict(doc)
        task = task or doc.get("task")
        if task is None:
            raise InvalidInputError("no task given in config or command line")
        if doc.get("task") not in (None, task):
            raise InvalidInputError(
                f"config task {doc['task']!r} conflicts with requested {task!r}"
            )
        seeds = tuple(int(s) for s in (seeds or doc.get("seeds", [0])))
        out = str(out_dir or doc.get("out_dir", "out"))
        cfg = cls(task=task, raw=doc, seeds=seeds, out_dir=out)
        cfg.validate_inputs()
        return cfg

    # -- config accessors -------------------------------------------------

    def dataset_path(self, split: str, required=True):
        ds = self.raw.get("dataset", {})
        path = ds.get(split)
        if path is None and required:
            raise InvalidInputError(f"dataset.{split} missing from config")
        return path

    def dataset_format(self) -> str:
        return self.raw.get("dataset", {}).get("format", CSV01)

    def validate_inputs(self):
        ds = self.raw.get("dataset", {})
        for split in ("train", "valid", "test"):
            path = ds.get(split)
            if path is not None and not Path(path).exists():
                raise InvalidInputError(f"dataset.{split} file not found: {path}")
        model = self.raw.get("model_path")
        if model is not None and not Path(model).exists():
            raise InvalidInputError(f"model_path file not found: {model}")

    def base_em(self) -> EmConfig:
        base = self.raw.get("base", {})
        return _em_from_dict(base.get("em"), default_k=base.get("k", 2))

    def base_family(self) -> str:
        return self.raw.get("base", {}).get("family", "mob")

    def method(self) -> str:
        return self.raw.get("method", "genbgm")

    def heuristic(self) -> str:
        return self.raw.get("heuristic", "unity")

    def rounds(self) -> list[RoundSpec]:
        return [_round_from_dict(r) for r in self.raw.get("rounds", [])]

    def neg_cfg(self) -> NegativeSamplerConfig:
        doc = self.raw.get("negatives", {})
        return NegativeSamplerConfig(
            n_negatives=doc.get("k"), mh=_mh_from_dict(doc.get("mh"))
        )

    def logz_spec(self) -> dict:
        doc = dict(self.raw.get("logz", {}))
        doc.setdefault("method", "is")
        doc.setdefault("n", 1_000_000)
        doc.setdefault("proposal", "base")
        return doc


# --------------------------------------------------------------------------
# partition function plumbing


def _grid_bounds(cfg: ExperimentConfig):
    c = float(cfg.raw.get("synthetic", {}).get("center", 3.0))
    lim = c + 8.0
    return ((-lim, lim), (-lim, lim))


def resolve_log_z(ens, cfg: ExperimentConfig, seed: int, bounds=None):
    """Log-partition estimate for a multiplicative ensemble per config."""
    spec = cfg.logz_spec()
    method = spec["method"]
    if method == "enumerate":
        value = enumerate_log_partition(ens)
        return LogPartition(value, 0.0, 1 << ens.d, "enumeration"), {
            "log_z": value,
            "method": "enumeration",
        }
    if method == "grid":
        bounds = bounds or _grid_bounds(cfg)
        res = int(spec.get("resolution", 512))
        value = float(np.log(grid_quadrature_2d(ens.log_unnorm_density, bounds, res)))
        return LogPartition(value, 0.0, res * res, "grid"), {
            "log_z": value,
            "method": "grid",
            "resolution": res,
        }
    if method == "is":
        if spec["proposal"] != "base":
            raise InvalidInputError(
                f"unknown importance proposal {spec['proposal']!r}"
            )
        est = estimate_log_partition(
            ens, ens.members[0].learner, int(spec["n"]), seed
        )
        return LogPartition(est.log_z, est.stderr, est.n, "importance_sampling"), {
            "log_z": est.log_z,
            "stderr": est.stderr,
            "ess": est.ess,
            "n": est.n,
            "method": "importance_sampling",
        }
    raise InvalidInputError(f"unknown logz method {method!r}")


def ensemble_test_nll(ens, test: DataMatrix, cfg, seed, bounds=None):
    """Test NLL with the appropriate normalizer; additive models need none."""
    if isinstance(ens, AdditiveEnsemble):
        return avg_nll(ens, test, 0.0), {"log_z": 0.0, "method": "normalized"}
    log_z, info = resolve_log_z(ens, cfg, seed, bounds)
    return avg_nll(ens, test, log_z.estimate), info


# --------------------------------------------------------------------------
# output plumbing


def _write_json(path: Path, doc: dict):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(doc, handle, indent=2, sort_keys=True)
        handle.write("\n")


def export_density_grid(ens, bounds, resolution, path, config_hash="") -> None:
    """Write (x, y, log unnormalized density) rows over a regular grid plus
    a sidecar JSON carrying the grid-quadrature log-normalizer."""
    if ens.d != 2:
        raise InvalidInputError("density grids are only defined for 2-D models")
    (x_lo, x_hi), (y_lo, y_hi) = bounds
    if np.isscalar(resolution):
        rx = ry = int(resolution)
    else:
        rx, ry = (int(r) for r in resolution)
    xs = x_lo + (np.arange(rx) + 0.5) * (x_hi - x_lo) / rx
    ys = y_lo + (np.arange(ry) + 0.5) * (y_hi - y_lo) / ry
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    logd = ens.log_unnorm_density(pts)

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as handle:
        if config_hash:
            handle.write(f"# config_hash={config_hash}\n")
        handle.write("x,y,log_unnorm_density\n")
        for (x, y), val in zip(pts, logd):
            handle.write(f"{float(x)!r},{float(y)!r},{float(val)!r}\n")

    from scipy.special import logsumexp

    cell = (x_hi - x_lo) / rx * (y_hi - y_lo) / ry
    log_z = float(logsumexp(logd) + math.log(cell))
    _write_json(
        path.with_suffix(".meta.json"),
        {
            "log_z": log_z,
            "bounds": [[x_lo, x_hi], [y_lo, y_hi]],
            "resolution": [rx, ry],
            "config_hash": config_hash,
        },
    )


def _write_samples_csv(path: Path, data: DataMatrix, config_hash: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    binary = data.is_binary()
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(f"# config_hash={config_hash}\n")
        for row in data.values:
            if binary:
                handle.write(",".join(str(int(v)) for v in row))
            else:
                handle.write(",".join(repr(float(v)) for v in row))
            handle.write("\n")


# --------------------------------------------------------------------------
# per-task seed handlers


def _seed_channels(seed: int, *labels):
    """Independent integer seeds for the named channels of one run."""
    children = np.random.SeedSequence([int(seed), 0xB005]).spawn(len(labels))
    return {
        label: int(child.generate_state(1)[0])
        for label, child in zip(labels, children)
    }


def _fit_base_model(data: DataMatrix, cfg: ExperimentConfig, seed: int):
    em = replace(cfg.base_em(), seed=seed)
    if data.is_binary():
        return fit_mob_weighted(data, None, em)
    return fit_gmm_weighted(data, None, em)


def _run_method(method, data, cfg, seed, round_log):
    base_em = cfg.base_em()
    rounds = cfg.rounds()
    if method == "additive":
        return run_additive(
            data,
            base_em,
            rounds,
            seed=seed,
            round_log=round_log,
        )
    if method == "genbgm":
        return run_genbgm(
            data,
            base_em,
            rounds,
            heuristic=cfg.heuristic(),
            seed=seed,
            round_log=round_log,
            base_alpha=cfg.raw.get("base_alpha", 1.0),
        )
    if method == "discbgm":
        return run_discbgm(
            data,
            base_em,
            rounds,
            heuristic=cfg.heuristic(),
            neg_cfg=cfg.neg_cfg(),
            seed=seed,
            round_log=round_log,
        )
    if method == "hybrid":
        return run_hybrid(
            data,
            base_em,
            rounds,
            heuristic=cfg.heuristic(),
            neg_cfg=cfg.neg_cfg(),
            seed=seed,
            round_log=round_log,
        )
    raise InvalidInputError(f"unknown method {method!r}")


def _task_fit(cfg: ExperimentConfig, seed: int, seed_dir: Path):
    data = load_dataset(cfg.dataset_path("train"), cfg.dataset_format())
    round_log = []
    ens = _run_method(cfg.method(), data, cfg, seed, round_log)
    doc = ensemble_to_dict(ens)
    doc["config_hash"] = cfg.config_hash
    doc["schema_version"] = SCHEMA_VERSION
    _write_json(seed_dir / "model.json", doc)
    for record in round_log:
        _write_json(
            seed_dir / f"round_{record['round']}.json",
            {**record, "config_hash": cfg.config_hash},
        )
    train_nll, logz_info = ensemble_test_nll(ens, data, cfg, seed)
    return {"train_nll": train_nll, "log_z": logz_info, "rounds": round_log}


def _load_model(cfg: ExperimentConfig):
    path = cfg.raw.get("model_path")
    if path is None:
        raise InvalidInputError("this task needs model_path in the config")
    with open(path, "r", encoding="utf-8") as handle:
        return ensemble_from_dict(json.load(handle))


def _task_eval_nll(cfg: ExperimentConfig, seed: int, seed_dir: Path):
    ens = _load_model(cfg)
    test = load_dataset(cfg.dataset_path("test"), cfg.dataset_format())
    nll, logz_info = ensemble_test_nll(ens, test, cfg, seed)
    return {"test_nll": nll, "log_z": logz_info, "n_test": test.m}


def _task_eval_classify(cfg: ExperimentConfig, seed: int, seed_dir: Path):
    ens = _load_model(cfg)
    test = load_dataset(cfg.dataset_path("test"), cfg.dataset_format())
    result = eval_one_out_accuracy(ens, test)
    return dict(result)


def _task_sample(cfg: ExperimentConfig, seed: int, seed_dir: Path):
    ens = _load_model(cfg)
    spec = cfg.raw.get("sample", {})
    n = int(spec.get("n", 100))
    mh = replace(_mh_from_dict(spec.get("mh")), seed=seed)
    n_per_chain = -(-n // mh.n_chains)
    samples, diag = mh_sample(ens, mh, n_per_chain, return_diagnostics=True)
    samples = DataMatrix(samples.values[:n], samples.column_kind)
    _write_samples_csv(seed_dir / "samples.csv", samples, cfg.config_hash)
    return {"n_samples": n, "mh_diagnostics": diag}


def _task_check_conditions(cfg: ExperimentConfig, seed: int, seed_dir: Path):
    """Estimate the per-member improvement conditions of a saved model
    against a data sample."""
    ens = _load_model(cfg)
    data = load_dataset(cfg.dataset_path("train"), cfg.dataset_format())
    spec = cfg.raw.get("conditions", {})
    n_q = int(spec.get("n_model_samples", 10_000))
    mh = replace(_mh_from_dict(spec.get("mh")), seed=seed)
    reports = []
    if isinstance(ens, AdditiveEnsemble):
        for t in range(1, len(ens.members)):
            total = sum(m.alpha_hat for m in ens.members[:t])
            if total <= 0:
                continue
            prev = AdditiveEnsemble(
                tuple(
                    replace(m, alpha_hat=m.alpha_hat / total)
                    for m in ens.members[:t]
                )
            )
            log_ratio = ens.members[t].learner.log_density(
                data.values
            ) - prev.log_density(data.values)
            reports.append(check_conditions_additive(log_ratio).to_dict())
    else:
        for t in range(1, len(ens.members)):
            prev = MultiplicativeEnsemble(ens.members[:t])
            n_per_chain = -(-n_q // mh.n_chains)
            q_samples = mh_sample(prev, mh, n_per_chain)
            member = ens.members[t].learner
            reports.append(
                check_conditions_multiplicative(
                    member.log_density(data.values),
                    member.log_density(q_samples.values[:n_q]),
                ).to_dict()
            )
    for t, rep in enumerate(reports, start=1):
        _write_json(
            seed_dir / f"round_{t}.json",
            {"round": t, "conditions": rep, "config_hash": cfg.config_hash},
        )
    return {"condition_reports": reports}


# -- synthetic four-Gaussian benchmark -------------------------------------

SYNTHETIC_METHODS = ("base", "add", "genbgm", "discbgm_nce", "discbgm_hd")


def _synthetic_spec(cfg: ExperimentConfig) -> dict:
    doc = dict(cfg.raw.get("synthetic", {}))
    doc.setdefault("center", 3.0)
    doc.setdefault("n_train", 1000)
    doc.setdefault("n_test", 1000)
    doc.setdefault("t_rounds", 2)
    doc.setdefault("export_grids", False)
    return doc


def _synthetic_mh(cfg: ExperimentConfig) -> MhConfig:
    doc = cfg.raw.get("negatives", {}).get("mh")
    if doc is not None:
        return _mh_from_dict(doc)
    # short independent chains started from base-model draws
    return MhConfig(
        proposal=GAUSSIAN_RW, step=0.5, burn_in=300, thin=1, n_chains=1000
    )


def _task_synthetic_mog(cfg: ExperimentConfig, seed: int, seed_dir: Path):
    """The five-method comparison on the four-Gaussian target.

    Weights follow the reference protocol: additive line search, uniform
    1/(T+1) over every member for the generative ensemble, unity for the
    discriminative ones; the reweighting exponent is one.
    """
    spec = _synthetic_spec(cfg)
    target = make_four_gaussian_target(spec["center"])
    channels = _seed_channels(seed, "train", "test", "run")
    train = target.ancestral_sample(int(spec["n_train"]), channels["train"])
    test = target.ancestral_sample(int(spec["n_test"]), channels["test"])
    bounds = ((-spec["center"] - 8, spec["center"] + 8),) * 2
    base_em = cfg.base_em()
    t_rounds = int(spec["t_rounds"])
    train_cfg = _train_from_dict(cfg.raw.get("train"))
    neg_cfg = NegativeSamplerConfig(mh=_synthetic_mh(cfg))
    grid_cfg = dict(cfg.raw.get("logz", {"method": "grid"}))
    grid_cfg.setdefault("method", "grid")
    local = ExperimentConfig(
        task=cfg.task, raw={**cfg.raw, "logz": grid_cfg}, seeds=cfg.seeds,
        out_dir=cfg.out_dir,
    )

    out = {}
    rounds_log = {}
    ens_by_method = {}

    base = run_genbgm(train, base_em, [], seed=channels["run"])
    ens_by_method["base"] = base
    out["base"] = {"test_nll": avg_nll(base, test, 0.0)}

    add_log = []
    add = run_additive(
        train,
        base_em,
        [RoundSpec(kind="generative")] * t_rounds,
        seed=channels["run"],
        round_log=add_log,
    )
    ens_by_method["add"] = add
    out["add"] = {"test_nll": avg_nll(add, test, 0.0)}
    rounds_log["add"] = add_log

    gen_log = []
    gen = run_genbgm(
        train,
        base_em,
        [RoundSpec(kind="generative", beta=1.0)] * t_rounds,
        heuristic="uniform",
        seed=channels["run"],
        round_log=gen_log,
        base_alpha=1.0 / (t_rounds + 1),
    )
    ens_by_method["genbgm"] = gen
    nll, info = ensemble_test_nll(gen, test, local, channels["run"], bounds)
    out["genbgm"] = {"test_nll": nll, "log_z": info}
    rounds_log["genbgm"] = gen_log

    for fdiv in ("nce", "hd"):
        disc_log = []
        ens = run_discbgm(
            train,
            base_em,
            [
                RoundSpec(kind="discriminative", fdiv=fdiv, learner_cfg=train_cfg)
            ] * t_rounds,
            heuristic="unity",
            neg_cfg=neg_cfg,
            seed=channels["run"],
            round_log=disc_log,
        )
        key = f"discbgm_{fdiv}"
        ens_by_method[key] = ens
        nll, info = ensemble_test_nll(ens, test, local, channels["run"], bounds)
        out[key] = {"test_nll": nll, "log_z": info}
        rounds_log[key] = disc_log

    for method, log in rounds_log.items():
        for record in log:
            _write_json(
                seed_dir / f"round_{record['round']}_{method}.json",
                {**record, "config_hash": cfg.config_hash},
            )
    if spec["export_grids"]:
        res = int(spec.get("grid_resolution", 256))
        target_ens = MultiplicativeEnsemble((EnsembleMember(target, 1.0),))
        export_density_grid(
            target_ens, bounds, res, seed_dir / "grid_target.csv",
            cfg.config_hash,
        )
        for method, ens in ens_by_method.items():
            if isinstance(ens, AdditiveEnsemble):
                continue
            export_density_grid(
                ens, bounds, res, seed_dir / f"grid_{method}.csv",
                cfg.config_hash,
            )
        _write_samples_csv(seed_dir / "train_points.csv", train, cfg.config_hash)
    return out


def _task_weights_sweep(cfg: ExperimentConfig, seed: int, seed_dir: Path):
    """Train/test NLL of a boosting method for every heuristic and every
    ensemble size up to t_max, each (heuristic, T) pair run independently."""
    spec = dict(cfg.raw.get("sweep", {}))
    heuristics = spec.get("heuristics", ["unity", "uniform", "decay"])
    t_max = int(spec.get("t_max", 4))
    method = spec.get("method", "discbgm-nce")
    syn = _synthetic_spec(cfg)
    target = make_four_gaussian_target(syn["center"])
    channels = _seed_channels(seed, "train", "test", "run")
    train = target.ancestral_sample(int(syn["n_train"]), channels["train"])
    test = target.ancestral_sample(int(syn["n_test"]), channels["test"])
    bounds = ((-syn["center"] - 8, syn["center"] + 8),) * 2
    base_em = cfg.base_em()
    train_cfg = _train_from_dict(cfg.raw.get("train"))
    neg_cfg = NegativeSamplerConfig(mh=_synthetic_mh(cfg))
    grid_cfg = {"logz": {"method": "grid"}}
    local = ExperimentConfig(
        task=cfg.task, raw={**cfg.raw, **grid_cfg}, seeds=cfg.seeds,
        out_dir=cfg.out_dir,
    )

    def one_run(heuristic, t):
        if t == 0:
            return run_genbgm(train, base_em, [], seed=channels["run"])
        if method == "discbgm-nce":
            rounds = [
                RoundSpec(kind="discriminative", fdiv="nce", learner_cfg=train_cfg)
            ] * t
            return run_discbgm(
                train, base_em, rounds, heuristic=heuristic,
                neg_cfg=neg_cfg, seed=channels["run"],
            )
        if method == "genbgm":
            rounds = [RoundSpec(kind="generative", beta=1.0)] * t
            return run_genbgm(
                train, base_em, rounds, heuristic=heuristic, seed=channels["run"]
            )
        raise InvalidInputError(f"unknown sweep method {method!r}")

    series = []
    for heuristic in heuristics:
        for t in range(0, t_max + 1):
            ens = one_run(heuristic, t)
            test_nll, _ = ensemble_test_nll(ens, test, local, channels["run"], bounds)
            train_nll, _ = ensemble_test_nll(ens, train, local, channels["run"], bounds)
            series.append(
                {
                    "heuristic": heuristic,
                    "t": t,
                    "train_nll": train_nll,
                    "test_nll": test_nll,
                }
            )
    return {"method": method, "series": series}


_HANDLERS = {
    "fit": _task_fit,
    "eval-nll": _task_eval_nll,
    "eval-classify": _task_eval_classify,
    "sample": _task_sample,
    "synthetic-mog": _task_synthetic_mog,
    "weights-sweep": _task_weights_sweep,
    "check-conditions": _task_check_conditions,
}


# --------------------------------------------------------------------------
# aggregation and the runner


def _walk_numeric(doc, prefix=""):
    """Flatten nested dicts to dotted-path numeric leaves."""
    out = {}
    if isinstance(doc, dict):
        for key, val in doc.items():
            out.update(_walk_numeric(val, f"{prefix}{key}."))
    elif isinstance(doc, (int, float)) and not isinstance(doc, bool):
        out[prefix[:-1]] = float(doc)
    return out


def aggregate_metrics(per_seed: list[dict]) -> dict:
    """Mean and standard error over succeeded seeds for every numeric leaf."""
    ok = [entry for entry in per_seed if entry["status"] == "ok"]
    if not ok:
        return {}
    flats = [_walk_numeric(entry["result"]) for entry in ok]
    keys = sorted(set().union(*flats))
    agg = {}
    for key in keys:
        vals = [f[key] for f in flats if key in f]
        mean = float(np.mean(vals))
        stderr = (
            float(np.std(vals, ddof=1) / math.sqrt(len(vals)))
            if len(vals) > 1
            else 0.0
        )
        agg[key] = {"mean": mean, "stderr": stderr, "n": len(vals)}
    return agg


@dataclass
class MetricsRecord:
    """In-memory form of metrics.json plus the non-deterministic timings."""

    task: str
    config_hash: str
    per_seed: list
    aggregate: dict
    wall_clock: dict = field(default_factory=dict)

    def metrics_doc(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "task": self.task,
            "config_hash": self.config_hash,
            "per_seed": self.per_seed,
            "aggregate": self.aggregate,
        }


def run_experiment(cfg: ExperimentConfig) -> MetricsRecord:
    """Execute the configured task once per seed and write all artifacts.

    A failure in one seed is recorded with its cause and the run continues;
    metrics.json carries only deterministic content, while timings go to
    run_info.json.
    """
    handler = _HANDLERS[cfg.task]
    out_root = Path(cfg.out_dir)
    per_seed = []
    timings = {}
    for seed in cfg.seeds:
        seed_dir = out_root / f"seed_{seed}"
        start = time.perf_counter()
        try:
            result = handler(cfg, seed, seed_dir)
            per_seed.append({"seed": seed, "status": "ok", "result": result})
        except (BgmError, OSError, ValueError, KeyError) as exc:
            logger.warning("seed %d failed: %s", seed, exc)
            per_seed.append(
                {
                    "seed": seed,
                    "status": "failed",
                    "error": f"{type(exc).__name__}: {exc}",
                }
            )
        timings[str(seed)] = time.perf_counter() - start

    record = MetricsRecord(
        task=cfg.task,
        config_hash=cfg.config_hash,
        per_seed=per_seed,
        aggregate=aggregate_metrics(per_seed),
        wall_clock=timings,
    )
    _write_json(out_root / "metrics.json", record.metrics_doc())
    _write_json(
        out_root / "run_info.json",
        {
            "config_hash": cfg.config_hash,
            "wall_clock_seconds": timings,
            "finished_unix": time.time(),
        },
    )
    return record
