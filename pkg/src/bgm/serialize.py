"""JSON (de)serialization of learners and ensembles.

Plain Python floats round-trip exactly through json (repr emits the shortest
string that parses back to the same double), so saved models evaluate
bit-identically after reloading.
"""

from __future__ import annotations

import numpy as np

from .classifiers import DensityRatioLearner, MlpClassifier, get_fdiv
from .core import (
    AdditiveEnsemble,
    AdditiveMember,
    EnsembleMember,
    LogPartition,
    MultiplicativeEnsemble,
)
from .errors import InvalidInputError
from .mixtures import BernoulliMixture, GaussianMixture
from .oracles import TabularLogDensity


def learner_to_dict(learner) -> dict:
    if isinstance(learner, GaussianMixture):
        return {
            "type": "gmm",
            "pi": learner.pi.tolist(),
            "mu": learner.mu.tolist(),
            "sigma": learner.sigma.tolist(),
        }
    if isinstance(learner, BernoulliMixture):
        return {
            "type": "mob",
            "pi": learner.pi.tolist(),
            "theta": learner.theta.tolist(),
        }
    if isinstance(learner, DensityRatioLearner):
        return {
            "type": "ratio_mlp",
            "fdiv": learner.fdiv.name,
            "gamma": learner.gamma,
            "weights": [W.tolist() for W in learner.clf.weights],
            "biases": [b.tolist() for b in learner.clf.biases],
        }
    if isinstance(learner, TabularLogDensity):
        return {
            "type": "tabular",
            "d": learner.d,
            "log_values": learner.log_values.tolist(),
        }
    raise InvalidInputError(f"cannot serialize learner of type {type(learner)}")


def learner_from_dict(doc: dict):
    kind = doc.get("type")
    if kind == "gmm":
        return GaussianMixture(doc["pi"], doc["mu"], doc["sigma"])
    if kind == "mob":
        return BernoulliMixture(doc["pi"], doc["theta"])
    if kind == "ratio_mlp":
        clf = MlpClassifier(doc["weights"], doc["biases"], gamma=doc["gamma"])
        return DensityRatioLearner(clf, get_fdiv(doc["fdiv"]), gamma=doc["gamma"])
    if kind == "tabular":
        return TabularLogDensity(doc["d"], np.asarray(doc["log_values"]))
    raise InvalidInputError(f"unknown learner type {kind!r}")


def ensemble_to_dict(ens) -> dict:
    if isinstance(ens, MultiplicativeEnsemble):
        doc = {
            "kind": "multiplicative",
            "members": [
                {
                    "kind": mem.kind,
                    "alpha": mem.alpha,
                    "learner": learner_to_dict(mem.learner),
                }
                for mem in ens.members
            ],
        }
        if ens.log_z is not None:
            doc["log_z"] = {
                "estimate": ens.log_z.estimate,
                "stderr": ens.log_z.stderr,
                "sample_size": ens.log_z.sample_size,
                "method": ens.log_z.method,
            }
        return doc
    if isinstance(ens, AdditiveEnsemble):
        return {
            "kind": "additive",
            "members": [
                {"alpha_hat": mem.alpha_hat, "learner": learner_to_dict(mem.learner)}
                for mem in ens.members
            ],
        }
    raise InvalidInputError(f"cannot serialize ensemble of type {type(ens)}")


def ensemble_from_dict(doc: dict):
    kind = doc.get("kind")
    if kind == "multiplicative":
        members = tuple(
            EnsembleMember(
                learner_from_dict(m["learner"]), m["alpha"], m["kind"]
            )
            for m in doc["members"]
        )
        log_z = None
        if "log_z" in doc:
            z = doc["log_z"]
            log_z = LogPartition(
                z["estimate"], z["stderr"], z["sample_size"], z["method"]
            )
        return MultiplicativeEnsemble(members, log_z)
    if kind == "additive":
        members = tuple(
            AdditiveMember(learner_from_dict(m["learner"]), m["alpha_hat"])
            for m in doc["members"]
        )
        return AdditiveEnsemble(members)
    raise InvalidInputError(f"unknown ensemble kind {kind!r}")
