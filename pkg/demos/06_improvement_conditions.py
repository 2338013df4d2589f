"""Checking whether a candidate round can improve the ensemble.

Before (or after) adding an intermediate model, sample-based estimates of
two inequalities certify its usefulness: a sufficient one comparing the
data-expected log of the member against the log model-expectation of the
member, and a necessary one comparing the two expected logs.  Exact ratios
sit above the boundary by exactly the current KL divergence; adversarial
ones fail the necessary condition.
"""

import numpy as np

from bgm import (
    EnsembleMember,
    MultiplicativeEnsemble,
    TabularDensity,
    TabularLogDensity,
    check_conditions_multiplicative,
    exact_kl,
)
from bgm.oracles import ensemble_log_probs


def show(name, rep):
    print(
        f"{name:<22} sufficient {rep.sufficient_lhs:+.4f} >= {rep.sufficient_rhs:+.4f}"
        f" -> {rep.sufficient_holds};  necessary {rep.necessary_lhs:+.4f} >= "
        f"{rep.necessary_rhs:+.4f} -> {rep.necessary_holds}"
    )


def main():
    d, n = 8, 50_000
    rng = np.random.default_rng(5)
    p = TabularDensity.normalized(d, rng.gamma(1.0, size=1 << d) + 1e-6)
    q = TabularDensity.normalized(d, rng.gamma(1.0, size=1 << d) + 1e-6)
    ens = MultiplicativeEnsemble(
        (EnsembleMember(TabularLogDensity(d, q.log_probs), 1.0),)
    )
    print(f"exact KL(P || Q) = {exact_kl(p, ens):.4f}\n")

    p_samples = p.sample(n, seed=1).values
    q_samples = q.sample(n, seed=2).values
    candidates = {
        "exact ratio p/q": p.log_probs - ensemble_log_probs(ens),
        "constant 0.7": np.full(1 << d, np.log(0.7)),
        "adversarial q/p": ensemble_log_probs(ens) - p.log_probs,
    }
    for name, table in candidates.items():
        member = TabularLogDensity(d, table)
        rep = check_conditions_multiplicative(
            member.log_density(p_samples), member.log_density(q_samples)
        )
        show(name, rep)


if __name__ == "__main__":
    main()
