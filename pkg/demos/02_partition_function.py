"""Estimating the normalizer of an unnormalized product ensemble.

Multiplicative ensembles are defined only up to a constant.  On a small
binary domain we can enumerate the exact normalizer and watch the
importance-sampling estimator (with the base model as proposal) converge
to it as the sample size grows.
"""

import numpy as np

from bgm import (
    BernoulliMixture,
    EnsembleMember,
    MultiplicativeEnsemble,
    TabularLogDensity,
    enumerate_log_partition,
    estimate_log_partition,
)


def main():
    d = 10
    rng = np.random.default_rng(0)
    base = BernoulliMixture(
        [0.5, 0.5], rng.uniform(0.2, 0.8, size=(2, d))
    )
    ens = MultiplicativeEnsemble(
        (
            EnsembleMember(base, 1.0),
            EnsembleMember(TabularLogDensity(d, rng.normal(size=1 << d) * 0.5), 0.6),
        )
    )
    exact = enumerate_log_partition(ens)
    print(f"exact log Z by enumeration: {exact:.6f}\n")
    print(f"{'n':>8} {'log_z':>10} {'stderr':>8} {'ess':>10} {'|error|':>9}")
    for n in (100, 1_000, 10_000, 100_000):
        est = estimate_log_partition(ens, base, n=n, seed=1)
        print(
            f"{n:>8} {est.log_z:>10.4f} {est.stderr:>8.4f} "
            f"{est.ess:>10.1f} {abs(est.log_z - exact):>9.5f}"
        )


if __name__ == "__main__":
    main()
