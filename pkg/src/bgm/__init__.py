"""Boosted generative models: additive and multiplicative ensembles of
density estimators, with the learners, inference routines, and brute-force
oracles needed to verify them."""

from .boosting import (
    ConditionReport,
    NegativeSamplerConfig,
    RoundSpec,
    assign_alpha,
    check_conditions_additive,
    check_conditions_multiplicative,
    genbgm_weights,
    run_additive,
    run_discbgm,
    run_genbgm,
    run_hybrid,
)
from .classifiers import (
    HD_SPEC,
    NCE_SPEC,
    DensityRatioLearner,
    FDivSpec,
    MlpClassifier,
    TrainConfig,
    get_fdiv,
    gradient_check,
    log_density_ratio,
    train_ce_classifier,
    train_fdiv_classifier,
)
from .core import (
    AdditiveEnsemble,
    AdditiveMember,
    DataMatrix,
    EnsembleMember,
    LogPartition,
    MultiplicativeEnsemble,
    PointWeights,
    avg_nll,
)
from .inference import (
    LogZEstimate,
    MhConfig,
    conditional_predict,
    estimate_log_partition,
    eval_one_out_accuracy,
    mh_sample,
)
from .mixtures import (
    BernoulliMixture,
    EmConfig,
    GaussianMixture,
    fit_gmm_weighted,
    fit_mob_weighted,
    weighted_log_likelihood,
)
from .oracles import (
    TabularDensity,
    TabularLogDensity,
    all_binary_states,
    enumerate_log_partition,
    exact_kl,
    grid_quadrature_2d,
)

__version__ = "0.1.0"
