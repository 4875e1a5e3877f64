"""One-periodic Aztec diamond dimer model in random environment.

Layers, each validated against the one below it:

  core          signatures, interlacing chains, covering weights
  enumeration   exact small-size ground truth (the trust anchor)
  moments       contour-integral expectations at a fixed environment
  rsk           exact single-level sampling at large sizes
  environment   weight generators and limit-series estimation
  asymptotics   limit shape, annealed and quenched covariance formulas
  experiments   batch drivers and reports (CLI: `aztecenv`)
"""

from .core import (
    InterlacingChain,
    WeightEnvironment,
    bernoulli_matrix_params,
    conjugate,
    covering_weight,
    empirical_cdf,
    is_interlacing,
    is_vertical_interlacing,
    power_sum,
)
from .enumeration import (
    ExactDistribution,
    enumerate_chains,
    exact_distribution,
    exact_joint_moments,
    partition_function,
    schur_polynomial,
    verify_marginal,
)
from .environment import (
    DiscretePair,
    EnvironmentModel,
    SeriesData,
    UniformPair,
    estimate_series,
    gen_gue,
    gen_gue_full,
    gen_iid,
    gen_markov,
    iid_series,
    markov_series,
)
from .moments import (
    F_k,
    G_leading,
    expectation_pk,
    log_derivative_ratios,
    quenched_central_moment_mc_free,
    stirling2,
)
from .rsk import (
    BernoulliMatrix,
    dual_rsk_shape,
    monte_carlo_moments,
    sample_bernoulli_matrix,
    sample_lambda,
    sample_lambda_batch,
)
from .asymptotics import (
    annealed_cov_M,
    annealed_cov_sqrt,
    cov_sqrt_one_level,
    gue_F,
    gue_G,
    gue_epsilon,
    gue_full_cov,
    iid_cov_closed_form,
    limit_moment,
    markov_cov_closed_form,
    quenched_cov,
    wick_moment,
)

__version__ = "0.1.0"
