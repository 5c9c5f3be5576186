"""Linear preconditioning for MCMC on strongly log-concave targets.

Condition numbers before and after preconditioning, certified bounds on them,
preconditioned RWM/MALA samplers, ESS diagnostics, and an experiment harness.
"""

from .conditioning import (
    BoundReport,
    EigenStructureParams,
    KappaEstimate,
    bound_thm1,
    bound_thm2,
    bound_thm3,
    condition_number,
    covariance_localisation,
    covariance_localisation_additive,
    diag_dominance_bound,
    fisher_bound,
    givens_delta_kappa,
    hard_target_lower,
    improved_gap_threshold,
    kappa_after,
    measure_delta_eigenvector,
    measure_eps_eigenvalue,
    measure_eps_norm,
    mult_dalalyan,
    mult_kappa_bounds,
    mult_mode_bound,
    ou_spectral_gap,
    rwm_gap_bounds,
)
from .diagnostics import EssReport, acceptance_rate, empirical_gap_upper, ess, ess_report
from .errors import PrecondError
from .preconditioners import (
    Preconditioner,
    PreconditionedTarget,
    additive_base_preconditioner,
    dense_covariance_preconditioner,
    design_preconditioner,
    diag_covariance_preconditioner,
    fisher_preconditioner,
    hessian_at_mode_preconditioner,
    identity_preconditioner,
    pushforward,
)
from .samplers import ChainConfig, Trace, find_mode, mala_chain, mh_accept, rwm_chain
from .targets import (
    DifferentiableTarget,
    SmoothnessEnvelope,
    binomial_gprior_target,
    cosine_hard_target,
    gaussian_target,
    hyperbolic_regression_target,
    synth_binomial_data,
    synth_regression_data,
)

__version__ = "0.1.0"
