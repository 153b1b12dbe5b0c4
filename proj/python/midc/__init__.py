from ._midc import (
    AffinePolicy,
    DensitySteeringProblem,
    Gaussian,
    GaussianPrior,
    LinearSystem,
    MidcError,
    ProcessDistribution,
    alternate_midc,
    alternate_sb,
    controlled_process,
    estimate_noise,
    experiment,
    fit_gaussian_ml,
    kl_gaussian,
    kl_process,
    me_density_policy,
    me_terminal_weight,
    mean_steering,
    mi_policy_for_prior,
    mi_prior_for_policy,
    objective_j,
    propagate_moments,
    reference_process,
    relative_error,
    solve_midc,
    true_noise_cov,
    verify,
)

__version__ = "0.1.0"
