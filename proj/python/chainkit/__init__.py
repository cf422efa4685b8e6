"""Composable Markov chain transition kernels.

Thin re-export of the compiled core. State trees are nested dicts of numpy
arrays; every operation is a pure function of its inputs and an explicit RNG
key, so runs are reproducible bit for bit.
"""

from chainkit._core import (
    Adam,
    AutoCovariance,
    Diffeomorphism,
    Ewma,
    GradientDescent,
    HmcState,
    Potential,
    PotentialScaleReduction,
    RngKey,
    RunningCovariance,
    RunningMean,
    RunningVariance,
    affine_diffeomorphism,
    compose,
    diagonal_gaussian_target,
    exp_diffeomorphism,
    finite_diff_grad,
    generate_dataset,
    hmc_init,
    hmc_step,
    identity_diffeomorphism,
    key_from_seed,
    logistic_regression_target,
    normal_sample,
    potential_from_function,
    reparameterize_potential,
    softplus_diffeomorphism,
    split,
    standard_normal_target,
    trace,
    treewise,
    uniform_sample,
)

__all__ = [
    "Adam",
    "AutoCovariance",
    "Diffeomorphism",
    "Ewma",
    "GradientDescent",
    "HmcState",
    "Potential",
    "PotentialScaleReduction",
    "RngKey",
    "RunningCovariance",
    "RunningMean",
    "RunningVariance",
    "affine_diffeomorphism",
    "compose",
    "diagonal_gaussian_target",
    "exp_diffeomorphism",
    "finite_diff_grad",
    "generate_dataset",
    "hmc_init",
    "hmc_step",
    "identity_diffeomorphism",
    "key_from_seed",
    "logistic_regression_target",
    "normal_sample",
    "potential_from_function",
    "reparameterize_potential",
    "softplus_diffeomorphism",
    "split",
    "standard_normal_target",
    "trace",
    "treewise",
    "uniform_sample",
]
