"""Special functions, Gaussian / von Mises-Fisher kernels, samplers and AUC."""

from modules.mialab.numerics.distributions import (
    GaussianPosterior,
    VmfPosterior,
    householder_rotate,
    kl_gaussian,
    kl_gaussian_rows,
    kl_vmf,
    mean_resultant_length,
    sample_gaussian,
    sample_vmf,
    sample_vmf_canonical,
)
from modules.mialab.numerics.metrics import ScoredLabels, auc
from modules.mialab.numerics.special import bessel_i, log_bessel_i, log_gamma

__all__ = [
    "GaussianPosterior",
    "ScoredLabels",
    "VmfPosterior",
    "auc",
    "bessel_i",
    "householder_rotate",
    "kl_gaussian",
    "kl_gaussian_rows",
    "kl_vmf",
    "log_bessel_i",
    "log_gamma",
    "mean_resultant_length",
    "sample_gaussian",
    "sample_vmf",
    "sample_vmf_canonical",
]
