"""Exact and Monte Carlo tooling for Gaussian boson sampling under uniform photon loss."""

__version__ = "0.1.0"

from .errors import DomainError, InvalidArgument, SizeLimitError
from .ensembles import rng, sample_ginibre, sample_haar_unitary
from .hafnian import Outcome, haf_enumerate, haf_fast, hafnian
from .probabilities import (
    GbsConfig,
    enumerate_distribution,
    prob_no_postselect,
    prob_postselect_N,
    prob_postselected,
    q_factor,
)

__all__ = [
    "__version__",
    "DomainError",
    "InvalidArgument",
    "SizeLimitError",
    "rng",
    "sample_ginibre",
    "sample_haar_unitary",
    "Outcome",
    "haf_enumerate",
    "haf_fast",
    "hafnian",
    "GbsConfig",
    "enumerate_distribution",
    "prob_no_postselect",
    "prob_postselect_N",
    "prob_postselected",
    "q_factor",
]
