"""Noisy k-partite community recovery: exhaustive MLE, complex SDP and thresholds."""

from .model import (
    Assignment,
    CapExceededError,
    ContingencyTable,
    Cycle,
    ModelError,
    NoCycleError,
    Palette,
    SampleSpace,
    apply_cycle,
    canonical_representative,
    contingency,
    distance_omega,
    distance_theta,
    enumerate_space,
    find_cycle,
    is_equivalent,
)
from .matrices import Observation, build_G, build_K, build_P, laplacian, observe
from .mle import MleResult, mle, recovery_check
from .sdp import dual_certificate, real_embed, round_solution, solve_sdp, spectral_norm
from .statistics import Separation, ThresholdReport, score, separation, threshold, variance_gap

__version__ = "0.1.0"
