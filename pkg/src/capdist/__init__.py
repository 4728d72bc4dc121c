"""Capacity-distortion toolkit for channels with action-dependent states."""

__version__ = "0.1.0"

from .channel import (ChannelSpec, MacSpec, ResourceCapError, augment_state,
                      load_channel, mac_adapter, reveal_actions_to_decoder,
                      save_channel, validate_channel, validate_mac)
from .infotheory import (AlphabetMismatchError, JointDistribution, Policy,
                         adaptive_objective, assemble_joint,
                         conditional_mutual_information, entropy,
                         expected_distortion, feasibility_gap,
                         mutual_information, nonadaptive_objective,
                         optimal_estimator, validate_policy)
from .solver import (Curve, CurvePoint, SolveOptions, min_distortion,
                     solve_point, sweep_curve, unconstrained_capacity)
from .gaussian import (GaussianBreakpoints, GaussianParams,
                       gaussian_breakpoints, gaussian_capdist)
from .oracle import (OracleOptions, brute_force_curve,
                     brute_force_min_distortion, brute_force_point,
                     exhaustive_estimator_search)
from .blockmarkov import (Codebook, CodeRates, SimConfig, SimResult,
                          derive_code_rates, empirical_mi_check,
                          generate_codebook, run_block_markov)

__all__ = [name for name in dir() if not name.startswith("_")]
