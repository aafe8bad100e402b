"""Robust IRS amplitude/phase beamforming under imperfect CSI."""

from .numerics import (BracketError, NumericalError, bisection_root, dft_matrix,
                       hermitian_solve, pseudo_inverse, sylvester_hadamard)
from .channel import (ChannelSet, Geometry, PathLossModel, RicianSpec, cascaded_channel,
                      generate_channels, path_loss, rician_channel)
from .training import (ChannelEstimate, PatternMatrix, design_patterns, error_covariance,
                       estimate_channel, ls_estimate, normalized_mse, simulate_uplink)
from .reflection import FeasibleSet, ReflectionState, project_disc, project_discrete
from .rate import (achievable_rate, amplitude_profile, eop, mmse_receiver, mse_e_k, psi_d,
                   user_rates, weighted_sum_rate)
from .solver_su import (SuSolveReport, SuSolverConfig, mrt_precoder, per_element_continuous,
                        solve_su, solve_su_continuous, solve_su_discrete, solve_su_random_bcd)
from .solver_mu import MuSolveReport, MuSolverConfig, no_irs_baseline, pdd_solve

__version__ = "0.1.0"
