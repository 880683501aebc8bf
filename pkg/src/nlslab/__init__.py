"""Simulation laboratory for defocusing power-law and logarithmic
Schrodinger flows: split-step propagators, lens changes of variables,
dispersive-envelope ODEs, Wasserstein/Sobolev diagnostics, and a
config-driven experiment harness.
"""

from .envelope import (EnvelopeState, RadialState, TauEnvelope, chevron_state,
                       first_integral_residual, integrate_r, integrate_tau,
                       tau_difference_bound, tau_from_r, time_change_s,
                       time_change_s_limit)
from .errors import (BlowUpError, EnvelopeError, GridError, IntegrationError,
                     NlsLabError, NormalizationError, ResolutionError,
                     ScatteringError, VerificationError)
from .experiments import (EXPERIMENT_NAMES, ExperimentConfig, RunRecord,
                          default_config, run, sweep, verify)
from .grid import (Density, Grid, Model, WaveField, edge_density, energy,
                   gaussian_state, gradient_norm_sq, l2_distance, lp_norm,
                   make_grid, mass, position_norm_sq)
from .metrics import (gaussian_gamma, sobolev_norm, w1_1d, w1_1d_dilated,
                      w1_radial, w1_sliced, w2_1d)
from .propagators import (StepPlan, conservation_row, evolve, free_flow,
                          power_ratio, step_direct, step_lens, step_log,
                          step_rescaled)
from .rescaling import (PROFILE_DILATION, HydroFields, PseudoEnergy,
                        cazenave_haraux_gap,
                        continuity_residual, density_from_field,
                        direct_gradient_norm_sq, dispersive_bound_check, hydro,
                        lens_backward, lens_forward, log_limit_source,
                        normalized_density, pseudo_energy, spectral_rescale)
from .scattering import (AsymptoticState, extract_asymptotic, free_conjugate,
                         interaction_picture_continuity, scattering_map,
                         sigma_norm, strauss_exponent)
from .snapshots import density_csv, read_snapshot, write_snapshot

__version__ = "0.1.0"
