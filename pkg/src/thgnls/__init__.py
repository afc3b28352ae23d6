"""Numerical workbench for solitary waves of the third-harmonic-generation
NLS system: wave construction, spectral stability classification, and
virial/blow-up dynamics."""

from .params import ModelParams, ParameterError
from .grids import (GridError, RadialGrid, TensorGrid, UniformGrid1D,
                    default_grid, is_bell_shaped, rearrange_decreasing)
from .model import (FunctionalLedger, elliptic_residual, eval_F, eval_I,
                    eval_R, eval_energy, eval_mass, pohozaev_residuals)
from .solver import (ConvergenceError, DegenerateSolutionError,
                     NormalizedSolveRequest, SolverOptions, WaveProfile,
                     WeinsteinSolution, rescale_to_physical, semi_trivial_wave,
                     solve_ground_state, solve_normalized, solve_weinstein)
from .linop import (LinearizedOperators, OperatorSpectrum, assemble,
                    kernel_projection, negative_direction_witness, spectrum)
from .stability import (CertificateVector, SpectralReport, analyze,
                        direct_jl_eigen, h_certificate, instability_criterion,
                        symmetrized_growth_rate, vk_quantity, zero_multiplicity)
from .dynamics import (EvolutionTrace, ExperimentReport, FieldState,
                       InitialData, blowup_experiment, evolve, ohta_membership,
                       step, virial_second_derivative)

__version__ = "0.1.0"
