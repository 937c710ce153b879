"""Reaction-diffusion fronts in incompressible flows: a finite-volume
solver, burning-rate diagnostics, cell coordinates and lower-bound
functionals for the front speed."""
from .grid import BC, Grid, TemperatureField, build_grid, shift_window, window_mass
from .flows import (FlowSpec, cellular_flow, check_divergence, check_mean_zero,
                    extract_tubes, perturbed_shear_flow, shear_flow, sine_shear_flow,
                    tube_family_for_flow, zero_flow)
from .reactions import ReactionSpec, make_reaction
from .solver import (MaxPrincipleError, SolverConfig, check_subsolution,
                     make_front_initial_data, run, stable_dt, step)
from .diagnostics import DiagnosticsRecord, front_speed
from .bounds import (cellular_bound, floor_bound, percolating_bound_functional,
                     select_intervals, shear_bound_functional)

__version__ = "0.1.0"
