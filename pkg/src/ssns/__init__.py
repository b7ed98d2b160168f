"""Numerical laboratory for log-weakened hyperdissipative Navier-Stokes in 2D."""

from .cascade import (
    CascadeController,
    CascadeParams,
    CascadeState,
    barrier_offset,
    barrier_sign_test,
    cascade_rhs,
    gamma_sweep,
    integrate_cascade,
)
from .diagnostics import (
    DiagnosticsMonitor,
    ShellSpectrum,
    ThresholdTracker,
    active_window,
    barrier_check,
    besov_c,
    dissipation_budget,
    final_barrier_check,
    shell_spectrum,
    solve_jku,
)
from .dissipation import DissipationSpec, apply_semigroup, dissipation_rate, multiplier_symbol
from .solver import SolverConfig, SolverState, nonlinear_term, run, step, velocity_from_vorticity
from .spectral import Grid, LPBank, SpectralField, linf_norm, make_lp_bank, project_shell, shell_l2_norms
from .transformers import LittlewoodPaleyTransformer, ShellSpectrumTransformer

__version__ = "0.1.0"
