"""Simplified-commutator Magnus integrators for the 1-D time-dependent Schrodinger equation."""

from .grid import PeriodicGrid, fft_counter, make_grid, reset_fft_counter
from .krylov import dense_expm, lanczos_expm, skew_hermitian_expm
from .magnus import (
    MagnusScheme,
    build_standard_m4,
    build_theta2,
    build_theta3,
    build_theta4,
    midpoint_step,
    stability_demo,
)
from .opalg import AntiCommutatorSum, apply_sum, fft_cost
from .potential import PotentialModel
from .quad import appendix_weights, gl_rule, triangle_weights
from .sim import SimulationConfig, convergence_study, initial_wavepacket, l2_error, potential_catalogue, propagate

__all__ = [
    "AntiCommutatorSum",
    "MagnusScheme",
    "PeriodicGrid",
    "PotentialModel",
    "SimulationConfig",
    "apply_sum",
    "appendix_weights",
    "build_standard_m4",
    "build_theta2",
    "build_theta3",
    "build_theta4",
    "convergence_study",
    "dense_expm",
    "fft_cost",
    "fft_counter",
    "gl_rule",
    "initial_wavepacket",
    "l2_error",
    "lanczos_expm",
    "make_grid",
    "midpoint_step",
    "potential_catalogue",
    "propagate",
    "reset_fft_counter",
    "skew_hermitian_expm",
    "stability_demo",
    "triangle_weights",
]
