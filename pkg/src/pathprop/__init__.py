"""One-dimensional quantum propagators by time slicing and mode series."""
from .classical import BoundaryData, Path, harmonic_reference_path, solve_bvp_classical, straight_line_path
from .errors import ConfigError, PathPropError
from .kernel import SpaceGrid, build_kernel_matrix, compose, extract_spectrum
from .model import LagrangianModel, PhysicalUnits
from .modes import (
    fluctuation_factor,
    fourier_sine_basis,
    free_mode_basis,
    series_by_projection,
    sturm_liouville_basis,
)
from .slicing import AveragedPotentialRule, Reference, ShortTimeKernel, TimeGrid

__version__ = "0.1.0"

__all__ = [
    "BoundaryData",
    "Path",
    "straight_line_path",
    "harmonic_reference_path",
    "solve_bvp_classical",
    "ConfigError",
    "PathPropError",
    "SpaceGrid",
    "build_kernel_matrix",
    "compose",
    "extract_spectrum",
    "LagrangianModel",
    "PhysicalUnits",
    "fluctuation_factor",
    "fourier_sine_basis",
    "free_mode_basis",
    "series_by_projection",
    "sturm_liouville_basis",
    "AveragedPotentialRule",
    "Reference",
    "ShortTimeKernel",
    "TimeGrid",
]
