import numpy as np
import pytest

from pathprop.classical import BoundaryData, harmonic_reference_path, straight_line_path
from pathprop.model import LagrangianModel


@pytest.fixture
def free():
    return LagrangianModel.free()


@pytest.fixture
def harmonic():
    return LagrangianModel.harmonic(1.0)


@pytest.fixture
def unit_line():
    return straight_line_path(BoundaryData(0.0, 1.0, 0.0, 1.0), 201)


@pytest.fixture
def harmonic_unit_path():
    return harmonic_reference_path(BoundaryData(0.0, 1.0, 0.0, 1.0), 1.0, 201)


def sine_bump(grid, k=1):
    """eta = sin(k pi t) on [0, 1] with its derivative."""
    return np.sin(k * np.pi * grid), k * np.pi * np.cos(k * np.pi * grid)
