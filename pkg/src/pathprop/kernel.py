"""Kernel matrices on a spatial grid: construction, composition, wavefunction
propagation and spectrum extraction from the imaginary-time propagator."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .classical import is_resonant
from .errors import InstabilityError, PathPropError, ResonanceError
from .slicing import ShortTimeKernel, normalization_constant, short_time_action

__all__ = [
    "SpaceGrid",
    "KernelMatrix",
    "Spectrum",
    "TIME_MODES",
    "build_kernel_matrix",
    "compose",
    "propagate_wavefunction",
    "extract_spectrum",
    "free_kernel_exact",
    "harmonic_kernel_exact",
]

TIME_MODES = ("real", "imaginary")
MIN_EIGENVALUE = 1e-12
_OVERFLOW = 1e280


@dataclass(frozen=True)
class SpaceGrid:
    x_min: float
    x_max: float
    points: int

    def __post_init__(self):
        if not self.x_max > self.x_min:
            raise ValueError("need x_max > x_min")
        if self.points < 3:
            raise ValueError("need at least 3 grid points")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.points - 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.points)

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    def coarsened(self) -> "SpaceGrid":
        """Every other point of this grid (same extent, doubled spacing)."""
        return SpaceGrid(self.x_min, self.x_max, (self.points + 1) // 2)


@dataclass(frozen=True, eq=False)
class KernelMatrix:
    """K(x_i, t + steps*step; x_j, t) * dx.  Columns index the source point."""

    grid: SpaceGrid
    entries: np.ndarray
    time_mode: str
    step: float
    steps: int = 1

    def __post_init__(self):
        if self.time_mode not in TIME_MODES:
            raise ValueError(f"time_mode must be one of {TIME_MODES}")
        e = np.asarray(self.entries)
        if e.shape != (self.grid.points, self.grid.points):
            raise ValueError("entries must be P x P")
        if not np.all(np.isfinite(e)):
            raise InstabilityError("kernel matrix has non-finite entries")
        e = e.copy()
        e.flags.writeable = False
        object.__setattr__(self, "entries", e)

    @property
    def total_time(self) -> float:
        return self.steps * self.step

    def __matmul__(self, other: "KernelMatrix") -> "KernelMatrix":
        if other.grid != self.grid or other.time_mode != self.time_mode or other.step != self.step:
            raise ValueError("kernel matrices are not compatible")
        prod = self.entries @ other.entries
        _check_overflow(prod)
        return KernelMatrix(self.grid, prod, self.time_mode, self.step, self.steps + other.steps)


@dataclass(frozen=True)
class Spectrum:
    """Lowest energies of the imaginary-time propagator.

    ``vectors`` holds the corresponding eigenvectors of the composed kernel
    matrix as columns.  They approximate the eigenfunctions on the grid but
    carry no particular normalization beyond unit Euclidean length.
    """

    energies: np.ndarray
    errors: np.ndarray
    vectors: np.ndarray
    grid: SpaceGrid
    epsilon: float
    total_time: float

    @property
    def count(self) -> int:
        return len(self.energies)


def _check_overflow(a):
    if not np.all(np.isfinite(a)) or np.max(np.abs(a)) > _OVERFLOW:
        raise InstabilityError(
            "kernel power overflowed; renormalize per step or shorten the total time")


def build_kernel_matrix(kernel: ShortTimeKernel, grid: SpaceGrid, time_mode: str = "real") -> KernelMatrix:
    """Discretize the short-time propagator on ``grid`` (hard wall outside).

    Real mode uses exp(i S / hbar) / A; imaginary mode uses the Wick-rotated
    exp(-S_E / hbar) / A_E.  The grid spacing is folded into the entries
    with uniform weights, so composition is a plain matrix product.
    """
    if time_mode not in TIME_MODES:
        raise ValueError(f"time_mode must be one of {TIME_MODES}")
    euclid = time_mode == "imaginary"
    x = grid.x
    xr, xl = x[:, None], x[None, :]
    S = short_time_action(kernel, xl, xr, euclidean=euclid)
    A = normalization_constant(kernel, euclidean=euclid)
    hb = kernel.hbar
    if euclid:
        entries = np.exp(-S / hb) * (grid.dx / A.real)
    else:
        entries = np.exp(1j * S / hb) * (grid.dx / A)
    return KernelMatrix(grid, entries, time_mode, kernel.epsilon, 1)


def compose(kmat: KernelMatrix, steps: int) -> KernelMatrix:
    """kmat ** steps by repeated squaring."""
    steps = int(steps)
    if steps < 1:
        raise ValueError("steps must be >= 1")
    result = None
    base = kmat.entries
    n = steps
    # overflow is detected explicitly below, so silence numpy's warning
    with np.errstate(over="ignore", invalid="ignore"):
        while True:
            if n & 1:
                result = base if result is None else result @ base
                _check_overflow(result)
            n >>= 1
            if not n:
                break
            base = base @ base
            _check_overflow(base)
    return KernelMatrix(kmat.grid, result, kmat.time_mode, kmat.step, kmat.steps * steps)


def propagate_wavefunction(kmat: KernelMatrix, psi) -> np.ndarray:
    psi = np.asarray(psi)
    if psi.shape != (kmat.grid.points,):
        raise ValueError(f"psi must have length {kmat.grid.points}, got {psi.shape}")
    return kmat.entries @ psi


def _steps_for(epsilon, total_time):
    n = int(round(total_time / epsilon))
    if n < 1 or abs(n * epsilon - total_time) > 1e-9 * max(1.0, total_time):
        raise ValueError(f"total_time {total_time} is not a multiple of epsilon {epsilon}")
    return n


def _lowest_levels(kernel, grid, total_time, levels):
    kmat = build_kernel_matrix(kernel, grid, "imaginary")
    composed = compose(kmat, _steps_for(kernel.epsilon, total_time))
    K = composed.entries
    P = grid.points
    lo = max(0, P - levels)
    if np.allclose(K, K.T, rtol=1e-12, atol=0.0):
        mu, vecs = linalg.eigh(0.5 * (K + K.T), subset_by_index=[lo, P - 1])
        mu, vecs = mu[::-1], vecs[:, ::-1]
    else:
        mu, vecs = linalg.eig(K)
        order = np.argsort(-mu.real)[:levels]
        mu, vecs = mu[order].real, vecs[:, order].real
    if len(mu) < levels or np.any(mu < MIN_EIGENVALUE):
        bad = int(np.argmax(mu < MIN_EIGENVALUE)) if np.any(mu < MIN_EIGENVALUE) else len(mu)
        raise PathPropError(
            f"only {bad} eigenvalues of the composed kernel exceed {MIN_EIGENVALUE:g}; "
            f"requested {levels} levels (shorten total_time or enlarge the grid)")
    energies = -kernel.hbar * np.log(mu) / total_time
    return energies, vecs


def extract_spectrum(kernel: ShortTimeKernel, grid: SpaceGrid, epsilon: float,
                     total_time: float, levels: int = 3, *, estimate_error: bool = True) -> Spectrum:
    """Energies E_n = -hbar ln(mu_n) / total_time from the largest eigenvalues
    mu_n of the composed Euclidean kernel.

    The per-level error estimate is the difference from the same computation
    on ``grid.coarsened()``.
    """
    if not 1 <= levels <= 10:
        raise ValueError("levels must be between 1 and 10")
    kernel = dataclasses.replace(kernel, epsilon=float(epsilon))
    energies, vecs = _lowest_levels(kernel, grid, total_time, levels)
    errors = np.full(levels, np.nan)
    if estimate_error:
        coarse, _ = _lowest_levels(kernel, grid.coarsened(), total_time, levels)
        errors = np.abs(energies - coarse)
    return Spectrum(energies, errors, vecs, grid, float(epsilon), float(total_time))


# ---------------------------------------------------------------------------
# closed-form kernels
# ---------------------------------------------------------------------------

def free_kernel_exact(x_b, x_a, T, *, mass=1.0, hbar=1.0, euclidean=False):
    """Free-particle propagator; principal-branch square root."""
    d2 = (np.asarray(x_b) - np.asarray(x_a)) ** 2
    if euclidean:
        return np.sqrt(mass / (2 * np.pi * hbar * T)) * np.exp(-mass * d2 / (2 * hbar * T))
    return np.sqrt(mass / (2j * np.pi * hbar * T)) * np.exp(1j * mass * d2 / (2 * hbar * T))


def harmonic_kernel_exact(x_b, x_a, T, omega, *, mass=1.0, hbar=1.0, euclidean=False):
    """Mehler kernel (real time valid between resonances, principal branch)."""
    x_a, x_b = np.asarray(x_a), np.asarray(x_b)
    w = omega
    if euclidean:
        s, c = np.sinh(w * T), np.cosh(w * T)
        pref = np.sqrt(mass * w / (2 * np.pi * hbar * s))
        return pref * np.exp(-mass * w * ((x_a**2 + x_b**2) * c - 2 * x_a * x_b) / (2 * hbar * s))
    s, c = np.sin(w * T), np.cos(w * T)
    if is_resonant(w, T):
        raise ResonanceError("omega*T is a multiple of pi")
    pref = np.sqrt(mass * w / (2j * np.pi * hbar * s))
    return pref * np.exp(1j * mass * w * ((x_a**2 + x_b**2) * c - 2 * x_a * x_b) / (2 * hbar * s))
