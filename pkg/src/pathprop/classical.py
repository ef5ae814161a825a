"""Classical paths for Dirichlet boundary data and actions along paths."""
from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import chebyshev as C

from .errors import ConvergenceError, LegendreError, ResonanceError
from .model import (
    action_integral,
    d2L_dx2,
    d2L_dxdot2,
    d2L_dxdot_dx,
    dL_dx,
    dL_dxdot,
    legendre_check,
)

__all__ = [
    "BoundaryData",
    "Path",
    "straight_line_path",
    "harmonic_reference_path",
    "solve_bvp_classical",
    "action_along",
    "RESONANCE_TOL",
    "is_resonant",
]

RESONANCE_TOL = 1e-12


def is_resonant(omega, duration) -> bool:
    """|sin(omega T)| < RESONANCE_TOL away from the omega T -> 0 limit.

    Very small omega T also has a tiny sine but is the regular straight-line
    limit, so only omega T near k pi with k >= 1 counts as resonant.
    """
    wT = abs(omega * duration)
    return wT > 1.0 and abs(np.sin(wT)) < RESONANCE_TOL


@dataclass(frozen=True)
class BoundaryData:
    t_a: float
    t_b: float
    x_a: float
    x_b: float

    def __post_init__(self):
        if not self.t_b - self.t_a > 0:
            raise ValueError(f"need t_b > t_a, got [{self.t_a}, {self.t_b}]")

    @property
    def duration(self) -> float:
        return self.t_b - self.t_a


@dataclass(frozen=True)
class Path:
    """Sampled trajectory with explicitly stored velocity samples."""

    grid: np.ndarray
    values: np.ndarray
    derivative: np.ndarray

    def __post_init__(self):
        for name in ("grid", "values", "derivative"):
            arr = np.array(getattr(self, name), dtype=float)
            if arr.ndim != 1:
                raise ValueError(f"{name} must be one-dimensional")
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        if not (len(self.grid) == len(self.values) == len(self.derivative)):
            raise ValueError("grid, values and derivative must have equal length")
        if len(self.grid) < 2 or np.any(np.diff(self.grid) <= 0):
            raise ValueError("grid must be strictly increasing with at least 2 samples")

    def __len__(self):
        return len(self.grid)

    @property
    def interval(self):
        return float(self.grid[0]), float(self.grid[-1])

    def perturbed(self, direction, derivative, sigma=1.0) -> "Path":
        return Path(self.grid, self.values + sigma * np.asarray(direction),
                    self.derivative + sigma * np.asarray(derivative))

    def to_text(self, include_derivative=True) -> str:
        buf = io.StringIO()
        self.savetxt(buf, include_derivative=include_derivative)
        return buf.getvalue()

    def savetxt(self, fname, include_derivative=True):
        """Whitespace-separated columns t, x[, xdot] with a one-line header."""
        cols = [self.grid, self.values] + ([self.derivative] if include_derivative else [])
        header = "t x xdot" if include_derivative else "t x"
        np.savetxt(fname, np.column_stack(cols), fmt="%.17g", header=header)

    @classmethod
    def loadtxt(cls, fname) -> "Path":
        data = np.atleast_2d(np.loadtxt(fname))
        if data.shape[1] >= 3:
            return cls(data[:, 0], data[:, 1], data[:, 2])
        # two-column files carry no velocity; fall back to a second-order gradient
        return cls(data[:, 0], data[:, 1], np.gradient(data[:, 1], data[:, 0], edge_order=2))


def _time_grid(bc, samples):
    if samples < 2:
        raise ValueError("samples must be >= 2")
    return np.linspace(bc.t_a, bc.t_b, samples)


def straight_line_path(bc: BoundaryData, samples: int) -> Path:
    t = _time_grid(bc, samples)
    T = bc.duration
    x = (bc.x_b * (t - bc.t_a) + bc.x_a * (bc.t_b - t)) / T
    x[0], x[-1] = bc.x_a, bc.x_b
    v = np.full_like(t, (bc.x_b - bc.x_a) / T)
    return Path(t, x, v)


def harmonic_reference_path(bc: BoundaryData, omega: float, samples: int) -> Path:
    """Sinusoidal interpolant solving xddot = -omega**2 x between the endpoints."""
    if omega == 0.0:
        return straight_line_path(bc, samples)
    s = np.sin(omega * bc.duration)
    if is_resonant(omega, bc.duration):
        raise ResonanceError(
            f"|sin(omega*T)| = {abs(s):.3g} < {RESONANCE_TOL}: omega*T is a multiple of pi")
    t = _time_grid(bc, samples)
    x = (bc.x_b * np.sin(omega * (t - bc.t_a)) + bc.x_a * np.sin(omega * (bc.t_b - t))) / s
    v = omega * (bc.x_b * np.cos(omega * (t - bc.t_a)) - bc.x_a * np.cos(omega * (bc.t_b - t))) / s
    x[0], x[-1] = bc.x_a, bc.x_b
    return Path(t, x, v)


def action_along(model, path: Path) -> float:
    return action_integral(model, path.grid, path.values, path.derivative)


# ---------------------------------------------------------------------------
# boundary-value solver
# ---------------------------------------------------------------------------

def _cheb_nodes(n, t_a, t_b):
    k = np.arange(n + 1)
    return t_a + 0.5 * (t_b - t_a) * (1.0 - np.cos(np.pi * k / n))


def _diff_matrix(t):
    """Barycentric differentiation matrix on Chebyshev-Lobatto nodes."""
    n = len(t) - 1
    w = (-1.0) ** np.arange(n + 1)
    w[0] *= 0.5
    w[-1] *= 0.5
    dt = t[:, None] - t[None, :]
    np.fill_diagonal(dt, 1.0)
    D = (w[None, :] / w[:, None]) / dt
    np.fill_diagonal(D, 0.0)
    np.fill_diagonal(D, -D.sum(axis=1))
    return D


def _newton(model, t, x0, max_iter, tol):
    D = _diff_matrix(t)
    inner = slice(1, -1)
    x = x0.copy()

    def residual(x):
        v = D @ x
        r = -(D @ dL_dxdot(model, v, x, t)) + dL_dx(model, v, x, t)
        return r[inner], v

    r, v = residual(x)
    rnorm = np.max(np.abs(r))
    for it in range(1, max_iter + 1):
        a = d2L_dxdot2(model, v, x, t)
        b = d2L_dxdot_dx(model, v, x, t)
        c = d2L_dx2(model, v, x, t)
        J = -D @ (a[:, None] * D + np.diag(b)) + b[:, None] * D + np.diag(c)
        step = np.linalg.solve(J[inner, inner], -r)
        lam = 1.0
        while True:
            trial = x.copy()
            trial[inner] += lam * step
            r_new, v_new = residual(trial)
            new_norm = np.max(np.abs(r_new))
            # damping factor 0.5 whenever the residual grows
            if new_norm <= rnorm or lam < 1e-6:
                break
            lam *= 0.5
        x, r, v, rnorm = trial, r_new, v_new, new_norm
        scale = max(1.0, float(np.max(np.abs(D @ dL_dxdot(model, v, x, t)))),
                    float(np.max(np.abs(dL_dx(model, v, x, t)))))
        if rnorm <= tol * scale or np.max(np.abs(lam * step)) < 1e-15 * max(1.0, np.max(np.abs(x))):
            return x, rnorm, scale, it
    raise ConvergenceError(f"Newton iteration did not converge in {max_iter} steps "
                           f"(residual {rnorm:.3g})")


def solve_bvp_classical(model, bc: BoundaryData, samples: int, *, nodes=(24, 32, 48, 64, 96, 128),
                        max_iter=50, tol=1e-8, full_output=False):
    """Classical path of L0 by damped Newton on a Chebyshev collocation of the
    Euler-Lagrange equation, initialised from the straight line.

    The collocation degree is raised through ``nodes`` until the trailing
    Chebyshev coefficients fall below 1e-13 of the leading one.  The result is
    resampled on ``samples`` uniform points with velocities taken from the
    differentiated interpolant.
    """
    l0 = model.l0()
    guess = straight_line_path(bc, max(samples, 5))
    if not legendre_check(l0, guess).satisfied:
        raise LegendreError("L0 violates the Legendre condition on the straight-line guess")

    def line(t):
        return (bc.x_b * (t - bc.t_a) + bc.x_a * (bc.t_b - t)) / bc.duration

    x_prev = None
    for n in nodes:
        t = _cheb_nodes(n, bc.t_a, bc.t_b)
        x0 = line(t) if x_prev is None else x_prev(t)
        x0[0], x0[-1] = bc.x_a, bc.x_b
        x, rnorm, scale, iters = _newton(l0, t, x0, max_iter, tol)
        coef = C.chebfit(2 * (t - bc.t_a) / bc.duration - 1, x, n)
        tail = np.max(np.abs(coef[-4:]))
        x_prev = lambda tt, c=coef: C.chebval(2 * (tt - bc.t_a) / bc.duration - 1, c)  # noqa: E731
        if tail <= 1e-13 * max(1.0, np.max(np.abs(coef))):
            break
    else:
        raise ConvergenceError("Chebyshev coefficients did not decay; path is under-resolved")

    tt = _time_grid(bc, samples)
    s = 2 * (tt - bc.t_a) / bc.duration - 1
    xs = C.chebval(s, coef)
    vs = C.chebval(s, C.chebder(coef)) * 2.0 / bc.duration
    xs[0], xs[-1] = bc.x_a, bc.x_b
    path = Path(tt, xs, vs)
    leg = legendre_check(l0, path)
    if not leg.satisfied:
        raise LegendreError(f"Legendre condition fails on the solution (min {leg.min_value:.3g})")
    if full_output:
        return path, {"residual": rnorm, "scale": scale, "iterations": iters, "nodes": n}
    return path
