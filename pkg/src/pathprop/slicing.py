"""Time slicing: uniform grids, piecewise reference paths, short-time actions,
averaged potentials and short-time normalization constants.

Sign and branch conventions: complex square roots are principal-branch
(``numpy.sqrt`` on complex input), so sqrt(i) = exp(i pi/4).  "Euclidean"
quantities are the same formulas after the substitution epsilon -> -i epsilon;
the Euclidean short-time kernel is exp(-S_E / hbar) / A_E with a real,
positive A_E.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np
from numpy.polynomial import Polynomial
from scipy import integrate

from .classical import Path, is_resonant
from .errors import PotentialSingularityError, ResonanceError

__all__ = [
    "TimeGrid",
    "AveragedPotentialRule",
    "Reference",
    "STRAIGHT_LINE",
    "ShortTimeKernel",
    "sliced_path",
    "interpolate_sliced",
    "averaged_potential",
    "short_time_action",
    "normalization_constant",
    "normalization_by_quadrature",
    "short_time_propagator",
    "AVERAGE_TARGETS",
]

# Gauss-Legendre nodes on [0, 1] for the harmonic-weight averages
_GL_X, _GL_W = np.polynomial.legendre.leggauss(32)
_GL_X = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W

AVERAGE_TARGETS = ("residual", "total", "v1")


@dataclass(frozen=True)
class TimeGrid:
    t_a: float
    t_b: float
    N: int

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be >= 1")
        if not self.t_b > self.t_a:
            raise ValueError("need t_b > t_a")

    @property
    def epsilon(self) -> float:
        return (self.t_b - self.t_a) / self.N

    @property
    def duration(self) -> float:
        return self.t_b - self.t_a

    def times(self) -> np.ndarray:
        return self.t_a + np.arange(self.N + 1) * self.epsilon


class AveragedPotentialRule(str, Enum):
    MIDPOINT = "midpoint"
    LEFT_ENDPOINT = "left_endpoint"
    TRAPEZOID = "trapezoid"
    INTEGRAL_AVERAGE = "integral_average"
    HARMONIC_INTEGRAL_AVERAGE = "harmonic_integral_average"

    @property
    def symmetric(self) -> bool:
        return self is not AveragedPotentialRule.LEFT_ENDPOINT


@dataclass(frozen=True)
class Reference:
    """Reference path used inside each slice: straight line or harmonic(omega)."""

    kind: str = "straight_line"
    omega: float = 0.0

    def __post_init__(self):
        if self.kind not in ("straight_line", "harmonic"):
            raise ValueError(f"unknown reference {self.kind!r}")
        if self.kind == "harmonic" and not self.omega > 0:
            raise ValueError("harmonic reference needs omega > 0")

    @classmethod
    def harmonic(cls, omega):
        return cls("harmonic", float(omega))

    def check(self, epsilon):
        if self.kind == "harmonic":
            if is_resonant(self.omega, epsilon):
                raise ResonanceError(
                    f"|sin(omega*epsilon)| = {abs(np.sin(self.omega * epsilon)):.3g}: "
                    "slice length hits a resonance")


STRAIGHT_LINE = Reference()


@dataclass(frozen=True)
class ShortTimeKernel:
    """Per-step propagator data.

    ``average_target`` selects the potential that the averaging rule acts on:
    ``"residual"`` is everything the reference action does not already contain
    (V for the straight line, V - m omega^2 x^2 / 2 for the harmonic reference);
    ``"total"`` is V0 + V1 regardless of the reference; ``"v1"`` is the
    model's perturbative part alone.
    """

    model: object
    rule: AveragedPotentialRule = AveragedPotentialRule.MIDPOINT
    epsilon: float = 0.01
    reference: Reference = STRAIGHT_LINE
    average_target: str = "residual"

    def __post_init__(self):
        object.__setattr__(self, "rule", AveragedPotentialRule(self.rule))
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.average_target not in AVERAGE_TARGETS:
            raise ValueError(f"average_target must be one of {AVERAGE_TARGETS}")
        if getattr(self.model, "is_time_dependent", False):
            raise ValueError("time slicing supports time-independent Lagrangians only")
        self.reference.check(self.epsilon)
        if (self.rule is AveragedPotentialRule.HARMONIC_INTEGRAL_AVERAGE
                and self.reference.kind != "harmonic"):
            raise ValueError("harmonic_integral_average requires the harmonic reference")

    @property
    def hbar(self):
        return self.model.hbar

    @property
    def mass(self):
        return self.model.mass

    @property
    def normalization(self) -> complex:
        return normalization_constant(self)

    def averaged_part(self):
        """The potential handed to the averaging rule (see class docstring)."""
        if self.average_target == "v1":
            return self.model.potential1
        total = self.model.total_potential()
        if self.average_target == "total" or self.reference.kind == "straight_line":
            return total
        vref = Polynomial([0.0, 0.0, 0.5 * self.mass * self.reference.omega**2])
        if isinstance(total, Polynomial):
            return total - vref
        return lambda x: total(x) - vref(x)


# ---------------------------------------------------------------------------
# sliced paths
# ---------------------------------------------------------------------------

def interpolate_sliced(points, grid: TimeGrid, reference: Reference, t):
    """Position and velocity of the piecewise reference interpolant at times t.

    Knot times take the velocity of the segment to their right (the last knot
    takes the final segment's).
    """
    points = np.asarray(points, dtype=float)
    if len(points) != grid.N + 1:
        raise ValueError(f"need {grid.N + 1} points for N = {grid.N}, got {len(points)}")
    reference.check(grid.epsilon)
    t = np.asarray(t, dtype=float)
    eps = grid.epsilon
    seg = np.clip(np.floor((t - grid.t_a) / eps).astype(int), 0, grid.N - 1)
    tau = t - (grid.t_a + seg * eps)
    xl, xr = points[seg], points[seg + 1]
    if reference.kind == "straight_line":
        x = (xr * tau + xl * (eps - tau)) / eps
        v = (xr - xl) / eps
    else:
        w = reference.omega
        s = np.sin(w * eps)
        x = (xr * np.sin(w * tau) + xl * np.sin(w * (eps - tau))) / s
        v = w * (xr * np.cos(w * tau) - xl * np.cos(w * (eps - tau))) / s
    return x, np.broadcast_to(v, np.shape(x)).copy()


def sliced_path(points, grid: TimeGrid, reference: Reference = STRAIGHT_LINE,
                samples_per_segment: int = 8) -> Path:
    """Sample the piecewise reference interpolant through ``points``."""
    if samples_per_segment < 1:
        raise ValueError("samples_per_segment must be >= 1")
    t = np.linspace(grid.t_a, grid.t_b, grid.N * samples_per_segment + 1)
    x, v = interpolate_sliced(points, grid, reference, t)
    x[0], x[-1] = points[0], points[-1]
    return Path(t, x, v)


# ---------------------------------------------------------------------------
# averaged potentials
# ---------------------------------------------------------------------------

def _poly_interval_average(poly: Polynomial, a, b):
    """(1/(b-a)) * integral_a^b poly, written without the 0/0 at a == b.

    Uses int_a^b x^k dx / (b - a) = h_k(a, b) / (k + 1), with h_k the complete
    homogeneous sum a^k + a^(k-1) b + ... + b^k.
    """
    coef = poly.convert(domain=[-1, 1], window=[-1, 1]).coef
    h = np.ones(np.broadcast(a, b).shape)
    apow = np.ones_like(h)
    total = coef[0] * h
    for k in range(1, len(coef)):
        apow = apow * a
        h = h * b + apow
        total = total + coef[k] * h / (k + 1)
    return total


def _quad_interval_average(V, a, b):
    def one(a, b):
        if a == b:
            return float(V(a))
        with warnings.catch_warnings():
            warnings.simplefilter("error", integrate.IntegrationWarning)
            try:
                val, _ = integrate.quad(V, a, b, epsabs=1e-10, epsrel=1e-12, limit=200)
            except (integrate.IntegrationWarning, ZeroDivisionError, ValueError) as exc:
                raise PotentialSingularityError(
                    f"potential not integrable on [{a}, {b}]: {exc}") from exc
        if not np.isfinite(val):
            raise PotentialSingularityError(f"potential not integrable on [{a}, {b}]")
        return val / (b - a)

    return np.vectorize(one, otypes=[float])(a, b)


def _harmonic_weight_average(V, a, b, epsilon, omega, euclidean):
    """Average of V over one harmonic segment a -> b of duration epsilon.

    Real time: the segment is x = A sin(theta) with theta running over
    [phi, phi + omega*epsilon]; the x-space weight 1/sqrt(R^2 - x^2 sin^2)
    becomes the flat measure d(theta) / (omega*epsilon), which removes the
    endpoint singularity and also covers segments with a turning point.
    Euclidean time uses the sinh interpolant directly in tau.
    """
    we = omega * epsilon
    if euclidean:
        sh, ch = np.sinh(we), np.cosh(we)
        coef_s = (b - a * ch) / sh
        tau = we * _GL_X
        x = coef_s[..., None] * np.sinh(tau) + a[..., None] * np.cosh(tau)
        return V(x) @ _GL_W
    s, c = np.sin(we), np.cos(we)
    if is_resonant(omega, epsilon):
        raise ResonanceError(f"|sin(omega*epsilon)| = {abs(s):.3g}")
    # x(tau) = p sin(omega tau) + a cos(omega tau) = amp sin(omega tau + phi)
    p = (b - a * c) / s
    amp = np.hypot(p, a)
    phi = np.arctan2(a, p)
    theta = phi[..., None] + we * _GL_X
    x = amp[..., None] * np.sin(theta)
    return V(x) @ _GL_W


def averaged_potential(rule, V, x_left, x_right, epsilon=None, omega=None, *, euclidean=False):
    """Per-slice average of V between x_left (earlier) and x_right (later).

    Broadcasts over array inputs.  ``integral_average`` is exact for
    polynomial V and uses adaptive quadrature (abs. tol. 1e-10) otherwise;
    the coincident-endpoint case returns V(x_left).
    """
    rule = AveragedPotentialRule(rule)
    a, b = np.broadcast_arrays(np.asarray(x_left, dtype=float), np.asarray(x_right, dtype=float))
    if rule is AveragedPotentialRule.MIDPOINT:
        out = V(0.5 * (a + b))
    elif rule is AveragedPotentialRule.LEFT_ENDPOINT:
        out = V(a)
    elif rule is AveragedPotentialRule.TRAPEZOID:
        out = 0.5 * (V(a) + V(b))
    elif rule is AveragedPotentialRule.INTEGRAL_AVERAGE:
        if isinstance(V, Polynomial):
            out = _poly_interval_average(V, a, b)
        else:
            out = _quad_interval_average(V, a, b)
    else:
        if epsilon is None or omega is None:
            raise ValueError("harmonic_integral_average needs epsilon and omega")
        out = _harmonic_weight_average(V, a, b, float(epsilon), float(omega), euclidean)
    out = np.broadcast_to(np.asarray(out, dtype=float), a.shape)
    return out[()] if out.ndim == 0 else np.array(out)


# ---------------------------------------------------------------------------
# actions, normalization, propagator
# ---------------------------------------------------------------------------

def _reference_action(kernel, a, b, euclidean):
    m, eps = kernel.mass, kernel.epsilon
    if kernel.reference.kind == "straight_line":
        return m * (b - a) ** 2 / (2 * eps)
    w = kernel.reference.omega
    if euclidean:
        sh, ch = np.sinh(w * eps), np.cosh(w * eps)
        return m * w / (2 * sh) * ((a**2 + b**2) * ch - 2 * a * b)
    s, c = np.sin(w * eps), np.cos(w * eps)
    return m * w / (2 * s) * ((a**2 + b**2) * c - 2 * a * b)


def short_time_action(kernel: ShortTimeKernel, x_left, x_right, *, euclidean=False,
                      include_potential=True):
    """S[n, n-1] = S0_reference - epsilon * Vbar  (real time), or the
    Euclidean action S_E = S0_E + epsilon * Vbar when ``euclidean``."""
    a, b = np.broadcast_arrays(np.asarray(x_left, dtype=float), np.asarray(x_right, dtype=float))
    s0 = _reference_action(kernel, a, b, euclidean)
    if not include_potential:
        return s0
    vbar = averaged_potential(kernel.rule, kernel.averaged_part(), a, b,
                              kernel.epsilon, kernel.reference.omega, euclidean=euclidean)
    eps = kernel.epsilon
    return s0 + eps * vbar if euclidean else s0 - eps * vbar


def normalization_constant(kernel: ShortTimeKernel, *, euclidean=False) -> complex:
    hb, m, eps = kernel.hbar, kernel.mass, kernel.epsilon
    if kernel.reference.kind == "straight_line":
        arg = 2 * np.pi * hb * eps / m
    else:
        w = kernel.reference.omega
        if euclidean:
            arg = 2 * np.pi * hb * np.sinh(w * eps) / (m * w)
        else:
            s = np.sin(w * eps)
            if is_resonant(w, eps):
                raise ResonanceError(f"|sin(omega*epsilon)| = {abs(s):.3g}")
            arg = 2 * np.pi * hb * s / (m * w)
    if euclidean:
        return complex(np.sqrt(arg))
    return complex(np.sqrt(1j * arg))


def _fresnel_half_line(sign, delta):
    """int_0^inf exp((i*sign - delta) v^2) dv, split into a smooth finite part
    and an oscillatory tail integrated in u = v^2 with QUADPACK's Fourier rule."""
    u0 = 8 * np.pi
    v0 = np.sqrt(u0)
    re, _ = integrate.quad(lambda v: np.exp(-delta * v * v) * np.cos(v * v), 0, v0,
                           epsabs=1e-14, epsrel=1e-13, limit=400)
    im, _ = integrate.quad(lambda v: np.exp(-delta * v * v) * np.sin(v * v), 0, v0,
                           epsabs=1e-14, epsrel=1e-13, limit=400)
    f = lambda u: np.exp(-delta * u) / (2 * np.sqrt(u))  # noqa: E731
    tail_re, _ = integrate.quad(f, u0, np.inf, weight="cos", wvar=1.0, epsabs=1e-14, limlst=200)
    tail_im, _ = integrate.quad(f, u0, np.inf, weight="sin", wvar=1.0, epsabs=1e-14, limlst=200)
    return complex(re + tail_re, sign * (im + tail_im))


def normalization_by_quadrature(kernel: ShortTimeKernel, x_right=0.0,
                                deltas=(1e-2, 1e-3, 1e-4)) -> complex:
    """Numerical value of int dx_left exp(i S0(x_left, x_right) / hbar).

    S0 is quadratic in x_left; after completing the square the Fresnel
    integral is damped by exp(-delta |c| u^2) (c the phase curvature, so delta
    is dimensionless), evaluated by quadrature for each delta, and
    extrapolated to delta -> 0 with the quadratic through the three values.
    """
    hb = kernel.hbar
    phase = lambda x: float(_reference_action(kernel, np.float64(x), np.float64(x_right), False)) / hb  # noqa: E731
    p0, pp, pm = phase(0.0), phase(1.0), phase(-1.0)
    curv = 0.5 * (pp + pm) - p0
    lin = 0.5 * (pp - pm)
    if curv == 0.0:
        raise ResonanceError("reference action has no quadratic dependence on x_left")
    stationary = p0 - lin**2 / (4 * curv)
    sign = 1.0 if curv > 0 else -1.0
    vals = [2 * _fresnel_half_line(sign, d) for d in deltas]
    fit_re = np.polyfit(deltas, [v.real for v in vals], len(deltas) - 1)
    fit_im = np.polyfit(deltas, [v.imag for v in vals], len(deltas) - 1)
    limit = complex(fit_re[-1], fit_im[-1])
    return np.exp(1j * stationary) * limit / np.sqrt(abs(curv))


def short_time_propagator(kernel: ShortTimeKernel, x_left, x_right):
    """(1/A) exp(i S[n, n-1] / hbar)."""
    S = short_time_action(kernel, x_left, x_right)
    return np.exp(1j * S / kernel.hbar) / normalization_constant(kernel)
