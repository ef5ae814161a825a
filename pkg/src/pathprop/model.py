"""Lagrangians, their L0/L1 partitions, and numerical variational probes.

Every derivative of a Lagrangian is taken by central finite differences; no
symbolic differentiation is performed anywhere in the package.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from math import factorial
from typing import Callable, Optional

import numpy as np
from numpy.polynomial import Polynomial

from .errors import PotentialSingularityError

__all__ = [
    "PhysicalUnits",
    "LagrangianModel",
    "VariationProbe",
    "LegendreReport",
    "DampedSubstitutionReport",
    "eval_lagrangian",
    "euler_lagrange_residual",
    "legendre_check",
    "gateaux_variation",
    "damped_substitution_check",
    "PARTITIONS",
    "MODEL_KINDS",
]

EPS = np.finfo(float).eps
# first derivatives: optimal central-difference step
_H1 = EPS ** (1.0 / 3.0)
# second derivatives: eps**(1/3) would leave ~1e-6 roundoff in f''; eps**(1/4) balances it
_H2 = EPS ** (1.0 / 4.0)

PARTITIONS = ("full", "kinetic", "harmonic")
MODEL_KINDS = ("free", "harmonic", "damped_harmonic", "quartic", "custom_polynomial")

_ZERO = Polynomial([0.0])


@dataclass(frozen=True)
class PhysicalUnits:
    hbar: float = 1.0
    mass: float = 1.0

    def __post_init__(self):
        if not (self.hbar > 0 and np.isfinite(self.hbar)):
            raise ValueError(f"hbar must be positive, got {self.hbar}")
        if not (self.mass > 0 and np.isfinite(self.mass)):
            raise ValueError(f"mass must be positive, got {self.mass}")


@dataclass(frozen=True)
class LagrangianModel:
    """L = g(t) * (m xdot**2 / 2 - V0(x) - V1(x)).

    ``potential0`` belongs to L0 (the part whose classical path is used),
    ``potential1`` is the perturbative remainder, L1 = -V1.  ``time_prefactor``
    is g(t); ``None`` means the Lagrangian has no explicit time dependence.
    Potentials given as :class:`numpy.polynomial.Polynomial` enable exact
    spatial averages in :mod:`pathprop.slicing`.
    """

    potential0: Callable = _ZERO
    potential1: Callable = _ZERO
    time_prefactor: Optional[Callable] = None
    units: PhysicalUnits = field(default_factory=PhysicalUnits)
    omega: float = 0.0
    beta: float = 0.0
    kind: str = "custom"
    partition: str = "full"

    def __post_init__(self):
        if self.omega < 0 or self.beta < 0:
            raise ValueError("omega and beta must be non-negative")

    @property
    def mass(self) -> float:
        return self.units.mass

    @property
    def hbar(self) -> float:
        return self.units.hbar

    def potential(self, x):
        """Total potential V0 + V1."""
        return self.potential0(x) + self.potential1(x)

    def total_potential(self):
        """V0 + V1 as a single callable (a Polynomial when both parts are)."""
        if isinstance(self.potential0, Polynomial) and isinstance(self.potential1, Polynomial):
            return self.potential0 + self.potential1
        return self.potential

    def l0(self) -> "LagrangianModel":
        """The unperturbed part, L0 = T - V0."""
        return replace(self, potential1=_ZERO)

    @property
    def is_time_dependent(self) -> bool:
        return self.time_prefactor is not None

    def __call__(self, xdot, x, t=0.0):
        return eval_lagrangian(self, xdot, x, t)

    # -- constructors -------------------------------------------------------

    @classmethod
    def free(cls, units=None):
        return cls(units=units or PhysicalUnits(), kind="free")

    @classmethod
    def harmonic(cls, omega=1.0, units=None, partition="full"):
        units = units or PhysicalUnits()
        v = Polynomial([0.0, 0.0, 0.5 * units.mass * omega**2])
        return _partitioned(v, units, partition, omega=omega, kind="harmonic")

    @classmethod
    def damped_harmonic(cls, omega=1.0, beta=0.5, units=None):
        # footnote Lagrangian exp(2 beta t) * m (xdot^2 - omega^2 x^2) / 2
        units = units or PhysicalUnits()
        v = Polynomial([0.0, 0.0, 0.5 * units.mass * omega**2])
        return cls(
            potential0=v,
            time_prefactor=lambda t, b=beta: np.exp(2.0 * b * np.asarray(t, dtype=float)),
            units=units,
            omega=omega,
            beta=beta,
            kind="damped_harmonic",
        )

    @classmethod
    def quartic(cls, coeff=0.25, units=None, partition="full", omega=0.0):
        v = Polynomial([0.0, 0.0, 0.0, 0.0, coeff])
        return _partitioned(v, units or PhysicalUnits(), partition, omega=omega, kind="quartic")

    @classmethod
    def custom_polynomial(cls, coeffs, units=None, partition="full", omega=0.0):
        """V(x) = sum_k coeffs[k] x**k (ascending powers)."""
        v = Polynomial(np.asarray(coeffs, dtype=float))
        return _partitioned(v, units or PhysicalUnits(), partition, omega=omega,
                            kind="custom_polynomial")


def _partitioned(v, units, partition, omega, kind):
    if partition not in PARTITIONS:
        raise ValueError(f"unknown partition {partition!r}; expected one of {PARTITIONS}")
    if partition == "full":
        v0, v1 = v, _ZERO
    elif partition == "kinetic":
        v0, v1 = _ZERO, v
    else:
        if omega <= 0:
            raise ValueError("the harmonic partition needs omega > 0")
        v0 = Polynomial([0.0, 0.0, 0.5 * units.mass * omega**2])
        v1 = v - v0
    return LagrangianModel(potential0=v0, potential1=v1, units=units, omega=omega,
                           kind=kind, partition=partition)


# ---------------------------------------------------------------------------
# evaluation and finite-difference partials
# ---------------------------------------------------------------------------

def _raw_lagrangian(model, xdot, x, t):
    xdot = np.asarray(xdot, dtype=float)
    x = np.asarray(x, dtype=float)
    val = 0.5 * model.mass * xdot**2 - model.potential0(x) - model.potential1(x)
    if model.time_prefactor is not None:
        val = model.time_prefactor(t) * val
    return val


def eval_lagrangian(model: LagrangianModel, xdot, x, t=0.0):
    """Evaluate L(xdot, x, t); raises if the result is not finite."""
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        val = _raw_lagrangian(model, xdot, x, t)
    if not np.all(np.isfinite(val)):
        bad = np.broadcast_to(np.asarray(x, dtype=float), np.shape(val))[~np.isfinite(val)]
        raise PotentialSingularityError(
            f"Lagrangian is not finite; potential singular near x = {bad.ravel()[:5]}")
    return val[()] if np.ndim(val) == 0 else val


def _step(v, base):
    return base * np.maximum(1.0, np.abs(v))


def dL_dxdot(model, xdot, x, t=0.0):
    xdot = np.asarray(xdot, dtype=float)
    h = _step(xdot, _H1)
    return (eval_lagrangian(model, xdot + h, x, t) - eval_lagrangian(model, xdot - h, x, t)) / (2 * h)


def dL_dx(model, xdot, x, t=0.0):
    x = np.asarray(x, dtype=float)
    h = _step(x, _H1)
    return (eval_lagrangian(model, xdot, x + h, t) - eval_lagrangian(model, xdot, x - h, t)) / (2 * h)


def d2L_dxdot2(model, xdot, x, t=0.0):
    xdot = np.asarray(xdot, dtype=float)
    h = _step(xdot, _H2)
    f0 = eval_lagrangian(model, xdot, x, t)
    return (eval_lagrangian(model, xdot + h, x, t) - 2 * f0
            + eval_lagrangian(model, xdot - h, x, t)) / h**2


def d2L_dx2(model, xdot, x, t=0.0):
    x = np.asarray(x, dtype=float)
    h = _step(x, _H2)
    f0 = eval_lagrangian(model, xdot, x, t)
    return (eval_lagrangian(model, xdot, x + h, t) - 2 * f0
            + eval_lagrangian(model, xdot, x - h, t)) / h**2


def d2L_dxdot_dx(model, xdot, x, t=0.0):
    xdot = np.asarray(xdot, dtype=float)
    x = np.asarray(x, dtype=float)
    hv = _step(xdot, _H2)
    hx = _step(x, _H2)
    f = lambda a, b: eval_lagrangian(model, xdot + a, x + b, t)  # noqa: E731
    return (f(hv, hx) - f(hv, -hx) - f(-hv, hx) + f(-hv, -hx)) / (4 * hv * hx)


def action_integral(model, grid, values, derivative):
    """Composite trapezoid rule of L along sampled (t, x, xdot)."""
    lag = eval_lagrangian(model, derivative, values, grid)
    return float(np.trapezoid(lag, grid))


# ---------------------------------------------------------------------------
# variational probes
# ---------------------------------------------------------------------------

def euler_lagrange_residual(model: LagrangianModel, path) -> np.ndarray:
    """-d/dt(dL/dxdot) + dL/dx at the interior samples of ``path``.

    The time derivative is a second-order central difference on the path's
    own grid, so a true classical path leaves an O(h**2) residual.
    """
    t = path.grid
    if len(t) < 5:
        raise ValueError(f"need at least 5 samples, got {len(t)}")
    p = dL_dxdot(model, path.derivative, path.values, t)
    dp = (p[2:] - p[:-2]) / (t[2:] - t[:-2])
    force = dL_dx(model, path.derivative[1:-1], path.values[1:-1], t[1:-1])
    return -dp + force


@dataclass(frozen=True)
class LegendreReport:
    satisfied: bool
    min_value: float


def legendre_check(model: LagrangianModel, path) -> LegendreReport:
    w = d2L_dxdot2(model, path.derivative, path.values, path.grid)
    wmin = float(np.min(w))
    return LegendreReport(satisfied=wmin >= 0.0, min_value=wmin)


@dataclass(frozen=True)
class VariationProbe:
    """A direction eta in the space of variations, eta(t_a) = eta(t_b) = 0.

    ``scale`` is the base sigma step of the finite-difference stencil; it is
    multiplied by max(1, sup|base|) / sup|eta| when the probe is applied.
    """

    grid: np.ndarray
    direction: np.ndarray
    derivative: np.ndarray
    order: int = 1
    scale: float = 1e-3

    def __post_init__(self):
        for name in ("grid", "direction", "derivative"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        if not (self.grid.shape == self.direction.shape == self.derivative.shape):
            raise ValueError("grid, direction and derivative must have equal shapes")
        if self.order < 1:
            raise ValueError("order must be >= 1")
        size = max(1.0, float(np.max(np.abs(self.direction))))
        if abs(self.direction[0]) > 1e-12 * size or abs(self.direction[-1]) > 1e-12 * size:
            raise ValueError("variation direction must vanish at both endpoints")

    @classmethod
    def from_function(cls, eta, eta_dot, grid, order=1, scale=1e-3):
        grid = np.asarray(grid, dtype=float)
        return cls(grid, eta(grid), eta_dot(grid), order=order, scale=scale)

    def with_order(self, order):
        return replace(self, order=order)

    def negated(self):
        return replace(self, direction=-self.direction, derivative=-self.derivative)


def _central_weights(order):
    """Weights c_k, k = -order..order, for the order-th derivative."""
    k = np.arange(-order, order + 1, dtype=float)
    vander = np.vander(k, increasing=True).T
    rhs = np.zeros(2 * order + 1)
    rhs[order] = factorial(order)
    return np.linalg.solve(vander, rhs)


def gateaux_variation(action_of: LagrangianModel, base, probe: VariationProbe) -> float:
    """d^n/dsigma^n S[base + sigma*eta] at sigma = 0 by a central stencil."""
    if not 1 <= probe.order <= 4:
        raise ValueError(f"variation order must be in 1..4, got {probe.order}")
    if probe.grid.shape != base.grid.shape or not np.allclose(probe.grid, base.grid, rtol=0, atol=1e-12):
        raise ValueError("probe and base path must share a time grid")
    size = float(np.max(np.abs(probe.direction)))
    if size == 0.0:
        return 0.0
    h = probe.scale * max(1.0, float(np.max(np.abs(base.values)))) / size
    n = probe.order
    c = _central_weights(n)

    def s(k):
        return action_integral(action_of, base.grid, base.values + (k * h) * probe.direction,
                               base.derivative + (k * h) * probe.derivative)

    # pair symmetric offsets so that eta -> -eta gives bitwise-identical even orders
    if n % 2 == 0:
        total = c[n] * s(0)
        for k in range(1, n + 1):
            total += c[n + k] * (s(k) + s(-k))
    else:
        total = 0.0
        for k in range(1, n + 1):
            total += c[n + k] * (s(k) - s(-k))
    return total / h**n


@dataclass(frozen=True)
class DampedSubstitutionReport:
    explicit_time_dependence: float
    closed_form_deviation: float
    xi: np.ndarray
    xi_dot: np.ndarray
    transformed: np.ndarray


def damped_substitution_check(model: LagrangianModel, path) -> DampedSubstitutionReport:
    """Apply xi = x exp(beta t) and measure leftover explicit time dependence.

    The transformed integrand Lambda(xi_dot, xi, t) is evaluated through the
    original Lagrangian; for every sample's (xi_dot, xi) it is re-evaluated at
    every grid time and the spread is reported.  It is also compared to
    m (xi_dot^2 - 2 beta xi_dot xi + (beta^2 - omega^2) xi^2) / 2.
    """
    beta = model.beta
    if beta <= 0:
        raise ValueError("no damping: substitution check needs beta > 0")
    t = path.grid
    growth = np.exp(beta * t)
    xi = path.values * growth
    xi_dot = (path.derivative + beta * path.values) * growth

    def transformed(xd, x, tt):
        decay = np.exp(-beta * tt)
        return eval_lagrangian(model, (xd - beta * x) * decay, x * decay, tt)

    grid_vals = transformed(xi_dot[:, None], xi[:, None], t[None, :])
    spread = float(np.max(np.abs(grid_vals - grid_vals[:, :1])))
    on_path = np.diag(grid_vals).copy()
    m, w = model.mass, model.omega
    closed = 0.5 * m * (xi_dot**2 - 2 * beta * xi_dot * xi + (beta**2 - w**2) * xi**2)
    return DampedSubstitutionReport(
        explicit_time_dependence=spread,
        closed_form_deviation=float(np.max(np.abs(on_path - closed))),
        xi=xi,
        xi_dot=xi_dot,
        transformed=on_path,
    )
