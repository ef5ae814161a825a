"""Mode expansions of path deviations: sine and 2n*pi bases, numerical
Sturm-Liouville bases of the second variation, the subsidiary condition,
slice <-> series transforms with their Jacobians, and fluctuation factors.

All mode sets are normalized to <w u_n, u_n> = T/2, the convention of the
plain sine series on an interval of length T.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from math import lgamma, log, pi
from typing import Optional

import numpy as np
from numpy.polynomial import Polynomial
from scipy import interpolate, linalg, special

from .classical import Path
from .errors import (
    DegenerateSliceError,
    InstabilityError,
    LegendreError,
    ResonanceError,
    SingularTransformError,
)
from .model import d2L_dx2, d2L_dxdot2, d2L_dxdot_dx, dL_dxdot, action_integral
from .slicing import TimeGrid

__all__ = [
    "ModeBasis",
    "ModeAmplitudes",
    "TransformPair",
    "SubsidiaryReport",
    "StabilityReport",
    "ShiftedActionReport",
    "fourier_sine_basis",
    "free_mode_basis",
    "sturm_liouville_basis",
    "subsidiary_filter",
    "stability_check",
    "slice_to_series",
    "series_by_projection",
    "asymptotic_jacobian",
    "fluctuation_factor",
    "shifted_action_series",
    "weighted_inner",
    "gram_matrix",
]

SINGULAR_CONDITION = 1e12
ORTHOGONALITY_TOL = 1e-6
ZERO_EIGENVALUE_TOL = 1e-9


def _trapz_weights(t):
    w = np.zeros_like(t)
    d = np.diff(t)
    w[:-1] += 0.5 * d
    w[1:] += 0.5 * d
    return w


def _fd_derivative(y, t):
    """Fourth-order derivative along the last axis on a uniform grid
    (second order via numpy.gradient on a non-uniform one)."""
    h = np.diff(t)
    if len(t) < 7 or not np.allclose(h, h[0], rtol=1e-10, atol=0.0):
        return np.gradient(y, t, axis=-1, edge_order=2)
    h = h[0]
    d = np.empty_like(y)
    d[..., 2:-2] = (y[..., :-4] - 8 * y[..., 1:-3] + 8 * y[..., 3:-1] - y[..., 4:]) / (12 * h)
    # one-sided fourth-order stencils for the two outermost points on each side
    f = np.array([-25, 48, -36, 16, -3]) / (12 * h)
    g = np.array([-3, -10, 18, -6, 1]) / (12 * h)
    d[..., 0] = y[..., :5] @ f
    d[..., 1] = y[..., :5] @ g
    d[..., -1] = -(y[..., ::-1][..., :5] @ f)
    d[..., -2] = -(y[..., ::-1][..., :5] @ g)
    return d


@dataclass(frozen=True, eq=False)
class ModeBasis:
    """Mode functions sampled on ``grid`` (rows of ``modes``).

    ``alphas`` holds the angular wavenumbers of trigonometric bases
    (u_n = sin(alpha_n (t - t_a))) and is ``None`` for numerical bases.
    """

    grid: np.ndarray
    modes: np.ndarray
    derivatives: np.ndarray
    eigenvalues: np.ndarray
    weight: np.ndarray
    labels: np.ndarray
    kind: str
    alphas: Optional[np.ndarray] = None
    omega: Optional[float] = None
    filtered: bool = False

    @property
    def interval(self):
        return float(self.grid[0]), float(self.grid[-1])

    @property
    def duration(self) -> float:
        return float(self.grid[-1] - self.grid[0])

    @property
    def M(self) -> int:
        return len(self.eigenvalues)

    def subset(self, index) -> "ModeBasis":
        index = np.asarray(index, dtype=int)
        return replace(
            self,
            modes=self.modes[index],
            derivatives=self.derivatives[index],
            eigenvalues=self.eigenvalues[index],
            labels=self.labels[index],
            alphas=None if self.alphas is None else self.alphas[index],
        )

    def evaluate(self, t, derivative=False) -> np.ndarray:
        """Mode values (or derivatives) at times t, shape (M, len(t))."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        t_a = self.grid[0]
        if self.alphas is not None:
            arg = self.alphas[:, None] * (t[None, :] - t_a)
            return self.alphas[:, None] * np.cos(arg) if derivative else np.sin(arg)
        spl = interpolate.CubicHermiteSpline(self.grid, self.modes, self.derivatives, axis=1)
        return spl(t, 1) if derivative else spl(t)

    def synthesize(self, amplitudes, t=None, derivative=False) -> np.ndarray:
        """sum_n a_n u_n(t) (or its time derivative); default t is the basis grid."""
        a = amplitudes.a if isinstance(amplitudes, ModeAmplitudes) else np.asarray(amplitudes, float)
        if len(a) != self.M:
            raise ValueError(f"expected {self.M} amplitudes, got {len(a)}")
        if t is None:
            return a @ (self.derivatives if derivative else self.modes)
        return a @ self.evaluate(t, derivative)


@dataclass(frozen=True)
class ModeAmplitudes:
    a: np.ndarray
    labels: Optional[np.ndarray] = None

    def __post_init__(self):
        a = np.array(self.a, dtype=float)
        if not np.all(np.isfinite(a)):
            raise ValueError("amplitudes must be finite")
        object.__setattr__(self, "a", a)


@dataclass(frozen=True, eq=False)
class TransformPair:
    """Linear maps between interior slice values y_1..y_{N-1} and amplitudes.

    ``jacobian_det`` is |det| of the y -> a map (the Gram determinant
    sqrt(det(P P^T)) when that map is not square).
    """

    slice_to_series: np.ndarray
    series_to_slice: np.ndarray
    jacobian_det: float
    N: int
    method: str
    log_jacobian: float = field(default=np.nan)
    condition_number: float = field(default=np.nan)


def weighted_inner(basis: ModeBasis, f, g) -> float:
    return float(np.sum(_trapz_weights(basis.grid) * basis.weight * f * g))


def gram_matrix(basis: ModeBasis) -> np.ndarray:
    wq = _trapz_weights(basis.grid) * basis.weight
    return (basis.modes * wq) @ basis.modes.T


# ---------------------------------------------------------------------------
# bases
# ---------------------------------------------------------------------------

def _default_samples(M):
    return max(1025, 16 * M + 1)


def _trig_basis(interval, M, factor, kind, samples):
    if M < 1:
        raise ValueError("M must be >= 1")
    t_a, t_b = map(float, interval)
    if not t_b > t_a:
        raise ValueError("need t_b > t_a")
    T = t_b - t_a
    samples = samples or _default_samples(factor * M)
    t = np.linspace(t_a, t_b, samples)
    n = np.arange(1, M + 1)
    alphas = factor * n * pi / T
    arg = alphas[:, None] * (t[None, :] - t_a)
    modes = np.sin(arg)
    modes[:, 0] = 0.0
    modes[:, -1] = 0.0
    return ModeBasis(
        grid=t,
        modes=modes,
        derivatives=alphas[:, None] * np.cos(arg),
        eigenvalues=alphas**2,
        weight=np.ones_like(t),
        labels=n,
        kind=kind,
        alphas=alphas,
    )


def fourier_sine_basis(interval, M, samples=None) -> ModeBasis:
    """u_n = sin(n pi (t - t_a) / T), lambda_n = (n pi / T)^2."""
    return _trig_basis(interval, M, 1, "sine", samples)


def free_mode_basis(interval, M, samples=None) -> ModeBasis:
    """u_n = sin(2 n pi (t - t_a) / T), lambda_n = (2 n pi / T)^2."""
    return _trig_basis(interval, M, 2, "free", samples)


def _sl_coefficients(l0, path, q):
    t, x, v = path.grid, path.values, path.derivative
    w = d2L_dxdot2(l0, v, x, t)
    if q is not None:
        return w, np.asarray(q(t), dtype=float) * np.ones_like(t)
    # second variation: int (a eta'^2 + 2 b eta eta' + c eta^2) dt
    #                 = int (a eta'^2 + (c - b') eta^2) dt after integrating by parts
    b = d2L_dxdot_dx(l0, v, x, t)
    c = d2L_dx2(l0, v, x, t)
    return w, c - _fd_derivative(b, t)


def _sl_eigen(w, qv, t, M, want_vectors):
    """Lowest M eigenpairs of -(w u')' + q u = lambda w u, u = 0 at the ends,
    by a symmetric finite-volume three-point stencil."""
    h = t[1] - t[0]
    w_half = 0.5 * (w[1:] + w[:-1])
    wi = w[1:-1]
    diag = ((w_half[1:] + w_half[:-1]) / h**2 + qv[1:-1]) / wi
    off = -(w_half[1:-1] / h**2) / np.sqrt(wi[1:] * wi[:-1])
    if want_vectors:
        lam, vec = linalg.eigh_tridiagonal(diag, off, select="i", select_range=(0, M - 1))
        return lam, vec / np.sqrt(wi)[:, None]
    lam = linalg.eigh_tridiagonal(diag, off, eigvals_only=True, select="i", select_range=(0, M - 1))
    return lam, None


def sturm_liouville_basis(model, x_cl: Path, M: int, *, q=None) -> ModeBasis:
    """Numerical eigenmodes of the second variation of L0 about ``x_cl``.

    Solves -(w u')' + q u = lambda w u with w = d2L0/dxdot^2 and
    q = d2L0/dx^2 - d/dt(d2L0/dxdot dx) on the path's (uniform) grid.
    Eigenvalues are Richardson-extrapolated against the every-other-point
    grid when the interval count is even.  ``q`` overrides the assembled
    coefficient with a user-supplied function of t (experimental; useful
    for nonlinear L0 where the assembly from path data is a modelling choice).
    """
    l0 = model.l0()
    t = np.asarray(x_cl.grid)
    K = len(t) - 1
    if not np.allclose(np.diff(t), t[1] - t[0], rtol=1e-9, atol=0.0):
        raise ValueError("sturm_liouville_basis needs a uniform path grid")
    if M < 1 or M > K // 4:
        raise ValueError(f"grid too coarse: {K} intervals support at most {K // 4} modes, asked {M}")
    w, qv = _sl_coefficients(l0, x_cl, q)
    if np.min(w) <= 0:
        raise LegendreError(f"weight d2L/dxdot^2 is not positive (min {np.min(w):.3g})")

    lam, vec = _sl_eigen(w, qv, t, M, True)
    if K % 2 == 0 and M <= (K // 2) // 4:
        lam_coarse, _ = _sl_eigen(w[::2], qv[::2], t[::2], M, False)
        lam = (4 * lam - lam_coarse) / 3

    modes = np.zeros((M, K + 1))
    modes[:, 1:-1] = vec.T
    T = t[-1] - t[0]
    quad = _trapz_weights(t) * w
    norms = np.sqrt(np.sum(modes**2 * quad, axis=1) / (T / 2))
    modes /= norms[:, None]
    for row in modes:
        first = np.flatnonzero(np.abs(row) > 1e-8 * np.max(np.abs(row)))[0]
        if row[first] < 0:
            row *= -1
    omega = float(model.omega) if model.kind == "harmonic" else None
    return ModeBasis(
        grid=t.copy(),
        modes=modes,
        derivatives=_fd_derivative(modes, t),
        eigenvalues=lam,
        weight=w,
        labels=np.arange(1, M + 1),
        kind="sturm_liouville",
        omega=omega,
    )


# ---------------------------------------------------------------------------
# subsidiary condition and stability
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SubsidiaryReport:
    integrals: np.ndarray
    kept: tuple
    rejected: tuple
    scale: float
    boundary_relation: dict = field(default_factory=dict)

    @property
    def empty(self) -> bool:
        return not self.kept


def _path_on(basis, x_cl: Path):
    if len(x_cl.grid) == len(basis.grid) and np.allclose(x_cl.grid, basis.grid, rtol=0, atol=1e-12):
        return np.asarray(x_cl.values), np.asarray(x_cl.derivative)
    if abs(x_cl.grid[0] - basis.grid[0]) > 1e-12 or abs(x_cl.grid[-1] - basis.grid[-1]) > 1e-12:
        raise ValueError("basis and path must share the interval")
    spl = interpolate.CubicHermiteSpline(x_cl.grid, x_cl.values, x_cl.derivative)
    return spl(basis.grid), spl(basis.grid, 1)


def subsidiary_filter(basis: ModeBasis, model, x_cl: Path, tol=1e-8):
    """Keep the modes with int (dL0/dxdot along x_cl) u_n dt = 0.

    The tolerance is relative to the Cauchy-Schwarz bound
    sqrt(int p^2 dt * int u_n^2 dt).  For a harmonic L0 the report also
    records, for each mode label n of a sine-type basis, the boundary-data
    relation that makes the condition hold (x_b = x_a for odd n,
    x_b = -x_a for even n) and whether the given path satisfies it.
    """
    l0 = model.l0()
    x, v = _path_on(basis, x_cl)
    p = dL_dxdot(l0, v, x, basis.grid)
    wq = _trapz_weights(basis.grid)
    integrals = basis.modes @ (wq * p)
    bound = np.sqrt(np.sum(wq * p * p) * (basis.modes**2 @ wq))
    keep = np.abs(integrals) <= tol * np.maximum(bound, np.finfo(float).tiny)
    keep |= bound == 0.0
    relation = {}
    if model.kind == "harmonic" and basis.alphas is not None:
        x_a, x_b = float(x_cl.values[0]), float(x_cl.values[-1])
        T = basis.duration
        for lab, alpha in zip(basis.labels, basis.alphas):
            n = int(round(alpha * T / pi))
            want = "x_b = x_a" if n % 2 else "x_b = -x_a"
            target = x_a if n % 2 else -x_a
            relation[int(lab)] = (want, bool(abs(x_b - target) <= 1e-12 * max(1.0, abs(x_a))))
    filtered = replace(basis.subset(np.flatnonzero(keep)), filtered=True)
    report = SubsidiaryReport(
        integrals=integrals,
        kept=tuple(int(n) for n in basis.labels[keep]),
        rejected=tuple(int(n) for n in basis.labels[~keep]),
        scale=float(np.max(bound)) if len(bound) else 0.0,
        boundary_relation=relation,
    )
    return filtered, report


@dataclass(frozen=True)
class StabilityReport:
    stable: bool
    first_nonpositive: Optional[int]
    threshold_n: Optional[int]


def stability_check(basis: ModeBasis, omega=None) -> StabilityReport:
    """Stable iff every retained eigenvalue is strictly positive.

    Eigenvalues within ``ZERO_EIGENVALUE_TOL`` (relative to the largest
    magnitude) of zero count as zero, hence as unstable.

    ``threshold_n`` is the smallest integer n with n > omega T / pi, the
    first mode index guaranteed positive for a harmonic L0.
    """
    lam = np.asarray(basis.eigenvalues)
    bad = np.flatnonzero(lam <= ZERO_EIGENVALUE_TOL * max(1.0, float(np.max(np.abs(lam)))))
    omega = basis.omega if omega is None else omega
    threshold = None
    if omega is not None:
        threshold = int(np.floor(omega * basis.duration / pi)) + 1
    return StabilityReport(
        stable=bad.size == 0,
        first_nonpositive=int(basis.labels[bad[0]]) if bad.size else None,
        threshold_n=threshold,
    )


# ---------------------------------------------------------------------------
# slice <-> series transforms
# ---------------------------------------------------------------------------

def _is_free_family(basis):
    if basis.kind == "free":
        return True
    if basis.alphas is not None:
        n = np.rint(basis.alphas * basis.duration / pi).astype(int)
        return bool(np.all(n % 2 == 0))
    return False


def _check_slices(basis, timegrid: TimeGrid):
    if abs(timegrid.t_a - basis.grid[0]) > 1e-12 or abs(timegrid.t_b - basis.grid[-1]) > 1e-12:
        raise ValueError("time grid and basis must share the interval")
    if timegrid.N < 2:
        raise ValueError("need N >= 2 (at least one interior slice point)")
    if _is_free_family(basis) and timegrid.N % 2 == 0:
        raise DegenerateSliceError(
            f"N = {timegrid.N} is even: the 2n*pi mode family makes the slice transform "
            f"degenerate; use odd N = 2k+1")


def _log_abs_det(mat):
    if mat.shape[0] == mat.shape[1]:
        sign, logdet = np.linalg.slogdet(mat)
        return logdet if sign != 0 else -np.inf
    sv = np.linalg.svd(mat, compute_uv=False)
    return float(np.sum(np.log(sv)))


def slice_to_series(basis: ModeBasis, timegrid: TimeGrid) -> TransformPair:
    """Fit direction: a = B^{-1} y with B[n, m] = u_m(t_n) over interior slices."""
    _check_slices(basis, timegrid)
    n_int = timegrid.N - 1
    if basis.M < n_int:
        raise ValueError(f"need {n_int} modes for N = {timegrid.N}, basis has {basis.M}")
    t_int = timegrid.times()[1:-1]
    B = basis.subset(np.arange(n_int)).evaluate(t_int).T
    cond = np.linalg.cond(B)
    if not np.isfinite(cond) or cond > SINGULAR_CONDITION:
        raise SingularTransformError(
            f"slice matrix is singular (condition number {cond:.3g}); "
            "use series_by_projection instead", condition_number=cond)
    logdet = _log_abs_det(B)
    return TransformPair(
        slice_to_series=np.linalg.inv(B),
        series_to_slice=B,
        jacobian_det=float(np.exp(-logdet)),
        N=timegrid.N,
        method="slice",
        log_jacobian=-logdet,
        condition_number=float(cond),
    )


def _projection_matrix(basis, timegrid):
    """P[n, m] = <w u_n, hat_m> / <w u_n, u_n>, hat_m the piecewise-linear
    interpolant of a unit value at interior slice point m."""
    eps = timegrid.epsilon
    t_int = timegrid.times()[1:-1]
    T = basis.duration
    if basis.alphas is not None:
        # exact: int hat_m(t) sin(alpha (t - t_a)) dt = eps sinc^2(alpha eps / 2) sin(alpha (t_m - t_a))
        al = basis.alphas[:, None]
        sinc2 = np.sinc(al * eps / (2 * pi)) ** 2
        return eps * sinc2 * np.sin(al * (t_int[None, :] - timegrid.t_a)) / (T / 2)
    t = basis.grid
    hats = np.clip(1.0 - np.abs(t[None, :] - t_int[:, None]) / eps, 0.0, None)
    wq = _trapz_weights(t) * basis.weight
    num = (basis.modes * wq) @ hats.T
    den = np.sum(basis.modes**2 * wq, axis=1)
    return num / den[:, None]


def _check_orthogonal(basis):
    G = gram_matrix(basis)
    off = G - np.diag(np.diag(G))
    ratio = np.max(np.abs(off)) / np.max(np.abs(np.diag(G))) if basis.M > 1 else 0.0
    if ratio > ORTHOGONALITY_TOL:
        raise ValueError(f"basis is not orthogonal under its weight (cross term ratio {ratio:.3g})")


def series_by_projection(basis: ModeBasis, sliced_y, timegrid: TimeGrid, weight=None):
    """Amplitudes of the piecewise-linear sliced path by weighted projection.

    ``sliced_y`` holds the N+1 slice values (endpoints must vanish) or the
    N-1 interior values.  With the 2n*pi family only the (N-1)/2 modes that
    the interior values can resolve are used, and the inverse map is the
    pseudo-inverse.  ``weight`` overrides the basis weight.
    """
    if weight is not None:
        basis = replace(basis, weight=np.broadcast_to(np.asarray(weight, float), basis.grid.shape).copy())
    _check_slices(basis, timegrid)
    y = np.asarray(sliced_y, dtype=float)
    if len(y) == timegrid.N + 1:
        if abs(y[0]) > 1e-12 or abs(y[-1]) > 1e-12:
            raise ValueError("sliced deviation must vanish at both endpoints")
        y = y[1:-1]
    if len(y) != timegrid.N - 1:
        raise ValueError(f"expected {timegrid.N - 1} interior values, got {len(y)}")
    n_int = timegrid.N - 1
    M = n_int // 2 if _is_free_family(basis) else n_int
    if basis.M < M:
        raise ValueError(f"need {M} modes for N = {timegrid.N}, basis has {basis.M}")
    used = basis.subset(np.arange(M))
    _check_orthogonal(used)
    P = _projection_matrix(used, timegrid)
    cond = np.linalg.cond(P)
    if not np.isfinite(cond) or cond > SINGULAR_CONDITION:
        raise SingularTransformError(f"projection matrix is singular (condition number {cond:.3g})",
                                     condition_number=cond)
    inverse = np.linalg.inv(P) if P.shape[0] == P.shape[1] else np.linalg.pinv(P)
    logdet = _log_abs_det(P)
    pair = TransformPair(
        slice_to_series=P,
        series_to_slice=inverse,
        jacobian_det=float(np.exp(logdet)),
        N=timegrid.N,
        method="projection",
        log_jacobian=logdet,
        condition_number=float(cond),
    )
    return ModeAmplitudes(P @ y, used.labels.copy()), pair


def asymptotic_jacobian(kind: str, N: int, interval=(0.0, 1.0)) -> float:
    """log of (N-1)! (c pi / sqrt 2)^(N-1) (eps / T)^(N/2); c = 1 (sine) or 2 (free).

    eps / T = 1 / N, so the value does not depend on the interval length.
    """
    if N < 2:
        raise ValueError("N must be >= 2")
    c = {"sine": 1.0, "free": 2.0}.get(kind)
    if c is None:
        raise ValueError("kind must be 'sine' or 'free'")
    t_a, t_b = interval
    eps_over_T = ((t_b - t_a) / N) / (t_b - t_a)
    return lgamma(N) + (N - 1) * log(c * pi / np.sqrt(2.0)) + 0.5 * N * log(eps_over_T)


# ---------------------------------------------------------------------------
# fluctuation factor
# ---------------------------------------------------------------------------

def _quadratic_strength(model):
    """omega^2 such that V0 = m omega^2 x^2 / 2 (+ linear and constant terms)."""
    v0 = model.l0().potential0
    if not isinstance(v0, Polynomial):
        raise ValueError("fluctuation_factor needs a polynomial V0 of degree <= 2")
    coef = v0.convert().coef
    if len(coef) > 3 and np.any(coef[3:] != 0):
        raise ValueError("fluctuation_factor needs a quadratic L0")
    c2 = coef[2] if len(coef) > 2 else 0.0
    return 2.0 * c2 / model.mass


def _log_tail(z2, M):
    """sum_{n > M} log(1 - z2 / n^2) = -sum_k z2^k zeta(2k, M + 1) / k."""
    total = 0.0
    for k in range(1, 60):
        term = z2**k * special.zeta(2 * k, M + 1) / k
        total -= term
        if abs(term) < 1e-18 * max(1.0, abs(total)):
            break
    return total


def fluctuation_factor(model, interval, M: int = 10_000, method: str = "ratio") -> complex:
    """F(T) of a quadratic L0 from its mode spectrum lambda_n = (n pi / T)^2 - omega^2.

    ``ratio``: F = A(T)^{-1} prod_n (lambda0_n / lambda_n)^{1/2}, the first M
    factors explicit and the remainder summed as a Hurwitz zeta series.
    ``collected``: Gaussian integrals over M amplitudes times the asymptotic
    sine Jacobian at N = M + 1 slices, with no tail correction.
    """
    if M < 1:
        raise ValueError("M must be >= 1")
    t_a, t_b = interval
    T = t_b - t_a
    if not T > 0:
        raise ValueError("need t_b > t_a")
    m, hb = model.mass, model.hbar
    w2 = _quadratic_strength(model)
    n = np.arange(1, M + 1, dtype=float)
    lam0 = (n * pi / T) ** 2
    lam = lam0 - w2
    z2 = w2 * T**2 / pi**2
    near = np.abs(lam) <= 1e-12 * lam0
    if np.any(near):
        raise ResonanceError(f"omega T is a multiple of pi (mode {int(n[near][0])})")
    if np.any(lam <= 0):
        first = int(n[np.argmax(lam <= 0)])
        raise InstabilityError(f"mode {first} has a non-positive eigenvalue")
    phase = np.exp(-1j * pi / 4)
    if method == "ratio":
        log_mag = 0.5 * log(m / (2 * pi * hb * T)) - 0.5 * np.sum(np.log1p(-w2 / lam0))
        log_mag -= 0.5 * _log_tail(z2, M)
    elif method == "collected":
        N = M + 1
        eps = T / N
        log_mag = 0.5 * N * log(m / (2 * pi * hb * eps)) + asymptotic_jacobian("sine", N, interval)
        log_mag += 0.5 * np.sum(np.log(4 * pi * hb / (m * T * lam)))
    else:
        raise ValueError("method must be 'ratio' or 'collected'")
    return complex(np.exp(log_mag) * phase)


# ---------------------------------------------------------------------------
# action in mode coordinates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ShiftedActionReport:
    direct: float
    shifted: float
    difference: float


def shifted_action_series(model, x_cl: Path, basis: ModeBasis, amps) -> ShiftedActionReport:
    """S0[x_cl + sum a_n u_n] two ways.

    ``direct`` integrates L0 along the deviated path.  ``shifted`` integrates
    L0 at position x_cl with velocity xdot_cl + sum sqrt(lambda_n) a_n u_n,
    which agrees with the direct value for quadratic L0 once the subsidiary
    condition holds.
    """
    if not basis.filtered:
        raise ValueError("apply subsidiary_filter to the basis first")
    a = amps.a if isinstance(amps, ModeAmplitudes) else np.asarray(amps, dtype=float)
    if len(a) != basis.M:
        raise ValueError(f"expected {basis.M} amplitudes, got {len(a)}")
    if np.any((basis.eigenvalues <= 0) & (a != 0)):
        raise InstabilityError("shifted form needs positive eigenvalues for excited modes")
    l0 = model.l0()
    t = basis.grid
    x, v = _path_on(basis, x_cl)
    direct = action_integral(l0, t, x + a @ basis.modes, v + a @ basis.derivatives)
    root = np.sqrt(np.clip(basis.eigenvalues, 0.0, None))
    shifted = action_integral(l0, t, x, v + (root * a) @ basis.modes)
    return ShiftedActionReport(float(direct), float(shifted), float(direct - shifted))
