import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pathprop.classical import BoundaryData, harmonic_reference_path, straight_line_path
from pathprop.errors import (
    DegenerateSliceError,
    InstabilityError,
    LegendreError,
    ResonanceError,
    SingularTransformError,
)
from pathprop.model import LagrangianModel
from pathprop.modes import (
    ModeAmplitudes,
    asymptotic_jacobian,
    fluctuation_factor,
    fourier_sine_basis,
    free_mode_basis,
    gram_matrix,
    series_by_projection,
    shifted_action_series,
    slice_to_series,
    stability_check,
    sturm_liouville_basis,
    subsidiary_filter,
    weighted_inner,
)
from pathprop.slicing import TimeGrid


def exact_harmonic_factor(omega, T):
    return np.sqrt(omega / (2j * np.pi * np.sin(omega * T)))


def line(x_a, x_b, T=1.0, samples=2001):
    return straight_line_path(BoundaryData(0.0, T, x_a, x_b), samples)


class TestTrigBases:
    def test_sine_values(self):
        b = fourier_sine_basis((0, 1), 2)
        np.testing.assert_allclose(b.evaluate([0.5]).ravel(), [1.0, 0.0], atol=1e-15)
        assert weighted_inner(b, b.modes[0], b.modes[1]) == pytest.approx(0.0, abs=1e-14)
        np.testing.assert_allclose(b.eigenvalues, [np.pi**2, 4 * np.pi**2])

    def test_free_values(self):
        b = free_mode_basis((0, 1), 3)
        assert b.evaluate([0.25])[0, 0] == pytest.approx(1.0)
        assert b.eigenvalues[0] == pytest.approx(4 * np.pi**2)
        # every mode spans full periods
        assert np.all(np.abs(np.trapezoid(b.modes, b.grid, axis=1)) < 1e-14)

    @pytest.mark.parametrize("make", [fourier_sine_basis, free_mode_basis])
    def test_orthogonal_and_normalized(self, make):
        b = make((0.5, 2.5), 8)
        G = gram_matrix(b)
        off = G - np.diag(np.diag(G))
        assert np.max(np.abs(off)) <= 1e-8 * np.max(np.diag(G))
        np.testing.assert_allclose(np.diag(G), b.duration / 2, rtol=1e-10)
        assert np.all(b.modes[:, [0, -1]] == 0)

    def test_invalid(self):
        with pytest.raises(ValueError):
            fourier_sine_basis((0, 1), 0)
        with pytest.raises(ValueError):
            free_mode_basis((1, 1), 2)

    def test_synthesize_matches_evaluate(self):
        b = fourier_sine_basis((0, 1), 4)
        a = ModeAmplitudes([0.3, -0.1, 0.2, 0.05])
        t = np.linspace(0, 1, 7)
        np.testing.assert_allclose(b.synthesize(a, t), a.a @ np.sin(np.outer(np.arange(1, 5), np.pi * t)), atol=1e-15)
        with pytest.raises(ValueError):
            b.synthesize([1.0])

    def test_amplitudes_finite(self):
        with pytest.raises(ValueError):
            ModeAmplitudes([1.0, np.nan])


class TestSturmLiouville:
    def test_free_matches_sine_family(self, free):
        b = sturm_liouville_basis(free, line(0, 1), 3)
        n = np.arange(1, 4)
        np.testing.assert_allclose(b.eigenvalues, (n * np.pi) ** 2, atol=1e-4)
        assert np.max(np.abs(b.modes - np.sin(n[:, None] * np.pi * b.grid))) < 1e-4

    @pytest.mark.parametrize("omega,T", [(1.0, 1.0), (1.0, 2.0), (2.5, 1.0)])
    def test_harmonic_shift(self, omega, T):
        path = harmonic_reference_path(BoundaryData(0.0, T, 0.3, -0.2), omega, 2001)
        b = sturm_liouville_basis(LagrangianModel.harmonic(omega), path, 5)
        n = np.arange(1, 6)
        np.testing.assert_allclose(b.eigenvalues, (n * np.pi / T) ** 2 - omega**2, atol=1e-3)

    def test_stability_boundary_eigenvalue(self):
        # at omega T = pi the zero path is the classical path
        b = sturm_liouville_basis(LagrangianModel.harmonic(np.pi), line(0, 0), 2)
        assert b.eigenvalues[0] == pytest.approx(0.0, abs=1e-3)

    def test_orthogonality_and_normalization(self, harmonic):
        path = harmonic_reference_path(BoundaryData(0.0, 1.0, 1.0, 0.0), 1.0, 2001)
        b = sturm_liouville_basis(harmonic, path, 5)
        G = gram_matrix(b)
        off = G - np.diag(np.diag(G))
        assert np.max(np.abs(off)) <= 1e-8 * np.max(np.diag(G))
        np.testing.assert_allclose(np.diag(G), 0.5, rtol=1e-10)
        # sign convention: first nonzero sample is positive
        assert np.all(b.modes[:, 1] > 0)

    def test_grid_too_coarse(self, free):
        with pytest.raises(ValueError, match="coarse"):
            sturm_liouville_basis(free, line(0, 1, samples=21), 6)

    def test_legendre_failure(self):
        inverted = LagrangianModel(time_prefactor=lambda t: -np.ones_like(np.asarray(t, float)))
        with pytest.raises(LegendreError):
            sturm_liouville_basis(inverted, line(0, 1, samples=201), 2)

    def test_user_q_hook(self, free):
        b = sturm_liouville_basis(free, line(0, 1), 2, q=lambda t: -np.ones_like(t))
        np.testing.assert_allclose(b.eigenvalues, np.array([1, 4]) * np.pi**2 - 1, atol=1e-4)


class TestSubsidiary:
    def test_free_line_keeps_even(self, free):
        b = fourier_sine_basis((0, 1), 6, samples=2001)
        kept, rep = subsidiary_filter(b, free, line(0, 1))
        assert rep.kept == (2, 4, 6) and rep.rejected == (1, 3, 5)
        assert kept.filtered and kept.M == 3

    def test_free_equal_ends_keeps_all(self, free):
        b = fourier_sine_basis((0, 1), 5, samples=2001)
        kept, rep = subsidiary_filter(b, free, line(0.7, 0.7))
        assert rep.rejected == () and kept.M == 5

    def test_harmonic_antisymmetric_ends(self, harmonic):
        path = harmonic_reference_path(BoundaryData(0.0, 1.0, 1.0, -1.0), 1.0, 2001)
        b = fourier_sine_basis((0, 1), 6, samples=2001)
        _, rep = subsidiary_filter(b, harmonic, path)
        assert rep.kept == (2, 4, 6)
        assert rep.boundary_relation[2] == ("x_b = -x_a", True)
        assert rep.boundary_relation[1] == ("x_b = x_a", False)

    def test_empty_result_reported(self, free):
        b = fourier_sine_basis((0, 1), 1, samples=2001)
        kept, rep = subsidiary_filter(b, free, line(0, 1))
        assert rep.empty and kept.M == 0

    def test_interval_mismatch(self, free):
        with pytest.raises(ValueError):
            subsidiary_filter(fourier_sine_basis((0, 2), 2), free, line(0, 1))


class TestStability:
    def test_harmonic_stable(self, harmonic):
        path = harmonic_reference_path(BoundaryData(0.0, 1.0, 0.0, 0.0), 1.0, 2001)
        rep = stability_check(sturm_liouville_basis(harmonic, path, 3))
        assert rep.stable and rep.first_nonpositive is None and rep.threshold_n == 1

    def test_harmonic_unstable(self):
        model = LagrangianModel.harmonic(4.0)
        path = harmonic_reference_path(BoundaryData(0.0, 1.0, 0.0, 0.0), 4.0, 2001)
        rep = stability_check(sturm_liouville_basis(model, path, 3))
        assert not rep.stable and rep.first_nonpositive == 1 and rep.threshold_n == 2

    @pytest.mark.parametrize("T,stable", [(3.0, True), (3.2, False)])
    def test_period_bound(self, harmonic, T, stable):
        path = harmonic_reference_path(BoundaryData(0.0, T, 0.0, 0.0), 1.0, 4001)
        assert stability_check(sturm_liouville_basis(harmonic, path, 3)).stable is stable

    def test_boundary_counts_as_unstable(self):
        rep = stability_check(sturm_liouville_basis(LagrangianModel.harmonic(np.pi), line(0, 0), 2))
        assert not rep.stable and rep.first_nonpositive == 1 and rep.threshold_n == 2

    def test_free_basis_stable(self):
        rep = stability_check(free_mode_basis((0, 1), 10))
        assert rep.stable and rep.threshold_n is None


class TestSliceTransform:
    def test_sine_two_slices(self):
        pair = slice_to_series(fourier_sine_basis((0, 1), 1), TimeGrid(0, 1, 2))
        np.testing.assert_allclose(pair.series_to_slice, [[1.0]])
        assert pair.jacobian_det == pytest.approx(1.0)

    def test_sine_three_slices(self):
        pair = slice_to_series(fourier_sine_basis((0, 1), 2), TimeGrid(0, 1, 3))
        r = np.sqrt(3) / 2
        np.testing.assert_allclose(pair.series_to_slice, [[r, r], [r, -r]], atol=1e-15)
        assert pair.jacobian_det == pytest.approx(2 / 3)
        np.testing.assert_allclose(pair.slice_to_series @ pair.series_to_slice, np.eye(2), atol=1e-10)

    def test_free_basis_singular(self):
        with pytest.raises(SingularTransformError) as info:
            slice_to_series(free_mode_basis((0, 1), 2), TimeGrid(0, 1, 3))
        assert info.value.condition_number > 1e12

    def test_free_basis_even_n(self):
        with pytest.raises(DegenerateSliceError, match="odd"):
            slice_to_series(free_mode_basis((0, 1), 3), TimeGrid(0, 1, 4))

    def test_too_few_modes(self):
        with pytest.raises(ValueError):
            slice_to_series(fourier_sine_basis((0, 1), 2), TimeGrid(0, 1, 5))


class TestProjection:
    def test_free_symmetric_slices(self):
        amps, pair = series_by_projection(free_mode_basis((0, 1), 1), [1.0, 1.0], TimeGrid(0, 1, 3))
        assert amps.a[0] == pytest.approx(0.0, abs=1e-15)

    @pytest.mark.parametrize("N", [3, 5, 9])
    def test_free_closed_form(self, N):
        rng = np.random.default_rng(N)
        y = rng.normal(size=N - 1)
        amps, _ = series_by_projection(free_mode_basis((0, 1), N), y, TimeGrid(0, 1, N))
        n = np.arange(1, (N - 1) // 2 + 1)[:, None]
        m = np.arange(1, N)[None, :]
        closed = (2 * N / (n[:, 0] ** 2 * np.pi**2)) * np.sin(n[:, 0] * np.pi / N) ** 2 * (
            np.sin(2 * n * m * np.pi / N) @ y)
        np.testing.assert_allclose(amps.a, closed, atol=1e-13)

    def test_basis_vector(self):
        b = fourier_sine_basis((0, 1), 15)
        tg = TimeGrid(0, 1, 16)
        amps, _ = series_by_projection(b, np.sin(np.pi * tg.times()), tg)
        # the piecewise-linear interpolant damps mode n by sinc^2(n pi / 2N)
        assert amps.a[0] == pytest.approx(np.sinc(1 / 32) ** 2, rel=1e-12)
        assert amps.a[0] == pytest.approx(1.0, abs=4e-3)
        assert np.max(np.abs(amps.a[1:])) < 1e-12

    def test_zero_path(self):
        amps, _ = series_by_projection(fourier_sine_basis((0, 1), 4), np.zeros(6), TimeGrid(0, 1, 5))
        assert np.all(amps.a == 0)

    def test_endpoints_must_vanish(self):
        with pytest.raises(ValueError, match="vanish"):
            series_by_projection(fourier_sine_basis((0, 1), 2), [0.1, 0.0, 0.0, 0.0], TimeGrid(0, 1, 3))

    def test_non_orthogonal_weight(self):
        b = fourier_sine_basis((0, 1), 3)
        with pytest.raises(ValueError, match="orthogonal"):
            series_by_projection(b, np.zeros(2), TimeGrid(0, 1, 3), weight=1 + 5 * b.grid)

    def test_free_even_n(self):
        with pytest.raises(DegenerateSliceError):
            series_by_projection(free_mode_basis((0, 1), 4), np.zeros(3), TimeGrid(0, 1, 4))

    @settings(max_examples=40, deadline=None)
    @given(k=st.integers(1, 20), seed=st.integers(0, 2**16), kind=st.sampled_from(["sine", "free"]))
    def test_round_trip(self, k, seed, kind):
        N = 2 * k + 1
        make = fourier_sine_basis if kind == "sine" else free_mode_basis
        tg = TimeGrid(0, 1, N)
        basis = make((0, 1), N)
        M = N - 1 if kind == "sine" else (N - 1) // 2
        c = np.random.default_rng(seed).normal(size=M)
        y = c @ basis.subset(np.arange(M)).evaluate(tg.times()[1:-1])
        amps, pair = series_by_projection(basis, y, tg)
        assert np.max(np.abs(pair.series_to_slice @ amps.a - y)) <= 1e-10 * max(1.0, np.max(np.abs(y)))


class TestAsymptoticJacobian:
    def test_two_slices(self):
        assert asymptotic_jacobian("sine", 2) == pytest.approx(np.log(np.pi / (2 * np.sqrt(2))), abs=1e-12)
        assert asymptotic_jacobian("sine", 2) == pytest.approx(0.1050, abs=5e-5)

    def test_three_slices(self):
        assert asymptotic_jacobian("sine", 3) == pytest.approx(0.6415413386966353, rel=1e-12)

    @pytest.mark.parametrize("N", [2, 5, 40])
    def test_free_ratio(self, N):
        diff = asymptotic_jacobian("free", N) - asymptotic_jacobian("sine", N)
        assert diff == pytest.approx((N - 1) * np.log(2), rel=1e-12)

    def test_interval_independent(self):
        assert asymptotic_jacobian("sine", 7, (2, 5)) == pytest.approx(asymptotic_jacobian("sine", 7))

    def test_invalid(self):
        with pytest.raises(ValueError):
            asymptotic_jacobian("sine", 1)
        with pytest.raises(ValueError):
            asymptotic_jacobian("cosine", 4)

    def test_mean_relation(self):
        # log J_asym is the mean of the slice-fit and projection log determinants
        for N in (5, 11, 21):
            tg = TimeGrid(0, 1, N)
            b = fourier_sine_basis((0, 1), N - 1)
            fit = slice_to_series(b, tg)
            _, proj = series_by_projection(b, np.zeros(N - 1), tg)
            assert asymptotic_jacobian("sine", N) == pytest.approx(-(fit.log_jacobian + proj.log_jacobian) / 2, abs=1e-9)


class TestFluctuationFactor:
    def test_free(self, free):
        F = fluctuation_factor(free, (0, 1))
        assert F == pytest.approx(np.sqrt(1 / (2j * np.pi)), rel=1e-12)
        assert abs(F) == pytest.approx(0.3989422804, rel=1e-9)

    @pytest.mark.parametrize("wT", [0.5, 1.0, np.pi / 2, 2.5])
    def test_harmonic_ratio(self, harmonic, wT):
        F = fluctuation_factor(harmonic, (0, wT), M=10_000)
        assert abs(F / exact_harmonic_factor(1.0, wT) - 1) <= 1e-12

    @pytest.mark.parametrize("wT", [0.5, 2.5])
    def test_harmonic_collected(self, harmonic, wT):
        F = fluctuation_factor(harmonic, (0, wT), M=10_000, method="collected")
        assert abs(F / exact_harmonic_factor(1.0, wT) - 1) <= 1e-4

    def test_small_omega_limit(self, free):
        F = fluctuation_factor(LagrangianModel.harmonic(1e-4), (0, 1))
        assert F == pytest.approx(fluctuation_factor(free, (0, 1)), rel=1e-6)

    def test_resonance(self, harmonic):
        with pytest.raises(ResonanceError):
            fluctuation_factor(harmonic, (0, np.pi))

    def test_instability(self, harmonic):
        with pytest.raises(InstabilityError):
            fluctuation_factor(harmonic, (0, 4.0))

    def test_non_quadratic(self):
        with pytest.raises(ValueError):
            fluctuation_factor(LagrangianModel.quartic(), (0, 1))

    def test_bad_method(self, harmonic):
        with pytest.raises(ValueError):
            fluctuation_factor(harmonic, (0, 1), method="zeta")


class TestShiftedAction:
    def test_requires_filter(self, free):
        with pytest.raises(ValueError, match="subsidiary"):
            shifted_action_series(free, line(0, 0), free_mode_basis((0, 1), 1, samples=2001), [0.1])

    def test_zero_amplitudes(self, harmonic):
        path = harmonic_reference_path(BoundaryData(0.0, 1.0, 0.0, 0.0), 1.0, 2001)
        b, _ = subsidiary_filter(fourier_sine_basis((0, 1), 2, samples=2001), harmonic, path)
        rep = shifted_action_series(harmonic, path, b, np.zeros(b.M))
        assert rep.direct == rep.shifted

    def test_free_single_mode(self, free):
        b, _ = subsidiary_filter(free_mode_basis((0, 1), 1, samples=4001), free, line(0.5, 0.5, samples=4001))
        rep = shifted_action_series(free, line(0.5, 0.5, samples=4001), b, [0.1])
        assert rep.direct == pytest.approx(0.01 * (2 * np.pi) ** 2 / 4, rel=1e-8)
        assert abs(rep.difference) < 1e-8

    def test_harmonic_single_mode(self, harmonic):
        path = harmonic_reference_path(BoundaryData(0.0, 1.0, 0.0, 0.0), 1.0, 2001)
        b, _ = subsidiary_filter(sturm_liouville_basis(harmonic, path, 1), harmonic, path)
        rep = shifted_action_series(harmonic, path, b, [0.2])
        assert rep.shifted == pytest.approx(rep.direct, rel=1e-6)
