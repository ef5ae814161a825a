import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pathprop.classical import BoundaryData, Path, harmonic_reference_path, solve_bvp_classical
from pathprop.errors import PotentialSingularityError
from pathprop.model import (
    LagrangianModel,
    PhysicalUnits,
    VariationProbe,
    damped_substitution_check,
    eval_lagrangian,
    euler_lagrange_residual,
    gateaux_variation,
    legendre_check,
)

from conftest import sine_bump


def _path(t, x, v):
    return Path(t, x, v)


class TestUnitsAndModels:
    def test_units_validated(self):
        with pytest.raises(ValueError):
            PhysicalUnits(hbar=0.0)
        with pytest.raises(ValueError):
            PhysicalUnits(mass=-1.0)

    def test_partitions_sum_to_the_same_potential(self):
        x = np.linspace(-2, 2, 9)
        full = LagrangianModel.quartic()
        for part in ("kinetic", "harmonic"):
            m = LagrangianModel.quartic(partition=part, omega=1.3)
            np.testing.assert_allclose(m.potential(x), full.potential(x), atol=1e-14)
        assert np.all(LagrangianModel.quartic(partition="kinetic").potential0(x) == 0)

    def test_harmonic_partition_needs_frequency(self):
        with pytest.raises(ValueError):
            LagrangianModel.quartic(partition="harmonic")

    def test_l0_drops_perturbation(self):
        m = LagrangianModel.quartic(partition="harmonic", omega=2.0)
        assert np.all(m.l0().potential1(np.array([1.0, 3.0])) == 0)


class TestEvalLagrangian:
    def test_free(self, free):
        assert eval_lagrangian(free, 2.0, 5.0, 0.0) == pytest.approx(2.0)

    def test_harmonic(self, harmonic):
        assert eval_lagrangian(harmonic, 0.0, 1.0, 0.0) == pytest.approx(-0.5)

    def test_damped(self):
        m = LagrangianModel.damped_harmonic(1.0, 0.5)
        assert eval_lagrangian(m, 1.0, 0.0, 2.0) == pytest.approx(np.e**2 * 0.5, rel=1e-14)

    def test_singular_potential_reported(self):
        m = LagrangianModel(potential0=lambda x: 1.0 / x)
        with pytest.raises(PotentialSingularityError):
            eval_lagrangian(m, 0.0, 0.0)

    def test_broadcasts(self, harmonic):
        out = eval_lagrangian(harmonic, np.ones(3), np.zeros(3), np.arange(3.0))
        np.testing.assert_allclose(out, 0.5)


class TestEulerLagrange:
    def test_free_straight_line(self, free, unit_line):
        assert np.max(np.abs(euler_lagrange_residual(free, unit_line))) < 1e-10

    def test_harmonic_sine(self, harmonic):
        t = np.linspace(0, 1, 101)
        r = euler_lagrange_residual(harmonic, _path(t, np.sin(t), np.cos(t)))
        assert np.max(np.abs(r)) < 1e-3

    def test_harmonic_parabola(self, harmonic):
        t = np.linspace(0, 1, 101)
        r = euler_lagrange_residual(harmonic, _path(t, t**2, 2 * t))
        # -xddot - omega^2 x at t = 0.5
        assert r[49] == pytest.approx(-2.25, abs=1e-6)

    def test_too_few_samples(self, free):
        t = np.linspace(0, 1, 4)
        with pytest.raises(ValueError):
            euler_lagrange_residual(free, _path(t, t, np.ones(4)))

    @pytest.mark.parametrize("model", [LagrangianModel.harmonic(1.0), LagrangianModel.quartic(),
                                       LagrangianModel.custom_polynomial([0, 0.3, 0.5, 0.0, 0.1])])
    def test_second_order_convergence(self, model):
        bc = BoundaryData(0.0, 1.0, 0.0, 1.0)
        errs = [np.max(np.abs(euler_lagrange_residual(model, solve_bvp_classical(model, bc, n))))
                for n in (21, 41, 81)]
        orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
        assert np.all(orders >= 1.8)


class TestLegendre:
    def test_free(self, free, unit_line):
        rep = legendre_check(free, unit_line)
        assert rep.satisfied and rep.min_value == pytest.approx(1.0, abs=1e-6)

    def test_damped_prefactor(self, unit_line):
        rep = legendre_check(LagrangianModel.damped_harmonic(1.0, 0.5), unit_line)
        assert rep.satisfied and rep.min_value == pytest.approx(1.0, abs=1e-6)

    def test_negative_mass_like_kinetic_fails(self, unit_line):
        m = LagrangianModel(time_prefactor=lambda t: -np.ones_like(np.asarray(t, float)))
        assert not legendre_check(m, unit_line).satisfied


class TestGateaux:
    def probe(self, path, order, k=1):
        eta, deta = sine_bump(path.grid, k)
        return VariationProbe(path.grid, eta, deta, order=order)

    def test_first_variation_vanishes(self, free, unit_line):
        assert abs(gateaux_variation(free, unit_line, self.probe(unit_line, 1))) < 1e-8

    def test_second_variation_free(self, free):
        t = np.linspace(0, 1, 4001)
        line = _path(t, t, np.ones_like(t))
        assert gateaux_variation(free, line, self.probe(line, 2)) == pytest.approx(np.pi**2 / 2, abs=1e-4)

    def test_second_variation_harmonic(self, harmonic):
        p = harmonic_reference_path(BoundaryData(0, 1, 0, 1), 1.0, 4001)
        val = gateaux_variation(harmonic, p, self.probe(p, 2))
        assert val == pytest.approx(np.pi**2 / 2 - 0.5, abs=1e-3)

    def test_higher_orders_of_quadratic_action_vanish(self, harmonic, harmonic_unit_path):
        for order in (3, 4):
            assert abs(gateaux_variation(harmonic, harmonic_unit_path,
                                         self.probe(harmonic_unit_path, order))) < 1e-2

    def test_fourth_variation_quartic(self):
        # S = int (xdot^2/2 - x^4/4): d^4/dsigma^4 = -6 int eta^4 dt = -6 * 3/8
        t = np.linspace(0, 1, 2001)
        base = _path(t, np.zeros_like(t), np.zeros_like(t))
        eta, deta = sine_bump(t)
        probe = VariationProbe(t, eta, deta, order=4, scale=5e-2)
        assert gateaux_variation(LagrangianModel.quartic(), base, probe) == pytest.approx(-2.25, rel=1e-3)

    def test_order_validation(self, free, unit_line):
        with pytest.raises(ValueError):
            gateaux_variation(free, unit_line, self.probe(unit_line, 5))
        with pytest.raises(ValueError):
            VariationProbe(unit_line.grid, np.ones(len(unit_line)), np.zeros(len(unit_line)))

    @settings(max_examples=20, deadline=None)
    @given(coeffs=st.lists(st.floats(-1, 1), min_size=3, max_size=3))
    def test_first_variation_zero_for_random_eta(self, coeffs):
        model = LagrangianModel.harmonic(1.0)
        # trapezoid quadrature leaves an O(h^2 k^2) first variation; 2001 samples keep it < 1e-6
        path = harmonic_reference_path(BoundaryData(0, 1, 0, 1), 1.0, 2001)
        t = path.grid
        eta = sum(c * np.sin((k + 1) * np.pi * t) for k, c in enumerate(coeffs))
        deta = sum(c * (k + 1) * np.pi * np.cos((k + 1) * np.pi * t) for k, c in enumerate(coeffs))
        if np.max(np.abs(eta)) < 1e-3:
            return
        probe = VariationProbe(t, eta, deta, order=1)
        scale = max(1.0, abs(float(np.trapezoid(model(path.derivative, path.values), t))))
        assert abs(gateaux_variation(model, path, probe)) <= 1e-6 * scale

    @settings(max_examples=20, deadline=None)
    @given(coeffs=st.lists(st.floats(-2, 2), min_size=2, max_size=4))
    def test_second_variation_even_in_eta(self, coeffs):
        model = LagrangianModel.quartic()
        path = solve_bvp_classical(model, BoundaryData(0, 1, 0, 1), 201)
        t = path.grid
        eta = sum(c * np.sin((k + 1) * np.pi * t) for k, c in enumerate(coeffs))
        deta = sum(c * (k + 1) * np.pi * np.cos((k + 1) * np.pi * t) for k, c in enumerate(coeffs))
        if np.max(np.abs(eta)) < 1e-3:
            return
        probe = VariationProbe(t, eta, deta, order=2)
        a = gateaux_variation(model, path, probe)
        b = gateaux_variation(model, path, probe.negated())
        assert abs(a - b) <= 1e-10 * max(1.0, abs(a))


class TestDampedSubstitution:
    def test_constant_path(self):
        t = np.linspace(0, 1, 51)
        rep = damped_substitution_check(LagrangianModel.damped_harmonic(1.0, 0.5),
                                        _path(t, np.ones_like(t), np.zeros_like(t)))
        assert rep.explicit_time_dependence < 1e-10
        assert rep.closed_form_deviation < 1e-10

    def test_decaying_path_gives_constant_xi(self):
        t = np.linspace(0, 1, 51)
        rep = damped_substitution_check(LagrangianModel.damped_harmonic(1.0, 1.0),
                                        _path(t, np.exp(-t), -np.exp(-t)))
        np.testing.assert_allclose(rep.xi, 1.0, rtol=1e-14)
        np.testing.assert_allclose(rep.transformed, 0.0, atol=1e-12)
        assert rep.explicit_time_dependence < 1e-10

    def test_no_damping(self, unit_line):
        with pytest.raises(ValueError, match="no damping"):
            damped_substitution_check(LagrangianModel.harmonic(1.0), unit_line)
