"""Self-consistent transform solver, density inversion, and quadrature.

Independent oracles:
- pure noise: the transform satisfies the quadratic
  z s2 A^2 + (z + s2 (1 - y)) A + 1 = 0, and the density has the closed
  form sqrt((x - lo)(hi - x)) / (2 pi x y s2) on [lo, hi].
- masses: scipy.integrate.quad over the inverted density, run with
  tolerances independent of the in-repo quadrature.
"""

import numpy as np
import pytest
from scipy.integrate import quad

from specsplit import (
    DomainError,
    NoiseSignalModel,
    eta_schedule,
    find_support_layout,
    interval_mass,
    limiting_cdf,
    limiting_density,
    mp_density,
    solve_stieltjes,
)

NOISE = NoiseSignalModel(1.0)
SPIKE = NoiseSignalModel(1.0, 0.1, ((5.0, 1.0),))


class TestSolver:
    @pytest.mark.parametrize(
        "z", [1.0 + 1e-7j, 0.3 + 1e-5j, 2.2 + 0.5j, -1.0 + 1e-6j, 9.0 + 1e-4j]
    )
    @pytest.mark.parametrize("y", [0.25, 1.0, 4.0])
    def test_residual_and_branch(self, z, y):
        sol = solve_stieltjes(z, y, NOISE)
        assert sol.residual < 1e-12
        assert sol.a_value.imag > 0

    @pytest.mark.parametrize("y", [0.25, 0.8, 2.0])
    def test_pure_noise_quadratic(self, y):
        for x in (0.4, 1.0, 2.1, 3.5):
            sol = solve_stieltjes(complex(x, 1e-6), y, NOISE)
            a = sol.a_value
            z = sol.z
            resid = z * a * a + (z + (1.0 - y)) * a + 1.0
            assert abs(resid) < 1e-9

    def test_signal_model_residual(self):
        for x in (0.5, 2.0, 4.2, 7.9):
            sol = solve_stieltjes(complex(x, 1e-6), 0.5, SPIKE)
            assert sol.residual < 1e-12
            assert sol.a_value.imag > 0

    def test_warm_start_agrees_with_cold(self):
        z = 1.3 + 1e-6j
        cold = solve_stieltjes(z, 0.25, NOISE)
        near = solve_stieltjes(1.300001 + 1e-6j, 0.25, NOISE)
        warm = solve_stieltjes(z, 0.25, NOISE, a0=near.a_value)
        assert abs(warm.a_value - cold.a_value) < 1e-10
        assert warm.iterations <= cold.iterations

    def test_large_scale_support(self):
        # cold starts must handle supports far from unit scale
        big = NoiseSignalModel(1.0, 0.25, ((120.0, 1.0),))
        sol = solve_stieltjes(100.0 + 1e-6j, 0.05, big)
        assert sol.residual < 1e-12

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            solve_stieltjes(1.0 + 0.0j, 0.25, NOISE)
        with pytest.raises(DomainError):
            solve_stieltjes(1.0 - 1e-3j, 0.25, NOISE)
        with pytest.raises(DomainError):
            solve_stieltjes(1.0 + 1e-3j, 0.0, NOISE)


class TestClosedFormDensity:
    def test_spot_value(self):
        # sqrt(0.75 * 1.25) / (2 pi * 0.25) at x = 1, y = 1/4, s2 = 1
        expected = np.sqrt(0.9375) / (np.pi / 2.0)
        assert mp_density(1.0, 0.25, 1.0) == pytest.approx(expected, rel=1e-14)

    def test_zero_outside_support(self):
        xs = np.array([0.1, 2.3, 5.0])
        np.testing.assert_array_equal(mp_density(xs, 0.25, 1.0), 0.0)

    def test_integrates_to_continuous_mass(self):
        total, _ = quad(lambda x: mp_density(x, 0.25, 1.0), 0.25, 2.25)
        assert total == pytest.approx(1.0, abs=1e-8)
        total4, _ = quad(lambda x: mp_density(x, 4.0, 1.0), 1.0, 9.0)
        assert total4 == pytest.approx(0.25, abs=1e-8)

    def test_scales_with_noise_power(self):
        # density at s2*x for power s2 equals density at x for power 1, / s2
        assert mp_density(3.0, 0.25, 2.0) == pytest.approx(
            mp_density(1.5, 0.25, 1.0) / 2.0, rel=1e-12
        )


class TestInvertedDensity:
    def test_matches_closed_form_inside_support(self):
        xs = np.linspace(0.30, 2.20, 25)
        dens = limiting_density(xs, 0.25, NOISE, eta=1e-5)
        np.testing.assert_allclose(dens, mp_density(xs, 0.25, 1.0), atol=1e-6)

    def test_scalar_input(self):
        d = limiting_density(1.0, 0.25, NOISE, eta=1e-5)
        assert isinstance(d, float)
        assert d == pytest.approx(mp_density(1.0, 0.25, 1.0), abs=1e-6)

    def test_unsorted_input_returns_original_order(self):
        xs = np.array([2.0, 0.5, 1.0])
        dens = limiting_density(xs, 0.25, NOISE, eta=1e-5)
        one_by_one = [limiting_density(float(x), 0.25, NOISE, eta=1e-5) for x in xs]
        np.testing.assert_allclose(dens, one_by_one, atol=1e-9)

    def test_vanishes_in_gap(self):
        lay = find_support_layout(0.5, SPIKE)
        mid = 0.5 * (lay.intervals[0].hi + lay.intervals[1].lo)
        assert abs(limiting_density(mid, 0.5, SPIKE, eta=1e-5)) < 1e-6

    def test_eta_schedule_floor(self):
        assert eta_schedule(0.0, 1e-6) == pytest.approx(1e-7)
        assert eta_schedule(0.0, 512.0) == pytest.approx(1e-3)


class TestIntervalMass:
    def test_pure_noise_bulk(self):
        assert interval_mass(0.25, 2.25, 0.25, NOISE) == pytest.approx(1.0, abs=1e-6)

    def test_sub_interval_against_scipy(self):
        ours = interval_mass(0.5, 1.5, 0.25, NOISE, tol=1e-8)
        ref, err = quad(lambda x: mp_density(x, 0.25, 1.0), 0.5, 1.5)
        assert ours == pytest.approx(ref, abs=1e-7)

    def test_split_component_masses(self):
        lay = find_support_layout(0.5, SPIKE)
        noise_iv, sig_iv = lay.intervals
        assert interval_mass(noise_iv.lo, noise_iv.hi, 0.5, SPIKE) == pytest.approx(
            0.9, abs=1e-4
        )
        assert interval_mass(sig_iv.lo, sig_iv.hi, 0.5, SPIKE) == pytest.approx(
            0.1, abs=1e-4
        )

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            interval_mass(1.0, 0.5, 0.25, NOISE)


class TestLimitingCdf:
    def test_pure_noise_below_unit_ratio(self):
        lay = find_support_layout(0.25, NOISE)
        cdf = limiting_cdf(0.25, NOISE, lay)
        assert cdf.eval(lay.intervals[0].lo - 1e-6) == 0.0
        assert cdf.eval(lay.intervals[0].hi) == pytest.approx(1.0)
        xs = cdf.breakpoints()
        vals = cdf.eval(xs)
        assert np.all(np.diff(vals) >= -1e-12)

    def test_atom_at_zero_above_unit_ratio(self):
        lay = find_support_layout(4.0, NOISE)
        cdf = limiting_cdf(4.0, NOISE, lay)
        assert cdf.eval_left(0.0) == 0.0
        assert cdf.eval(0.0) == pytest.approx(0.75)
        assert cdf.eval(9.0) == pytest.approx(1.0)

    def test_split_interval_masses_exact(self):
        lay = find_support_layout(0.5, SPIKE)
        cdf = limiting_cdf(0.5, SPIKE, lay)
        assert cdf.eval(lay.intervals[0].hi) == pytest.approx(0.9, abs=1e-12)
        gap_mid = 0.5 * (lay.intervals[0].hi + lay.intervals[1].lo)
        assert cdf.eval(gap_mid) == pytest.approx(0.9, abs=1e-12)
        assert cdf.eval(lay.intervals[1].hi) == pytest.approx(1.0, abs=1e-12)

    def test_grid_increment_bound_small(self):
        lay = find_support_layout(0.25, NOISE)
        cdf = limiting_cdf(0.25, NOISE, lay, points_per_interval=512)
        assert cdf.max_grid_increment() < 0.01
