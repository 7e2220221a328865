import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from symcap.core import (BallSpec, Loop, PolydiscSpec, complex_to_real,
                         liouville_integral, omega0, real_to_complex,
                         smooth_bump, smooth_step, smooth_step_derivative,
                         standard_form_matrix, symplecticity_defect)


def circle_loop(radius=1.0, reverse=False, samples=512):
    sign = -1.0 if reverse else 1.0

    def ev(t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        ang = sign * 2 * np.pi * t
        return np.stack([radius * np.cos(ang), radius * np.sin(ang)], axis=1)

    return Loop(ev, samples)


class TestSmoothStep:
    def test_exactly_flat_outside(self):
        u = np.array([-5.0, -1e-12, 0.0, 1.0, 1.0 + 1e-12, 7.0])
        s = smooth_step(u, 0.0, 1.0)
        assert np.all(s[:3] == 0.0)
        assert np.all(s[3:] == 1.0)

    @given(st.floats(-2.0, 3.0), st.floats(-2.0, 3.0))
    @settings(max_examples=60, deadline=None)
    def test_bounded_and_ordered(self, a, b):
        lo, hi = sorted([a, b])
        if hi - lo < 1e-3:
            hi = lo + 1e-3
        u = np.linspace(lo - 1.0, hi + 1.0, 101)
        s = smooth_step(u, lo, hi)
        assert np.all((0.0 <= s) & (s <= 1.0))
        assert np.all(np.diff(s) >= -1e-12)

    def test_derivative_matches_finite_difference(self):
        u = np.linspace(-0.2, 1.2, 57)
        h = 1e-6
        fd = (smooth_step(u + h) - smooth_step(u - h)) / (2 * h)
        assert np.abs(smooth_step_derivative(u) - fd).max() < 1e-6

    def test_bump_peaks_at_one(self):
        u = np.linspace(-1.5, 1.5, 301)
        b = smooth_bump(u)
        assert math.isclose(b.max(), 1.0, abs_tol=1e-12)
        assert b[0] == 0.0 and b[-1] == 0.0


class TestLoops:
    def test_requires_even_sample_count(self):
        with pytest.raises(ValueError):
            circle_loop(samples=513)

    def test_requires_enough_samples(self):
        with pytest.raises(ValueError):
            circle_loop(samples=4)

    def test_requires_closure(self):
        def open_path(t):
            t = np.atleast_1d(np.asarray(t, dtype=float))
            return np.stack([t, np.zeros_like(t)], axis=1)

        with pytest.raises(ValueError):
            Loop(open_path, 64)

    def test_circle_area(self):
        for r in (0.5, 1.0, 1.7):
            a = liouville_integral(circle_loop(r))
            assert math.isclose(a, math.pi * r * r, abs_tol=1e-9)

    def test_orientation_flips_sign(self):
        a = liouville_integral(circle_loop(1.0, reverse=True))
        assert math.isclose(a, -math.pi, abs_tol=1e-9)

    def test_scaled_loop_scales_area_quadratically(self):
        a = liouville_integral(circle_loop(1.0).scaled(1.5))
        assert math.isclose(a, math.pi * 1.5 ** 2, abs_tol=1e-9)


class TestLinearAlgebra:
    @given(st.integers(1, 4))
    @settings(max_examples=8, deadline=None)
    def test_standard_form_squares_to_minus_one(self, n):
        J = standard_form_matrix(n)
        assert np.array_equal(J @ J, -np.eye(2 * n))

    def test_omega0_matches_matrix(self):
        rng = np.random.default_rng(3)
        x, y = rng.normal(size=(2, 6))
        assert math.isclose(omega0(x, y), x @ standard_form_matrix(3) @ y,
                            abs_tol=1e-12)

    @given(st.integers(1, 3))
    @settings(max_examples=6, deadline=None)
    def test_complex_real_roundtrip(self, n):
        rng = np.random.default_rng(n)
        z = rng.normal(size=(5, n)) + 1j * rng.normal(size=(5, n))
        assert np.allclose(real_to_complex(complex_to_real(z)), z)


class TestSymplecticityDefect:
    def test_linear_symplectic_map_has_tiny_defect(self):
        A = np.array([[1.0, 1.0], [0.0, 1.0]])  # shear: det 1, symplectic in 2d

        def f(x):
            return np.atleast_2d(x) @ A.T

        assert symplecticity_defect(f, probes=64) < 1e-8

    def test_dilation_is_detected(self):
        def f(x):
            return 2.0 * np.atleast_2d(x)

        assert symplecticity_defect(f, probes=64) > 1.0


class TestRegions:
    def test_ball_radius_from_capacity(self):
        assert math.isclose(BallSpec(math.pi).radius, 1.0, abs_tol=1e-12)
        assert math.isclose(BallSpec(2 * math.pi).radius, math.sqrt(2),
                            abs_tol=1e-12)

    def test_polydisc_profiles(self):
        assert PolydiscSpec.unit(3).radii == (1.0, 1.0, 1.0)
        assert PolydiscSpec.unit_with_free_last(3).radii == (1.0, 1.0, None)
