"""Safeguarded Newton/bisection scalar root finder."""

import math

import numpy as np
import pytest

from specsplit import DomainError, newton_bisect


class TestNewtonBisect:
    def test_sqrt_two(self):
        r = newton_bisect(lambda x: x * x - 2.0, lambda x: 2.0 * x, 0.0, 2.0)
        assert r == pytest.approx(math.sqrt(2.0), abs=1e-12)

    def test_cubic(self):
        r = newton_bisect(lambda x: x**3 - x - 2.0, lambda x: 3 * x * x - 1.0, 1.0, 2.0)
        assert r ** 3 - r - 2.0 == pytest.approx(0.0, abs=1e-10)

    def test_endpoint_roots_returned_directly(self):
        assert newton_bisect(lambda x: x, lambda x: 1.0, 0.0, 1.0) == 0.0
        assert newton_bisect(lambda x: x - 1.0, lambda x: 1.0, 0.0, 1.0) == 1.0

    def test_flat_derivative_falls_back_to_bisection(self):
        # derivative vanishes at the root; Newton alone would crawl
        r = newton_bisect(lambda x: x**3, lambda x: 3 * x * x, -1.0, 2.0)
        assert abs(r) < 1e-10

    def test_steep_function(self):
        f = lambda x: math.tanh(50.0 * (x - 0.3))
        df = lambda x: 50.0 / math.cosh(50.0 * (x - 0.3)) ** 2
        r = newton_bisect(f, df, -1.0, 1.0)
        assert r == pytest.approx(0.3, abs=1e-10)

    def test_precomputed_end_values(self):
        f = lambda x: x - 0.25
        r = newton_bisect(f, lambda x: 1.0, 0.0, 1.0, flo=-0.25, fhi=0.75)
        assert r == pytest.approx(0.25, abs=1e-12)

    def test_no_sign_change_rejected(self):
        with pytest.raises(DomainError):
            newton_bisect(lambda x: x * x + 1.0, lambda x: 2 * x, -1.0, 1.0)

    def test_bad_bracket_rejected(self):
        with pytest.raises(DomainError):
            newton_bisect(lambda x: x, lambda x: 1.0, 1.0, 1.0)

    def test_random_monotone_targets(self):
        rng = np.random.default_rng(19)
        for _ in range(50):
            c = rng.uniform(-5.0, 5.0)
            r = newton_bisect(
                lambda x: x + math.sin(x) - c,
                lambda x: 1.0 + math.cos(x),
                -10.0,
                10.0,
            )
            assert r + math.sin(r) - c == pytest.approx(0.0, abs=1e-9)
