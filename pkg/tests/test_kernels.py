import numpy as np
import pytest

from tvcov.errors import ParameterError
from tvcov.kernels import (
    INTERIOR,
    LEFT_BOUNDARY,
    RIGHT_BOUNDARY,
    boundary_weights,
    epanechnikov,
    interior_region,
    uniform_weights,
)


def epanechnikov_mass(lo, hi):
    """Closed-form integral of the Epanechnikov kernel, independent oracle."""
    lo, hi = max(lo, -1.0), min(hi, 1.0)
    antiderivative = lambda u: 0.75 * (u - u ** 3 / 3.0)
    return antiderivative(hi) - antiderivative(lo)


class TestEpanechnikov:
    def test_peak(self):
        assert epanechnikov(0.0) == 0.75

    def test_support_boundary(self):
        assert epanechnikov(1.0) == 0.0
        assert epanechnikov(-1.0) == 0.0
        assert epanechnikov(1.5) == 0.0

    def test_half(self):
        # hand arithmetic: 0.75 * (1 - 0.25)
        assert epanechnikov(0.5) == pytest.approx(0.5625, abs=1e-15)

    def test_vectorized(self):
        out = epanechnikov(np.array([0.0, 0.5, 2.0]))
        assert np.allclose(out, [0.75, 0.5625, 0.0])


class TestBoundaryWeights:
    def test_interior_mean_close_to_one(self):
        w = boundary_weights(100, 50, 0.2)
        assert w.boundary_flag == INTERIOR
        assert 0.99 <= w.weights.mean() <= 1.01

    def test_left_boundary_mean_close_to_one(self):
        w = boundary_weights(100, 1, 0.2)
        assert w.boundary_flag == LEFT_BOUNDARY
        assert 0.99 <= w.weights.mean() <= 1.01

    def test_right_boundary_mean_close_to_one(self):
        w = boundary_weights(100, 100, 0.2)
        assert w.boundary_flag == RIGHT_BOUNDARY
        assert 0.99 <= w.weights.mean() <= 1.01

    def test_compact_support(self):
        for t_total, r, h in [(100, 50, 0.2), (100, 3, 0.1), (151, 151, 0.3)]:
            w = boundary_weights(t_total, r, h)
            t = np.arange(1, t_total + 1)
            assert (w.weights[np.abs(t - r) > t_total * h] == 0).all()

    def test_interior_matches_plain_kernel(self):
        # interior branch has no renormalization: h^-1 K((t-r)/(Th)) exactly
        t_total, r, h = 200, 100, 0.15
        w = boundary_weights(t_total, r, h)
        t = np.arange(1, t_total + 1)
        expected = epanechnikov((t - r) / (t_total * h)) / h
        assert np.allclose(w.weights, expected, rtol=0, atol=1e-14)

    def test_left_mass_oracle(self):
        # renormalized weights are proportional to K/mass with the closed-form
        # truncated mass; the final rescale makes the mean exactly one
        t_total, r, h = 100, 5, 0.2
        w = boundary_weights(t_total, r, h)
        t = np.arange(1, t_total + 1)
        base = epanechnikov((t - r) / (t_total * h)) / h
        base = base / epanechnikov_mass(-r / (t_total * h), 1.0)
        base = base / base.mean()
        assert np.allclose(w.weights, base, rtol=1e-10)
        assert w.weights.mean() == pytest.approx(1.0, abs=1e-12)

    def test_symmetry_between_mirror_anchors(self):
        t_total, h = 120, 0.2
        lo, hi = interior_region(t_total, h)
        r = lo + 3
        r_mirror = t_total + 1 - r
        assert lo <= r <= hi and lo <= r_mirror <= hi
        w = boundary_weights(t_total, r, h).weights
        w_mirror = boundary_weights(t_total, r_mirror, h).weights
        assert np.allclose(w[::-1], w_mirror, atol=1e-14)

    def test_monotone_support(self):
        t_total, r = 100, 40
        previous = -1
        for h in (0.05, 0.1, 0.2, 0.4):
            size = boundary_weights(t_total, r, h).support.size
            assert size >= previous
            previous = size

    def test_mean_one_interior_sweep(self):
        for t_total in (200, 351):
            for h in (0.05, 0.1, 0.3):
                lo, hi = interior_region(t_total, h)
                for r in (lo, (lo + hi) // 2, hi):
                    w = boundary_weights(t_total, r, h)
                    assert abs(w.weights.mean() - 1.0) <= 0.01

    def test_interior_mean_within_kernel_tolerance(self):
        # interior anchors keep the raw kernel: mean within 2/(T*h) of one
        for t_total, h in ((60, 0.1), (100, 0.2), (151, 0.05)):
            lo, hi = interior_region(t_total, h)
            for r in range(lo, hi + 1, max(1, (hi - lo) // 7)):
                w = boundary_weights(t_total, r, h)
                assert abs(w.weights.mean() - 1.0) <= 2.0 / (t_total * h)

    def test_parameter_errors(self):
        with pytest.raises(ParameterError):
            boundary_weights(100, 50, 1.5)
        with pytest.raises(ParameterError):
            boundary_weights(100, 50, 0.0)
        with pytest.raises(ParameterError):
            boundary_weights(100, 50, 0.01)  # T*h < 2
        with pytest.raises(ParameterError):
            boundary_weights(100, 0, 0.2)
        with pytest.raises(ParameterError):
            boundary_weights(100, 101, 0.2)

    def test_integer_th_anchor_is_interior(self):
        # r = T*h exactly: the closed interior interval keeps it interior
        w = boundary_weights(100, 20, 0.2)
        assert w.boundary_flag == INTERIOR


class TestInteriorRegion:
    def test_examples(self):
        assert interior_region(200, 0.1) == (20, 180)
        assert interior_region(151, 0.1) == (15, 136)
        assert interior_region(100, 0.5) == (50, 50)

    def test_guard(self):
        with pytest.raises(ParameterError):
            interior_region(10, 0.05)


class TestUniformWeights:
    def test_all_ones(self):
        w = uniform_weights(30, 30)
        assert (w.weights == 1.0).all()
        assert w.boundary_flag == INTERIOR
        assert w.support.size == 30
