import math

import numpy as np
import pytest

from magorb import geometry as geo
from magorb import loopspace as ls
from magorb.action import action_S
from magorb.errors import ModelError, NoNegativeSeedError

from conftest import random_loop_points


def polygon_length(N, r=1.0):
    """Oracle: perimeter of the regular N-gon inscribed in a radius-r circle."""
    return 2.0 * N * r * math.sin(math.pi / N)


class TestCircleLoop:
    def test_cardinal_points(self):
        loop = ls.make_circle_loop((0.0, 0.0), 1.0, "ccw", 8)
        expected = [(1, 0), (0, 1), (-1, 0), (0, -1)]
        for idx, val in zip((0, 2, 4, 6), expected):
            assert np.allclose(loop.points[idx], val, atol=1e-15)

    def test_cw_is_reversed_ccw(self):
        ccw = ls.make_circle_loop((0.5, -0.2), 0.7, "ccw", 16)
        cw = ls.make_circle_loop((0.5, -0.2), 0.7, "cw", 16)
        reversed_ccw = np.concatenate([ccw.points[:1], ccw.points[:0:-1]], axis=0)
        assert np.allclose(cw.points, reversed_ccw, atol=1e-14)

    def test_length_converges(self, flat_b1):
        loop = ls.make_circle_loop((0, 0), 1.0, "ccw", 256)
        length = ls.loop_length(flat_b1, loop)
        assert length == pytest.approx(polygon_length(256), abs=1e-12)
        assert abs(length - 2 * math.pi) < 1e-3

    def test_rejects_degenerate(self):
        with pytest.raises(ModelError):
            ls.make_circle_loop((0, 0), 0.0, "ccw", 32)
        with pytest.raises(ModelError):
            ls.make_circle_loop((0, 0), 1.0, "ccw", 4)


class TestClassLoop:
    def test_torus_line(self, flat_b1):
        loop = ls.make_class_loop(flat_b1, geo.FreeHomotopyClass(1, 0), 8)
        assert np.allclose(loop.points, [(i / 8, 0.0) for i in range(8)])
        assert np.allclose(loop.closure_point, [1.0, 0.0])

    def test_trivial_constant(self, flat_b1):
        loop = ls.make_class_loop(flat_b1, geo.TRIVIAL_CLASS, 16)
        assert np.allclose(loop.points, 0.0)
        assert ls.loop_length(flat_b1, loop) == 0.0

    def test_pythagorean_length(self, flat_b1):
        loop = ls.make_class_loop(flat_b1, geo.FreeHomotopyClass(3, 4), 100)
        assert ls.loop_length(flat_b1, loop) == pytest.approx(5.0)

    def test_hyperbolic_needs_dilation(self, hyp_b1, hyp_b0_lam2):
        with pytest.raises(ModelError):
            ls.make_class_loop(hyp_b1, geo.FreeHomotopyClass(1, 0), 16)
        loop = ls.make_class_loop(hyp_b0_lam2, geo.FreeHomotopyClass(1, 0), 16)
        assert np.allclose(loop.closure_point, [0.0, 2.0])
        assert loop.closure_scale == 2.0


class TestKinetic:
    def test_constant_zero(self, flat_b1):
        loop = ls.make_class_loop(flat_b1, geo.TRIVIAL_CLASS, 32)
        assert ls.loop_kinetic(flat_b1, ls.TimedLoop(loop, 3.7)) == 0.0

    def test_line_loop(self, flat_b1):
        loop = ls.make_class_loop(flat_b1, geo.FreeHomotopyClass(1, 0), 64)
        assert ls.loop_kinetic(flat_b1, ls.TimedLoop(loop, 1.0)) == pytest.approx(0.5)

    def test_circle_limit(self, flat_b1):
        # Oracle: discrete kinetic of the inscribed polygon is
        # 2 N^2 sin^2(pi/N) / T; at T = 2 pi it converges to pi.
        N = 1024
        loop = ls.make_circle_loop((0, 0), 1.0, "ccw", N)
        e = ls.loop_kinetic(flat_b1, ls.TimedLoop(loop, 2 * math.pi))
        oracle = 2.0 * N ** 2 * math.sin(math.pi / N) ** 2 / (2 * math.pi)
        assert e == pytest.approx(oracle, rel=1e-12)
        assert abs(e - math.pi) < 1e-3

    def test_cauchy_schwarz(self, all_models):
        # length^2 <= 2 T e holds for the discrete sums up to rounding.
        rng = np.random.default_rng(11)
        for model in all_models:
            for _ in range(20):
                pts = random_loop_points(model, rng, 48)
                loop = ls.DiscreteLoop(pts)
                T = rng.uniform(0.2, 4.0)
                length = ls.loop_length(model, loop)
                e = ls.loop_kinetic(model, ls.TimedLoop(loop, T))
                assert length ** 2 <= 2.0 * T * e + 1e-12

    def test_cyclic_rotation_invariance(self, flat_b1, hyp_b1):
        rng = np.random.default_rng(12)
        for model in (flat_b1, hyp_b1):
            pts = random_loop_points(model, rng, 40)
            loop = ls.DiscreteLoop(pts)
            rolled = ls.DiscreteLoop(np.roll(pts, 7, axis=0))
            assert ls.loop_length(model, loop) == pytest.approx(
                ls.loop_length(model, rolled), abs=1e-12)
            assert ls.loop_kinetic(model, ls.TimedLoop(loop, 1.3)) == pytest.approx(
                ls.loop_kinetic(model, ls.TimedLoop(rolled, 1.3)), abs=1e-12)


class TestH1Inner:
    def test_constant_tangent(self, flat_b1):
        base = ls.make_circle_loop((0, 0), 1.0, "ccw", 32)
        v = np.tile([0.3, -0.4], (32, 1))
        t = ls.LoopTangent(v, 0.0)
        assert ls.h1_inner(base, t, t) == pytest.approx(0.25)

    def test_period_term(self):
        base = ls.make_circle_loop((0, 0), 1.0, "ccw", 16)
        z = np.zeros((16, 2))
        assert ls.h1_inner(base, ls.LoopTangent(z, 2.0), ls.LoopTangent(z, 3.0)) == 6.0

    def test_symmetric_positive(self):
        rng = np.random.default_rng(13)
        base = ls.make_circle_loop((0, 0), 1.0, "ccw", 24)
        for _ in range(100):
            u = ls.LoopTangent(rng.normal(size=(24, 2)), rng.normal())
            w = ls.LoopTangent(rng.normal(size=(24, 2)), rng.normal())
            assert ls.h1_inner(base, u, w) == pytest.approx(
                ls.h1_inner(base, w, u), abs=1e-15 * 100)
            assert ls.h1_inner(base, u, u) > 0.0

    def test_dimension_mismatch(self):
        base = ls.make_circle_loop((0, 0), 1.0, "ccw", 16)
        with pytest.raises(ModelError):
            ls.h1_inner(base, ls.LoopTangent(np.zeros((8, 2))),
                        ls.LoopTangent(np.zeros((16, 2))))

    def test_h1_solve_is_riesz_map(self, flat_b1):
        rng = np.random.default_rng(14)
        base = ls.DiscreteLoop(random_loop_points(flat_b1, rng, 32))
        g = ls.LoopTangent(rng.normal(size=(32, 2)), rng.normal())
        G = ls.h1_solve(base, g)
        for _ in range(10):
            u = ls.LoopTangent(rng.normal(size=(32, 2)), rng.normal())
            lhs = ls.h1_inner(base, G, u)
            rhs = float(np.einsum("ni,ni->", g.xi, u.xi)) + g.psi * u.psi
            assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-10)


class TestResample:
    def test_refinement_keeps_nodes(self):
        loop = ls.make_circle_loop((0, 0), 1.0, "ccw", 8)
        fine = ls.resample(loop, 16)
        assert np.allclose(fine.points[::2], loop.points, atol=1e-15)

    def test_constant_stays_constant(self, flat_b1):
        loop = ls.make_class_loop(flat_b1, geo.TRIVIAL_CLASS, 16)
        out = ls.resample(loop, 32)
        assert np.allclose(out.points, 0.0)

    def test_length_preserved_flat(self, flat_b1):
        rng = np.random.default_rng(15)
        pts = random_loop_points(flat_b1, rng, 16)
        loop = ls.DiscreteLoop(pts)
        fine = ls.resample(loop, 48)
        assert ls.loop_length(flat_b1, fine) == pytest.approx(
            ls.loop_length(flat_b1, loop), abs=1e-12)

    def test_class_preserved(self, flat_b1):
        loop = ls.make_class_loop(flat_b1, geo.FreeHomotopyClass(2, 1), 32)
        out = ls.resample(loop, 64)
        assert out.cls == loop.cls
        assert np.allclose(out.closure_point, loop.closure_point, atol=1e-15)


class TestNegativeSeed:
    def test_flat_torus_closed_form(self, flat_b1):
        # Circle of radius r = 3 sqrt(2k)/B at optimal T: continuum action
        # 2 pi r sqrt(2k) - B pi r^2 = -3 pi for k = 1/2.
        seed = ls.negative_action_seed(flat_b1, 0.5, N=512)
        total = action_S(flat_b1, seed, 0.5).total
        assert total < 0.0
        assert total == pytest.approx(-3.0 * math.pi, abs=5e-3)
        assert seed.T == pytest.approx(6.0 * math.pi, rel=1e-3)

    def test_zero_field_fails(self, flat_b0):
        with pytest.raises(NoNegativeSeedError):
            ls.negative_action_seed(flat_b0, 0.5)

    def test_hyperbolic_below_critical(self, hyp_b1):
        seed = ls.negative_action_seed(hyp_b1, 0.45)
        assert action_S(hyp_b1, seed, 0.45).total < 0.0

    def test_hyperbolic_above_critical(self, hyp_b1):
        with pytest.raises(NoNegativeSeedError):
            ls.negative_action_seed(hyp_b1, 0.6)
