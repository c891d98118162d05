import numpy as np
import pytest
from scipy import integrate

from pnse.manufactured import (
    BubbleSolution3D,
    VortexSolution2D,
    ball_center,
    ball_radius,
    bubbles_3d,
    closest_point_to_e1,
    eval_grad_v_2d,
    eval_grad_v_3d,
    eval_q,
    eval_v_2d,
    eval_v_3d,
    gamma_for_case,
    make_exact,
    q_mean_oracle,
    reference_point_q0,
    truncation_level,
    vortex_2d,
)


def fd_gradient(f, x, eps=1e-6):
    cols = []
    for j in range(x.shape[-1]):
        e = np.zeros(x.shape[-1])
        e[j] = eps
        cols.append((f(x + e) - f(x - e)) / (2 * eps))
    return np.stack(cols, axis=-1)


class TestGamma:
    def test_2d(self):
        assert gamma_for_case(1, 3.0) == pytest.approx(-1.0 / 3.0 + 0.01)
        assert gamma_for_case(2, 3.0) == pytest.approx(0.015)
        assert gamma_for_case(2, 2.0) == pytest.approx(0.01)

    def test_3d(self):
        assert gamma_for_case(1, 3.0, 3) == pytest.approx(-0.99)
        assert gamma_for_case(2, 3.0, 3) == pytest.approx(-0.49)
        assert gamma_for_case(2, 3.0, 3, rule="planar") == pytest.approx(0.015)

    def test_invalid(self):
        with pytest.raises(ValueError):
            gamma_for_case(3, 3.0)
        with pytest.raises(ValueError):
            gamma_for_case(1, 3.0, 3, rule="bogus")


class TestMeanOracle:
    @pytest.mark.parametrize("dim,expected", [(2, 2.0 / 3.0), (3, 1.0)])
    def test_square_norm(self, dim, expected):
        assert q_mean_oracle(2.0, dim) == pytest.approx(expected, rel=1e-12)

    def test_zero(self):
        assert q_mean_oracle(0.0, 3) == 1.0

    @pytest.mark.parametrize("gamma", [0.015, -1.0 / 3.0 + 0.01, -0.5])
    def test_against_scipy_2d(self, gamma):
        # polar form over the two halves of the square removes the singularity
        f = lambda r, t: r ** (gamma + 1)
        half, _ = integrate.dblquad(f, 0, np.pi / 4, 0, lambda t: 1 / np.cos(t), epsabs=1e-13, epsrel=1e-13)
        assert q_mean_oracle(gamma, 2) == pytest.approx(2 * half, rel=1e-10)

    def test_known_values(self):
        assert q_mean_oracle(0.015, 2) == pytest.approx(0.9945239133069126, rel=1e-11)
        assert q_mean_oracle(-0.49, 3) == pytest.approx(1.0649270635238834, rel=1e-11)

    def test_not_integrable(self):
        with pytest.raises(ValueError):
            q_mean_oracle(-2.0, 2)


class TestVortex:
    def test_values(self):
        ex = VortexSolution2D(0.01, 0.015)
        x = np.array([0.6, 0.8])
        np.testing.assert_allclose(ex.velocity(x), [0.8, -0.6])
        assert ex.pressure(np.array([1.0, 0.0])) == pytest.approx(1.0 - ex.q_mean)
        np.testing.assert_allclose(ex.velocity(np.zeros(2)), 0.0)

    def test_gradient_fd(self, rng):
        ex = vortex_2d(3.0, 2)
        x = rng.uniform(0.05, 1.0, size=(20, 2))
        np.testing.assert_allclose(ex.grad_velocity(x), fd_gradient(ex.velocity, x), atol=1e-8)

    def test_divergence_free(self, rng):
        ex = vortex_2d(2.5, 1)
        G = ex.grad_velocity(rng.uniform(0.01, 1.0, size=(100, 2)))
        np.testing.assert_allclose(np.trace(G, axis1=-2, axis2=-1), 0.0, atol=1e-14)

    def test_beta_zero_is_rotation(self, rng):
        ex = VortexSolution2D(0.0, 0.5)
        G = eval_grad_v_2d(ex, rng.uniform(0.01, 1, size=(10, 2)))
        np.testing.assert_array_equal(G, np.broadcast_to([[0.0, 1.0], [-1.0, 0.0]], G.shape))

    def test_divergence_many_points(self, rng):
        ex = vortex_2d(3.0, 2)
        G = ex.grad_velocity(rng.uniform(1e-3, 1.0, size=(10_000, 2)))
        assert np.abs(np.trace(G, axis1=-2, axis2=-1)).max() <= 1e-12

    def test_functional_api(self):
        ex = vortex_2d(3.0, 1)
        x = np.array([[0.3, 0.4]])
        np.testing.assert_array_equal(eval_v_2d(ex, x), ex.velocity(x))
        np.testing.assert_array_equal(eval_q(ex, x), ex.pressure(x))
        with pytest.raises(ValueError):
            eval_v_3d(ex, x)
        with pytest.raises(ValueError):
            eval_grad_v_3d(ex, x)

    def test_origin_gradient_rejected(self):
        with pytest.raises(ValueError):
            vortex_2d(3.0, 1).grad_velocity(np.zeros(2))

    def test_pressure_mean_zero(self):
        ex = vortex_2d(3.0, 1)
        mean, _ = integrate.dblquad(lambda y, x: ex.pressure(np.array([x, y])), 0, 1, 0, 1, epsabs=1e-10)
        assert abs(mean) < 1e-8


class TestBubbles:
    def test_radii_centres(self):
        assert ball_radius(1) == 0.125
        u = (ball_center(1) - np.array([1.0, 0, 0])) / (3 * 0.125)
        assert np.linalg.norm(u) == pytest.approx(1.0)
        for k in range(1, 8):
            c, r = ball_center(k), ball_radius(k)
            assert np.all(c - r > 0) and np.all(c + r < 1)
            # consecutive balls touch: open balls are disjoint
            gap = np.linalg.norm(c - ball_center(k + 1)) - r - ball_radius(k + 1)
            assert gap > -1e-14

    def test_q0_in_K0(self):
        q0 = np.array(reference_point_q0())
        # inside conv{0, e1, e1+e2, e1+e2+e3}: 1 >= x >= y >= z >= 0
        assert 1 > q0[0] > q0[1] > q0[2] > 0

    def test_truncation(self):
        assert [truncation_level(i) for i in range(7)] == [i + 3 for i in range(7)]
        for i in range(4):
            q = closest_point_to_e1(i)
            k = truncation_level(i)
            assert np.linalg.norm(q - ball_center(k)) <= ball_radius(k)

    def test_no_deeper_ball_hit(self):
        # brute force over every quadrature point of the level-i mesh
        from pnse.mesh import initial_mesh_3d, red_refine
        from pnse.quadrature import tet_rule_keast7

        rule = tet_rule_keast7()
        m = initial_mesh_3d()
        levels = []
        for i in range(4):
            if i:
                m = red_refine(m)
            pts = np.einsum("qi,kid->kqd", rule.points, m.cell_coordinates()).reshape(-1, 3)
            n = truncation_level(i, rule)
            levels.append(n)
            for k in range(n + 1, n + 12):
                assert not np.any(np.linalg.norm(pts - ball_center(k), axis=1) <= ball_radius(k))
            assert np.any(np.linalg.norm(pts - ball_center(n), axis=1) <= ball_radius(n))
        assert levels == sorted(levels)

    def test_centre_and_functional_api(self):
        ex = bubbles_3d(3.0, 1, 3)
        np.testing.assert_array_equal(eval_v_3d(ex, ball_center(2)), 0.0)
        assert eval_grad_v_3d(ex, ball_center(2) + 1e-3).shape == (3, 3)
        with pytest.raises(ValueError):
            eval_v_2d(ex, np.zeros(3))

    def test_support_and_boundary(self, rng):
        ex = bubbles_3d(3.0, 1, 4)
        far = rng.uniform(0, 0.5, size=(50, 3))
        assert not ex.velocity(far).any()
        # continuous across each sphere: |v| -> 0 at the rim
        for k in range(1, 5):
            c, r = ball_center(k), ball_radius(k)
            d = rng.standard_normal((20, 3))
            d /= np.linalg.norm(d, axis=1, keepdims=True)
            assert np.abs(ex.velocity(c + (1 - 1e-9) * r * d)).max() < 1e-8 * k

    def test_gradient_fd(self, rng):
        ex = bubbles_3d(3.0, 2, 3)
        for k in range(1, 4):
            c, r = ball_center(k), ball_radius(k)
            d = rng.standard_normal((10, 3))
            d *= (rng.uniform(0.1, 0.9, 10) * r / np.linalg.norm(d, axis=1))[:, None]
            x = c + d
            np.testing.assert_allclose(ex.grad_velocity(x), fd_gradient(ex.velocity, x, 1e-7 * r), atol=1e-6 * k)
            assert np.allclose(np.trace(ex.grad_velocity(x), axis1=-2, axis2=-1), 0.0, atol=1e-12 * k / r)

    def test_pressure_scale(self):
        ex = BubbleSolution3D(0.5, 3)
        x = np.array([1.0, 0.0, 0.0])
        assert ex.pressure(x) == pytest.approx(25 * (1 - ex.q_mean))

    def test_make_exact(self):
        assert isinstance(make_exact(2, 3.0, 1), VortexSolution2D)
        ex = make_exact(3, 3.0, 2, level=2)
        assert ex.n_bubbles == 5 and ex.gamma == pytest.approx(-0.49)
