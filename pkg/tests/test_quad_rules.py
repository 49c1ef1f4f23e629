import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from iquad.errors import (FactorizationError, GridTooLargeError, InvalidOrderError,
                          UnsupportedRuleError)
from iquad.quad_rules import (MAX_HERMITE_ORDER, RuleKind, classical_rule,
                              gauss_hermite_points, hermite_rule, map_to_gaussian, tensor_grid)

from _oracles import (chebyshev_table, gaussian_moment, hermite_table_weights,
                      laguerre_table_weights, legendre_table_weights)


class TestHermiteRule:
    def test_alpha_one(self):
        r = hermite_rule(1)
        np.testing.assert_array_equal(r.nodes, [0.0])
        np.testing.assert_array_equal(r.weights, [1.0])

    def test_alpha_three(self):
        r = hermite_rule(3)
        np.testing.assert_allclose(r.nodes, [-np.sqrt(1.5), 0.0, np.sqrt(1.5)], atol=1e-14)
        np.testing.assert_allclose(r.weights, [1 / 6, 2 / 3, 1 / 6], rtol=1e-13)

    def test_alpha_two_second_moment(self):
        r = hermite_rule(2)
        assert np.sum(r.weights * r.nodes**2) == pytest.approx(0.5, abs=1e-15)

    @pytest.mark.parametrize("alpha", range(1, 11))
    def test_matches_closed_form_weights(self, alpha):
        x, v = hermite_table_weights(alpha)
        r = hermite_rule(alpha)
        np.testing.assert_allclose(r.nodes, x, atol=1e-10)
        np.testing.assert_allclose(r.raw_weights, v, atol=1e-10)
        np.testing.assert_allclose(r.weights, v / np.sqrt(np.pi), atol=1e-10)

    @pytest.mark.parametrize("alpha", [1, 2, 7, 50, 200])
    def test_invariants(self, alpha):
        r = hermite_rule(alpha)
        assert r.nodes.size == r.weights.size == alpha
        assert np.all(np.diff(r.nodes) > 0)
        np.testing.assert_allclose(np.sort(-r.nodes), r.nodes, atol=1e-12)
        assert abs(r.weights.sum() - 1.0) < 1e-12
        assert np.all(r.weights > 0)

    @pytest.mark.parametrize("alpha", [0, -1, MAX_HERMITE_ORDER + 1, 2.5, True])
    def test_invalid_order(self, alpha):
        with pytest.raises(InvalidOrderError):
            hermite_rule(alpha)

    def test_arrays_read_only(self):
        r = hermite_rule(4)
        with pytest.raises(ValueError):
            r.nodes[0] = 1.0


class TestClassicalRule:
    def test_chebyshev_gauss_two(self):
        r = classical_rule("chebyshev_gauss", 2)
        np.testing.assert_allclose(r.nodes, [np.cos(3 * np.pi / 4), np.cos(np.pi / 4)], atol=1e-15)
        np.testing.assert_allclose(r.raw_weights, [np.pi / 2, np.pi / 2])

    def test_legendre_two(self):
        r = classical_rule(RuleKind.LEGENDRE, 2)
        np.testing.assert_allclose(r.nodes, [-1 / np.sqrt(3), 1 / np.sqrt(3)], atol=1e-15)
        np.testing.assert_allclose(r.raw_weights, [1.0, 1.0], atol=1e-14)

    def test_laguerre_one(self):
        r = classical_rule("laguerre", 1)
        np.testing.assert_allclose(r.nodes, [1.0])
        np.testing.assert_allclose(r.raw_weights, [1.0])

    @pytest.mark.parametrize("alpha", range(1, 11))
    def test_table_formulas(self, alpha):
        for kind, (x, v) in [("legendre", legendre_table_weights(alpha)),
                             ("laguerre", laguerre_table_weights(alpha)),
                             ("chebyshev_gauss", chebyshev_table(alpha)),
                             ("chebyshev_gauss_2", chebyshev_table(alpha, True))]:
            r = classical_rule(kind, alpha)
            np.testing.assert_allclose(r.nodes, x, atol=1e-10, err_msg=kind)
            np.testing.assert_allclose(r.raw_weights, v, atol=1e-10, err_msg=kind)
            assert abs(r.weights.sum() - 1.0) < 1e-12

    @pytest.mark.parametrize("alpha", range(1, 9))
    def test_legendre_exactness(self, alpha):
        r = classical_rule("legendre", alpha)
        for p in range(2 * alpha):
            exact = 0.0 if p % 2 else 2.0 / (p + 1)
            assert np.sum(r.raw_weights * r.nodes**p) == pytest.approx(exact, abs=1e-12)

    @pytest.mark.parametrize("alpha", range(1, 9))
    def test_laguerre_exactness(self, alpha):
        from math import factorial
        r = classical_rule("laguerre", alpha)
        for p in range(2 * alpha):
            assert np.sum(r.raw_weights * r.nodes**p) == pytest.approx(factorial(p), rel=1e-9)

    def test_unknown_kind(self):
        with pytest.raises(UnsupportedRuleError, match="legendre"):
            classical_rule("simpson", 3)


class TestTensorGrid:
    def test_three_by_three(self):
        g = tensor_grid(hermite_rule(3), 2)
        assert g.size == 9
        assert g.weights.sum() == pytest.approx(1.0, abs=1e-14)
        assert g.weights[0] == pytest.approx(1 / 36, rel=1e-13)

    def test_single_point(self):
        g = tensor_grid(hermite_rule(1), 5)
        np.testing.assert_array_equal(g.points, np.zeros((1, 5)))
        np.testing.assert_array_equal(g.weights, [1.0])

    def test_size_alpha_ten_dim_five(self):
        assert tensor_grid(hermite_rule(10), 5).size == 100000

    def test_row_major_order(self):
        r = hermite_rule(2)
        g = tensor_grid(r, 2)
        expected = [[r.nodes[i], r.nodes[j]] for i in range(2) for j in range(2)]
        np.testing.assert_array_equal(g.points, expected)

    def test_too_large(self):
        with pytest.raises(GridTooLargeError, match="resample_thin"):
            tensor_grid(hermite_rule(11), 7)

    @pytest.mark.parametrize("dim", range(1, 6))
    @pytest.mark.parametrize("alpha", [1, 2, 5, 10])
    def test_weights_normalized(self, dim, alpha):
        if alpha**dim > 10**6:
            pytest.skip("large grid")
        g = tensor_grid(hermite_rule(alpha), dim)
        assert abs(g.weights.sum() - 1.0) < 1e-10
        assert np.all(g.weights > 0)


class TestMapToGaussian:
    def test_alpha_one_is_mean(self):
        ps = gauss_hermite_points([3.0, -1.0], np.eye(2), 1)
        np.testing.assert_array_equal(ps.points, [[3.0, -1.0]])

    def test_second_moment(self):
        ps = gauss_hermite_points([0.0], 4.0, 2)
        assert np.sum(ps.quad_weights * ps.points[:, 0] ** 2) == pytest.approx(4.0, rel=1e-14)

    def test_third_moment(self):
        ps = gauss_hermite_points([1.0], 1.0, 3)
        assert np.sum(ps.quad_weights * ps.points[:, 0] ** 3) == pytest.approx(4.0, rel=1e-13)

    @pytest.mark.parametrize("mu,sigma", [(0.0, 1.0), (1.0, 1.0), (-2.0, 0.5)])
    @pytest.mark.parametrize("alpha", range(1, 11))
    def test_polynomial_exactness(self, mu, sigma, alpha):
        ps = gauss_hermite_points([mu], sigma**2, alpha)
        x = ps.points[:, 0]
        for p in range(2 * alpha):
            m = gaussian_moment(mu, sigma, p)
            assert abs(np.sum(ps.quad_weights * x**p) - m) <= 1e-9 * max(1.0, abs(m))

    def test_non_pd_names_minor(self):
        with pytest.raises(FactorizationError, match="order 2"):
            gauss_hermite_points([0.0, 0.0], [[1.0, 2.0], [2.0, 1.0]], 3)

    def test_asymmetric_rejected(self):
        with pytest.raises(FactorizationError):
            gauss_hermite_points([0.0, 0.0], [[1.0, 0.5], [0.0, 1.0]], 3)

    def test_only_hermite(self):
        with pytest.raises(UnsupportedRuleError):
            map_to_gaussian(tensor_grid(classical_rule("legendre", 3), 1), [0.0], 1.0)

    def test_deterministic(self):
        a = gauss_hermite_points([0.3, 1.0], [[2.0, 0.3], [0.3, 1.0]], 4)
        b = gauss_hermite_points([0.3, 1.0], [[2.0, 0.3], [0.3, 1.0]], 4)
        assert a.points.tobytes() == b.points.tobytes()
        assert a.quad_weights.tobytes() == b.quad_weights.tobytes()

    @settings(max_examples=40, deadline=None)
    @given(alpha=st.integers(1, 8),
           mu=st.lists(st.floats(-5, 5), min_size=2, max_size=2),
           a=st.floats(0.2, 3), b=st.floats(0.2, 3), rho=st.floats(-0.9, 0.9))
    def test_mean_and_covariance_reproduced(self, alpha, mu, a, b, rho):
        cov = np.array([[a * a, rho * a * b], [rho * a * b, b * b]])
        ps = gauss_hermite_points(mu, cov, alpha)
        mean = ps.quad_weights @ ps.points
        np.testing.assert_allclose(mean, mu, atol=1e-10)
        if alpha >= 2:
            d = ps.points - np.asarray(mu)
            np.testing.assert_allclose((ps.quad_weights[:, None] * d).T @ d, cov, atol=1e-8)
