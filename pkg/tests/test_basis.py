"""Univariate basis evaluation, Greville points, and tensor fields."""

import numpy as np
import pytest

from splinecolloc import (SplineSpace1D, TensorSplineField, eval_basis,
                          eval_field, greville_abscissae, interpolate,
                          make_uniform_open_space)
from splinecolloc.basis import collocation_matrix


def bernstein2():
    return SplineSpace1D(2, [0, 0, 0, 1, 1, 1])


class TestSpaceConstruction:
    def test_uniform_basis_count(self):
        space = make_uniform_open_space(3, 30, 0.0, 1.0)
        assert space.n_basis == 33
        assert space.n_elements == 30
        assert space.h == pytest.approx(1.0 / 30)

    def test_p1_knot_vector(self):
        space = make_uniform_open_space(1, 10, 0.0, 1.0)
        expected = np.concatenate([[0.0], np.linspace(0, 1, 11), [1.0]])
        assert np.allclose(space.knots, expected)
        assert space.n_basis == 11

    def test_single_element_bernstein(self):
        space = make_uniform_open_space(2, 1, 0.0, 1.0)
        assert np.allclose(space.knots, [0, 0, 0, 1, 1, 1])
        assert space.n_basis == 3

    def test_invalid_inputs(self):
        with pytest.raises(ValueError):
            make_uniform_open_space(0, 10, 0.0, 1.0)
        with pytest.raises(ValueError):
            make_uniform_open_space(2, 0, 0.0, 1.0)
        with pytest.raises(ValueError):
            make_uniform_open_space(2, 10, 1.0, 1.0)
        with pytest.raises(ValueError):
            SplineSpace1D(2, [0, 0, 0.5, 1, 1])  # not open for p=2
        with pytest.raises(ValueError):
            SplineSpace1D(1, [0, 1, 0.5, 1, 1])  # decreasing

    def test_find_span_closed_endpoint(self):
        space = make_uniform_open_space(2, 4, 0.0, 1.0)
        assert space.find_span(1.0) == space.find_span(0.999)
        with pytest.raises(ValueError):
            space.find_span(1.0 + 1e-9)
        with pytest.raises(ValueError):
            space.find_span(-1e-9)


class TestBasisEvaluation:
    def test_bernstein_values_at_midpoint(self):
        fa, vals = eval_basis(bernstein2(), 0.5, 0)
        assert fa == 0
        assert np.allclose(vals, [0.25, 0.5, 0.25], atol=1e-14)

    def test_bernstein_first_derivatives(self):
        fa, vals = eval_basis(bernstein2(), 0.5, 1)
        assert fa == 0
        assert np.allclose(vals, [-1.0, 0.0, 1.0], atol=1e-14)

    def test_order_above_degree_is_zero(self):
        space = make_uniform_open_space(1, 4, 0.0, 1.0)
        fa, vals = eval_basis(space, 0.3, 2)
        assert np.all(vals == 0.0)
        assert len(vals) == 2

    def test_order_above_two_rejected(self):
        space = make_uniform_open_space(3, 4, 0.0, 1.0)
        with pytest.raises(ValueError):
            eval_basis(space, 0.3, 3)

    def test_cubic_second_derivative_against_recursive_oracle(self):
        # oracle: direct Cox-de Boor recursion with symbolic derivative rule
        space = make_uniform_open_space(3, 4, 0.0, 1.0)
        x = 0.3

        def basis_value(i, p, x, U):
            if p == 0:
                last = U[i] <= x <= U[i + 1] and U[i + 1] == U[-1]
                return 1.0 if (U[i] <= x < U[i + 1] or last) else 0.0
            left = 0.0
            if U[i + p] != U[i]:
                left = (x - U[i]) / (U[i + p] - U[i]) * basis_value(i, p - 1, x, U)
            right = 0.0
            if U[i + p + 1] != U[i + 1]:
                right = ((U[i + p + 1] - x) / (U[i + p + 1] - U[i + 1])
                         * basis_value(i + 1, p - 1, x, U))
            return left + right

        def basis_d2(i, p, x, U):
            def d1(j, q):
                out = 0.0
                if U[j + q] != U[j]:
                    out += q / (U[j + q] - U[j]) * basis_value(j, q - 1, x, U)
                if U[j + q + 1] != U[j + 1]:
                    out -= q / (U[j + q + 1] - U[j + 1]) * basis_value(j + 1, q - 1, x, U)
                return out

            out = 0.0
            if U[i + p] != U[i]:
                out += p / (U[i + p] - U[i]) * d1(i, p - 1)
            if U[i + p + 1] != U[i + 1]:
                out -= p / (U[i + p + 1] - U[i + 1]) * d1(i + 1, p - 1)
            return out

        fa, vals = eval_basis(space, x, 2)
        for k, v in enumerate(vals):
            assert v == pytest.approx(basis_d2(fa + k, 3, x, space.knots), abs=1e-12)

    @pytest.mark.parametrize("p,n", [(1, 7), (2, 5), (3, 9)])
    def test_partition_of_unity(self, p, n, rng):
        space = make_uniform_open_space(p, n, 0.0, 1.0)
        xs = rng.uniform(0.0, 1.0, 1000)
        for x in xs:
            _, v0 = eval_basis(space, x, 0)
            assert abs(v0.sum() - 1.0) <= 1e-12
            _, v1 = eval_basis(space, x, 1)
            assert abs(v1.sum()) <= 1e-10
            _, v2 = eval_basis(space, x, 2)
            assert abs(v2.sum()) <= 1e-8

    @pytest.mark.parametrize("p", [2, 3])
    def test_derivative_consistency_with_finite_differences(self, p, rng):
        space = make_uniform_open_space(p, 6, 0.0, 1.0)
        step = 1e-6
        for x in rng.uniform(0.05, 0.95, 50):
            for r in (1, 2):
                fa, v = eval_basis(space, x, r)
                fa_hi, hi = eval_basis(space, x + step, r - 1)
                fa_lo, lo = eval_basis(space, x - step, r - 1)
                if not (fa == fa_hi == fa_lo):
                    continue  # straddling a knot; active sets differ
                fd = (hi - lo) / (2 * step)
                scale = max(np.max(np.abs(v)), 1.0)
                assert np.max(np.abs(v - fd)) <= 1e-5 * scale

    def test_endpoint_interpolation(self):
        space = make_uniform_open_space(3, 5, 0.0, 1.0)
        fa, vals = eval_basis(space, 0.0, 0)
        assert fa == 0 and vals[0] == pytest.approx(1.0) and np.allclose(vals[1:], 0.0)
        fa, vals = eval_basis(space, 1.0, 0)
        assert fa + len(vals) - 1 == space.n_basis - 1
        assert vals[-1] == pytest.approx(1.0) and np.allclose(vals[:-1], 0.0)


class TestGreville:
    def test_bernstein(self):
        assert np.allclose(greville_abscissae(bernstein2()), [0.0, 0.5, 1.0])

    def test_hat_functions(self):
        space = make_uniform_open_space(1, 2, 0.0, 1.0)
        assert np.allclose(greville_abscissae(space), [0.0, 0.5, 1.0])

    def test_cubic_endpoints(self):
        space = make_uniform_open_space(3, 4, 0.0, 1.0)
        g = greville_abscissae(space)
        assert g[0] == 0.0 and g[-1] == 1.0
        assert np.all(np.diff(g) > 0)


class TestTensorField:
    def test_partition_of_unity_field(self):
        spaces = (make_uniform_open_space(2, 4, 0, 1), make_uniform_open_space(3, 5, 0, 1))
        field = TensorSplineField(spaces, np.ones((6, 8)))
        for pt in [(0.0, 0.0), (0.37, 0.81), (1.0, 1.0)]:
            assert eval_field(field, pt) == pytest.approx(1.0, abs=1e-13)

    def test_zero_field(self):
        spaces = (make_uniform_open_space(2, 3, 0, 1),) * 2
        field = TensorSplineField(spaces, np.zeros((5, 5)))
        assert eval_field(field, (0.4, 0.6), (1, 0)) == 0.0

    def test_bilinear_mixed_derivative(self):
        spaces = (make_uniform_open_space(1, 4, 0, 1),) * 2
        field = interpolate(spaces, lambda pt: pt[0] * pt[1])
        for pt in [(0.2, 0.3), (0.55, 0.9), (0.99, 0.01)]:
            assert eval_field(field, pt, (1, 1)) == pytest.approx(1.0, abs=1e-12)

    def test_shape_validation(self):
        spaces = (make_uniform_open_space(2, 3, 0, 1),) * 2
        with pytest.raises(ValueError):
            TensorSplineField(spaces, np.zeros((5, 4)))
        with pytest.raises(ValueError):
            TensorSplineField(spaces, np.full((5, 5), np.nan))

    def test_interpolate_reproduces_polynomials(self):
        spaces = (make_uniform_open_space(3, 4, 0, 1), make_uniform_open_space(3, 6, 0, 1))
        field = interpolate(spaces, lambda pt: pt[0] ** 3 - 2 * pt[1] ** 2 + pt[0] * pt[1])
        for pt in [(0.11, 0.93), (0.5, 0.5), (0.77, 0.13)]:
            expected = pt[0] ** 3 - 2 * pt[1] ** 2 + pt[0] * pt[1]
            assert eval_field(field, pt) == pytest.approx(expected, abs=1e-12)


class TestCollocationMatrix:
    def test_row_content_matches_eval_basis(self):
        space = make_uniform_open_space(3, 6, 0.0, 1.0)
        pts = np.array([0.05, 0.42, 0.97])
        mat = collocation_matrix(space, pts, 1).toarray()
        for k, x in enumerate(pts):
            fa, vals = eval_basis(space, x, 1)
            assert np.allclose(mat[k, fa:fa + 4], vals)
            dense = mat[k].copy()
            dense[fa:fa + 4] = 0.0
            assert np.all(dense == 0.0)

    def test_nnz_per_row(self):
        space = make_uniform_open_space(2, 8, 0.0, 1.0)
        mat = collocation_matrix(space, np.linspace(0.01, 0.99, 17))
        assert mat.shape == (17, 10)
        assert np.all(np.diff(mat.indptr) <= 3)
