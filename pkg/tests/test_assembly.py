"""Collocation grids, Dirichlet elimination, and system assembly."""

import math
import warnings

import numpy as np
import pytest

from splinecolloc import (TensorSplineField, apply_dirichlet, assemble,
                          eval_field, make_benchmark, make_uniform_open_space,
                          uniform_collocation)
from splinecolloc.problems import PDEProblem


class TestUniformCollocation:
    def test_two_point_grid(self):
        colloc = uniform_collocation(2, 2)
        expected = {(0.25, 0.25), (0.25, 0.75), (0.75, 0.25), (0.75, 0.75)}
        assert colloc.size == 4
        assert {tuple(p) for p in colloc.points} == expected

    def test_counts_and_fill(self):
        colloc = uniform_collocation(30, 2)
        assert colloc.size == 900
        assert colloc.fill_distance <= 1.0 / 30
        assert uniform_collocation(40, 3).size == 64000

    def test_points_strictly_interior(self):
        colloc = uniform_collocation(5, 3)
        assert np.all(colloc.points > 0.0) and np.all(colloc.points < 1.0)

    def test_validation(self):
        with pytest.raises(ValueError):
            uniform_collocation(1, 2)
        with pytest.raises(ValueError):
            uniform_collocation(5, 4)


class TestApplyDirichlet:
    def test_homogeneous_data_zero_coefficients(self):
        prob = make_benchmark("poisson2d")
        spaces = (make_uniform_open_space(3, 10, 0, 1),) * 2
        dofs = apply_dirichlet(prob, spaces)
        assert np.all(dofs.boundary_values == 0.0)

    def test_interior_count(self):
        prob = make_benchmark("poisson2d")
        spaces = (make_uniform_open_space(3, 30, 0, 1),) * 2
        dofs = apply_dirichlet(prob, spaces)
        assert dofs.n_interior == 31 * 31

    def test_partition_of_indices(self):
        prob = make_benchmark("poisson2d")
        spaces = (make_uniform_open_space(2, 6, 0, 1), make_uniform_open_space(3, 5, 0, 1))
        dofs = apply_dirichlet(prob, spaces)
        total = np.prod([s.n_basis for s in spaces])
        assert dofs.n_interior + int(dofs.boundary_mask.sum()) == total

    def test_inflow_trace_accuracy(self):
        prob = make_benchmark("eriksson_johnson", epsilon=0.001)
        errs = []
        ys = np.linspace(0, 1, 1000)
        for n in (25, 100):
            spaces = (make_uniform_open_space(3, n, 0, 1),) * 2
            dofs = apply_dirichlet(prob, spaces)
            field = dofs.field_from_interior(np.zeros(dofs.n_interior))
            err = max(abs(eval_field(field, (0.0, y)) - math.sin(math.pi * y))
                      for y in ys)
            errs.append(err)
        assert errs[-1] <= 1e-4
        assert errs[1] < errs[0]

    def test_polynomial_boundary_reproduced(self):
        g = lambda pt: pt[0] ** 2 - 3 * pt[1] + 1.0
        prob = PDEProblem("custom", 2, [(1.0, (2, 0)), (1.0, (0, 2))],
                          forcing=lambda pt: 0.0, dirichlet=g)
        spaces = (make_uniform_open_space(3, 6, 0, 1),) * 2
        dofs = apply_dirichlet(prob, spaces)
        field = dofs.field_from_interior(np.zeros(dofs.n_interior))
        for t in np.linspace(0, 1, 57):
            for pt in [(0.0, t), (1.0, t), (t, 0.0), (t, 1.0)]:
                assert eval_field(field, pt) == pytest.approx(g(pt), abs=1e-10)

    def test_inconsistent_corner_data_rejected(self):
        # a well-defined g can never disagree with itself at a corner, so
        # emulate noisy/multivalued data with a call-order-dependent function
        calls = {"n": 0}

        def g(pt):
            calls["n"] += 1
            if pt[0] == 0.0 and pt[1] == 0.0:
                return float(calls["n"])
            return 0.0

        prob = PDEProblem("custom", 2, [(1.0, (2, 0)), (1.0, (0, 2))],
                          forcing=lambda pt: 0.0, dirichlet=g)
        spaces = (make_uniform_open_space(2, 5, 0, 1),) * 2
        with pytest.raises(ValueError, match="inconsistent"):
            apply_dirichlet(prob, spaces)


class TestAssemble:
    @staticmethod
    def setup_poisson(p=3, n=30, nc=30):
        prob = make_benchmark("poisson2d")
        spaces = (make_uniform_open_space(p, n, 0, 1),) * 2
        colloc = uniform_collocation(nc, 2)
        dofs = apply_dirichlet(prob, spaces)
        return prob, spaces, colloc, dofs

    def test_underdetermined_shape_and_warning(self):
        prob, spaces, colloc, dofs = self.setup_poisson()
        field = dofs.field_from_interior(np.zeros(dofs.n_interior))
        with pytest.warns(RuntimeWarning, match="underdetermined"):
            system = assemble(prob, field, colloc, dofs)
        assert system.jacobian.shape == (900, 961)
        assert np.max(np.diff(system.jacobian.indptr)) <= 16

    def test_zero_field_residual_is_forcing(self):
        prob, spaces, colloc, dofs = self.setup_poisson(n=10, nc=20)
        field = dofs.field_from_interior(np.zeros(dofs.n_interior))
        system = assemble(prob, field, colloc, dofs)
        expected = np.array([prob.forcing(pt) for pt in colloc.points])
        assert np.allclose(system.residual, expected, rtol=0, atol=0)

    def test_affine_consistency(self, rng):
        prob, spaces, colloc, dofs = self.setup_poisson(n=8, nc=16)
        z0 = np.zeros(dofs.n_interior)
        base = assemble(prob, dofs.field_from_interior(z0), colloc, dofs)
        z = rng.standard_normal(dofs.n_interior)
        system = assemble(prob, dofs.field_from_interior(z), colloc, dofs)
        predicted = base.jacobian @ z + base.residual
        assert np.max(np.abs(system.residual - predicted)) <= 1e-10

    def test_linear_jacobian_field_independent(self, rng):
        prob, spaces, colloc, dofs = self.setup_poisson(n=6, nc=12)
        systems = []
        for _ in range(2):
            z = rng.standard_normal(dofs.n_interior)
            systems.append(assemble(prob, dofs.field_from_interior(z), colloc, dofs))
        a, b = systems
        assert np.array_equal(a.jacobian.indptr, b.jacobian.indptr)
        assert np.array_equal(a.jacobian.indices, b.jacobian.indices)
        assert np.array_equal(a.jacobian.data, b.jacobian.data)

    def test_bitwise_determinism(self, rng):
        prob = make_benchmark("allen_cahn", epsilon=0.05)
        spaces = (make_uniform_open_space(2, 6, 0, 1),) * 2
        colloc = uniform_collocation(12, 2)
        dofs = apply_dirichlet(prob, spaces)
        z = rng.standard_normal(dofs.n_interior)
        field = dofs.field_from_interior(z)
        a = assemble(prob, field, colloc, dofs)
        b = assemble(prob, field, colloc, dofs)
        assert np.array_equal(a.residual, b.residual)
        assert np.array_equal(a.jacobian.data, b.jacobian.data)
        assert np.array_equal(a.jacobian.indices, b.jacobian.indices)

    def test_rows_match_pointwise_residual(self, rng):
        from splinecolloc import residual_at
        prob = make_benchmark("helmholtz2d", kappa=2, alpha=1.0)
        spaces = (make_uniform_open_space(3, 5, 0, 1),) * 2
        colloc = uniform_collocation(7, 2)
        dofs = apply_dirichlet(prob, spaces)
        z = rng.standard_normal(dofs.n_interior)
        field = dofs.field_from_interior(z)
        system = assemble(prob, field, colloc, dofs)
        for k in rng.integers(0, colloc.size, 10):
            expected = residual_at(prob, field, colloc.points[k])
            assert system.residual[k] == pytest.approx(expected, rel=1e-12, abs=1e-12)

    def test_3d_assembly_shapes(self):
        prob = make_benchmark("helmholtz3d_ball", kappa=2)
        spaces = (make_uniform_open_space(2, 4, 0, 1),) * 3
        colloc = uniform_collocation(6, 3)
        dofs = apply_dirichlet(prob, spaces)
        field = dofs.field_from_interior(np.zeros(dofs.n_interior))
        system = assemble(prob, field, colloc, dofs)
        assert system.jacobian.shape == (216, 4 ** 3)
        assert np.max(np.diff(system.jacobian.indptr)) <= 27
