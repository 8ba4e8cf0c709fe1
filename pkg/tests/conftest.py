"""Shared helpers for the test suite."""

import warnings

import numpy as np
import pytest

import splinecolloc as sc


def solve_forward(name, degree, elements, collocation, cfg=None, gram_kind="identity",
                  initial=None, **params):
    """Run the full forward pipeline; returns (field, report, context dict)."""
    problem = sc.make_benchmark(name, **params)
    spaces = tuple(sc.make_uniform_open_space(degree, elements, 0.0, 1.0)
                   for _ in range(problem.dim))
    colloc = sc.uniform_collocation(collocation, problem.dim)
    dofs = sc.apply_dirichlet(problem, spaces)
    gram = sc.build_gram(gram_kind, colloc)
    if initial is None:
        field0 = dofs.field_from_interior(np.zeros(dofs.n_interior))
    else:
        field0 = initial
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        field, report = sc.gauss_newton(problem, field0, colloc, dofs, gram, cfg)
    ctx = {"problem": problem, "spaces": spaces, "colloc": colloc,
           "dofs": dofs, "gram": gram}
    return field, report, ctx


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
