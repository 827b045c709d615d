"""Problem validation, start data, and the path scalar functionals."""

import numpy as np
import pytest

import ddsolve as dd
from ddsolve.model import dual_residual, mu_forms, shifted_image


def test_validate_two_halflines():
    problem = dd.validate_problem([[1.0], [-1.0]], [1.0],
                                  [dd.halfline_lower(0, 0.0), dd.halfline_lower(1, 1.0)])
    assert problem.theta == 2.0
    assert problem.m == 2 and problem.n == 1


def test_validate_rank_deficient():
    with pytest.raises(dd.RankDeficient):
        dd.validate_problem([[1.0, 1.0], [1.0, 1.0]], [0.0, 0.0],
                            [dd.halfline_lower(0), dd.halfline_lower(1)])
    with pytest.raises(dd.RankDeficient):
        # wide embedding always has a kernel
        dd.validate_problem([[1.0, 2.0]], [0.0, 0.0], [dd.halfline_lower(0)])


def test_validate_atom_coverage():
    atoms = [dd.halfline_lower(0), dd.halfline_lower(1)]
    with pytest.raises(dd.AtomCoverage):
        dd.validate_problem(np.ones((3, 1)), [1.0], atoms)
    with pytest.raises(dd.AtomCoverage):
        dd.validate_problem(np.ones((2, 1)), [1.0],
                            [dd.halfline_lower(0), dd.halfline_lower(0)])


def test_validate_bad_constants():
    atoms = [dd.halfline_lower(0)]
    with pytest.raises(dd.BadConstants):
        dd.validate_problem([[1.0]], [1.0], atoms, xi=1.0)
    with pytest.raises(dd.BadConstants):
        dd.validate_problem([[1.0]], [1.0], atoms, xi=2.0, kappa=1.5)


def test_default_start_box(box_problem):
    problem, start = box_problem
    assert start.z0[0] == pytest.approx(0.5)  # midpoint rule
    assert start.y0[0] == pytest.approx(0.0)


def test_default_start_halfline():
    problem = dd.validate_problem([[1.0]], [1.0], [dd.halfline_lower(0, 0.0)], xi=2.0)
    start = dd.default_z0(problem)
    assert start.z0[0] == pytest.approx(1.0)
    assert start.y0[0] == pytest.approx(-1.0)
    # y_tau0 = -<y0, z0> - xi*theta = 1 - xi (theta = 1 here)
    assert start.y_tau0 == pytest.approx(1.0 - 2.0)


def test_default_start_soc_offset(soc_problem):
    problem, start = soc_problem
    assert np.allclose(start.z0, [2.0, 0.0, -1.0])  # offset subtracted
    assert np.allclose(start.z0 + [0.0, 0.0, 1.0], [2.0, 0.0, 0.0])


def test_explicit_z0_must_be_interior(box_problem):
    problem, _ = box_problem
    with pytest.raises(dd.DomainViolation):
        dd.make_start(problem, [1.5])
    start = dd.make_start(problem, [0.25])
    assert start.z0[0] == 0.25


@pytest.mark.parametrize("fixture", ["box_problem", "inf_problem", "unb_problem", "soc_problem"])
def test_mu_is_one_at_initial_point(fixture, request):
    problem, start = request.getfixturevalue(fixture)
    mu = dd.mu_of(problem, start, np.zeros(problem.n), 1.0, start.y0)
    assert mu == pytest.approx(1.0, abs=1e-12)


def test_mu_forms_agree_along_runs(box_run, box_problem, soc_run, soc_problem):
    for run, (problem, start) in ((box_run, box_problem), (soc_run, soc_problem)):
        for it in run.iterates:
            f1, f2, f3 = mu_forms(problem, start, it.x, it.tau, it.y)
            scale = max(1.0, abs(f3))
            assert abs(f1 - f3) <= 1e-9 * scale
            assert abs(f2 - f3) <= 1e-9 * scale


def test_mu_matches_symbolic_on_unb_point(unb_problem):
    # hand-built homogenized point on the unbounded instance, evaluated
    # against a direct transcription of the parameter formula
    problem, start = unb_problem
    tau = 1.5
    y = np.array([start.y0[0] + (tau - 1.0)])  # A'y - A'y0 = -(tau-1)c with c = -1
    x = np.array([2.0])
    assert dd.in_qdd(problem, start, x, tau, y)
    direct = -(y @ start.z0 + tau * (start.y_tau0
               + (problem.A.T @ start.y0 + problem.c) @ x)) / (problem.xi * problem.theta)
    assert dd.mu_of(problem, start, x, tau, y) == pytest.approx(float(direct), rel=1e-12)


def test_proximity_zero_at_initial_point(box_problem):
    problem, start = box_problem
    prox = dd.proximity(problem, start, np.zeros(1), 1.0, start.y0)
    assert prox == pytest.approx(0.0, abs=1e-12)


def test_proximity_matches_dense_algebra(box_problem):
    # perturbed off-path point, proximity recomputed with explicit dense
    # inverse-Hessian algebra
    problem, start = box_problem
    x, tau = np.array([0.1]), 1.25
    y = np.array([start.y0[0] - (tau - 1.0) * problem.c[0]])
    assert dd.in_qdd(problem, start, x, tau, y)
    mu = dd.mu_of(problem, start, x, tau, y)
    v = (tau / mu) * y
    u = shifted_image(problem, start, x, tau)
    resid = u - problem.barrier.grad(v, "conjugate")
    H = problem.barrier.hess(v, "conjugate").dense()
    expected = float(np.sqrt(resid @ np.linalg.solve(H, resid)))
    assert dd.proximity(problem, start, x, tau, y) == pytest.approx(expected, rel=1e-12)
    assert expected > 0.0


def test_proximity_requires_membership(unb_problem):
    # scaling y alone breaks the dual linear equation
    problem, start = unb_problem
    with pytest.raises(dd.DomainViolation):
        dd.proximity(problem, start, np.zeros(1), 1.0, 10.0 * start.y0)


def test_support_function_values(inf_problem):
    problem, _ = inf_problem
    assert dd.support_function(problem, [-1.0, -1.0]) == pytest.approx(-1.0)
    assert dd.support_function(problem, [0.0, 0.0]) == pytest.approx(0.0)
    assert np.isinf(dd.support_function(problem, [0.5, -1.0]))


def test_gap_bounds_initial_point(box_problem):
    problem, start = box_problem
    gb = dd.gap_bounds(problem, start, np.zeros(1), 1.0, start.y0)
    assert gb.lower <= gb.actual <= gb.upper
    # width is exactly (2*kappa*sqrt(theta) + theta) * mu / tau^2
    width = (2.0 * problem.kappa * np.sqrt(problem.theta) + problem.theta)
    assert gb.upper - gb.lower == pytest.approx(width, rel=1e-12)


def test_gap_bounds_hold_along_runs(box_run, box_problem, unb_run, unb_problem):
    for run, (problem, start) in ((box_run, box_problem), (unb_run, unb_problem)):
        for it in run.iterates:
            gb = dd.gap_bounds(problem, start, it.x, it.tau, it.y, it.mu)
            assert gb.lower - 1e-8 <= gb.actual <= gb.upper + 1e-8


def test_tau_floor_constant():
    # (xi - 1 - kappa) / (2 xi) with the default constants
    assert (2.0 - 1.0 - 0.25) / (2.0 * 2.0) == pytest.approx(0.1875)


def test_qdd_dual_equality_tolerance(unb_problem):
    problem, start = unb_problem
    tau = 1.5
    y_exact = np.array([start.y0[0] + (tau - 1.0)])
    assert dd.in_qdd(problem, start, np.array([1.0]), tau, y_exact)
    assert not dd.in_qdd(problem, start, np.array([1.0]), tau, y_exact + 1e-6)
    assert dual_residual(problem, start, np.array([1.0]), tau, y_exact) <= 1e-12
