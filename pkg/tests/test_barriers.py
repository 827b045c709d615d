"""Barrier calculus: closed forms, conjugacy, local norms."""

import numpy as np
import pytest

import ddsolve as dd
from ddsolve.barriers import CONJUGATE, PRIMAL, _metric_block

RNG_SEED = 20240817

ATOM_CASES = {
    "halfline_lower": dd.halfline_lower(0, lower=0.7, offset=-0.3),
    "halfline_upper": dd.halfline_upper(0, upper=2.0, offset=0.4),
    "box": dd.box(0, -1.0, 2.5, offset=0.8),
    "soc": dd.soc([0, 1, 2], [0.1, -0.2, 0.3]),
}


def sample_interior(atom, rng, scale=5.0):
    """Random strictly interior point of the atom set."""
    d = atom.offset_vec
    if atom.kind == "halfline_lower":
        return np.array([atom.lower - d[0] + rng.uniform(0.05, scale)])
    if atom.kind == "halfline_upper":
        return np.array([atom.upper - d[0] - rng.uniform(0.05, scale)])
    if atom.kind == "box":
        return np.array([atom.lower - d[0]
                         + rng.uniform(0.02, 0.98) * (atom.upper - atom.lower)])
    tail = rng.normal(size=atom.dim - 1)
    head = np.linalg.norm(tail) + rng.uniform(0.05, scale)
    return np.concatenate([[head], tail]) - d


def sample_dual_interior(atom, rng, scale=4.0):
    """Random strictly interior point of the atom's dual cone factor."""
    if atom.kind == "halfline_lower":
        return np.array([-rng.uniform(0.05, scale)])
    if atom.kind == "halfline_upper":
        return np.array([rng.uniform(0.05, scale)])
    if atom.kind == "box":
        return np.array([rng.normal() * scale])
    tail = rng.normal(size=atom.dim - 1)
    head = -(np.linalg.norm(tail) + rng.uniform(0.05, scale))
    return np.concatenate([[head], tail])


def sample_member(atom, rng):
    """Random point of the closed atom set (boundary included sometimes)."""
    z = sample_interior(atom, rng)
    if rng.uniform() < 0.3:
        # push to the boundary along the inward slack
        margin = dd.atom_interior_margin(atom, z, PRIMAL)
        if atom.kind == "halfline_lower":
            z = z - margin
        elif atom.kind == "halfline_upper":
            z = z + margin
        elif atom.kind == "soc":
            z = z.copy()
            z[0] -= margin
    return z


@pytest.mark.parametrize("kind", sorted(ATOM_CASES))
def test_conjugate_round_trip(kind):
    atom = ATOM_CASES[kind]
    rng = np.random.default_rng(RNG_SEED)
    for _ in range(100):
        z = sample_interior(atom, rng)
        y = dd.atom_eval(atom, z, PRIMAL, 1)
        z_back = dd.atom_eval(atom, y, CONJUGATE, 1)
        assert np.max(np.abs(z_back - z)) <= 1e-10


@pytest.mark.parametrize("kind", sorted(ATOM_CASES))
def test_fenchel_young_equality_at_gradient(kind):
    atom = ATOM_CASES[kind]
    rng = np.random.default_rng(RNG_SEED + 1)
    for _ in range(100):
        z = sample_interior(atom, rng)
        y = dd.atom_eval(atom, z, PRIMAL, 1)
        val = dd.atom_eval(atom, z, PRIMAL, 0) + dd.atom_eval(atom, y, CONJUGATE, 0)
        assert abs(val - float(y @ z)) <= 1e-10


@pytest.mark.parametrize("kind", sorted(ATOM_CASES))
def test_theta_property(kind):
    # <y, z - conj_grad(y)> <= theta for y in the dual interior, z in the set
    atom = ATOM_CASES[kind]
    rng = np.random.default_rng(RNG_SEED + 2)
    for _ in range(100):
        y = sample_dual_interior(atom, rng)
        z = sample_member(atom, rng)
        zstar = dd.atom_eval(atom, y, CONJUGATE, 1)
        assert float(y @ (z - zstar)) <= atom.theta + 1e-10


@pytest.mark.parametrize("kind", sorted(ATOM_CASES))
@pytest.mark.parametrize("side", [PRIMAL, CONJUGATE])
def test_monotone_gradient_inequality(kind, side):
    # <grad(b) - grad(a), b - a> >= r^2/(1+r) with r = ||b - a|| in the
    # Hessian norm at a; the standard self-concordance bound
    atom = ATOM_CASES[kind]
    rng = np.random.default_rng(RNG_SEED + 3)
    sampler = sample_interior if side == PRIMAL else sample_dual_interior
    for _ in range(100):
        a, b = sampler(atom, rng), sampler(atom, rng)
        ga = dd.atom_eval(atom, a, side, 1)
        gb = dd.atom_eval(atom, b, side, 1)
        H = dd.atom_eval(atom, a, side, 2)
        r = float(np.sqrt((b - a) @ H @ (b - a)))
        assert float((gb - ga) @ (b - a)) >= r * r / (1.0 + r) - 1e-10


@pytest.mark.parametrize("kind", sorted(ATOM_CASES))
@pytest.mark.parametrize("side", [PRIMAL, CONJUGATE])
def test_derivatives_match_finite_differences(kind, side):
    atom = ATOM_CASES[kind]
    rng = np.random.default_rng(RNG_SEED + 4)
    sampler = sample_interior if side == PRIMAL else sample_dual_interior
    for _ in range(25):
        z = sampler(atom, rng, scale=2.0)
        g = dd.atom_eval(atom, z, side, 1)
        H = dd.atom_eval(atom, z, side, 2)
        for i in range(atom.dim):
            h = 1e-6 * max(1.0, abs(z[i]))
            zp, zm = z.copy(), z.copy()
            zp[i] += h
            zm[i] -= h
            fd_g = (dd.atom_eval(atom, zp, side, 0) - dd.atom_eval(atom, zm, side, 0)) / (2 * h)
            assert abs(fd_g - g[i]) <= 1e-6 * (1.0 + abs(g[i]))
            fd_H = (dd.atom_eval(atom, zp, side, 1) - dd.atom_eval(atom, zm, side, 1)) / (2 * h)
            assert np.max(np.abs(fd_H - H[:, i])) <= 1e-6 * (1.0 + np.max(np.abs(H)))


def test_halfline_worked_values():
    atom = dd.halfline_lower(0, lower=0.0)
    assert dd.atom_eval(atom, [1.0], PRIMAL, 0) == pytest.approx(0.0, abs=1e-15)
    assert dd.atom_eval(atom, [1.0], PRIMAL, 1)[0] == pytest.approx(-1.0)
    # Fenchel equality at the gradient point: Phi(1) + Phi*(-1) = <-1, 1>
    assert dd.atom_eval(atom, [-1.0], CONJUGATE, 0) == pytest.approx(-1.0)


def test_soc_worked_values():
    atom = dd.soc([0, 1, 2])
    assert dd.atom_eval(atom, [2.0, 0.0, 0.0], PRIMAL, 0) == pytest.approx(-np.log(4.0))
    grad = dd.atom_eval(atom, [2.0, 0.0, 0.0], PRIMAL, 1)
    assert np.allclose(grad, [-1.0, 0.0, 0.0])


def test_support_worked_values():
    lower = dd.halfline_lower(0, lower=0.0)
    assert dd.atom_support(lower, [-1.0]) == pytest.approx(0.0)
    assert np.isinf(dd.atom_support(lower, [1.0]))
    b = dd.box(0, 0.0, 1.0)
    assert dd.atom_support(b, [-1.0]) == pytest.approx(0.0)
    assert dd.atom_support(b, [1.0]) == pytest.approx(1.0)
    cone = dd.soc([0, 1], [0.0, 0.0])
    assert dd.atom_support(cone, [-1.0, 0.0]) == pytest.approx(0.0)
    assert np.isinf(dd.atom_support(cone, [1.0, 0.0]))


def test_interior_margin_worked_values():
    lower = dd.halfline_lower(0, lower=0.0)
    assert dd.atom_interior_margin(lower, [0.5], PRIMAL) == pytest.approx(0.5)
    cone = dd.soc([0, 1, 2])
    assert dd.atom_interior_margin(cone, [1.0, 1.0, 0.0], PRIMAL) == pytest.approx(0.0)
    b = dd.box(0, 0.0, 1.0)
    assert np.isinf(dd.atom_interior_margin(b, [123.0], CONJUGATE))


def test_domain_violation_raised():
    atom = dd.halfline_lower(0, lower=0.0)
    with pytest.raises(dd.DomainViolation):
        dd.atom_eval(atom, [-0.5], PRIMAL, 0)
    with pytest.raises(dd.DomainViolation):
        dd.atom_eval(atom, [0.5], CONJUGATE, 0)  # dual factor is y < 0
    cone = dd.soc([0, 1])
    with pytest.raises(dd.DomainViolation):
        dd.atom_eval(cone, [1.0, 2.0], PRIMAL, 0)


def test_local_norm_worked_values():
    ident = dd.LocalMetric(np.eye(2))
    assert dd.local_norm(ident, [3.0, 4.0], "direct") == pytest.approx(5.0)
    diag = dd.LocalMetric(np.diag([4.0, 1.0]))
    assert dd.local_norm(diag, [1.0, 0.0], "direct") == pytest.approx(2.0)
    assert dd.local_norm(diag, [1.0, 0.0], "inverse") == pytest.approx(0.5)
    with pytest.raises(dd.FactorizationFailure):
        dd.local_norm(dd.LocalMetric(np.diag([1.0, -1.0])), [1.0, 1.0])


def test_generalized_cauchy_schwarz():
    rng = np.random.default_rng(RNG_SEED + 5)
    for _ in range(100):
        B = rng.normal(size=(3, 3))
        H = B @ B.T + 0.1 * np.eye(3)
        metric = dd.LocalMetric(H)
        x, s = rng.normal(size=3), rng.normal(size=3)
        lhs = abs(float(s @ x))
        rhs = dd.local_norm(metric, x, "direct") * dd.local_norm(metric, s, "inverse")
        assert lhs <= rhs * (1.0 + 1e-12)


def test_soc_conjugate_against_numeric_inversion():
    # invert the barrier gradient by Newton to 1e-12 and compare with the
    # closed-form conjugate gradient
    atom = dd.soc([0, 1, 2], [0.1, -0.2, 0.3])
    rng = np.random.default_rng(RNG_SEED + 6)
    for _ in range(100):
        y = sample_dual_interior(atom, rng)
        z = sample_interior(atom, rng, scale=1.0)  # warm start for Newton
        for _ in range(100):
            g = dd.atom_eval(atom, z, PRIMAL, 1)
            resid = g - y
            if np.max(np.abs(resid)) <= 1e-12:
                break
            H = dd.atom_eval(atom, z, PRIMAL, 2)
            step = -np.linalg.solve(H, resid)
            alpha = 1.0
            while alpha > 1e-16 and dd.atom_interior_margin(atom, z + alpha * step, PRIMAL) <= 0:
                alpha *= 0.5
            z = z + alpha * step
        closed = dd.atom_eval(atom, y, CONJUGATE, 1)
        assert np.max(np.abs(closed - z)) <= 1e-8 * (1.0 + np.max(np.abs(z)))


def test_block_metric_matches_dense():
    atoms = [dd.box(0, 0.0, 1.0), dd.soc([1, 2, 3], [0.0, 0.0, 1.0]), dd.halfline_lower(4, -1.0)]
    rng = np.random.default_rng(RNG_SEED + 7)
    z = np.zeros(5)
    z[0] = 0.3
    z[1:4] = sample_interior(atoms[1], rng)
    z[4] = 2.0
    barrier = dd.DomainBarrier(atoms, 5)
    metric = barrier.hess(z, PRIMAL)
    dense = metric.dense()
    v = rng.normal(size=5)
    assert np.allclose(metric.matvec(v), dense @ v, rtol=1e-10)
    assert np.allclose(metric.solve(v), np.linalg.solve(dense, v), rtol=1e-8)
    assert metric.quad(v) == pytest.approx(float(v @ dense @ v), rel=1e-10)
    assert metric.inv_quad(v) == pytest.approx(float(v @ np.linalg.solve(dense, v)), rel=1e-8)


def test_soc_block_stays_finite_at_extreme_conditioning():
    # near the cone boundary at large scale a dense Cholesky fails; the
    # spectral block must keep producing finite, positive quantities
    blk = _metric_block(dd.soc([0, 1, 2]), np.array([1e4 + 1e-7, 1e4, 0.0]), PRIMAL)
    v = np.array([1.0, 2.0, 3.0])
    assert np.isfinite(blk.quad(v)) and blk.quad(v) > 0
    assert np.isfinite(blk.inv_quad(v)) and blk.inv_quad(v) > 0
    assert np.all(np.isfinite(blk.solve(v)))
