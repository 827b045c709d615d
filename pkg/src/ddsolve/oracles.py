"""Brute-force oracles for tiny instances (n <= 2).

These recompute analysis quantities independently of the path follower:
grid search with refinement for feasibility measures, damped Newton for
the analytic center shifted by the objective, bisection for the
feasibility measure of strictly feasible instances.  They exist for the
test suite; nothing in the solver calls them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .barriers import BOX, CONJUGATE, HALFLINE_LOWER, HALFLINE_UPPER, PRIMAL
from .errors import NewtonDivergence
from .model import Problem, StartData, support_function

T_SUP_SENTINEL = 1.0e6


@dataclass(frozen=True)
class OracleInstance:
    """A tiny problem plus the x-space box the grid searches sweep."""

    problem: Problem
    box: tuple
    resolution: int = 33

    def __post_init__(self):
        if self.problem.n > 2 or self.problem.m > 4:
            raise ValueError("oracle instances are limited to n <= 2, m <= 4")
        if len(self.box) != self.problem.n:
            raise ValueError("need one (lo, hi) pair per variable")


def _grid(box, resolution):
    axes = [np.linspace(lo, hi, resolution) for lo, hi in box]
    if len(axes) == 1:
        return axes[0][:, None]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    return pts.reshape(-1, len(axes))


def _batch_margins(problem, Z):
    """Per-row minimum primal margin of the image points Z (N x m)."""
    out = np.full(Z.shape[0], np.inf)
    for atom in problem.atoms:
        idx = np.asarray(atom.coords)
        W = Z[:, idx] + atom.offset_vec
        if atom.kind == HALFLINE_LOWER:
            margin = W[:, 0] - atom.lower
        elif atom.kind == HALFLINE_UPPER:
            margin = atom.upper - W[:, 0]
        elif atom.kind == BOX:
            margin = np.minimum(W[:, 0] - atom.lower, atom.upper - W[:, 0])
        else:
            margin = W[:, 0] - np.linalg.norm(W[:, 1:], axis=1)
        out = np.minimum(out, margin)
    return out


def _batch_dist(problem, Z):
    """Per-row Euclidean distance of the image points Z (N x m) to the
    domain, via closed-form nearest points per atom."""
    sq = np.zeros(Z.shape[0])
    for atom in problem.atoms:
        idx = np.asarray(atom.coords)
        W = Z[:, idx] + atom.offset_vec
        if atom.kind == HALFLINE_LOWER:
            sq += np.maximum(atom.lower - W[:, 0], 0.0) ** 2
        elif atom.kind == HALFLINE_UPPER:
            sq += np.maximum(W[:, 0] - atom.upper, 0.0) ** 2
        elif atom.kind == BOX:
            sq += np.maximum(atom.lower - W[:, 0], 0.0) ** 2 \
                + np.maximum(W[:, 0] - atom.upper, 0.0) ** 2
        else:
            head = W[:, 0]
            tail = np.linalg.norm(W[:, 1:], axis=1)
            shell = 0.5 * (tail - head) ** 2  # distance to the cone surface
            sq += np.where(head >= tail, 0.0,
                           np.where(head <= -tail, head**2 + tail**2, shell))
    return np.sqrt(sq)


def _refine(objective, box, resolution, x_tol=1e-9):
    """Maximize a batch objective over the box by iterated regridding;
    each pass shrinks the search box to one grid cell around the incumbent
    (always at least halving it)."""
    box = [tuple(map(float, b)) for b in box]
    best_x, best_v = None, -np.inf
    while True:
        pts = _grid(box, resolution)
        vals = objective(pts)
        k = int(np.argmax(vals))
        if vals[k] > best_v:
            best_v, best_x = float(vals[k]), pts[k]
        spans = [hi - lo for lo, hi in box]
        if max(spans) <= x_tol:
            return best_x, best_v
        new_box = []
        for j, (lo, hi) in enumerate(box):
            step = (hi - lo) / (resolution - 1)
            new_box.append((max(lo, best_x[j] - step), min(hi, best_x[j] + step)))
        box = new_box


def oracle_sigma_p(inst: OracleInstance) -> float:
    """dist(range(A), D) to about 1e-4: grid over x, nearest point in D
    by the per-atom formulas."""
    problem = inst.problem

    def neg_dist(X):
        return -_batch_dist(problem, X @ problem.A.T)

    _, v = _refine(neg_dist, inst.box, inst.resolution)
    return -v


def _feasible_at(inst: OracleInstance, shift: np.ndarray) -> bool:
    problem = inst.problem

    def margin(X):
        return _batch_margins(problem, X @ problem.A.T + shift)

    _, v = _refine(margin, inst.box, inst.resolution, x_tol=1e-9)
    return v >= 0.0


def oracle_tp(inst: OracleInstance, z0: np.ndarray) -> float:
    """sup { t >= 1 : some x has A x + z0/t in D }, by bisection with the
    per-t feasibility decided by refined grid search.  Returns +inf when
    feasible at t = 1e6, else the bracket midpoint (width <= 1e-4)."""
    z0 = np.asarray(z0, dtype=float)
    if _feasible_at(inst, z0 / T_SUP_SENTINEL):
        return np.inf
    lo, hi = 1.0, T_SUP_SENTINEL
    if not _feasible_at(inst, z0 / lo):
        raise ValueError("t = 1 must be feasible (z0 is interior)")
    while hi - lo > 1e-4:
        mid = 0.5 * (lo + hi)
        if _feasible_at(inst, z0 / mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class CenterResult:
    x: np.ndarray
    y: np.ndarray
    y_tau: float


def compute_xbar1(inst: OracleInstance) -> CenterResult:
    """Minimize Phi(A x) + <c, x> by damped Newton (gradient norm 1e-10).

    Returns the minimizer, the barrier gradient there (which satisfies
    A'y = -c), and the scalar -xi*theta - <y, A x>.  Raises
    NewtonDivergence when no interior starting point exists on the grid or
    Newton fails, which signals that strict feasibility does not hold.
    """
    problem = inst.problem
    barrier = problem.barrier

    def margin(X):
        return _batch_margins(problem, X @ problem.A.T)

    x0, v = _refine(margin, inst.box, inst.resolution, x_tol=1e-6)
    if not v > 0.0:
        raise NewtonDivergence("no strictly interior point in the search box")

    x = np.asarray(x0, dtype=float)
    for _ in range(200):
        z = problem.A @ x
        g = problem.A.T @ barrier.grad(z, PRIMAL) + problem.c
        if np.linalg.norm(g) <= 1e-10:
            y = barrier.grad(z, PRIMAL)
            return CenterResult(x=x, y=y, y_tau=float(-problem.xi * problem.theta - y @ z))
        H = barrier.hess(z, PRIMAL)
        AH = np.column_stack([H.matvec(problem.A[:, j]) for j in range(problem.n)])
        step = -np.linalg.solve(problem.A.T @ AH, g)
        f0 = barrier.value(z, PRIMAL) + float(problem.c @ x)
        alpha, accepted = 1.0, False
        while alpha > 1e-14:
            xn = x + alpha * step
            zn = problem.A @ xn
            if barrier.interior(zn, PRIMAL):
                fn = barrier.value(zn, PRIMAL) + float(problem.c @ xn)
                if fn <= f0 + 0.25 * alpha * float(g @ step):
                    x, accepted = xn, True
                    break
            alpha *= 0.5
        if not accepted:
            break
    raise NewtonDivergence("Newton failed to reach gradient norm 1e-10")


def oracle_sigma_f(inst: OracleInstance, start: StartData) -> float:
    """Feasibility measure of a strictly primal-dual feasible instance:
    the supremum of alpha < 1 keeping

      y_center - alpha*y0 in the dual cone,
      (A x_center - alpha*z0) / (1 - alpha) in the domain,
      support(y_center - alpha*y0) + y_tau_center - alpha*y_tau0 <= 0.

    The admissible set is an interval in alpha; plain bisection to a
    bracket of width 1e-8.
    """
    problem = inst.problem
    center = compute_xbar1(inst)
    z_center = problem.A @ center.x

    def admissible(alpha: float) -> bool:
        y = center.y - alpha * start.y0
        if problem.barrier.min_margin(y, CONJUGATE) < 0.0:
            return False
        z = (z_center - alpha * start.z0) / (1.0 - alpha)
        if problem.barrier.min_margin(z, PRIMAL) < 0.0:
            return False
        ds = support_function(problem, y)
        return np.isfinite(ds) and ds + center.y_tau - alpha * start.y_tau0 <= 0.0

    if not admissible(0.0):
        raise ValueError("alpha = 0 must be admissible for a strictly feasible instance")
    lo, hi = 0.0, 1.0
    while hi - lo > 1e-8:
        mid = 0.5 * (lo + hi)
        if admissible(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
