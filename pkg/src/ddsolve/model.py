"""Problem data, starting points, iterates and the path scalar functionals.

The problem is  inf { <c, x> : A x in D }  with D a product of barrier
atoms.  The solver works on the homogenized set

    Q = { (x, tau, y) : A x + z0/tau interior to D,  tau > 0,
                        A'y - A'y0 = -(tau - 1) c,  y interior to D* }

anchored at a chosen interior point z0 with y0 the barrier gradient there.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .barriers import (
    BOX,
    CONJUGATE,
    HALFLINE_LOWER,
    HALFLINE_UPPER,
    PRIMAL,
    BarrierAtom,
    DomainBarrier,
)
from .errors import AtomCoverage, BadConstants, DomainViolation, RankDeficient

DUAL_EQ_TOL = 1e-9


@dataclass(frozen=True)
class Problem:
    """Validated problem data; construct via :func:`validate_problem`."""

    A: np.ndarray
    c: np.ndarray
    atoms: tuple
    xi: float = 2.0
    kappa: float = 0.25

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1]

    @cached_property
    def barrier(self) -> DomainBarrier:
        return DomainBarrier(self.atoms, self.m)

    @property
    def theta(self) -> float:
        return self.barrier.theta


def validate_problem(A, c, atoms, xi: float = 2.0, kappa: float = 0.25) -> Problem:
    """Check dimensions, atom coverage, rank and solver constants.

    Raises RankDeficient, AtomCoverage or BadConstants.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    c = np.atleast_1d(np.asarray(c, dtype=float))
    m, n = A.shape
    if c.shape != (n,):
        raise AtomCoverage(f"c has shape {c.shape}, expected ({n},)")
    atoms = tuple(atoms)
    covered = sorted(i for a in atoms for i in a.coords)
    if covered != list(range(m)):
        raise AtomCoverage(
            f"atom coords {covered} do not partition the {m} image coordinates")
    xi = float(xi)
    kappa = float(kappa)
    if not xi > 1.0:
        raise BadConstants(f"xi must exceed 1, got {xi}")
    if not kappa >= 0.0 or not xi - 1.0 - kappa > 0.0:
        raise BadConstants(f"need kappa >= 0 and xi - 1 - kappa > 0, got xi={xi} kappa={kappa}")
    if n > m:
        raise RankDeficient(f"embedding is {m}x{n}; more columns than rows means a kernel")
    if n > 0:
        sv = np.linalg.svd(A, compute_uv=False)
        if sv[-1] <= 1e-10 * sv[0]:
            raise RankDeficient(
                f"smallest singular value {sv[-1]:.3e} below 1e-10 * ||A|| = {1e-10 * sv[0]:.3e}")
    return Problem(A=A, c=c, atoms=atoms, xi=xi, kappa=kappa)


@dataclass(frozen=True)
class StartData:
    """Anchor of the homogenized set: z0 interior to D, y0 = Phi'(z0), and
    the scalar y_tau0 = -<y0, z0> - xi*theta."""

    z0: np.ndarray
    y0: np.ndarray
    y_tau0: float


def _atom_canonical_interior(atom: BarrierAtom) -> np.ndarray:
    d = atom.offset_vec
    if atom.kind == HALFLINE_LOWER:
        return np.array([atom.lower + 1.0]) - d
    if atom.kind == HALFLINE_UPPER:
        return np.array([atom.upper - 1.0]) - d
    if atom.kind == BOX:
        return np.array([0.5 * (atom.lower + atom.upper)]) - d
    w = np.zeros(atom.dim)
    w[0] = 2.0
    return w - d


def make_start(problem: Problem, z0=None) -> StartData:
    """Build start data from ``z0`` (default: per-atom canonical interior
    point).  ``y0`` is always recomputed as the barrier gradient."""
    if z0 is None:
        z0 = np.zeros(problem.m)
        for atom in problem.atoms:
            z0[np.asarray(atom.coords)] = _atom_canonical_interior(atom)
    else:
        z0 = np.asarray(z0, dtype=float).copy()
        if z0.shape != (problem.m,):
            raise DomainViolation(f"z0 has shape {z0.shape}, expected ({problem.m},)")
        if not problem.barrier.interior(z0, PRIMAL):
            raise DomainViolation("z0 is not strictly interior to the domain")
    y0 = problem.barrier.grad(z0, PRIMAL)
    y_tau0 = float(-(y0 @ z0) - problem.xi * problem.theta)
    return StartData(z0=z0, y0=y0, y_tau0=y_tau0)


def default_z0(problem: Problem) -> StartData:
    return make_start(problem)


@dataclass(frozen=True)
class Iterate:
    """A point of Q with its cached path parameter and proximity."""

    x: np.ndarray
    tau: float
    y: np.ndarray
    mu: float
    proximity: float


def shifted_image(problem: Problem, start: StartData, x, tau: float) -> np.ndarray:
    """u = A x + z0 / tau, the point whose interiority defines membership."""
    return problem.A @ np.asarray(x, dtype=float) + start.z0 / float(tau)


def dual_residual(problem: Problem, start: StartData, x, tau: float, y) -> float:
    """Norm of  A'y - A'y0 + (tau - 1) c."""
    r = problem.A.T @ (np.asarray(y) - start.y0) + (float(tau) - 1.0) * problem.c
    return float(np.linalg.norm(r))


def in_qdd(problem: Problem, start: StartData, x, tau: float, y) -> bool:
    """Membership test for the homogenized set, with the dual linear
    equation checked to tolerance 1e-9 * (1 + ||c||)."""
    tau = float(tau)
    if not tau > 0.0:
        return False
    u = shifted_image(problem, start, x, tau)
    if not problem.barrier.interior(u, PRIMAL):
        return False
    if not problem.barrier.interior(np.asarray(y, dtype=float), CONJUGATE):
        return False
    tol = DUAL_EQ_TOL * (1.0 + float(np.linalg.norm(problem.c)))
    return dual_residual(problem, start, x, tau, y) <= tol


def mu_of(problem: Problem, start: StartData, x, tau: float, y) -> float:
    """Path parameter of a Q point.

    Uses the form  -( <y, z0> + tau*(y_tau0 + <A'y0 + c, x>) ) / (xi*theta),
    which involves the fewest cancelling terms.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    inner = start.y_tau0 + float((problem.A.T @ start.y0 + problem.c) @ x)
    return float(-(y @ start.z0 + float(tau) * inner) / (problem.xi * problem.theta))


def mu_forms(problem: Problem, start: StartData, x, tau: float, y) -> tuple:
    """All three algebraic forms of the path parameter (they agree on Q)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    tau = float(tau)
    xith = problem.xi * problem.theta
    u = shifted_image(problem, start, x, tau)
    cx = float(problem.c @ x)
    f1 = tau / xith * (-start.y_tau0 - tau * cx - float(y @ u))
    f2 = -(float(y @ start.z0) + tau * (start.y_tau0 + float(y @ (problem.A @ x)))
           + tau * tau * cx) / xith
    f3 = mu_of(problem, start, x, tau, y)
    return f1, f2, f3


def proximity_at(problem: Problem, start: StartData, x, tau: float, y, mu: float) -> float:
    """Distance to the path point at parameter ``mu``:
    || A x + z0/tau - conj_grad((tau/mu) y) ||  in the inverse conjugate-
    Hessian norm at (tau/mu) y.  One Cholesky solve per atom block.
    """
    if not mu > 0.0:
        raise DomainViolation(f"path parameter must be positive, got {mu}")
    y = np.asarray(y, dtype=float)
    v = (float(tau) / float(mu)) * y
    if not problem.barrier.interior(v, CONJUGATE):
        raise DomainViolation("scaled dual point left the dual cone interior")
    u = shifted_image(problem, start, x, tau)
    resid = u - problem.barrier.grad(v, CONJUGATE)
    metric = problem.barrier.hess(v, CONJUGATE)
    return float(np.sqrt(max(metric.inv_quad(resid), 0.0)))


def proximity(problem: Problem, start: StartData, x, tau: float, y) -> float:
    """Proximity at the point's own path parameter.

    Defined only on members of the homogenized set (the parameter formula
    presumes the dual linear equation); raises DomainViolation otherwise.
    """
    if not in_qdd(problem, start, x, tau, y):
        raise DomainViolation("proximity is defined on homogenized-set members only")
    return proximity_at(problem, start, x, tau, y, mu_of(problem, start, x, tau, y))


def make_iterate(problem: Problem, start: StartData, x, tau: float, y) -> Iterate:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    mu = mu_of(problem, start, x, tau, y)
    return Iterate(x=x, tau=float(tau), y=y, mu=mu,
                   proximity=proximity_at(problem, start, x, tau, y, mu))


def support_function(problem: Problem, y) -> float:
    """Support of the domain at ``y``; +inf outside the dual cone."""
    return problem.barrier.support(np.asarray(y, dtype=float))


@dataclass(frozen=True)
class GapBounds:
    lower: float
    upper: float
    actual: float


def gap_bounds(problem: Problem, start: StartData, x, tau: float, y,
               mu: float | None = None) -> GapBounds:
    """Two-sided bound on  <c,x> + support(y)/tau  valid for points within
    proximity kappa of the path; ``actual`` may be +inf off the dual cone.

    The bracket width is exactly (2*kappa*sqrt(theta) + theta) * mu / tau^2.
    """
    x = np.asarray(x, dtype=float)
    tau = float(tau)
    if mu is None:
        mu = mu_of(problem, start, x, tau, y)
    th = problem.theta
    center = -(start.y_tau0 / tau + problem.xi * mu * th / tau**2)
    spread = problem.kappa * mu * np.sqrt(th) / tau**2
    actual = float(problem.c @ x) + support_function(problem, y) / tau
    return GapBounds(lower=center - spread,
                     upper=center + spread + mu * th / tau**2,
                     actual=actual)
