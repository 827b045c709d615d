"""Infeasible-start primal-dual path following.

The central path at parameter mu is the unique solution of

    (a)  u := A x + z0/tau  interior to D,  tau > 0
    (b)  A'y - A'y0 = -(tau - 1) c
    (c)  y = (mu/tau) Phi'(u)
    (d)  <c,x> + <y, u>/tau = -theta*xi*mu/tau^2 - y_tau0/tau

started at (x, tau, y) = (0, 1, y0), which solves the system at mu = 1.
The follower alternates a tangent predictor (increasing mu, staying within
proximity 2*kappa) with a Newton corrector (restoring proximity kappa/2 at
fixed mu), and consults the status engine after every corrector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .barriers import BOX, CONJUGATE, HALFLINE_LOWER, HALFLINE_UPPER, PRIMAL, SOC
from .errors import (
    CorrectorStall,
    DomainViolation,
    FactorizationFailure,
    PredictorStall,
)
from .model import (
    Iterate,
    Problem,
    StartData,
    dual_residual,
    gap_bounds,
    make_iterate,
    proximity_at,
    shifted_image,
)
from . import status as status_engine


@dataclass(frozen=True)
class Residuals:
    """Algebraic residuals of the path system at a trial point and mu.

    All three vanish together exactly when the point solves the system at
    that mu (interiority is enforced as a domain condition, not a residual).
    """

    r_dual: np.ndarray
    r_cent: np.ndarray
    r_gap: float

    def scaled_norm(self, problem: Problem, start: StartData, x, tau, y, mu) -> float:
        """Max residual norm, each block scaled by its natural magnitude."""
        tau = float(tau)
        c_inf = float(np.max(np.abs(problem.c))) if problem.n else 0.0
        scale_dual = 1.0 + float(np.max(np.abs(problem.A.T @ start.y0))) + tau * c_inf
        scale_cent = 1.0 + float(np.max(np.abs(y)))
        u = shifted_image(problem, start, x, tau)
        scale_gap = (1.0 + abs(float(problem.c @ x)) + abs(float(y @ u)) / tau
                     + problem.theta * problem.xi * mu / tau**2 + abs(start.y_tau0) / tau)
        parts = [abs(self.r_gap) / scale_gap, float(np.max(np.abs(self.r_cent))) / scale_cent]
        if problem.n:
            parts.append(float(np.max(np.abs(self.r_dual))) / scale_dual)
        return max(parts)


@dataclass(frozen=True)
class FollowerOptions:
    """Knobs of the predictor-corrector loop."""

    eps: float = 1e-8
    max_iters: int = 500
    predictor_radius: float = 2.0     # in units of kappa
    corrector_target: float = 0.5     # in units of kappa
    boundary_fraction: float = 0.99
    corrector_max_steps: int = 50
    corrector_residual_tol: float = 1e-10
    predictor_trial_factor: float = 1e6   # first trial dmu = this * mu (if no boundary cap)

    def validate(self):
        if not 0.0 < self.corrector_target < 1.0 < self.predictor_radius:
            raise ValueError("need corrector_target < 1 < predictor_radius (kappa units)")
        if not 0.0 < self.boundary_fraction < 1.0:
            raise ValueError("boundary_fraction must lie in (0, 1)")


@dataclass(frozen=True)
class TraceRow:
    iter: int
    mu: float
    tau: float
    gap: float
    p_feas: float
    d_feas: float
    proximity: float


@dataclass
class FollowResult:
    report: "status_engine.StatusReport"
    trace: list
    iterates: list
    invariant_violations: list
    mu_log_slope: float


def residuals(problem: Problem, start: StartData, x, tau: float, y, mu: float) -> Residuals:
    """Residuals of equations (b), (c), (d) at the given point and mu."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    tau = float(tau)
    if not tau > 0.0:
        raise DomainViolation(f"tau must be positive, got {tau}")
    u = shifted_image(problem, start, x, tau)
    if not problem.barrier.interior(u, PRIMAL):
        raise DomainViolation("shifted image point left the domain interior")
    g = problem.barrier.grad(u, PRIMAL)
    r_dual = problem.A.T @ (y - start.y0) + (tau - 1.0) * problem.c
    r_cent = y - (mu / tau) * g
    r_gap = (float(problem.c @ x) + float(y @ u) / tau
             + problem.theta * problem.xi * mu / tau**2 + start.y_tau0 / tau)
    return Residuals(r_dual=r_dual, r_cent=r_cent, r_gap=float(r_gap))


def _kkt_solve(problem, start, x, tau, y, mu, b_dual, b_cent, b_gap):
    """Solve the linearized path system for (dx, dtau, dy).

    The y block is eliminated through the centering rows (identity in y),
    leaving a dense (n+1) x (n+1) system in (dx, dtau).
    """
    A = problem.A
    u = shifted_image(problem, start, x, tau)
    g = problem.barrier.grad(u, PRIMAL)
    H = problem.barrier.hess(u, PRIMAL)
    s = mu / tau
    HA = np.column_stack([H.matvec(A[:, j]) for j in range(problem.n)]) \
        if problem.n else np.zeros((problem.m, 0))
    Hz0 = H.matvec(start.z0)
    Hu = H.matvec(u)
    p_vec = (mu / tau**2) * g + (mu / tau**3) * Hz0

    n = problem.n
    M = np.zeros((n + 1, n + 1))
    rhs = np.zeros(n + 1)
    M[:n, :n] = s * (A.T @ HA)
    M[:n, n] = problem.c - A.T @ p_vec
    M[n, :n] = problem.c + (A.T @ y) / tau + (s / tau) * (A.T @ Hu)
    g_tau = (-(float(y @ (A @ x))) / tau**2 - 2.0 * float(y @ start.z0) / tau**3
             - 2.0 * problem.theta * problem.xi * mu / tau**3 - start.y_tau0 / tau**2)
    M[n, n] = g_tau - float(u @ p_vec) / tau
    rhs[:n] = b_dual - A.T @ b_cent
    rhs[n] = b_gap - float(u @ b_cent) / tau
    try:
        sol = np.linalg.solve(M, rhs)
    except np.linalg.LinAlgError as exc:
        raise FactorizationFailure("reduced path system is singular") from exc
    dx, dtau = sol[:n], float(sol[n])
    dy = b_cent + s * (HA @ dx) - p_vec * dtau
    return dx, dtau, dy


def _max_step_to_boundary(problem, z, dz, side) -> float:
    """sup { t : z + s*dz stays in the closed set for s in [0, t] }.

    Exact for linear motion; +inf when the ray never exits.
    """
    t_max = np.inf
    for atom in problem.atoms:
        idx = np.asarray(atom.coords)
        if side == PRIMAL:
            w = z[idx] + atom.offset_vec
            dw = dz[idx]
        else:
            if atom.kind == BOX:
                continue  # dual factor is the whole line
            # halfline duals are sign constraints; soc dual is -K
            w = z[idx].copy()
            dw = dz[idx].copy()
        if atom.kind == SOC:
            if side == CONJUGATE:
                w, dw = -w, -dw
            # boundary of {w1 >= |wbar|} along the ray: quadratic in s
            sgn = np.ones(atom.dim)
            sgn[1:] = -1.0
            a = float(dw @ (sgn * dw))
            b = 2.0 * float(w @ (sgn * dw))
            c0 = float(w @ (sgn * w))
            roots = []
            if abs(a) > 0.0:
                disc = b * b - 4.0 * a * c0
                if disc >= 0.0:
                    sq = np.sqrt(disc)
                    roots = [(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)]
            elif b != 0.0:
                roots = [-c0 / b]
            pos = [r for r in roots if r > 0.0]
            # the head can also cross zero before the quadratic does
            if dw[0] < 0.0 and w[0] > 0.0:
                pos.append(-w[0] / dw[0])
            if pos:
                t_max = min(t_max, min(pos))
            continue
        if atom.kind == HALFLINE_LOWER:
            slacks = [(w[0] - atom.lower, dw[0])] if side == PRIMAL else [(-w[0], -dw[0])]
        elif atom.kind == HALFLINE_UPPER:
            slacks = [(atom.upper - w[0], -dw[0])] if side == PRIMAL else [(w[0], dw[0])]
        else:  # box, primal side
            slacks = [(w[0] - atom.lower, dw[0]), (atom.upper - w[0], -dw[0])]
        for slack, dslack in slacks:
            if dslack < 0.0 and slack > 0.0:
                t_max = min(t_max, slack / (-dslack))
    return t_max



def _interior_after(problem, start, x, tau, y) -> bool:
    if not tau > 0.0:
        return False
    u = shifted_image(problem, start, x, tau)
    return problem.barrier.interior(u, PRIMAL) and problem.barrier.interior(y, CONJUGATE)


def _restore_dual_equality(problem, start, x, tau, y):
    """Project y back onto the dual linear equation (minimal-norm change).

    Newton steps satisfy the equation to solve accuracy; this keeps the
    accumulated float drift at the round-off of A'y itself.
    """
    if problem.n == 0:
        return y
    rhs = problem.A.T @ (start.y0 - y) - (tau - 1.0) * problem.c
    gram = problem.A.T @ problem.A
    try:
        corr = np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError:
        return y
    return y + problem.A @ corr


def corrector_step(problem: Problem, start: StartData, point: Iterate, mu: float,
                   options: FollowerOptions = FollowerOptions()) -> Iterate:
    """Damped Newton steps at fixed mu until the point is within
    kappa * corrector_target of the path (residuals polished further while
    they keep improving).

    Raises CorrectorStall if the proximity target is not met within
    ``corrector_max_steps`` steps.
    """
    kappa = problem.kappa
    target = options.corrector_target * kappa
    x, tau, y = point.x.copy(), point.tau, point.y.copy()
    last_res = np.inf
    for _ in range(options.corrector_max_steps):
        y = _restore_dual_equality(problem, start, x, tau, y)
        prox = proximity_at(problem, start, x, tau, y, mu)
        res = residuals(problem, start, x, tau, y, mu)
        rnorm = res.scaled_norm(problem, start, x, tau, y, mu)
        if prox <= target and (rnorm <= options.corrector_residual_tol
                               or rnorm >= 0.9 * last_res):
            break
        last_res = rnorm
        dx, dtau, dy = _kkt_solve(problem, start, x, tau, y, mu,
                                  -res.r_dual, -res.r_cent, -res.r_gap)
        # fraction-to-boundary step: tau positivity and dual-cone motion are
        # exact; the shifted image moves nonlinearly in tau, so its linear
        # estimate is safeguarded by halving below
        alpha = 1.0
        if dtau < 0.0:
            alpha = min(alpha, options.boundary_fraction * tau / (-dtau))
        alpha = min(alpha, options.boundary_fraction
                    * _max_step_to_boundary(problem, y, dy, CONJUGATE))
        u = shifted_image(problem, start, x, tau)
        du_lin = problem.A @ dx - start.z0 * (dtau / tau**2)
        alpha = min(alpha, options.boundary_fraction
                    * _max_step_to_boundary(problem, u, du_lin, PRIMAL))
        while alpha > 1e-18 and not _interior_after(
                problem, start, x + alpha * dx, tau + alpha * dtau, y + alpha * dy):
            alpha *= 0.5
        if alpha <= 1e-18:
            raise CorrectorStall("step length underflow while correcting")
        x = x + alpha * dx
        tau = tau + alpha * dtau
        y = y + alpha * dy
    else:
        raise CorrectorStall(
            f"proximity {prox:.3e} above target {target:.3e} after "
            f"{options.corrector_max_steps} Newton steps")
    return make_iterate(problem, start, x, tau, y)


def predictor_step(problem: Problem, start: StartData, point: Iterate,
                   options: FollowerOptions = FollowerOptions()):
    """Advance along the path tangent as far as the outer neighborhood
    allows; returns (predicted point, new mu).

    The tangent solves the mu-derivative of the path system, so the dual
    linear equation is preserved exactly along the motion.  The step is
    backtracked (halving) from the fraction-to-boundary cap until proximity
    at the advanced mu is within predictor_radius * kappa.

    Raises PredictorStall when no relative increase of at least 1e-12
    is acceptable.
    """
    mu = point.mu
    x, tau, y = point.x, point.tau, point.y
    tx, ttau, ty = _kkt_solve(
        problem, start, x, tau, y, mu,
        np.zeros(problem.n),
        problem.barrier.grad(shifted_image(problem, start, x, tau), PRIMAL) / tau,
        -problem.theta * problem.xi / tau**2)

    dmu = options.predictor_trial_factor * mu
    if ttau < 0.0:
        dmu = min(dmu, options.boundary_fraction * tau / (-ttau))
    dmu = min(dmu, options.boundary_fraction
              * _max_step_to_boundary(problem, y, ty, CONJUGATE))
    u = shifted_image(problem, start, x, tau)
    du_lin = problem.A @ tx - start.z0 * (ttau / tau**2)
    dmu = min(dmu, options.boundary_fraction
              * _max_step_to_boundary(problem, u, du_lin, PRIMAL))

    radius = options.predictor_radius * problem.kappa
    while dmu > 1e-12 * mu:
        xn, taun, yn = x + dmu * tx, tau + dmu * ttau, y + dmu * ty
        if _interior_after(problem, start, xn, taun, yn):
            try:
                prox = proximity_at(problem, start, xn, taun, yn, mu + dmu)
            except DomainViolation:
                prox = np.inf
            if prox <= radius:
                return Iterate(x=xn, tau=taun, y=yn, mu=mu + dmu, proximity=prox), mu + dmu
        dmu *= 0.5
    raise PredictorStall(f"could not advance the path parameter beyond {mu:.6e}")


def _check_invariants(problem, start, it: Iterate, violations: list):
    """Per-iterate runtime assertions: membership, proximity, gap sandwich,
    the tau floor, and the weak-detector inequality."""
    slack = 1e-8
    tol = 1e-9 * (1.0 + float(np.linalg.norm(problem.c)))
    if not it.tau > 0.0:
        violations.append(f"tau not positive at mu={it.mu:.3e}")
    u = shifted_image(problem, start, it.x, it.tau)
    if not problem.barrier.interior(u, PRIMAL) or not problem.barrier.interior(it.y, CONJUGATE):
        violations.append(f"interiority lost at mu={it.mu:.3e}")
    if dual_residual(problem, start, it.x, it.tau, it.y) > tol:
        violations.append(f"dual equality residual above tolerance at mu={it.mu:.3e}")
    if not it.proximity <= problem.kappa:
        violations.append(f"proximity {it.proximity:.3e} above kappa at mu={it.mu:.3e}")
    gb = gap_bounds(problem, start, it.x, it.tau, it.y, it.mu)
    if np.isfinite(gb.actual):
        if not (gb.lower - slack <= gb.actual <= gb.upper + slack):
            violations.append(
                f"gap sandwich violated at mu={it.mu:.3e}: "
                f"{gb.lower:.6e} <= {gb.actual:.6e} <= {gb.upper:.6e}")
        # same bound rearranged as the weak-detector trigger
        th = problem.theta
        weak_rhs = (-start.y_tau0 / it.tau
                    - ((problem.xi - 1.0) - problem.kappa / np.sqrt(th)) * it.mu * th / it.tau**2)
        if not gb.actual <= weak_rhs + slack:
            violations.append(f"weak-detector inequality violated at mu={it.mu:.3e}")
    if it.mu >= 1.0:
        tau_floor = (problem.xi - 1.0 - problem.kappa) / (2.0 * problem.xi)
        if not it.tau >= tau_floor - slack:
            violations.append(
                f"tau {it.tau:.6e} below floor {tau_floor:.6e} at mu={it.mu:.3e}")


def follow(problem: Problem, start: StartData, options: FollowerOptions = FollowerOptions(),
           on_iterate=None) -> FollowResult:
    """Run the predictor-corrector loop from the mu = 1 point.

    After every corrector the status checks run in their precedence order;
    the loop stops at the first triggered status, the mu cap, or the
    iteration cap.  ``on_iterate`` (if given) receives each TraceRow.

    Returns the full trace; numerical trouble is reported as a
    NumericalFailure status rather than an exception.
    """
    options.validate()
    point = make_iterate(problem, start, np.zeros(problem.n), 1.0, start.y0)
    trace: list = []
    iterates: list = []
    violations: list = []

    def record(it: Iterate) -> TraceRow:
        sp = status_engine.stop_params(problem, start, it.x, it.tau, it.y)
        row = TraceRow(iter=len(trace), mu=it.mu, tau=it.tau, gap=sp.gap,
                       p_feas=sp.p_feas, d_feas=sp.d_feas, proximity=it.proximity)
        trace.append(row)
        iterates.append(it)
        _check_invariants(problem, start, it, violations)
        if on_iterate is not None:
            on_iterate(row)
        return row

    def slope() -> float:
        if len(trace) < 2:
            return 0.0
        ks = np.arange(len(trace), dtype=float)
        logmu = np.log([r.mu for r in trace])
        return float(np.polyfit(ks, logmu, 1)[0])

    def finish(report):
        report.diagnostics.update(
            iterations=len(trace) - 1, mu_log_slope=slope(),
            invariant_violations=len(violations))
        return FollowResult(report=report, trace=trace, iterates=iterates,
                            invariant_violations=violations, mu_log_slope=slope())

    # the initial point is recorded but not status-checked: checks run
    # after correctors only (the anchor can satisfy a stop test by
    # construction, e.g. when A'y0 happens to vanish)
    record(point)

    for _ in range(options.max_iters):
        try:
            predicted, mu_new = predictor_step(problem, start, point, options)
            point = corrector_step(problem, start, predicted, mu_new, options)
        except (PredictorStall, CorrectorStall, DomainViolation, FactorizationFailure) as exc:
            report = status_engine.numerical_failure_report(problem, start, point, exc)
            return finish(report)
        record(point)
        report = status_engine.check_status(problem, start, point, options.eps)
        if report is not None:
            return finish(report)
    report = status_engine.iteration_limit_report(problem, start, point)
    return finish(report)
