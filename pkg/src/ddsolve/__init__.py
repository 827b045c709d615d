"""Convex solver for problems  inf { <c,x> : A x in D }  where D is a
product of barrier atoms (halflines, boxes, second-order cones).

An infeasible-start primal-dual path follower classifies each instance as
solved to accuracy eps, infeasible, unbounded, or ill-conditioned, and
backs every classification with a verifiable certificate.
"""

from .barriers import (
    BarrierAtom,
    DomainBarrier,
    LocalMetric,
    atom_eval,
    atom_interior_margin,
    atom_support,
    box,
    halfline_lower,
    halfline_upper,
    local_norm,
    soc,
)
from .errors import (
    AtomCoverage,
    BadConstants,
    CorrectorStall,
    DomainViolation,
    FactorizationFailure,
    NewtonDivergence,
    ParseError,
    PredictorStall,
    ProjectionOutsideCone,
    ProjectionOutsideDomain,
    RankDeficient,
    SolverError,
    ValidationError,
)
from .model import (
    GapBounds,
    Iterate,
    Problem,
    StartData,
    default_z0,
    gap_bounds,
    in_qdd,
    make_iterate,
    make_start,
    mu_of,
    proximity,
    proximity_at,
    support_function,
    validate_problem,
)
from .path import FollowerOptions, FollowResult, Residuals, TraceRow, corrector_step, follow, predictor_step, residuals
from .status import (
    Certificate,
    StatusReport,
    StopParams,
    check_status,
    stop_params,
    strict_infeasibility_certificate,
    strict_unboundedness_certificate,
    verify_certificate,
)

__version__ = "0.1.0"
