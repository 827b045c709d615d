"""Barrier calculus for the atom product domain.

The feasible set is a product of atoms, each a shifted copy of a canonical
convex set equipped with a logarithmic barrier whose Legendre-Fenchel
conjugate is known in closed form:

    halfline_lower  {z : z + d >= l}      -ln(z + d - l)            theta = 1
    halfline_upper  {z : z + d <= u}      -ln(u - d - z)            theta = 1
    box             {z : l <= z + d <= u} -ln(z+d-l) - ln(u-d-z)    theta = 2
    soc             {z : z + d in K}      -ln(w1^2 - |wbar|^2)      theta = 2

where K is the second-order cone {w : w1 >= |wbar|} and w = z + d.  The
conjugate of a shifted barrier picks up a linear term:
Phi*(y) = phi*(y) - <y, d> on the (unshifted) dual cone factor.

All evaluators work on the atom-local coordinates; assembling over the
full image space is done by :class:`DomainBarrier`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainViolation, FactorizationFailure

HALFLINE_LOWER = "halfline_lower"
HALFLINE_UPPER = "halfline_upper"
BOX = "box"
SOC = "soc"

ATOM_THETA = {HALFLINE_LOWER: 1.0, HALFLINE_UPPER: 1.0, BOX: 2.0, SOC: 2.0}

PRIMAL = "primal"
CONJUGATE = "conjugate"


@dataclass(frozen=True)
class BarrierAtom:
    """One factor of the domain: kind, coordinates, shift and bounds.

    ``coords`` are 0-based indices into the image space.  Membership of a
    point ``z`` is tested as ``z[coords] + offset`` against the canonical
    set, so the atom's own set is the canonical set shifted by ``-offset``.
    """

    kind: str
    coords: tuple
    offset: tuple
    lower: float | None = None
    upper: float | None = None
    theta: float = field(init=False)

    def __post_init__(self):
        if self.kind not in ATOM_THETA:
            raise ValueError(f"unknown atom kind {self.kind!r}")
        object.__setattr__(self, "coords", tuple(int(i) for i in self.coords))
        object.__setattr__(self, "offset", tuple(float(v) for v in self.offset))
        object.__setattr__(self, "theta", ATOM_THETA[self.kind])
        k = len(self.coords)
        if len(self.offset) != k:
            raise ValueError("offset length must match coords length")
        if self.kind == SOC:
            if k < 2:
                raise ValueError("soc atom needs at least 2 coordinates")
        elif k != 1:
            raise ValueError(f"{self.kind} atom takes exactly one coordinate")
        if self.kind == BOX and not self.lower < self.upper:
            raise ValueError("box atom requires lower < upper")

    @property
    def dim(self) -> int:
        return len(self.coords)

    @property
    def offset_vec(self) -> np.ndarray:
        return np.asarray(self.offset, dtype=float)


def halfline_lower(coord: int, lower: float = 0.0, offset: float = 0.0) -> BarrierAtom:
    return BarrierAtom(HALFLINE_LOWER, (coord,), (offset,), lower=float(lower))


def halfline_upper(coord: int, upper: float = 0.0, offset: float = 0.0) -> BarrierAtom:
    return BarrierAtom(HALFLINE_UPPER, (coord,), (offset,), upper=float(upper))


def box(coord: int, lower: float, upper: float, offset: float = 0.0) -> BarrierAtom:
    return BarrierAtom(BOX, (coord,), (offset,), lower=float(lower), upper=float(upper))


def soc(coords: Sequence[int], offset: Sequence[float] | None = None) -> BarrierAtom:
    if offset is None:
        offset = (0.0,) * len(tuple(coords))
    return BarrierAtom(SOC, tuple(coords), tuple(offset))


def _soc_parts(w: np.ndarray):
    """Return (w1, |wbar|, w'Jw) for the canonical cone coordinates."""
    head = w[0]
    tail_norm = float(np.linalg.norm(w[1:]))
    return head, tail_norm, (head - tail_norm) * (head + tail_norm)


def atom_interior_margin(atom: BarrierAtom, u, side: str = PRIMAL) -> float:
    """Smallest slack of ``u`` in the atom set (primal) or its dual-cone
    factor (conjugate).  Positive iff strictly interior; the box conjugate
    factor is the whole line, reported as +inf."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if side == PRIMAL:
        w = u + atom.offset_vec
        if atom.kind == HALFLINE_LOWER:
            return float(w[0] - atom.lower)
        if atom.kind == HALFLINE_UPPER:
            return float(atom.upper - w[0])
        if atom.kind == BOX:
            return float(min(w[0] - atom.lower, atom.upper - w[0]))
        head, tail, _ = _soc_parts(w)
        return float(head - tail)
    if atom.kind == HALFLINE_LOWER:
        return float(-u[0])
    if atom.kind == HALFLINE_UPPER:
        return float(u[0])
    if atom.kind == BOX:
        return np.inf
    # dual cone of the soc factor is -K
    head, tail, _ = _soc_parts(-u)
    return float(head - tail)


def atom_eval(atom: BarrierAtom, u, side: str = PRIMAL, order: int = 0):
    """Evaluate the atom barrier (or its conjugate) and derivatives.

    Parameters
    ----------
    u : array_like of the atom's length
        Evaluation point in atom-local coordinates.
    side : "primal" or "conjugate"
    order : 0, 1 or 2
        Value, gradient (1-d array) or Hessian (2-d array).

    Raises
    ------
    DomainViolation
        If ``u`` is not strictly interior to the relevant domain.
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if u.shape != (atom.dim,):
        raise ValueError(f"point has length {u.shape}, atom has {atom.dim}")
    if order not in (0, 1, 2):
        raise ValueError("order must be 0, 1 or 2")
    if not np.all(np.isfinite(u)) or atom_interior_margin(atom, u, side) <= 0.0:
        raise DomainViolation(f"{atom.kind} atom: point not strictly interior ({side} side)")
    d = atom.offset_vec

    if atom.kind == HALFLINE_LOWER:
        if side == PRIMAL:
            s = u[0] + d[0] - atom.lower
            if order == 0:
                return float(-np.log(s))
            if order == 1:
                return np.array([-1.0 / s])
            return np.array([[1.0 / s**2]])
        y = u[0]
        a = atom.lower - d[0]
        if order == 0:
            return float(-1.0 - np.log(-y) + a * y)
        if order == 1:
            return np.array([a - 1.0 / y])
        return np.array([[1.0 / y**2]])

    if atom.kind == HALFLINE_UPPER:
        if side == PRIMAL:
            s = atom.upper - d[0] - u[0]
            if order == 0:
                return float(-np.log(s))
            if order == 1:
                return np.array([1.0 / s])
            return np.array([[1.0 / s**2]])
        y = u[0]
        b = atom.upper - d[0]
        if order == 0:
            return float(-1.0 - np.log(y) + b * y)
        if order == 1:
            return np.array([b - 1.0 / y])
        return np.array([[1.0 / y**2]])

    if atom.kind == BOX:
        lo = atom.lower - d[0]
        width = atom.upper - atom.lower
        if side == PRIMAL:
            s1 = u[0] - lo
            s2 = lo + width - u[0]
            if order == 0:
                return float(-np.log(s1) - np.log(s2))
            if order == 1:
                return np.array([-1.0 / s1 + 1.0 / s2])
            return np.array([[1.0 / s1**2 + 1.0 / s2**2]])
        y = u[0]
        # maximizer of y*s + ln s + ln(width - s); this root form avoids
        # cancellation for either sign of y
        t = y * width
        s = 2.0 * width / (2.0 - t + np.sqrt(t * t + 4.0))
        if order == 0:
            return float(y * (lo + s) + np.log(s) + np.log(width - s))
        if order == 1:
            return np.array([lo + s])
        return np.array([[1.0 / (1.0 / s**2 + 1.0 / (width - s) ** 2)]])

    # soc
    k = atom.dim
    sign = np.ones(k)
    sign[1:] = -1.0
    if side == PRIMAL:
        w = u + d
        jw = sign * w
        _, _, q = _soc_parts(w)
        if order == 0:
            return float(-np.log(q))
        if order == 1:
            return -2.0 * jw / q
        return -2.0 * np.diag(sign) / q + 4.0 * np.outer(jw, jw) / q**2
    y = u
    jy = sign * y
    _, _, p = _soc_parts(-y)
    if order == 0:
        return float(-2.0 + np.log(4.0) - np.log(p) - y @ d)
    if order == 1:
        return -2.0 * jy / p - d
    return -2.0 * np.diag(sign) / p + 4.0 * np.outer(jy, jy) / p**2


def atom_support(atom: BarrierAtom, y) -> float:
    """Support function of the atom set at ``y`` (extended real).

    Returns +inf exactly when ``y`` lies outside the dual cone factor.
    The shift contributes ``-<y, offset>``.
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    d = atom.offset_vec
    if atom.kind == HALFLINE_LOWER:
        if y[0] > 0.0:
            return np.inf
        return float((atom.lower - d[0]) * y[0])
    if atom.kind == HALFLINE_UPPER:
        if y[0] < 0.0:
            return np.inf
        return float((atom.upper - d[0]) * y[0])
    if atom.kind == BOX:
        bound = atom.upper if y[0] >= 0.0 else atom.lower
        return float((bound - d[0]) * y[0])
    head, tail, _ = _soc_parts(-y)
    if head < tail:
        return np.inf
    return float(-(y @ d))


@dataclass(frozen=True)
class LocalMetric:
    """A positive-definite local metric (barrier Hessian at a point)."""

    matrix: np.ndarray
    side: str = PRIMAL


def local_norm(metric: LocalMetric, v, mode: str = "direct") -> float:
    """Local norm ||v||_H (direct) or the conjugate norm ||v||_{H^-1} (inverse).

    Raises FactorizationFailure if the metric is numerically indefinite.
    """
    H = np.atleast_2d(np.asarray(metric.matrix, dtype=float))
    v = np.atleast_1d(np.asarray(v, dtype=float))
    try:
        chol = np.linalg.cholesky(H)
    except np.linalg.LinAlgError as exc:
        raise FactorizationFailure("local metric is not positive definite") from exc
    if mode == "direct":
        return float(np.linalg.norm(chol.T @ v))
    if mode == "inverse":
        return float(np.linalg.norm(np.linalg.solve(chol, v)))
    raise ValueError("mode must be 'direct' or 'inverse'")


class _ScalarBlock:
    """1x1 metric block."""

    def __init__(self, h: float):
        if not h > 0.0 or not np.isfinite(h):
            raise FactorizationFailure(f"scalar metric entry {h} is not positive")
        self.h = float(h)

    def matvec(self, v):
        return self.h * v

    def solve(self, v):
        return v / self.h

    def quad(self, v):
        return self.h * float(v[0]) ** 2

    def inv_quad(self, v):
        return float(v[0]) ** 2 / self.h

    def dense(self):
        return np.array([[self.h]])


class _SocBlock:
    """Second-order-cone barrier Hessian in spectral form.

    For w interior to the cone with head w1 and tail norm t, the Hessian
    -2J/q + 4(Jw)(Jw)'/q^2 has eigenvalue 2/(w1-t)^2 on (1, -wbar/t)/sqrt2,
    2/(w1+t)^2 on (1, wbar/t)/sqrt2, and 2/q on the tail complement.
    Working with these closed forms stays accurate at conditioning where a
    dense Cholesky of the assembled matrix breaks down.
    """

    def __init__(self, w: np.ndarray):
        w = np.asarray(w, dtype=float)
        head = float(w[0])
        t = float(np.linalg.norm(w[1:]))
        margin = head - t
        if not margin > 0.0 or not np.isfinite(margin):
            raise FactorizationFailure("soc metric point is not interior to the cone")
        self.k = w.shape[0]
        self.unit = w[1:] / t if t > 0.0 else np.zeros(self.k - 1)
        self.lam_plus = 2.0 / margin**2
        self.lam_minus = 2.0 / (head + t) ** 2
        self.lam_tail = 2.0 / (margin * (head + t))

    def _split(self, v):
        head = float(v[0])
        proj = float(v[1:] @ self.unit)
        perp = v[1:] - proj * self.unit
        a = (head + proj) / np.sqrt(2.0)   # coefficient on (1, unit)/sqrt(2)
        b = (head - proj) / np.sqrt(2.0)   # coefficient on (1, -unit)/sqrt(2)
        return a, b, perp

    def _assemble(self, a, b, perp):
        out = np.empty(self.k)
        out[0] = (a + b) / np.sqrt(2.0)
        out[1:] = ((a - b) / np.sqrt(2.0)) * self.unit + perp
        return out

    def matvec(self, v):
        a, b, perp = self._split(v)
        return self._assemble(self.lam_minus * a, self.lam_plus * b, self.lam_tail * perp)

    def solve(self, v):
        a, b, perp = self._split(v)
        return self._assemble(a / self.lam_minus, b / self.lam_plus, perp / self.lam_tail)

    def quad(self, v):
        a, b, perp = self._split(v)
        return (self.lam_minus * a * a + self.lam_plus * b * b
                + self.lam_tail * float(perp @ perp))

    def inv_quad(self, v):
        a, b, perp = self._split(v)
        return (a * a / self.lam_minus + b * b / self.lam_plus
                + float(perp @ perp) / self.lam_tail)

    def dense(self):
        return np.column_stack([self.matvec(col) for col in np.eye(self.k)])


def _metric_block(atom: BarrierAtom, u: np.ndarray, side: str):
    """Structured Hessian block of the atom barrier (or conjugate) at u."""
    if atom_interior_margin(atom, u, side) <= 0.0:
        raise DomainViolation(f"{atom.kind} atom: metric point not strictly interior ({side})")
    if atom.kind == SOC:
        # the conjugate Hessian at y equals the primal Hessian at -y
        w = u + atom.offset_vec if side == PRIMAL else -u
        return _SocBlock(w)
    h = float(atom_eval(atom, u, side, 2)[0, 0])
    return _ScalarBlock(h)


class BlockMetric:
    """Block-diagonal metric over the atom product (one block per atom)."""

    def __init__(self, atoms: Sequence[BarrierAtom], blocks: Sequence):
        self.atoms = list(atoms)
        self.blocks = list(blocks)
        self.m = sum(a.dim for a in self.atoms)

    def dense(self) -> np.ndarray:
        out = np.zeros((self.m, self.m))
        for atom, blk in zip(self.atoms, self.blocks):
            idx = np.asarray(atom.coords)
            out[np.ix_(idx, idx)] = blk.dense()
        return out

    def matvec(self, v: np.ndarray) -> np.ndarray:
        out = np.zeros(self.m)
        for atom, blk in zip(self.atoms, self.blocks):
            idx = np.asarray(atom.coords)
            out[idx] = blk.matvec(v[idx])
        return out

    def solve(self, v: np.ndarray) -> np.ndarray:
        out = np.zeros(self.m)
        for atom, blk in zip(self.atoms, self.blocks):
            idx = np.asarray(atom.coords)
            out[idx] = blk.solve(v[idx])
        return out

    def quad(self, v: np.ndarray) -> float:
        return float(sum(blk.quad(v[np.asarray(atom.coords)])
                         for atom, blk in zip(self.atoms, self.blocks)))

    def inv_quad(self, v: np.ndarray) -> float:
        """v' H^-1 v, one structured block solve per atom."""
        return float(sum(blk.inv_quad(v[np.asarray(atom.coords)])
                         for atom, blk in zip(self.atoms, self.blocks)))


class DomainBarrier:
    """Product barrier over an atom list covering the image space."""

    def __init__(self, atoms: Sequence[BarrierAtom], m: int):
        self.atoms = tuple(atoms)
        self.m = int(m)
        self.theta = float(sum(a.theta for a in self.atoms))

    def _local(self, z: np.ndarray, atom: BarrierAtom) -> np.ndarray:
        return z[np.asarray(atom.coords)]

    def value(self, z: np.ndarray, side: str = PRIMAL) -> float:
        return sum(atom_eval(a, self._local(z, a), side, 0) for a in self.atoms)

    def grad(self, z: np.ndarray, side: str = PRIMAL) -> np.ndarray:
        out = np.zeros(self.m)
        for a in self.atoms:
            out[np.asarray(a.coords)] = atom_eval(a, self._local(z, a), side, 1)
        return out

    def hess(self, z: np.ndarray, side: str = PRIMAL) -> BlockMetric:
        return BlockMetric(
            self.atoms, [_metric_block(a, self._local(z, a), side) for a in self.atoms])

    def support(self, y: np.ndarray) -> float:
        total = 0.0
        for a in self.atoms:
            s = atom_support(a, self._local(y, a))
            if np.isinf(s):
                return np.inf
            total += s
        return total

    def margins(self, z: np.ndarray, side: str = PRIMAL) -> np.ndarray:
        return np.array([atom_interior_margin(a, self._local(z, a), side) for a in self.atoms])

    def min_margin(self, z: np.ndarray, side: str = PRIMAL) -> float:
        return float(np.min(self.margins(z, side)))

    def interior(self, z: np.ndarray, side: str = PRIMAL) -> bool:
        return bool(np.all(np.isfinite(z))) and self.min_margin(z, side) > 0.0
