"""Infinitesimal rigidity of segment trusses.

Segments (p_i, q_i) measure the elongation of an infinitesimal rigid motion
x -> A x + b through the linear map

    F(A, b) = ((A p_i + b) . (p_i - q_i))_i.

When the number of segments equals dim Skew(d) + d the map is square, and
its determinant factors into the segment lengths times a function f of the
extended oriented lines alone.  Invertibility of F is infinitesimal rigidity
of the truss: the segments pin down the rigid motion.

Coordinates: in 2D a skew matrix is a * [[0, 1], [-1, 0]]; in 3D the skew
matrix with axial vector w acts as x -> w x x, which puts the i-th row of
the matrix in the form (p_i x v_i, v_i).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegeneratePair,
    DegenerateProjection,
    NeedsReordering,
    NotParallelTriple,
    SingularTruss,
    WrongCount,
)

_PAR_TOL = 1e-12


def _cross2(x, y) -> float:
    return float(x[0] * y[1] - x[1] * y[0])


def skew_matrix(params, d: int) -> np.ndarray:
    """Skew matrix from canonical coordinates (scalar in 2D, axial in 3D)."""
    if d == 2:
        (a,) = np.atleast_1d(params)
        return np.array([[0.0, a], [-a, 0.0]])
    if d == 3:
        w = np.asarray(params, dtype=float)
        return np.array(
            [
                [0.0, -w[2], w[1]],
                [w[2], 0.0, -w[0]],
                [-w[1], w[0], 0.0],
            ]
        )
    raise ValueError(f"only d in {{2, 3}} supported, got {d}")


@dataclass(frozen=True)
class SegmentPair:
    """Endpoints of one truss segment."""

    p: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        q = np.asarray(self.q, dtype=float)
        if p.shape != q.shape or p.ndim != 1 or p.size not in (2, 3):
            raise ValueError("p and q must both be 2- or 3-vectors")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)

    @property
    def dim(self) -> int:
        return self.p.size

    @property
    def length(self) -> float:
        return float(np.linalg.norm(self.p - self.q))

    def line(self) -> "OrientedLine":
        d = self.p - self.q
        norm = np.linalg.norm(d)
        if norm == 0.0:
            raise DegeneratePair("coincident endpoints have no direction")
        return OrientedLine(self.p, d / norm)


@dataclass(frozen=True)
class OrientedLine:
    """Point plus unit direction; two representations are equal when the
    directions match and the offset is parallel to them."""

    point: np.ndarray
    direction: np.ndarray

    def __post_init__(self):
        point = np.asarray(self.point, dtype=float)
        direction = np.asarray(self.direction, dtype=float)
        if point.shape != direction.shape or point.ndim != 1 or point.size not in (2, 3):
            raise ValueError("point and direction must both be 2- or 3-vectors")
        if abs(np.linalg.norm(direction) - 1.0) > _PAR_TOL:
            raise ValueError("direction must be a unit vector")
        object.__setattr__(self, "point", point)
        object.__setattr__(self, "direction", direction)

    @property
    def dim(self) -> int:
        return self.point.size

    def same_line(self, other: "OrientedLine") -> bool:
        if self.dim != other.dim:
            return False
        if not np.allclose(self.direction, other.direction, rtol=0.0, atol=_PAR_TOL):
            return False
        dx = self.point - other.point
        if self.dim == 2:
            off = abs(_cross2(dx, self.direction))
        else:
            off = float(np.linalg.norm(np.cross(dx, self.direction)))
        return off <= 1e-12 * (1.0 + float(np.linalg.norm(dx)))


def _dim_of(items) -> int:
    dims = {it.dim for it in items}
    if len(dims) != 1:
        raise ValueError("mixed dimensions")
    d = dims.pop()
    if d not in (2, 3):
        raise ValueError("only dimension 2 or 3 supported")
    return d


def _row(point, vec, d) -> np.ndarray:
    if d == 2:
        # coefficient of the skew parameter a in (A p) . v with
        # A = a [[0, 1], [-1, 0]] is p2 v1 - p1 v2 = cross(v, p)
        return np.array([_cross2(vec, point), vec[0], vec[1]])
    return np.concatenate([np.cross(point, vec), vec])


def truss_matrix(pairs) -> np.ndarray:
    """Matrix of F in the canonical Skew(d) x R^d basis, one row per pair.

    Raises
    ------
    DegeneratePair
        If some p_i equals q_i.
    """
    pairs = list(pairs)
    d = _dim_of(pairs)
    rows = []
    for i, pair in enumerate(pairs):
        v = pair.p - pair.q
        if np.linalg.norm(v) == 0.0:
            raise DegeneratePair(f"pair {i} has coincident endpoints")
        rows.append(_row(pair.p, v, d))
    return np.array(rows)


def apply_truss(pairs, A, b) -> np.ndarray:
    """Direct evaluation ((A p_i + b) . (p_i - q_i))_i, bypassing the matrix."""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    return np.array([float((A @ pr.p + b) @ (pr.p - pr.q)) for pr in pairs])


def _require_square(n_items: int, d: int):
    n_expected = d * (d + 1) // 2
    if n_items != n_expected:
        raise WrongCount(f"need {n_expected} segments in {d}D, got {n_items}")


def truss_det(pairs) -> float:
    """Determinant of the square truss matrix.

    Raises
    ------
    WrongCount
        If the number of pairs is not d(d+1)/2.
    """
    pairs = list(pairs)
    d = _dim_of(pairs)
    _require_square(len(pairs), d)
    return float(np.linalg.det(truss_matrix(pairs)))


def line_function_f(lines) -> float:
    """Determinant of the matrix built from (point, unit direction) rows.

    Representative-independent: sliding a point along its line leaves each
    row unchanged up to roundoff.
    """
    lines = list(lines)
    d = _dim_of(lines)
    _require_square(len(lines), d)
    rows = [_row(ln.point, ln.direction, d) for ln in lines]
    return float(np.linalg.det(np.array(rows)))


def _intersect2(l1: OrientedLine, l2: OrientedLine) -> np.ndarray:
    denom = _cross2(l1.direction, l2.direction)
    t = _cross2(l2.point - l1.point, l2.direction) / denom
    return l1.point + t * l1.direction


def f2d_closed_form(l1: OrientedLine, l2: OrientedLine, l3: OrientedLine) -> float:
    """|f| for three 2D lines: |p - q| |sin alpha| |sin beta|.

    The first line must cross the other two; p and q are its intersection
    points with them and alpha, beta the crossing angles.  Three mutually
    parallel lines give zero.  If the first line is parallel to one of the
    others the given ordering is inadmissible and the caller should permute
    (|f| does not depend on the order for pairwise transversal lines).

    Raises
    ------
    NeedsReordering
        If l1 is parallel to l2 or l3 but not all three are parallel.
    """
    d = _dim_of([l1, l2, l3])
    if d != 2:
        raise ValueError("closed form is two-dimensional")
    s12 = abs(_cross2(l1.direction, l2.direction))
    s13 = abs(_cross2(l1.direction, l3.direction))
    s23 = abs(_cross2(l2.direction, l3.direction))
    if s12 <= _PAR_TOL and s13 <= _PAR_TOL and s23 <= _PAR_TOL:
        return 0.0
    if s12 <= _PAR_TOL or s13 <= _PAR_TOL:
        raise NeedsReordering("the doubly-transversal line must come first")
    p = _intersect2(l1, l2)
    q = _intersect2(l1, l3)
    return float(np.linalg.norm(p - q)) * s12 * s13


def f3d_factorization(lines) -> float:
    """|f| of six 3D lines whose first three share one direction.

    Factorizes into the area spanned by the projected base points of the
    parallel triple, the projected lengths of the remaining directions, and
    a planar three-line determinant.

    Raises
    ------
    NotParallelTriple
        If the first three directions differ.
    DegenerateProjection
        If one of the last three directions projects to zero.
    """
    lines = list(lines)
    d = _dim_of(lines)
    if d != 3:
        raise ValueError("factorization is three-dimensional")
    _require_square(len(lines), 3)
    v1 = lines[0].direction
    for ln in lines[1:3]:
        if np.linalg.norm(ln.direction - v1) > 1e-12:
            raise NotParallelTriple("first three directions must coincide")

    proj = lambda x: x - (v1 @ x) * v1
    xb = [proj(ln.point) for ln in lines[:3]]
    area = float(np.linalg.norm(np.cross(xb[1] - xb[0], xb[2] - xb[0])))

    # orthonormal plane basis, deterministic in v1
    k = int(np.argmin(np.abs(v1)))
    u1 = np.cross(np.eye(3)[k], v1)
    u1 /= np.linalg.norm(u1)
    u2 = np.cross(v1, u1)

    lengths = []
    planar = []
    for ln in lines[3:]:
        vbar = proj(ln.direction)
        norm = float(np.linalg.norm(vbar))
        if norm <= 1e-12:
            raise DegenerateProjection("direction parallel to the triple")
        lengths.append(norm)
        pt2 = np.array([u1 @ proj(ln.point), u2 @ proj(ln.point)])
        dir2 = np.array([u1 @ vbar, u2 @ vbar]) / norm
        planar.append(OrientedLine(pt2, dir2))
    f2 = abs(line_function_f(planar))
    return area * lengths[0] * lengths[1] * lengths[2] * f2


def solve_rigid_from_truss(pairs, measurements):
    """Invert F: recover the rigid motion (A, b) from segment elongations.

    Raises
    ------
    SingularTruss
        If |det F| <= 1e-10 * (max row norm)^N, the under-constrained case.
    """
    pairs = list(pairs)
    d = _dim_of(pairs)
    _require_square(len(pairs), d)
    m = np.asarray(measurements, dtype=float)
    if m.shape != (len(pairs),):
        raise ValueError("one measurement per pair required")
    F = truss_matrix(pairs)
    scale = float(np.max(np.linalg.norm(F, axis=1)))
    det = float(np.linalg.det(F))
    if abs(det) <= 1e-10 * scale ** len(pairs):
        raise SingularTruss(f"|det F| = {abs(det):.3e} below threshold")
    x = np.linalg.solve(F, m)
    n_skew = d * (d - 1) // 2
    return skew_matrix(x[:n_skew], d), x[n_skew:]
