"""Sharp-interface evaluation of the rescaled thin-strip energy.

For a field y on the unit-height strip with thickness parameter h, the
energy is

    E_h(y) = h^-2 int 1/2 (d1 y, d2 y / h) : C (d1 y, d2 y / h) dx
             + beta int_J |(nu1, nu2 / h)| dH^1.

The bulk term uses midpoint quadrature per cell.  Cells crossed by a crack
are either excluded from the quadrature or, for axis-aligned cracks, split
into two slivers evaluated with one-sided differences from their own side,
so the jump set never contaminates the bulk integral.  Crack segments carry
their own unit normals; the anisotropic weight |(nu1, nu2/h)| prices
horizontal cracks at 1/h and vertical ones at 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BallTooLarge, CrackOutsideDomain, InvalidThickness
from .grids import DisplacementField, Grid, sample_field, scaled_gradients
from .tensor import ElasticTensor, isotropic_tensor

_SQRT2 = math.sqrt(2.0)


# ---------------------------------------------------------------------------
# crack sets
# ---------------------------------------------------------------------------

@dataclass
class CrackSet:
    """Polyline crack description: segments (n, 2, 2) and unit normals (n, 2).

    Segments live in the rescaled strip closure [0, L] x [-1/2, 1/2].
    """

    segments: np.ndarray
    normals: np.ndarray

    def __post_init__(self):
        seg = np.asarray(self.segments, dtype=float).reshape(-1, 2, 2)
        nor = np.asarray(self.normals, dtype=float).reshape(-1, 2)
        if seg.shape[0] != nor.shape[0]:
            raise ValueError("one normal per segment required")
        if seg.shape[0] and not np.allclose(np.linalg.norm(nor, axis=1), 1.0, atol=1e-12):
            raise ValueError("normals must be unit vectors")
        self.segments = seg
        self.normals = nor

    @classmethod
    def empty(cls) -> "CrackSet":
        return cls(np.zeros((0, 2, 2)), np.zeros((0, 2)))

    @classmethod
    def vertical_segment(cls, x1: float, y0: float = -0.5, y1: float = 0.5) -> "CrackSet":
        return cls([[[x1, y0], [x1, y1]]], [[1.0, 0.0]])

    @classmethod
    def horizontal_segment(cls, y: float, x0: float, x1: float) -> "CrackSet":
        return cls([[[x0, y], [x1, y]]], [[0.0, 1.0]])

    @classmethod
    def circle(cls, center, radius: float, n: int) -> "CrackSet":
        """Closed polygon approximating a circle, with exact radial normals."""
        cx, cy = center
        th = 2.0 * np.pi * np.arange(n + 1) / n
        pts = np.stack([cx + radius * np.cos(th), cy + radius * np.sin(th)], axis=1)
        segs = np.stack([pts[:-1], pts[1:]], axis=1)
        mid = 0.5 * (th[:-1] + th[1:])
        normals = np.stack([np.cos(mid), np.sin(mid)], axis=1)
        return cls(segs, normals)

    def join(self, other: "CrackSet") -> "CrackSet":
        return CrackSet(
            np.concatenate([self.segments, other.segments]),
            np.concatenate([self.normals, other.normals]),
        )

    @property
    def n_segments(self) -> int:
        return self.segments.shape[0]

    def lengths(self) -> np.ndarray:
        return np.linalg.norm(self.segments[:, 1] - self.segments[:, 0], axis=1)

    def anisotropic_measure(self, h: float) -> float:
        """int |(nu1, nu2/h)| dH^1 over the crack."""
        if self.n_segments == 0:
            return 0.0
        w = np.hypot(self.normals[:, 0], self.normals[:, 1] / h)
        return float(math.fsum(w * self.lengths()))

    def unrescaled_length(self, h: float) -> float:
        """H^1 length after mapping (x1, x2) -> (x1, h x2)."""
        if self.n_segments == 0:
            return 0.0
        d = self.segments[:, 1] - self.segments[:, 0]
        return float(math.fsum(np.hypot(d[:, 0], h * d[:, 1])))

    def validate_inside(self, L: float, tol: float = 1e-9):
        if self.n_segments == 0:
            return
        pts = self.segments.reshape(-1, 2)
        if (
            pts[:, 0].min() < -tol
            or pts[:, 0].max() > L + tol
            or pts[:, 1].min() < -0.5 - tol
            or pts[:, 1].max() > 0.5 + tol
        ):
            raise CrackOutsideDomain("crack segment leaves the strip closure")


def clip_length(segment, x0, x1, y0, y1) -> float:
    """Length of the part of the segment inside the rectangle (Liang-Barsky)."""
    a, b = np.asarray(segment[0], dtype=float), np.asarray(segment[1], dtype=float)
    d = b - a
    t0, t1 = 0.0, 1.0
    for delta, lo, hi in ((d[0], x0 - a[0], x1 - a[0]), (d[1], y0 - a[1], y1 - a[1])):
        if delta == 0.0:
            if lo > 0.0 or hi < 0.0:
                return 0.0
            continue
        ta, tb = lo / delta, hi / delta
        if ta > tb:
            ta, tb = tb, ta
        t0, t1 = max(t0, ta), min(t1, tb)
        if t0 >= t1:
            return 0.0
    return (t1 - t0) * float(np.linalg.norm(d))


def crack_length_in_rect(crack: CrackSet, x0, x1, y0, y1) -> float:
    return float(math.fsum(clip_length(s, x0, x1, y0, y1) for s in crack.segments))


# ---------------------------------------------------------------------------
# energy evaluation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EnergyBreakdown:
    """Rescaled energy split; total = elastic + jump.

    ``elastic_unrescaled`` is the plain strip integral of the strain energy
    (the rescaled elastic part times h^3); the jump term takes the same
    value in both scalings.
    """

    elastic: float
    jump: float
    total: float
    h: float

    @property
    def elastic_unrescaled(self) -> float:
        return self.h ** 3 * self.elastic

    @property
    def jump_unrescaled(self) -> float:
        return self.jump


def _cut_cells(grid: Grid, crack: CrackSet) -> dict:
    """Map cell index (i, j) -> list of segment indices crossing its interior."""
    cut = {}
    if crack.n_segments == 0:
        return cut
    eps_x = 1e-9 * grid.dx
    eps_y = 1e-9 * grid.dy
    xs, ys = grid.x_nodes, grid.y_nodes
    for k, seg in enumerate(crack.segments):
        lo = np.minimum(seg[0], seg[1])
        hi = np.maximum(seg[0], seg[1])
        i0 = max(int(np.floor(lo[0] / grid.dx)) - 1, 0)
        i1 = min(int(np.floor(hi[0] / grid.dx)) + 1, grid.nx - 1)
        j0 = max(int(np.floor((lo[1] + 0.5) / grid.dy)) - 1, 0)
        j1 = min(int(np.floor((hi[1] + 0.5) / grid.dy)) + 1, grid.ny - 1)
        for i in range(i0, i1 + 1):
            for j in range(j0, j1 + 1):
                if clip_length(seg, xs[i] + eps_x, xs[i + 1] - eps_x,
                               ys[j] + eps_y, ys[j + 1] - eps_y) > 0.0:
                    cut.setdefault((i, j), []).append(k)
    return cut


def _split_direction(grid: Grid, crack: CrackSet, cell, seg_ids):
    """If all cutting segments share one vertical (or horizontal) line that
    fully crosses the cell, return ('x', c) or ('y', c); otherwise None."""
    i, j = cell
    xs, ys = grid.x_nodes, grid.y_nodes
    segs = crack.segments[seg_ids]
    d = segs[:, 1] - segs[:, 0]
    if np.all(np.abs(d[:, 0]) <= 1e-14):
        c = segs[0, 0, 0]
        if np.all(np.abs(segs[:, :, 0] - c) <= 1e-12):
            covered = math.fsum(
                clip_length(s, c - 1.0, c + 1.0, ys[j], ys[j + 1]) for s in segs
            )
            if covered >= (ys[j + 1] - ys[j]) - 1e-12 and xs[i] < c < xs[i + 1]:
                return ("x", float(c))
    if np.all(np.abs(d[:, 1]) <= 1e-14):
        c = segs[0, 0, 1]
        if np.all(np.abs(segs[:, :, 1] - c) <= 1e-12):
            covered = math.fsum(
                clip_length(s, xs[i], xs[i + 1], c - 1.0, c + 1.0) for s in segs
            )
            if covered >= (xs[i + 1] - xs[i]) - 1e-12 and ys[j] < c < ys[j + 1]:
                return ("y", float(c))
    return None


def _voigt_density(grads: np.ndarray, C: ElasticTensor) -> np.ndarray:
    """1/2 M : C M per cell from the (nx, ny, 2, 2) gradient stack."""
    v = np.empty(grads.shape[:2] + (3,))
    v[..., 0] = grads[..., 0, 0]
    v[..., 1] = grads[..., 1, 1]
    v[..., 2] = (grads[..., 0, 1] + grads[..., 1, 0]) / _SQRT2
    return 0.5 * np.einsum("...a,ab,...b->...", v, C.q, v)


def _one_sided_density(field: DisplacementField, C: ElasticTensor, cell, axis, side):
    """Strain energy density for one sliver of a cut cell, using differences
    taken entirely on that side.  Returns None when clean neighbor data is
    unavailable (domain boundary)."""
    g = field.grid
    v = field.values
    i, j = cell
    if axis == "x":
        col = i if side == 0 else i + 1
        nbr = col - 1 if side == 0 else col + 1
        if nbr < 0 or nbr > g.nx:
            return None
        d1 = (v[col, j] + v[col, j + 1] - v[nbr, j] - v[nbr, j + 1]) / (2.0 * (col - nbr) * g.dx)
        d2 = (v[col, j + 1] - v[col, j]) / g.dy
    else:
        row = j if side == 0 else j + 1
        nbr = row - 1 if side == 0 else row + 1
        if nbr < 0 or nbr > g.ny:
            return None
        d2 = (v[i, row] + v[i + 1, row] - v[i, nbr] - v[i + 1, nbr]) / (2.0 * (row - nbr) * g.dy)
        d1 = (v[i + 1, row] - v[i, row]) / g.dx
    M = np.array([[d1[0], d2[0] / g.h], [d1[1], d2[1] / g.h]])
    return 0.5 * C.quadratic_form(M)


def evaluate_Eh(
    field: DisplacementField,
    crack: CrackSet,
    C: ElasticTensor,
    beta: float,
    cut_cells: str = "split",
) -> EnergyBreakdown:
    """Evaluate the rescaled sharp energy of a nodal field with a crack.

    Parameters
    ----------
    cut_cells : {"split", "exclude"}
        Crack-crossed cells are split into one-sided slivers when the cut is
        a full axis-aligned crossing (falling back to exclusion otherwise),
        or always excluded.

    Notes
    -----
    Cell contributions are accumulated with exact (compensated) summation,
    so the result does not depend on evaluation order.
    """
    if cut_cells not in ("split", "exclude"):
        raise ValueError("cut_cells must be 'split' or 'exclude'")
    g = field.grid
    crack.validate_inside(g.L)

    grads = scaled_gradients(field)
    density = _voigt_density(grads, C)
    cut = _cut_cells(g, crack)

    area = g.cell_area
    keep = np.ones((g.nx, g.ny), dtype=bool)
    for cell in cut:
        keep[cell] = False
    contributions = [float(s) for s in (density[keep] * area).ravel()]

    if cut_cells == "split":
        xs, ys = g.x_nodes, g.y_nodes
        for cell, seg_ids in cut.items():
            info = _split_direction(g, crack, cell, seg_ids)
            if info is None:
                continue
            axis, c = info
            i, j = cell
            for side in (0, 1):
                nbr = (i - 1, j) if (axis == "x" and side == 0) else \
                      (i + 1, j) if (axis == "x" and side == 1) else \
                      (i, j - 1) if side == 0 else (i, j + 1)
                if nbr in cut:
                    continue
                dens = _one_sided_density(field, C, cell, axis, side)
                if dens is None:
                    continue
                if axis == "x":
                    sliver = (c - xs[i]) * g.dy if side == 0 else (xs[i + 1] - c) * g.dy
                else:
                    sliver = (c - ys[j]) * g.dx if side == 0 else (ys[j + 1] - c) * g.dx
                contributions.append(dens * sliver)

    elastic = math.fsum(contributions) / g.h ** 2
    jump = beta * crack.anisotropic_measure(g.h)
    return EnergyBreakdown(elastic=elastic, jump=jump, total=elastic + jump, h=g.h)


# ---------------------------------------------------------------------------
# counterexample constructions
# ---------------------------------------------------------------------------

def _in_triangle(px, py, a, b, c):
    """Vectorized inclusive point-in-triangle test."""
    def side(p1, p2):
        return (p2[0] - p1[0]) * (py - p1[1]) - (p2[1] - p1[1]) * (px - p1[0])

    d1, d2, d3 = side(a, b), side(b, c), side(c, a)
    neg = (d1 < 0) | (d2 < 0) | (d3 < 0)
    pos = (d1 > 0) | (d2 > 0) | (d3 > 0)
    return ~(neg & pos)


def triangle_field(h: float, L: float):
    """Unrescaled displacement of the slanted-notch construction.

    The strip is cut along {L/2} x (-h/2, h/2 - h^4), leaving a ligament of
    height h^4 at the top.  Left of the cut the material is at rest; right
    of it, it rotates rigidly by 1/h about the ligament tip
    t = (L/2, h/2 - h^4); the small triangle with vertices t,
    (L/2 - h^4, h/2), (L/2 + h^4, h/2) carries the transition strain
    (1/h) (v_perp x v)(x - t) with v = (e1 + e2)/sqrt(2).

    Returns a vectorized function w(x1, x2) -> (..., 2) plus the vertices.
    """
    t = np.array([L / 2.0, h / 2.0 - h ** 4])
    l = np.array([L / 2.0 - h ** 4, h / 2.0])
    r = np.array([L / 2.0 + h ** 4, h / 2.0])
    v = np.array([1.0, 1.0]) / _SQRT2
    v_perp = np.array([-1.0, 1.0]) / _SQRT2
    B = np.outer(v_perp, v)

    def w(x1, x2):
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        shape = np.broadcast(x1, x2).shape
        out = np.zeros(shape + (2,))
        tri = _in_triangle(x1, x2, t, l, r)
        right = (x1 > L / 2.0) & ~tri
        dx1 = x1 - t[0]
        dx2 = x2 - t[1]
        # rigid rotation (x - t)^perp / h on the right
        out[..., 0] = np.where(right, -dx2 / h, out[..., 0])
        out[..., 1] = np.where(right, dx1 / h, out[..., 1])
        # shear band on the triangle
        out[..., 0] = np.where(tri, (B[0, 0] * dx1 + B[0, 1] * dx2) / h, out[..., 0])
        out[..., 1] = np.where(tri, (B[1, 0] * dx1 + B[1, 1] * dx2) / h, out[..., 1])
        return out

    return w, (t, l, r)


def triangle_counterexample(h: float, L: float, nx: int = 64, ny: int = 16):
    """Rescaled triangle construction: nodal field on the unit strip plus the
    vertical crack {L/2} x (-1/2, 1/2 - h^3).

    The unrescaled crack length is h - h^4 while the elastic energy scales
    like h^6, so the anisotropic crack measure stays just below one although
    the two halves move by different rigid motions.

    Raises
    ------
    InvalidThickness
        Unless 0 < h and h^4 < h/2.
    """
    if not (0.0 < h <= 1.0 and h ** 4 < h / 2.0):
        raise InvalidThickness(f"need h^4 < h/2, got h={h}")
    w, _ = triangle_field(h, L)
    grid = Grid(nx=nx, ny=ny, L=L, h=h)
    fld = sample_field(grid, lambda X, Y: w(X, h * Y))
    crack = CrackSet.vertical_segment(L / 2.0, -0.5, 0.5 - h ** 3)
    return fld, crack


def stressed_triangle_energy(h: float, L: float, n: int = 512, C: ElasticTensor | None = None) -> float:
    """Unrescaled elastic energy of the triangle construction, evaluated on
    an n x n midpoint grid over the stressed triangle's bounding box (the
    field is piecewise rigid elsewhere, so the remainder contributes zero).

    With the default tensor (isotropic, mu=2, lambda=0) the exact value of
    the integral is h^6.
    """
    if C is None:
        C = isotropic_tensor(2.0, 0.0)
    w, (t, l, r) = triangle_field(h, L)
    x0, x1 = l[0], r[0]
    y0, y1 = t[1], l[1]
    xs = np.linspace(x0, x1, n + 1)
    ys = np.linspace(y0, y1, n + 1)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    vals = w(X, Y)
    dx = (x1 - x0) / n
    dy = (y1 - y0) / n
    d1 = (vals[1:, :-1] + vals[1:, 1:] - vals[:-1, :-1] - vals[:-1, 1:]) / (2.0 * dx)
    d2 = (vals[:-1, 1:] + vals[1:, 1:] - vals[:-1, :-1] - vals[1:, :-1]) / (2.0 * dy)
    grads = np.empty((n, n, 2, 2))
    grads[..., 0] = d1
    grads[..., 1] = d2
    density = _voigt_density(grads, C)
    return float(math.fsum((density * dx * dy).ravel()))


def escaping_ball_example(h: float, L: float, nx: int = 64, ny: int = 32, n_circle: int = 10 ** 4):
    """Piecewise-constant field escaping to -infinity in the vertical
    component on a shrinking disc.

    The field equals -h^-5 e2 on the disc B((L/2, 0), h^2) of the rescaled
    strip and zero outside; the crack is the disc boundary.  Its energy is
    purely a crack cost of order h while the integral of y2 is -pi/h, which
    is the standard obstruction to L^1 compactness.

    Raises
    ------
    BallTooLarge
        Unless h^2 < min(L/2, 1/2)/2.
    """
    if not h ** 2 < min(L / 2.0, 0.5) / 2.0:
        raise BallTooLarge(f"disc of radius h^2={h**2} does not fit; reduce h")
    grid = Grid(nx=nx, ny=ny, L=L, h=h)
    cx, cy, rad = L / 2.0, 0.0, h ** 2

    def fn(X, Y):
        vals = np.zeros(X.shape + (2,))
        inside = (X - cx) ** 2 + (Y - cy) ** 2 < rad ** 2
        vals[..., 1] = np.where(inside, -(h ** -5), 0.0)
        return vals

    fld = sample_field(grid, fn)
    crack = CrackSet.circle((cx, cy), rad, n_circle)
    return fld, crack


def ball_vertical_mass(h: float, n_circle: int = 10 ** 4) -> float:
    """int y2 dx of the escaping-ball field, via the shoelace area of the
    polygonal disc boundary (independent of any background grid)."""
    rad = h ** 2
    th = 2.0 * np.pi * np.arange(n_circle + 1) / n_circle
    x = rad * np.cos(th)
    y = rad * np.sin(th)
    area = 0.5 * abs(math.fsum(x[:-1] * y[1:] - x[1:] * y[:-1]))
    return -(h ** -5) * area
