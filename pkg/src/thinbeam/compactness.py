"""Rigid-motion structure extraction from cracked thin-strip fields.

The strip of thickness h is covered by overlapping rectangles
Q_z = (z - h, z + h) x (-h/2, h/2), z = h, 2h, ..., (floor(L/h) - 1) h,
each twice as wide as tall and overlapping its neighbor by half.  A
rectangle is delta-good when the crack length inside it is at most
delta * h; on good rectangles a least-squares rigid motion is reliable.

Runs of bad rectangles between two good ones are classified by the crack
budget inside their convex hull: at least (1 - eta) h of crack severs the
strip there, anything less leaves room for three crack-avoiding segments
(two horizontal, one slightly slanted) forming an infinitesimally rigid
truss that transmits the rigid motion across the run and certifies a
quantitative bound on the mismatch of the flanking fits.

The per-rectangle motions interpolate to piecewise-linear profiles A(x1),
b(x1) that jump only at the centers of severed runs; their piecewise
averages are the step functions whose jump count is certified against the
integer part of the anisotropic crack measure.  Subtracting the step
motion from the field leaves the compact residual; its first strain
component, divided by h, carries the bending profile -x2 k(x1) + T(x1)
recovered by per-column affine fits.

All rectangle geometry lives in unrescaled strip coordinates
(x1, x2_w) = (x1, h x2); fields remain nodal on the rescaled grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CertificateViolation, EmptyRectangle, NoSegmentsFound
from .grids import DisplacementField, cell_means, scaled_gradients
from .sharp import CrackSet, clip_length
from .truss import SegmentPair, solve_rigid_from_truss

_J = np.array([[0.0, 1.0], [-1.0, 0.0]])


def default_bridge_constant(eta: float, N: float) -> float:
    """Configured constant of the bridge certificate; generous by design
    (the truss conditioning degrades like the cube of the span and the
    square of the crack-budget margin)."""
    return 64.0 * (N + 3.0) ** 3 / eta ** 2


# ---------------------------------------------------------------------------
# partition data
# ---------------------------------------------------------------------------

@dataclass
class RectangleInfo:
    z: float
    crack_len: float
    good: bool
    a: float | None = None
    b: np.ndarray | None = None
    residual: float | None = None
    excluded_area: float = 0.0
    excluded_boundary: float = 0.0
    empty: bool = False


@dataclass
class GoodBadPartition:
    field: DisplacementField
    crack: CrackSet
    h: float
    delta: float
    centers: np.ndarray
    rects: list
    omega_cells: np.ndarray  # (nx, ny) crack-adjacent cell mask
    korn_budget: float

    def good_flags(self) -> np.ndarray:
        return np.array([r.good for r in self.rects], dtype=bool)

    def bad_runs(self):
        """Maximal runs of bad rectangles as (first_index, last_index)."""
        flags = self.good_flags()
        runs = []
        k = 0
        while k < len(flags):
            if not flags[k]:
                start = k
                while k < len(flags) and not flags[k]:
                    k += 1
                runs.append((start, k - 1))
            else:
                k += 1
        return runs


def _unrescaled_segments(crack: CrackSet, h: float) -> np.ndarray:
    seg = crack.segments.copy()
    if seg.size:
        seg[:, :, 1] *= h
    return seg


def _crack_cells(grid, crack: CrackSet) -> np.ndarray:
    """Cell mask of cells crossed by the crack, dilated by one cell."""
    from .sharp import _cut_cells

    mask = np.zeros((grid.nx, grid.ny), dtype=bool)
    for (i, j) in _cut_cells(grid, crack):
        mask[i, j] = True
    dil = mask.copy()
    dil[1:, :] |= mask[:-1, :]
    dil[:-1, :] |= mask[1:, :]
    dil[:, 1:] |= mask[:, :-1]
    dil[:, :-1] |= mask[:, 1:]
    return dil


def classify_rectangles(
    field: DisplacementField,
    crack: CrackSet,
    delta: float,
    delta0: float = 1.0 / 16.0,
    korn_budget: float = 8.0,
) -> GoodBadPartition:
    """Flag every covering rectangle good or bad by exact crack clipping.

    ``delta`` must lie in (0, delta0].  Clipping is against the open
    rectangle (shrunk by a relative 1e-12), so cracks on the boundary do
    not count.
    """
    if not 0.0 < delta <= delta0:
        raise ValueError(f"delta must lie in (0, {delta0}], got {delta}")
    grid = field.grid
    h = grid.h
    n_rect = int(math.floor(grid.L / h + 1e-9)) - 1
    if n_rect < 1:
        raise ValueError("strip too short for the rectangle covering")
    centers = h * np.arange(1, n_rect + 1)
    segs = _unrescaled_segments(crack, h)
    eps = 1e-12 * h
    rects = []
    for z in centers:
        length = float(
            math.fsum(
                clip_length(s, z - h + eps, z + h - eps, -h / 2 + eps, h / 2 - eps)
                for s in segs
            )
        )
        rects.append(RectangleInfo(z=float(z), crack_len=length, good=length <= delta * h))
    return GoodBadPartition(
        field=field,
        crack=crack,
        h=h,
        delta=delta,
        centers=centers,
        rects=rects,
        omega_cells=_crack_cells(grid, crack),
        korn_budget=korn_budget,
    )


# ---------------------------------------------------------------------------
# per-rectangle rigid-motion fits
# ---------------------------------------------------------------------------

def _cell_data(field: DisplacementField):
    """Cell centers (unrescaled), cell-mean values, unrescaled gradients."""
    grid = field.grid
    X = grid.x_cells[:, None] * np.ones((1, grid.ny))
    Y = (grid.h * grid.y_cells)[None, :] * np.ones((grid.nx, 1))
    W = cell_means(field.values)
    G = scaled_gradients(field)  # columns (d1 y, d2 y / h) = unrescaled grad of w
    return X, Y, W, G


def fit_rigid_motions(partition: GoodBadPartition) -> GoodBadPartition:
    """Least-squares rigid motion on every good rectangle.

    Minimizes h^-2 |w - A x - b|^2 + |grad w - A|^2 over the rectangle's
    cells minus the crack-adjacent excluded set; A = a [[0, 1], [-1, 0]].
    A good rectangle whose excluded set swallows every cell is demoted to
    bad (the degenerate case of an over-cracked rectangle).
    """
    field = partition.field
    grid = field.grid
    h = partition.h
    X, Y, W, G = _cell_data(field)
    area = grid.dx * (h * grid.dy)
    omega = partition.omega_cells
    for rect in partition.rects:
        if not rect.good:
            continue
        in_rect = (np.abs(X[:, 0] - rect.z) < h)[:, None] & np.ones((1, grid.ny), dtype=bool)
        use = in_rect & ~omega
        if not use.any():
            rect.good = False
            rect.empty = True
            continue
        x1 = X[use]
        x2 = Y[use]
        w = W[use]
        g = G[use]
        s1, s2 = x2, -x1  # (A x) for unit skew parameter
        hw = h ** -2
        n_use = x1.size
        M = np.zeros((3, 3))
        rhs = np.zeros(3)
        M[0, 0] = hw * np.sum(s1 ** 2 + s2 ** 2) + 2.0 * n_use
        M[0, 1] = M[1, 0] = hw * np.sum(s1)
        M[0, 2] = M[2, 0] = hw * np.sum(s2)
        M[1, 1] = M[2, 2] = hw * n_use
        rhs[0] = hw * np.sum(s1 * w[:, 0] + s2 * w[:, 1]) + np.sum(g[:, 0, 1] - g[:, 1, 0])
        rhs[1] = hw * np.sum(w[:, 0])
        rhs[2] = hw * np.sum(w[:, 1])
        a, b1, b2 = np.linalg.solve(M * area, rhs * area)
        rect.a = float(a)
        rect.b = np.array([b1, b2])
        r_disp = w - np.stack([a * s1 + b1, a * s2 + b2], axis=-1)
        r_grad = g - a * _J
        rect.residual = float(
            area * (hw * np.sum(r_disp ** 2) + np.sum(r_grad ** 2))
        )
        rect.excluded_area = float(np.sum(in_rect & omega)) * area
        cell_perim = 2.0 * (grid.dx + h * grid.dy)
        rect.excluded_boundary = float(np.sum(in_rect & omega)) * cell_perim
    return partition


def rigid_motion_at(rect: RectangleInfo, x1, x2w):
    """Evaluate the fitted motion a J x + b at unrescaled coordinates."""
    return np.stack(
        [rect.a * x2w + rect.b[0], -rect.a * x1 + rect.b[1]], axis=-1
    )


# ---------------------------------------------------------------------------
# bridge test
# ---------------------------------------------------------------------------

@dataclass
class BridgeReport:
    left_index: int
    right_index: int
    z_left: float
    z_right: float
    verdict: str  # "BRIDGED" or "SEVERED"
    crack_in_hull: float
    threshold: float
    segments: list | None = None
    truss_a: float | None = None
    truss_b: np.ndarray | None = None
    fitted_a_diff: float | None = None
    fitted_b_diff: np.ndarray | None = None
    hull_elastic: float | None = None
    constant: float | None = None
    bound: float | None = None
    bound_holds: bool | None = None


def _bilinear(field: DisplacementField, x1, x2):
    """Bilinear interpolation of the nodal field at rescaled coordinates."""
    grid = field.grid
    fx = np.clip(x1 / grid.dx, 0.0, grid.nx - 1e-12)
    fy = np.clip((x2 + 0.5) / grid.dy, 0.0, grid.ny - 1e-12)
    i = np.minimum(fx.astype(int) if isinstance(fx, np.ndarray) else int(fx), grid.nx - 1)
    j = np.minimum(fy.astype(int) if isinstance(fy, np.ndarray) else int(fy), grid.ny - 1)
    tx = fx - i
    ty = fy - j
    v = field.values
    return (
        (1 - tx) * (1 - ty) * v[i, j]
        + tx * (1 - ty) * v[i + 1, j]
        + (1 - tx) * ty * v[i, j + 1]
        + tx * ty * v[i + 1, j + 1]
    )


def _segment_hits_crack(p, q, segs, tol=1e-12):
    """Does the open segment (p, q) intersect any crack segment?"""
    d = q - p
    for s in segs:
        e = s[1] - s[0]
        denom = d[0] * e[1] - d[1] * e[0]
        if abs(denom) < tol * (1.0 + abs(d[0]) + abs(d[1])):
            continue  # parallel: grazing contact does not sever
        rel = s[0] - p
        t = (rel[0] * e[1] - rel[1] * e[0]) / denom
        u = (rel[0] * d[1] - rel[1] * d[0]) / denom
        if tol < t < 1.0 - tol and -tol <= u <= 1.0 + tol:
            return True
    return False


def _sym_norms(G):
    sym = 0.5 * (G + np.swapaxes(G, -1, -2))
    return np.sqrt(np.sum(sym ** 2, axis=(-2, -1)))


def bridge_check(
    partition: GoodBadPartition,
    eta: float,
    constant_fn=default_bridge_constant,
    certify: bool = True,
) -> list:
    """Classify every flanked bad run and certify the bridged ones.

    A run whose hull carries at least (1 - eta) h of crack is SEVERED.
    Otherwise (with ``certify``) the deterministic scan picks two
    crack-avoiding low-strain rows of maximal separation (at least
    eta h / 2) plus one diagonal of slope eta^2 / (N + 2), solves the
    resulting truss for the relative rigid motion, and checks

        |A_z - A_z'|^2 + |b_z - b_z'|^2 <= C(eta, N) h^-2 int_hull |e w|^2.

    With ``certify=False`` only the clipping verdicts are computed, which
    stays meaningful arbitrarily close to the critical crack budget where
    the truss geometry degenerates.

    Raises
    ------
    NoSegmentsFound
        If the scan cannot place the three segments although the crack
        budget permits them.
    SingularTruss
        If the placed segments form a numerically singular truss (the
        near-critical regime).
    """
    if not 0.0 < eta < 1.0:
        raise ValueError("eta must lie in (0, 1)")
    field = partition.field
    grid = field.grid
    h = partition.h
    segs_w = _unrescaled_segments(partition.crack, h)
    X, Y, W, G = _cell_data(field)
    enorm = _sym_norms(G)
    cut_or_near = partition.omega_cells
    area = grid.dx * (h * grid.dy)
    reports = []
    flags = partition.good_flags()
    for start, end in partition.bad_runs():
        if start == 0 or end == len(flags) - 1:
            continue  # no flanking good rectangle on one side
        iL, iR = start - 1, end + 1
        zL, zR = partition.centers[iL], partition.centers[iR]
        hull = (zL - h, zR + h)
        eps = 1e-12 * h
        crack_in_hull = float(
            math.fsum(
                clip_length(s, hull[0] + eps, hull[1] - eps, -h / 2 + eps, h / 2 - eps)
                for s in segs_w
            )
        )
        threshold = (1.0 - eta) * h
        report = BridgeReport(
            left_index=iL,
            right_index=iR,
            z_left=float(zL),
            z_right=float(zR),
            verdict="SEVERED" if crack_in_hull >= threshold else "BRIDGED",
            crack_in_hull=crack_in_hull,
            threshold=threshold,
        )
        if certify and report.verdict == "BRIDGED":
            _certify_bridge(
                report, partition, eta, constant_fn,
                X, Y, W, G, enorm, segs_w, hull, area,
            )
        reports.append(report)
    return reports


def _pick_cell_on_row(partition, X, j, z, exclude):
    """Nearest usable cell center to x1 = z on grid row j; None if all
    excluded inside the rectangle."""
    grid = partition.field.grid
    h = partition.h
    cols = np.where((np.abs(X[:, 0] - z) < h) & ~exclude[:, j])[0]
    if cols.size == 0:
        return None
    return cols[np.argmin(np.abs(X[cols, 0] - z))]


def _certify_bridge(report, partition, eta, constant_fn, X, Y, W, G, enorm, segs_w, hull, area):
    field = partition.field
    grid = field.grid
    h = partition.h
    zL, zR = report.z_left, report.z_right
    rectL = partition.rects[report.left_index]
    rectR = partition.rects[report.right_index]
    in_hull = (X[:, 0] > hull[0]) & (X[:, 0] < hull[1])
    hull_cells = in_hull[:, None] & np.ones((1, grid.ny), dtype=bool)
    clean = hull_cells & ~partition.omega_cells
    hull_elastic = float(np.sum(enorm[clean] ** 2) * area)
    hull_abs = float(np.sum(enorm[clean]) * area)
    N = (zR - zL) / h
    C = constant_fn(eta, N)

    # rows: crack-free, low strain, endpoints available in both rectangles
    row_heights = grid.h * grid.y_cells  # unrescaled
    mean_line = hull_abs / h
    line_cap = (8.0 / eta) * mean_line + 1e-10 * (1.0 + mean_line)
    eligible = []
    for j in range(grid.ny):
        t = row_heights[j]
        p_col = _pick_cell_on_row(partition, X, j, zL, partition.omega_cells)
        q_col = _pick_cell_on_row(partition, X, j, zR, partition.omega_cells)
        if p_col is None or q_col is None:
            continue
        p = np.array([X[p_col, 0], t])
        q = np.array([X[q_col, 0], t])
        if np.linalg.norm(p - q) < h:
            continue
        if _segment_hits_crack(p, q, segs_w):
            continue
        cols = in_hull
        line_int = float(np.sum(enorm[cols, j]) * grid.dx)
        if line_int > line_cap:
            continue
        eligible.append((t, j, p, q, line_int))
    if len(eligible) < 2:
        raise NoSegmentsFound("fewer than two crack-avoiding rows in the hull")
    ts = np.array([e[0] for e in eligible])
    lo, hi = int(np.argmin(ts)), int(np.argmax(ts))
    if ts[hi] - ts[lo] < eta * h / 2.0:
        raise NoSegmentsFound("crack-avoiding rows are not separated enough")
    picks = [eligible[lo], eligible[hi]]

    # diagonal of slope theta through the fan of row offsets
    theta = eta ** 2 / (N + 2.0)
    best = None
    for t0 in row_heights:
        def height(x1):
            return t0 + theta * (x1 - zL)

        if abs(height(hull[0])) >= h / 2 or abs(height(hull[1])) >= h / 2:
            continue
        p_col = _pick_cell_on_row(partition, X, _row_of(grid, height(zL), h), zL, partition.omega_cells)
        q_col = _pick_cell_on_row(partition, X, _row_of(grid, height(zR), h), zR, partition.omega_cells)
        if p_col is None or q_col is None:
            continue
        p = np.array([X[p_col, 0], height(X[p_col, 0])])
        q = np.array([X[q_col, 0], height(X[q_col, 0])])
        if np.linalg.norm(p - q) < h:
            continue
        if _segment_hits_crack(p, q, segs_w):
            continue
        cols = np.where(in_hull)[0]
        rows = np.clip(
            ((height(X[cols, 0]) / h + 0.5) / grid.dy).astype(int), 0, grid.ny - 1
        )
        line_int = float(np.sum(enorm[cols, rows]) * grid.dx * math.sqrt(1.0 + theta ** 2))
        if line_int > line_cap:
            continue
        if best is None or line_int < best[4]:
            best = (t0, None, p, q, line_int)
    if best is None:
        raise NoSegmentsFound("no crack-avoiding diagonal in the hull")
    picks.append(best)

    # relative motion via the truss, after subtracting the right fit
    def w_tilde(pt):
        y_val = _bilinear(field, pt[0], pt[1] / h)
        return y_val - rigid_motion_at(rectR, pt[0], pt[1])

    pairs = [SegmentPair(p, q) for (_, _, p, q, _) in picks]
    measurements = [float((p - q) @ (w_tilde(p) - w_tilde(q))) for (_, _, p, q, _) in picks]
    A_hat, b_hat = solve_rigid_from_truss(pairs, measurements)

    report.segments = [(p.copy(), q.copy()) for (_, _, p, q, _) in picks]
    report.truss_a = float(A_hat[0, 1])
    report.truss_b = b_hat
    report.fitted_a_diff = float(rectL.a - rectR.a)
    report.fitted_b_diff = rectL.b - rectR.b
    report.hull_elastic = hull_elastic
    report.constant = C
    report.bound = C * hull_elastic / h ** 2
    lhs = 2.0 * report.fitted_a_diff ** 2 + float(np.sum(report.fitted_b_diff ** 2))
    report.bound_holds = bool(lhs <= report.bound)


def _row_of(grid, x2w, h):
    return int(np.clip((x2w / h + 0.5) / grid.dy, 0, grid.ny - 1))


# ---------------------------------------------------------------------------
# piecewise profiles
# ---------------------------------------------------------------------------

class PiecewiseLinear:
    """Piecewise-linear function given by pieces (x0, x1, f0, f1); values
    may be scalars or vectors.  Evaluation is left-continuous at internal
    breaks except at the left domain end."""

    def __init__(self, pieces):
        self.pieces = pieces

    def __call__(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        f0 = np.asarray(self.pieces[0][2], dtype=float)
        out = np.zeros(x.shape + f0.shape) if f0.shape else np.zeros(x.shape)
        for (x0, x1, v0, v1) in self.pieces:
            mask = (x > x0) & (x <= x1) if x0 > 0.0 else (x >= x0) & (x <= x1)
            if not mask.any():
                continue
            t = (x[mask] - x0) / (x1 - x0) if x1 > x0 else np.zeros(mask.sum())
            v0 = np.asarray(v0, dtype=float)
            v1 = np.asarray(v1, dtype=float)
            out[mask] = np.outer(1.0 - t, v0) + np.outer(t, v1) if v0.shape else (1.0 - t) * v0 + t * v1
        return out

    def average(self, x0, x1):
        """Exact mean over [x0, x1]."""
        total = None
        for (a0, a1, v0, v1) in self.pieces:
            lo, hi = max(a0, x0), min(a1, x1)
            if hi <= lo:
                continue
            v0 = np.asarray(v0, dtype=float)
            v1 = np.asarray(v1, dtype=float)
            if a1 > a0:
                t_lo = (lo - a0) / (a1 - a0)
                t_hi = (hi - a0) / (a1 - a0)
                mean_t = 0.5 * (t_lo + t_hi)
            else:
                mean_t = 0.0
            piece_mean = v0 + mean_t * (v1 - v0)
            contrib = piece_mean * (hi - lo)
            total = contrib if total is None else total + contrib
        return total / (x1 - x0)


@dataclass
class PiecewiseRigidFields:
    a_lin: PiecewiseLinear
    b_lin: PiecewiseLinear
    jumps: tuple
    a_bar_values: list
    b_bar_values: list
    bar_breaks: list  # [0, jumps..., L]
    m_cert: int

    def a_bar(self, x):
        return self._bar(x, self.a_bar_values)

    def b_bar(self, x):
        return self._bar(x, self.b_bar_values)

    def _bar(self, x, values):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        idx = np.searchsorted(np.asarray(self.bar_breaks[1:-1]), x, side="left")
        vals = np.asarray(values, dtype=float)
        return vals[idx]


def build_piecewise_fields(
    partition: GoodBadPartition,
    eta: float,
    reports: list | None = None,
    constant_fn=default_bridge_constant,
) -> PiecewiseRigidFields:
    """Interpolate the fitted motions into piecewise-linear profiles and
    their piecewise-constant averages.

    Linear interpolation runs between consecutive good centers, including
    across bridged runs; severed runs produce a jump at the run center.
    Constant extension covers the domain ends.  The number of jumps is
    certified against floor(anisotropic crack measure).

    Raises
    ------
    CertificateViolation
        If the severed runs outnumber the certificate (delta or eta outside
        the guaranteed regime).
    """
    if reports is None:
        reports = bridge_check(partition, eta, constant_fn)
    flags = partition.good_flags()
    good_idx = np.where(flags)[0]
    if good_idx.size == 0:
        raise EmptyRectangle("no good rectangle to anchor the profiles")
    severed_centers = {
        (r.left_index, r.right_index): 0.5 * (r.z_left + r.z_right)
        for r in reports
        if r.verdict == "SEVERED"
    }
    L = partition.field.grid.L
    zs = partition.centers

    a_pieces = []
    b_pieces = []
    jumps = []

    def rect(i):
        return partition.rects[i]

    first, last = good_idx[0], good_idx[-1]
    a_pieces.append((0.0, zs[first], rect(first).a, rect(first).a))
    b_pieces.append((0.0, zs[first], rect(first).b, rect(first).b))
    for k in range(good_idx.size - 1):
        i, j = good_idx[k], good_idx[k + 1]
        zi, zj = zs[i], zs[j]
        key = (i, j)
        if j == i + 1 or key not in severed_centers:
            a_pieces.append((zi, zj, rect(i).a, rect(j).a))
            b_pieces.append((zi, zj, rect(i).b, rect(j).b))
        else:
            mid = severed_centers[key]
            jumps.append(mid)
            a_pieces.append((zi, mid, rect(i).a, rect(i).a))
            a_pieces.append((mid, zj, rect(j).a, rect(j).a))
            b_pieces.append((zi, mid, rect(i).b, rect(i).b))
            b_pieces.append((mid, zj, rect(j).b, rect(j).b))
    a_pieces.append((zs[last], L, rect(last).a, rect(last).a))
    b_pieces.append((zs[last], L, rect(last).b, rect(last).b))

    measure = partition.crack.anisotropic_measure(partition.h)
    m_cert = int(math.floor(measure + 1e-9))
    if len(jumps) > m_cert:
        raise CertificateViolation(
            f"{len(jumps)} jumps exceed the certificate {m_cert}; "
            "delta or eta are outside the guaranteed regime"
        )

    a_lin = PiecewiseLinear(a_pieces)
    b_lin = PiecewiseLinear(b_pieces)
    breaks = [0.0] + sorted(jumps) + [L]
    a_bar_values = [float(a_lin.average(x0, x1)) for x0, x1 in zip(breaks[:-1], breaks[1:])]
    b_bar_values = [b_lin.average(x0, x1) for x0, x1 in zip(breaks[:-1], breaks[1:])]
    return PiecewiseRigidFields(
        a_lin=a_lin,
        b_lin=b_lin,
        jumps=tuple(sorted(jumps)),
        a_bar_values=a_bar_values,
        b_bar_values=b_bar_values,
        bar_breaks=breaks,
        m_cert=m_cert,
    )


# ---------------------------------------------------------------------------
# extraction pipeline
# ---------------------------------------------------------------------------

@dataclass
class ExtractResult:
    partition: GoodBadPartition
    reports: list
    fields: PiecewiseRigidFields
    residual: np.ndarray       # (nx+1, ny+1, 2) nodal residual
    node_mask: np.ndarray      # (nx+1, ny+1) True where the residual is valid
    omega_mask: np.ndarray     # (nx, ny) excluded cells
    omega_area: float          # rescaled measure of the excluded set
    omega_perimeter: float     # anisotropic perimeter sum of the cell mask


def compactness_extract(
    field: DisplacementField,
    crack: CrackSet,
    delta: float,
    eta: float,
    delta0: float = 1.0 / 16.0,
    korn_budget: float = 8.0,
    constant_fn=default_bridge_constant,
) -> ExtractResult:
    """Run the full pipeline and subtract the step motion from the field.

    The excluded set is the union of the crack-adjacent cells, the cells
    under bad rectangles, and the right boundary layer; a node is valid
    when none of its adjacent cells is excluded.
    """
    partition = classify_rectangles(field, crack, delta, delta0, korn_budget)
    fit_rigid_motions(partition)
    reports = bridge_check(partition, eta, constant_fn)
    fields = build_piecewise_fields(partition, eta, reports, constant_fn)

    grid = field.grid
    h = partition.h
    omega = partition.omega_cells.copy()
    xc = grid.x_cells
    for rect, goodflag in zip(partition.rects, partition.good_flags()):
        if not goodflag:
            omega |= (np.abs(xc - rect.z) < h)[:, None]
    layer_start = (math.floor(grid.L / h + 1e-9) - 1) * h
    omega |= (xc > layer_start)[:, None]

    omega_area = float(np.sum(omega)) * grid.cell_area
    vert_edges = np.sum(omega[:-1, :] != omega[1:, :])
    horiz_edges = np.sum(omega[:, :-1] != omega[:, 1:])
    omega_perimeter = float(vert_edges) * grid.dy + float(horiz_edges) * grid.dx / h

    X, Ynod = grid.node_mesh()
    a_bar = fields.a_bar(grid.x_nodes)
    b_bar = np.asarray(fields.b_bar(grid.x_nodes))
    motion = np.empty_like(field.values)
    motion[..., 0] = a_bar[:, None] * (h * Ynod) + b_bar[:, 0][:, None]
    motion[..., 1] = -a_bar[:, None] * X + b_bar[:, 1][:, None]
    residual = field.values - motion

    padded = np.zeros((grid.nx + 2, grid.ny + 2), dtype=bool)
    padded[1:-1, 1:-1] = omega
    node_mask = ~(
        padded[:-1, :-1] | padded[1:, :-1] | padded[:-1, 1:] | padded[1:, 1:]
    )
    return ExtractResult(
        partition=partition,
        reports=reports,
        fields=fields,
        residual=residual,
        node_mask=node_mask,
        omega_mask=omega,
        omega_area=omega_area,
        omega_perimeter=omega_perimeter,
    )


# ---------------------------------------------------------------------------
# bending-profile identification
# ---------------------------------------------------------------------------

def profile_fit(field: DisplacementField, omega_mask: np.ndarray):
    """Per-column affine fit of the normalized first strain component.

    W = (1/h) d1 y1 on non-excluded cells is fitted per column as
    W(x2) = -x2 * kappa + T.  Returns (kappa, T, residual_rms, valid);
    columns whose usable cells cannot determine an affine function are
    masked out (valid = False, NaN entries)."""
    grid = field.grid
    W = scaled_gradients(field)[..., 0, 0] / grid.h
    y = grid.y_cells
    nx = grid.nx
    kappa = np.full(nx, np.nan)
    T = np.full(nx, np.nan)
    resid = np.full(nx, np.nan)
    valid = np.zeros(nx, dtype=bool)
    for i in range(nx):
        use = ~omega_mask[i]
        if use.sum() < 2 or np.ptp(y[use]) == 0.0:
            continue
        A = np.stack([-y[use], np.ones(use.sum())], axis=-1)
        coef, res, *_ = np.linalg.lstsq(A, W[i, use], rcond=None)
        kappa[i], T[i] = coef
        r = W[i, use] - A @ coef
        resid[i] = float(np.sqrt(np.mean(r ** 2)))
        valid[i] = True
    return kappa, T, resid, valid
