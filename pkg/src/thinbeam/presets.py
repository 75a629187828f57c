"""Constructed fields and targets used by experiments and tests."""

from __future__ import annotations

import numpy as np

from .grids import DisplacementField, Grid, sample_field, trapezoid_node_weights
from .sharp import CrackSet, evaluate_Eh
from .tensor import ElasticTensor


def split_strip_target(grid: Grid, offset: float, position: float) -> DisplacementField:
    """Two halves pulled apart horizontally by ``offset`` across x1 = position."""

    def fn(X, Y):
        vals = np.zeros(X.shape + (2,))
        vals[..., 0] = np.where(X < position, -offset / 2.0, offset / 2.0)
        return vals

    return sample_field(grid, fn)


def vertical_pull_target(grid: Grid, offset: float) -> DisplacementField:
    """Two halves pulled apart vertically across the midline x2 = 0, which
    forces a horizontal crack (the expensive direction)."""

    def fn(X, Y):
        vals = np.zeros(X.shape + (2,))
        vals[..., 1] = np.where(Y < 0.0, -offset / 2.0, offset / 2.0)
        return vals

    return sample_field(grid, fn)


def piecewise_rigid_field(grid: Grid, pieces):
    """Rescaled field made of rigid motions on vertical slabs.

    ``pieces`` is a list of (x_end, a, b) with increasing x_end = grid.L for
    the last entry; on its slab the field is A (x1, h x2)^T + b with
    A = a [[0, 1], [-1, 0]].  Full-height vertical cracks separate the slabs;
    interior boundaries are snapped to the nearest cell midline so nodes
    never sit on a crack.

    Returns (field, crack, snapped_positions).
    """
    ends = [p[0] for p in pieces]
    if sorted(ends) != ends or abs(ends[-1] - grid.L) > 1e-12:
        raise ValueError("piece ends must increase and finish at L")
    cuts = []
    for x_end in ends[:-1]:
        k = int(round(x_end / grid.dx - 0.5))
        k = min(max(k, 0), grid.nx - 1)
        cuts.append((k + 0.5) * grid.dx)

    def fn(X, Y):
        vals = np.zeros(X.shape + (2,))
        prev = 0.0
        for (x_end, a, b), cut in zip(pieces, cuts + [grid.L + 1.0]):
            inside = (X >= prev) & (X < cut)
            vals[..., 0] = np.where(inside, a * grid.h * Y + b[0], vals[..., 0])
            vals[..., 1] = np.where(inside, -a * X + b[1], vals[..., 1])
            prev = cut
        return vals

    field = sample_field(grid, fn)
    crack = CrackSet.empty()
    for c in cuts:
        crack = crack.join(CrackSet.vertical_segment(c))
    return field, crack, cuts


def hatched_crack(x_center: float, h: float, total_length: float, n_pieces: int = 3) -> CrackSet:
    """Short horizontal crack pieces stacked around x_center, used to make
    rectangles bad without severing the strip."""
    piece = total_length / n_pieces
    crack = CrackSet.empty()
    for k in range(n_pieces):
        y = (k - (n_pieces - 1) / 2.0) * 0.3
        crack = crack.join(
            CrackSet.horizontal_segment(y, x_center - piece / 2.0, x_center + piece / 2.0)
        )
    return crack


def sharp_vertical_scan(
    target: DisplacementField,
    C: ElasticTensor,
    beta: float,
    fidelity: float,
    jump_position: float,
):
    """Best sharp energy over candidate full-height vertical cracks.

    Each candidate places the crack at a cell midline and takes the
    displacement equal to the target with its jump moved to the candidate
    position; elastic and crack terms come from the sharp evaluator, the
    fidelity misfit from the trapezoidal node weights.  At the candidate
    matching the target's own jump this is the exact sharp optimum.

    Returns (best_total, best_position, rows) with one (position, total)
    row per candidate.
    """
    grid = target.grid
    w = trapezoid_node_weights(grid)
    offset_field = target.values
    rows = []
    best = (np.inf, None)
    for i in range(1, grid.nx - 1):
        c = (i + 0.5) * grid.dx
        crack = CrackSet.vertical_segment(c)
        X, _ = grid.node_mesh()
        left_val = offset_field[0, 0]
        right_val = offset_field[-1, -1]
        vals = np.where((X < c)[..., None], left_val[None, None, :], right_val[None, None, :])
        cand = DisplacementField(grid, vals)
        out = evaluate_Eh(cand, crack, C, beta, cut_cells="exclude")
        fid = fidelity * float(np.sum(w * np.sum((vals - offset_field) ** 2, axis=-1)))
        total = out.total + fid
        rows.append((c, total))
        if total < best[0]:
            best = (total, c)
    return best[0], best[1], rows
