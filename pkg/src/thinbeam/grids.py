"""Nodal vector fields on the rescaled strip (0, L) x (-1/2, 1/2).

Fields carry the physical thickness ``h`` alongside the grid so that the
anisotropic gradient (d1, d2/h) and all unrescaled quantities can be
recovered.  Gradients are evaluated per cell at the midpoint from the four
corner nodes (bilinear elements), which keeps every difference inside one
cell and therefore on one side of any crack that runs between nodes.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

_BIN_MAGIC = b"THINGRID"


@dataclass(frozen=True)
class Grid:
    """Uniform node grid on (0, L) x (-1/2, 1/2) with thickness h."""

    nx: int
    ny: int
    L: float
    h: float

    def __post_init__(self):
        if self.nx < 2 or self.ny < 2:
            raise ValueError("need nx >= 2 and ny >= 2")
        if not (0.0 < self.h <= 1.0):
            raise ValueError("thickness h must lie in (0, 1]")
        if self.L <= 0.0:
            raise ValueError("length L must be positive")

    @property
    def dx(self) -> float:
        return self.L / self.nx

    @property
    def dy(self) -> float:
        return 1.0 / self.ny

    @property
    def x_nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.L, self.nx + 1)

    @property
    def y_nodes(self) -> np.ndarray:
        return np.linspace(-0.5, 0.5, self.ny + 1)

    @property
    def x_cells(self) -> np.ndarray:
        return (np.arange(self.nx) + 0.5) * self.dx

    @property
    def y_cells(self) -> np.ndarray:
        return -0.5 + (np.arange(self.ny) + 0.5) * self.dy

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    def node_mesh(self):
        return np.meshgrid(self.x_nodes, self.y_nodes, indexing="ij")


@dataclass
class DisplacementField:
    """Nodal 2-vector field; values has shape (nx+1, ny+1, 2), index [i, j]."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        expected = (self.grid.nx + 1, self.grid.ny + 1, 2)
        if v.shape != expected:
            raise ValueError(f"values must have shape {expected}, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        self.values = v

    def copy(self) -> "DisplacementField":
        return DisplacementField(self.grid, self.values.copy())


def sample_field(grid: Grid, fn) -> DisplacementField:
    """Sample fn(X, Y) -> (..., 2) on the nodes; fn must broadcast."""
    X, Y = grid.node_mesh()
    vals = np.asarray(fn(X, Y), dtype=float)
    if vals.shape != (grid.nx + 1, grid.ny + 1, 2):
        raise ValueError("sampling function returned the wrong shape")
    return DisplacementField(grid, vals)


def rigid_motion_field(grid: Grid, a: float, b) -> DisplacementField:
    """Rescaled infinitesimal rigid motion y = A (x1, h x2)^T + b with
    A = a [[0, 1], [-1, 0]]."""
    b = np.asarray(b, dtype=float)
    X, Y = grid.node_mesh()
    vals = np.empty((grid.nx + 1, grid.ny + 1, 2))
    vals[..., 0] = a * grid.h * Y + b[0]
    vals[..., 1] = -a * X + b[1]
    return DisplacementField(grid, vals)


def scaled_gradients(field: DisplacementField) -> np.ndarray:
    """Per-cell midpoint anisotropic gradient, shape (nx, ny, 2, 2).

    Entry [i, j] is the matrix whose first column is d1 y and second column
    is (1/h) d2 y, both evaluated at the center of cell (i, j).
    """
    g = field.grid
    v = field.values
    out = np.empty((g.nx, g.ny, 2, 2))
    d1 = (v[1:, :-1] + v[1:, 1:] - v[:-1, :-1] - v[:-1, 1:]) / (2.0 * g.dx)
    d2 = (v[:-1, 1:] + v[1:, 1:] - v[:-1, :-1] - v[1:, :-1]) / (2.0 * g.dy)
    out[..., 0] = d1
    out[..., 1] = d2 / g.h
    return out


def cell_means(nodal: np.ndarray) -> np.ndarray:
    """Average the four corner values of each cell."""
    return 0.25 * (nodal[:-1, :-1] + nodal[1:, :-1] + nodal[:-1, 1:] + nodal[1:, 1:])


def trapezoid_node_weights(grid: Grid) -> np.ndarray:
    """Quadrature weights for nodal integrals, shape (nx+1, ny+1)."""
    wx = np.ones(grid.nx + 1)
    wx[0] = wx[-1] = 0.5
    wy = np.ones(grid.ny + 1)
    wy[0] = wy[-1] = 0.5
    return np.outer(wx, wy) * grid.cell_area


# ---------------------------------------------------------------------------
# grid file formats: CSV (text) and a small binary layout, both row-major
# with i (the x1 index) as the outer loop
# ---------------------------------------------------------------------------

def write_field_csv(field: DisplacementField, path):
    g = field.grid
    with open(path, "w") as fh:
        fh.write(f"# thinbeam-grid nx={g.nx} ny={g.ny} L={g.L!r} h={g.h!r}\n")
        fh.write("y1,y2\n")
        flat = field.values.reshape(-1, 2)
        for row in flat:
            fh.write(f"{row[0]:.17g},{row[1]:.17g}\n")


def read_field_csv(path) -> DisplacementField:
    with open(path) as fh:
        header = fh.readline()
        if not header.startswith("# thinbeam-grid"):
            raise ValueError("missing thinbeam-grid header")
        meta = dict(tok.split("=") for tok in header.split()[2:])
        fh.readline()  # column names
        data = np.loadtxt(fh, delimiter=",")
    nx, ny = int(meta["nx"]), int(meta["ny"])
    grid = Grid(nx=nx, ny=ny, L=float(meta["L"]), h=float(meta["h"]))
    return DisplacementField(grid, data.reshape(nx + 1, ny + 1, 2))


def write_field_bin(field: DisplacementField, path):
    g = field.grid
    with open(path, "wb") as fh:
        fh.write(_BIN_MAGIC)
        fh.write(struct.pack("<qqdd", g.nx, g.ny, g.L, g.h))
        fh.write(np.ascontiguousarray(field.values, dtype="<f8").tobytes())


def read_field_bin(path) -> DisplacementField:
    with open(path, "rb") as fh:
        if fh.read(len(_BIN_MAGIC)) != _BIN_MAGIC:
            raise ValueError("not a thinbeam grid file")
        nx, ny, L, h = struct.unpack("<qqdd", fh.read(32))
        count = (nx + 1) * (ny + 1) * 2
        data = np.frombuffer(fh.read(8 * count), dtype="<f8", count=count)
    grid = Grid(nx=int(nx), ny=int(ny), L=L, h=h)
    return DisplacementField(grid, data.reshape(nx + 1, ny + 1, 2).copy())


def read_field(path) -> DisplacementField:
    """Dispatch on extension: .csv is text, anything else is binary."""
    if str(path).endswith(".csv"):
        return read_field_csv(path)
    return read_field_bin(path)
