"""Phase-field relaxation of the sharp thin-strip energy.

The crack set is replaced by a nodal damage variable phi in [0, 1]
(1 = intact) with regularization length eps and residual stiffness k_eps:

    E(y, phi) = h^-2 int (phi^2 + k_eps) 1/2 e_h y : C e_h y
                + beta int ( (1 - phi)^2 / (4 eps) + eps |grad_h phi|^2 )
                + fidelity ||y - g||^2,

where grad_h = (d1, d2/h).  The anisotropic damage gradient reproduces the
sharp weight |(nu1, nu2/h)|: a horizontal crack costs 1/h per unit length,
a vertical one costs 1.  The quadratic surface term needs no irreversibility
handling because only static minimization is performed.

Both half-problems are convex quadratics: the displacement step solves an
SPD system by preconditioned conjugate gradients, the damage step by a
sparse direct solve with an active-set loop enforcing 0 <= phi <= 1.
Alternating them yields a monotone energy trace.

Discretization: bilinear nodal elements on the uniform grid, one midpoint
quadrature point per cell for all gradient terms, and lumped trapezoidal
node weights for the fidelity and the (1 - phi)^2 reaction term.  Lumping
the reaction term is required: with a single midpoint per cell the
checkerboard mode has zero cell mean and zero midpoint gradient, so the
damage half-problem would be singular.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import NumericalFailure, ShapeMismatch, SingularSystem
from .grids import DisplacementField, Grid, cell_means, trapezoid_node_weights
from .sharp import CrackSet
from .tensor import ElasticTensor

_SQRT2 = math.sqrt(2.0)


@dataclass
class DamageField:
    """Nodal damage variable with its regularization parameters."""

    phi: np.ndarray
    epsilon: float
    k_eps: float = 1e-6

    def __post_init__(self):
        self.phi = np.asarray(self.phi, dtype=float)
        if self.epsilon <= 0.0:
            raise ValueError("epsilon must be positive")
        if not (0.0 < self.k_eps < 1.0):
            raise ValueError("k_eps must lie in (0, 1)")


@dataclass
class SolveReport:
    energy_trace: list
    iterations: int
    converged: bool


@dataclass
class StripProblem:
    """Configuration of one alternating-minimization run."""

    grid: Grid
    C: ElasticTensor
    beta: float
    fidelity: float
    target: DisplacementField
    epsilon: float | None = None
    k_eps: float = 1e-6
    max_iter: int = 200
    tol: float = 1e-8
    phi_init: object = "intact"  # "intact", "random", or an explicit array
    seed: int | None = None

    def __post_init__(self):
        if self.target.grid != self.grid:
            raise ShapeMismatch("target grid differs from problem grid")
        if self.epsilon is None:
            self.epsilon = default_epsilon(self.grid)


def default_epsilon(grid: Grid) -> float:
    """4 times the larger cell extent, measured in the anisotropic metric."""
    return 4.0 * max(grid.dx, grid.h * grid.dy)


# ---------------------------------------------------------------------------
# cell geometry: midpoint values and gradients as 4-node weight vectors,
# local node order (0,0), (1,0), (0,1), (1,1)
# ---------------------------------------------------------------------------

def _cell_weights(grid: Grid):
    mean = np.full(4, 0.25)
    g1 = np.array([-1.0, 1.0, -1.0, 1.0]) / (2.0 * grid.dx)
    g2 = np.array([-1.0, -1.0, 1.0, 1.0]) / (2.0 * grid.dy)
    return mean, g1, g2


def _cell_node_indices(grid: Grid) -> np.ndarray:
    """(ncells, 4) global node indices, node id = i * (ny+1) + j."""
    i, j = np.meshgrid(np.arange(grid.nx), np.arange(grid.ny), indexing="ij")
    base = i * (grid.ny + 1) + j
    return np.stack([base, base + grid.ny + 1, base + 1, base + grid.ny + 2], axis=-1).reshape(-1, 4)


def _strain_matrix(grid: Grid) -> np.ndarray:
    """(3, 8) map from cell displacement dofs to the Voigt strain
    (e11, e22/h-scaled, shear) at the cell midpoint."""
    mean, g1, g2 = _cell_weights(grid)
    B = np.zeros((3, 8))
    B[0, 0::2] = g1
    B[1, 1::2] = g2 / grid.h
    B[2, 1::2] = g1 / _SQRT2
    B[2, 0::2] = g2 / (grid.h * _SQRT2)
    return B


def _cell_strain_density(field: DisplacementField, C: ElasticTensor) -> np.ndarray:
    """1/2 e_h y : C e_h y per cell, shape (nx, ny)."""
    from .grids import scaled_gradients

    grads = scaled_gradients(field)
    v = np.empty(grads.shape[:2] + (3,))
    v[..., 0] = grads[..., 0, 0]
    v[..., 1] = grads[..., 1, 1]
    v[..., 2] = (grads[..., 0, 1] + grads[..., 1, 0]) / _SQRT2
    return 0.5 * np.einsum("...a,ab,...b->...", v, C.q, v)


def at_energy(
    field: DisplacementField,
    damage: DamageField,
    C: ElasticTensor,
    beta: float,
    fidelity: float = 0.0,
    target: DisplacementField | None = None,
) -> float:
    """Evaluate the regularized energy of a displacement/damage pair."""
    g = field.grid
    if damage.phi.shape != (g.nx + 1, g.ny + 1):
        raise ShapeMismatch("damage field shape does not match the grid")
    area = g.cell_area
    dens = _cell_strain_density(field, C)
    phi_c = cell_means(damage.phi)
    elastic = float(np.sum((phi_c ** 2 + damage.k_eps) * dens)) * area / g.h ** 2
    surface = surface_energy(damage, g, beta)

    fid = 0.0
    if fidelity:
        if target is None:
            raise ValueError("fidelity > 0 requires a target field")
        w = trapezoid_node_weights(g)
        fid = fidelity * float(np.sum(w * np.sum((field.values - target.values) ** 2, axis=-1)))
    return elastic + surface + fid


def surface_energy(damage: DamageField, grid: Grid, beta: float) -> float:
    """The beta-weighted regularized crack term alone (nodal reaction part
    plus midpoint gradient part)."""
    w = trapezoid_node_weights(grid)
    reaction = float(np.sum(w * (1.0 - damage.phi) ** 2)) / (4.0 * damage.epsilon)
    d1 = (damage.phi[1:, :-1] + damage.phi[1:, 1:] - damage.phi[:-1, :-1] - damage.phi[:-1, 1:]) / (2 * grid.dx)
    d2 = (damage.phi[:-1, 1:] + damage.phi[1:, 1:] - damage.phi[:-1, :-1] - damage.phi[1:, :-1]) / (2 * grid.dy)
    grad_sq = d1 ** 2 + (d2 / grid.h) ** 2
    return beta * (reaction + damage.epsilon * float(np.sum(grad_sq)) * grid.cell_area)


# ---------------------------------------------------------------------------
# displacement half-step
# ---------------------------------------------------------------------------

def _elastic_operator(grid: Grid, damage: DamageField, C: ElasticTensor, fidelity: float):
    """Assemble K + 2F (SPD) and the map u -> 2 F g."""
    nx, ny = grid.nx, grid.ny
    n_nodes = (nx + 1) * (ny + 1)
    B = _strain_matrix(grid)
    K0 = B.T @ C.q @ B  # 8x8
    phi_c = cell_means(damage.phi).reshape(-1)
    scale = (phi_c ** 2 + damage.k_eps) * grid.cell_area / grid.h ** 2

    nodes = _cell_node_indices(grid)
    dofs = np.empty((nodes.shape[0], 8), dtype=np.int64)
    dofs[:, 0::2] = 2 * nodes
    dofs[:, 1::2] = 2 * nodes + 1
    data = scale[:, None, None] * K0[None, :, :]
    rows = np.repeat(dofs, 8, axis=1).reshape(-1)
    cols = np.tile(dofs, (1, 8)).reshape(-1)
    K = sp.coo_matrix((data.reshape(-1), (rows, cols)), shape=(2 * n_nodes, 2 * n_nodes)).tocsr()

    w = (fidelity * trapezoid_node_weights(grid)).reshape(-1)
    fdiag = np.repeat(w, 2)
    A = K + sp.diags(2.0 * fdiag)
    return A, fdiag


def elastic_step(
    damage: DamageField,
    target: DisplacementField,
    C: ElasticTensor,
    fidelity: float,
    x0: DisplacementField | None = None,
    rtol: float = 1e-10,
) -> DisplacementField:
    """Exact minimizer of the energy in the displacement for fixed damage.

    Solved by diagonally preconditioned conjugate gradients to relative
    residual ``rtol``; an optional ``x0`` warm-starts the iteration.

    Raises
    ------
    SingularSystem
        If the fidelity weight vanishes (rigid motions are unconstrained).
    """
    if fidelity <= 0.0:
        raise SingularSystem("no fidelity term and no boundary data")
    grid = target.grid
    A, fdiag = _elastic_operator(grid, damage, C, fidelity)
    b = 2.0 * fdiag * target.values.reshape(-1)
    diag = A.diagonal()
    M = sp.diags(1.0 / diag)
    x_init = None if x0 is None else x0.values.reshape(-1)
    x, info = spla.cg(A, b, x0=x_init, rtol=rtol, atol=0.0, M=M, maxiter=20000)
    if info != 0:
        raise NumericalFailure(f"conjugate gradients did not converge (info={info})")
    return DisplacementField(grid, x.reshape(grid.nx + 1, grid.ny + 1, 2))


# ---------------------------------------------------------------------------
# damage half-step
# ---------------------------------------------------------------------------

def _damage_system(grid: Grid, field: DisplacementField, C: ElasticTensor, beta, epsilon, k_eps):
    """SPD system Q phi = rho of the damage half-problem."""
    dens = _cell_strain_density(field, C).reshape(-1)
    area = grid.cell_area
    mean, g1, g2 = _cell_weights(grid)
    drive = dens * area / grid.h ** 2
    Q0_mean = np.outer(mean, mean)
    Q0_grad = beta * epsilon * area * (np.outer(g1, g1) + np.outer(g2, g2) / grid.h ** 2)
    data = drive[:, None, None] * Q0_mean[None, :, :] + Q0_grad[None, :, :]

    nodes = _cell_node_indices(grid)
    rows = np.repeat(nodes, 4, axis=1).reshape(-1)
    cols = np.tile(nodes, (1, 4)).reshape(-1)
    n_nodes = (grid.nx + 1) * (grid.ny + 1)
    Q = sp.coo_matrix((data.reshape(-1), (rows, cols)), shape=(n_nodes, n_nodes)).tocsr()
    w = (beta / (4.0 * epsilon)) * trapezoid_node_weights(grid).reshape(-1)
    Q = Q + sp.diags(w)
    return Q.tocsr(), w.copy()


def damage_step(
    field: DisplacementField,
    C: ElasticTensor,
    beta: float,
    epsilon: float,
    k_eps: float = 1e-6,
) -> DamageField:
    """Exact minimizer of the energy in the damage for fixed displacement,
    with the box constraint 0 <= phi <= 1 enforced by an active-set loop
    (usually zero iterations: the unconstrained solution is admissible)."""
    grid = field.grid
    Q, rho = _damage_system(grid, field, C, beta, epsilon, k_eps)
    n = rho.size
    phi = spla.spsolve(Q, rho)
    lo = np.zeros(n)
    hi = np.ones(n)
    for _ in range(32):
        viol_lo = phi < lo - 1e-12
        viol_hi = phi > hi + 1e-12
        if not (viol_lo.any() or viol_hi.any()):
            break
        fixed = viol_lo | viol_hi
        vals = np.where(viol_hi, hi, lo)
        free = ~fixed
        rhs = rho[free] - Q[np.ix_(np.where(free)[0], np.where(fixed)[0])] @ vals[fixed]
        sol = spla.spsolve(Q[np.ix_(np.where(free)[0], np.where(free)[0])].tocsc(), rhs)
        phi = np.where(fixed, vals, 0.0)
        phi[free] = sol
    phi = np.clip(phi, 0.0, 1.0)
    return DamageField(phi=phi.reshape(grid.nx + 1, grid.ny + 1), epsilon=epsilon, k_eps=k_eps)


# ---------------------------------------------------------------------------
# alternating minimization
# ---------------------------------------------------------------------------

def minimize_alternating(problem: StripProblem):
    """Alternate exact displacement and damage minimizations until the
    relative energy decrease falls below ``problem.tol``.

    Returns (displacement, damage, report); ``report.converged`` is False
    when ``max_iter`` was exhausted first.
    """
    grid = problem.grid
    shape = (grid.nx + 1, grid.ny + 1)
    if isinstance(problem.phi_init, np.ndarray):
        if problem.phi_init.shape != shape:
            raise ShapeMismatch("phi_init array does not match the grid")
        phi0 = np.clip(problem.phi_init.astype(float), 0.0, 1.0)
    elif problem.phi_init == "intact":
        phi0 = np.ones(shape)
    elif problem.phi_init == "random":
        rng = np.random.default_rng(problem.seed)
        phi0 = rng.uniform(0.5, 1.0, size=shape)
    else:
        raise ValueError(f"unknown phi_init {problem.phi_init!r}")
    damage = DamageField(phi=phi0, epsilon=problem.epsilon, k_eps=problem.k_eps)
    y = elastic_step(damage, problem.target, problem.C, problem.fidelity)

    def energy():
        return at_energy(y, damage, problem.C, problem.beta, problem.fidelity, problem.target)

    trace = [energy()]
    converged = False
    iterations = 0
    for it in range(problem.max_iter):
        iterations = it + 1
        damage = damage_step(y, problem.C, problem.beta, problem.epsilon, problem.k_eps)
        trace.append(at_energy(y, damage, problem.C, problem.beta, problem.fidelity, problem.target))
        y = elastic_step(damage, problem.target, problem.C, problem.fidelity, x0=y)
        trace.append(energy())
        prev, cur = trace[-3], trace[-1]
        if prev - cur <= problem.tol * max(abs(prev), 1e-30):
            converged = True
            break
    return y, damage, SolveReport(energy_trace=trace, iterations=iterations, converged=converged)


# ---------------------------------------------------------------------------
# crack extraction
# ---------------------------------------------------------------------------

def extract_crack(damage: DamageField, grid: Grid, threshold: float) -> CrackSet:
    """Edge set where the damage drops below the threshold.

    The dominant valley orientation is read off the damage gradient; each
    node row (column) crossing the valley contributes one dual-edge segment
    through its minimum-phi node, so a clean valley yields a one-cell-wide
    polyline whose normal follows the gradient direction.
    """
    if not (0.0 < threshold < 1.0):
        raise ValueError("threshold must lie in (0, 1)")
    phi = damage.phi
    marked = phi < threshold
    if not marked.any():
        return CrackSet.empty()
    d1 = np.abs(np.diff(phi, axis=0)).sum() / grid.dx
    d2 = np.abs(np.diff(phi, axis=1)).sum() / grid.dy
    xs, ys = grid.x_nodes, grid.y_nodes
    segments = []
    normals = []
    if d1 >= d2:  # vertical valley
        for j in range(grid.ny + 1):
            row = np.where(marked[:, j])[0]
            if row.size == 0:
                continue
            # one segment per contiguous run
            splits = np.where(np.diff(row) > 1)[0]
            for run in np.split(row, splits + 1):
                i = run[np.argmin(phi[run, j])]
                y0 = max(ys[j] - grid.dy / 2.0, -0.5)
                y1 = min(ys[j] + grid.dy / 2.0, 0.5)
                segments.append([[xs[i], y0], [xs[i], y1]])
                sgn = 1.0 if (i + 1 <= grid.nx and phi[min(i + 1, grid.nx), j] >= phi[max(i - 1, 0), j]) else -1.0
                normals.append([sgn, 0.0])
    else:  # horizontal valley
        for i in range(grid.nx + 1):
            col = np.where(marked[i, :])[0]
            if col.size == 0:
                continue
            splits = np.where(np.diff(col) > 1)[0]
            for run in np.split(col, splits + 1):
                j = run[np.argmin(phi[i, run])]
                x0 = max(xs[i] - grid.dx / 2.0, 0.0)
                x1 = min(xs[i] + grid.dx / 2.0, grid.L)
                segments.append([[x0, ys[j]], [x1, ys[j]]])
                sgn = 1.0 if (j + 1 <= grid.ny and phi[i, min(j + 1, grid.ny)] >= phi[i, max(j - 1, 0)]) else -1.0
                normals.append([0.0, sgn])
    return CrackSet(np.array(segments), np.array(normals))
