"""One-dimensional brittle bending limit with quadratic fidelity.

A configuration on n grid nodes over [0, L] has a piecewise-constant first
component u, a piecewise-smooth second component v, and three sorted sets of
jump interfaces (an interface i sits between nodes i and i+1):

* ``J_u``        severs u,
* ``J_v``        severs both the value and the slope of v,
* ``J_vprime``   severs the slope of v but keeps its value.

The energy is

    prefactor * a * sum_segments int |v''|^2
    + beta * #(J_u | J_v | J_vprime)
    + w * (||u - g_u||^2 + ||v - g_v||^2),

with composite second-difference quadrature inside each v segment (one-sided
differences at segment ends, trapezoidal weights) and trapezoidal L2 norms.
The default prefactor is 1/24; it is exposed on the problem for sensitivity
studies.

Jumps are priced through the union of the three sets, so a u jump and a v
jump at the same interface cost one beta.  The solver therefore optimizes u
and v jointly: a dynamic program over events (interfaces where anything
jumps) whose state tracks the open u segment, the open v segment, and
whether the open v segment is value-coupled to its predecessor across a
slope-only jump.  Value coupling is a single shared scalar, so coupled
states carry exact quadratic cost functions of that scalar instead of
numbers.  A slope-only jump at interface i is discretized as the constraint
v_i = v_{i+1} together with the removal of the straddling second
differences.

Tie-breaking among equal-energy segmentations (within 1e-12 relative):
fewer jump interfaces first, then lexicographically smallest positions,
then the least severe jump types (u only, then slope-only, then u plus
slope, then value, then u plus value).  The brute-force oracle applies the
same rule.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import GridMismatch, TooLarge, TrivialProblem

_SEVERITY = {
    (True, None): 0,
    (False, "crease"): 1,
    (True, "crease"): 2,
    (False, "step"): 3,
    (True, "step"): 4,
}


@dataclass(frozen=True)
class BeamProblem:
    """Fidelity-driven bending problem on a uniform grid."""

    a: float
    beta: float
    L: float
    g_u: np.ndarray
    g_v: np.ndarray
    fidelity_weight: float
    bending_prefactor: float = 1.0 / 24.0

    def __post_init__(self):
        if not (self.a > 0 and self.beta > 0 and self.L > 0):
            raise ValueError("need a > 0, beta > 0, L > 0")
        gu = np.asarray(self.g_u, dtype=float)
        gv = np.asarray(self.g_v, dtype=float)
        if gu.ndim != 1 or gu.shape != gv.shape or gu.size < 2:
            raise ValueError("g_u and g_v must be equal-length 1D arrays, n >= 2")
        object.__setattr__(self, "g_u", gu)
        object.__setattr__(self, "g_v", gv)

    @property
    def n(self) -> int:
        return self.g_u.size

    @property
    def dx(self) -> float:
        return self.L / (self.n - 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(0.0, self.L, self.n)


@dataclass
class BeamState:
    """Nodal values plus sorted jump-interface index tuples."""

    u: np.ndarray
    v: np.ndarray
    J_u: tuple
    J_v: tuple
    J_vprime: tuple

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=float)
        self.v = np.asarray(self.v, dtype=float)
        self.J_u = tuple(sorted(self.J_u))
        self.J_v = tuple(sorted(self.J_v))
        self.J_vprime = tuple(sorted(self.J_vprime))

    @property
    def n(self) -> int:
        return self.u.size

    def jump_union(self) -> tuple:
        return tuple(sorted(set(self.J_u) | set(self.J_v) | set(self.J_vprime)))


def _trap_weights(n: int) -> np.ndarray:
    w = np.ones(n)
    w[0] = w[-1] = 0.5
    return w


def _v_segments(n: int, jumps) -> list:
    """Node ranges [s, e] delimited by the given interface set."""
    cuts = sorted(set(jumps))
    segs = []
    s = 0
    for c in cuts:
        segs.append((s, c))
        s = c + 1
    segs.append((s, n - 1))
    return segs


def _segment_bend_integral(v: np.ndarray, s: int, e: int, dx: float) -> float:
    """Composite quadrature of int |v''|^2 over nodes [s, e].

    Central second differences at interior nodes; the segment-end values are
    the one-sided differences, which coincide with the adjacent central ones,
    giving trapezoidal weights (3/2 at the first and last interior node)."""
    m = e - s + 1
    if m < 3:
        return 0.0
    seg = v[s : e + 1]
    d = (seg[:-2] - 2.0 * seg[1:-1] + seg[2:]) / dx ** 2
    w = np.ones(m - 2)
    if m == 3:
        w[0] = 2.0
    else:
        w[0] = w[-1] = 1.5
    return float(dx * np.dot(w, d * d))


def beam_energy_breakdown(state: BeamState, prob: BeamProblem):
    """(elastic, jump, fidelity, total) of a state under a problem."""
    if state.n != prob.n:
        raise GridMismatch(f"state has {state.n} nodes, problem {prob.n}")
    dx = prob.dx
    coef = prob.bending_prefactor * prob.a
    elastic = coef * math.fsum(
        _segment_bend_integral(state.v, s, e, dx)
        for s, e in _v_segments(prob.n, set(state.J_v) | set(state.J_vprime))
    )
    jump = prob.beta * len(state.jump_union())
    tau = _trap_weights(prob.n)
    fidelity = prob.fidelity_weight * dx * float(
        np.dot(tau, (state.u - prob.g_u) ** 2) + np.dot(tau, (state.v - prob.g_v) ** 2)
    )
    return elastic, jump, fidelity, elastic + jump + fidelity


def beam_energy(state: BeamState, prob: BeamProblem) -> float:
    return beam_energy_breakdown(state, prob)[3]


# ---------------------------------------------------------------------------
# per-configuration exact solve (shared by the solver and the oracle)
# ---------------------------------------------------------------------------

def _segment_elastic_matrix(m: int, dx: float, coef: float) -> np.ndarray:
    """Dense matrix of the quadrature form coef * dx * sum w_i d_i^2."""
    M = np.zeros((m, m))
    if m < 3:
        return M
    w = np.ones(m - 2)
    if m == 3:
        w[0] = 2.0
    else:
        w[0] = w[-1] = 1.5
    stencil = np.array([1.0, -2.0, 1.0]) / dx ** 2
    for k in range(m - 2):
        idx = np.array([k, k + 1, k + 2])
        M[np.ix_(idx, idx)] += coef * dx * w[k] * np.outer(stencil, stencil)
    return M


def solve_config(prob: BeamProblem, j_u, j_v, j_vp) -> BeamState:
    """Exact minimizer of the quadratic energy for fixed jump sets.

    Slope-only interfaces impose v_i = v_{i+1}, eliminated by merging the
    two nodes into one unknown before assembling the coupled system.
    """
    n, dx = prob.n, prob.dx
    tau = _trap_weights(n)
    fid = prob.fidelity_weight * dx * tau

    # u: weighted mean per u segment
    u = np.empty(n)
    for s, e in _v_segments(n, j_u):
        tw = tau[s : e + 1]
        u[s : e + 1] = np.dot(tw, prob.g_u[s : e + 1]) / np.sum(tw)

    # v: merge across slope-only interfaces, assemble, solve
    j_v = set(j_v)
    j_vp = set(j_vp) - j_v  # a value jump dominates a coincident slope jump
    rep = np.arange(n)
    for i in sorted(j_vp):
        rep[i + 1] = rep[i]
    # compress representative indices
    uniq, inv = np.unique(rep, return_inverse=True)
    nr = uniq.size
    A = np.zeros((nr, nr))
    rhs = np.zeros(nr)
    coef = prob.bending_prefactor * prob.a
    for s, e in _v_segments(n, j_v | j_vp):
        m = e - s + 1
        Mseg = _segment_elastic_matrix(m, dx, coef)
        idx = inv[s : e + 1]
        np.add.at(A, (idx[:, None], idx[None, :]), Mseg)
    np.add.at(A, (inv, inv), fid)
    np.add.at(rhs, inv, fid * prob.g_v)
    v = np.linalg.solve(A, rhs)[inv]
    return BeamState(u=u, v=v, J_u=tuple(sorted(j_u)), J_v=tuple(sorted(j_v)), J_vprime=tuple(sorted(j_vp)))


def _config_key(j_u, j_v, j_vp):
    """Tie-break key: fewer interfaces, leftmost positions, least severity."""
    j_u, j_v, j_vp = set(j_u), set(j_v), set(j_vp)
    positions = tuple(sorted(j_u | j_v | j_vp))
    sev = []
    for p in positions:
        vt = "step" if p in j_v else ("crease" if p in j_vp else None)
        sev.append(_SEVERITY[(p in j_u, vt)])
    return (len(positions), positions, tuple(sev))


def _is_better(cost1, key1, cost2, key2) -> bool:
    tol = 1e-12 * (1.0 + min(abs(cost1), abs(cost2)))
    if cost1 < cost2 - tol:
        return True
    if cost2 < cost1 - tol:
        return False
    return key1 < key2


# ---------------------------------------------------------------------------
# brute-force oracle
# ---------------------------------------------------------------------------

_EVENT_KINDS = [
    (True, None),
    (False, "crease"),
    (True, "crease"),
    (False, "step"),
    (True, "step"),
]


def brute_force_beam(prob: BeamProblem, max_jumps: int = 2) -> BeamState:
    """Global minimizer by exhaustive enumeration of jump assignments.

    Every subset of at most ``max_jumps`` interfaces and every per-interface
    combination of u / slope / value jumps is solved exactly and scored with
    :func:`beam_energy`.  Limited to n <= 16 nodes.

    Raises
    ------
    TooLarge
        If the grid has more than 16 nodes.
    TrivialProblem
        If the fidelity weight vanishes.
    """
    if prob.n > 16:
        raise TooLarge(f"brute force capped at n = 16, got {prob.n}")
    if prob.fidelity_weight <= 0.0:
        raise TrivialProblem("zero fidelity weight: the zero state is minimal")
    best = None
    best_cost = np.inf
    best_key = None
    interfaces = range(prob.n - 1)
    for k in range(max_jumps + 1):
        for positions in itertools.combinations(interfaces, k):
            for kinds in itertools.product(_EVENT_KINDS, repeat=k):
                j_u = {p for p, (du, _) in zip(positions, kinds) if du}
                j_v = {p for p, (_, vt) in zip(positions, kinds) if vt == "step"}
                j_vp = {p for p, (_, vt) in zip(positions, kinds) if vt == "crease"}
                state = solve_config(prob, j_u, j_v, j_vp)
                cost = beam_energy(state, prob)
                key = _config_key(j_u, j_v, j_vp)
                if best is None or _is_better(cost, key, best_cost, best_key):
                    best, best_cost, best_key = state, cost, key
    return best


# ---------------------------------------------------------------------------
# segment cost tables for the dynamic program
# ---------------------------------------------------------------------------

class _SegmentTables:
    """Exact quadratic costs of v segments, reduced to their boundary values.

    For nodes [s, e] the cost is q(v) = v^T M v - 2 r^T v + k0 with M SPD.
    ``free`` is its minimum; ``left``/``right`` are (al, ga, de) coefficients
    of the cost as a function of the constrained boundary value; ``both`` is
    (P, lin, const) in the two boundary values.
    """

    def __init__(self, prob: BeamProblem):
        self.prob = prob
        n, dx = prob.n, prob.dx
        tau = _trap_weights(n)
        self.fid = prob.fidelity_weight * dx * tau
        self.coef = prob.bending_prefactor * prob.a
        # u segment costs via prefix sums
        tw = tau
        tg = tau * prob.g_u
        tgg = tau * prob.g_u ** 2
        self._cw = np.concatenate([[0.0], np.cumsum(tw)])
        self._cg = np.concatenate([[0.0], np.cumsum(tg)])
        self._cgg = np.concatenate([[0.0], np.cumsum(tgg)])
        self._cache = {}

    def u_cost(self, s: int, e: int) -> float:
        sw = self._cw[e + 1] - self._cw[s]
        sg = self._cg[e + 1] - self._cg[s]
        sgg = self._cgg[e + 1] - self._cgg[s]
        return self.prob.fidelity_weight * self.prob.dx * (sgg - sg * sg / sw)

    def _moments(self, s: int, e: int):
        m = e - s + 1
        M = _segment_elastic_matrix(m, self.prob.dx, self.coef)
        M[np.arange(m), np.arange(m)] += self.fid[s : e + 1]
        r = self.fid[s : e + 1] * self.prob.g_v[s : e + 1]
        k0 = float(np.dot(self.fid[s : e + 1], self.prob.g_v[s : e + 1] ** 2))
        return M, r, k0

    def _reduce(self, M, r, k0, c_idx):
        """Partial minimization over all nodes except c_idx."""
        m = M.shape[0]
        f_idx = [i for i in range(m) if i not in c_idx]
        Mcc = M[np.ix_(c_idx, c_idx)]
        rc = r[list(c_idx)]
        if not f_idx:
            return Mcc, -2.0 * rc, k0
        Mff = M[np.ix_(f_idx, f_idx)]
        Mfc = M[np.ix_(f_idx, c_idx)]
        rf = r[f_idx]
        sol = np.linalg.solve(Mff, np.column_stack([rf, Mfc]))
        x_r, x_c = sol[:, 0], sol[:, 1:]
        P = Mcc - Mfc.T @ x_c
        lin = -2.0 * (rc - Mfc.T @ x_r)
        const = k0 - float(rf @ x_r)
        return P, lin, const

    def tables(self, s: int, e: int):
        key = (s, e)
        if key not in self._cache:
            M, r, k0 = self._moments(s, e)
            m = M.shape[0]
            v = np.linalg.solve(M, r)
            free = k0 - float(r @ v)
            if m == 1:
                node = (float(M[0, 0]), -2.0 * float(r[0]), k0)
                entry = {"free": free, "left": node, "right": node, "both": None, "node": node}
            else:
                P1, l1, c1 = self._reduce(M, r, k0, [0])
                left = (float(P1[0, 0]), float(l1[0]), c1)
                P2, l2, c2 = self._reduce(M, r, k0, [m - 1])
                right = (float(P2[0, 0]), float(l2[0]), c2)
                Pb, lb, cb = self._reduce(M, r, k0, [0, m - 1])
                entry = {"free": free, "left": left, "right": right, "both": (Pb, lb, cb), "node": None}
            self._cache[key] = entry
        return self._cache[key]


def _par_min(p) -> float:
    return p[2] - p[1] * p[1] / (4.0 * p[0])


def _close_pair(p, q) -> float:
    """min_t [p(t) + q(t)] for two upward parabolas."""
    al = p[0] + q[0]
    ga = p[1] + q[1]
    de = p[2] + q[2]
    return de - ga * ga / (4.0 * al)


def _compose_both(p, both):
    """min over t of p(t) + Q(t, t'); returns a parabola in t'."""
    P, lin, c0 = both
    A = p[0] + P[0, 0]
    B = p[1] + lin[0]
    al = P[1, 1] - P[0, 1] ** 2 / A
    ga = lin[1] - B * P[0, 1] / A
    de = p[2] + c0 - B * B / (4.0 * A)
    return (al, ga, de)


def _dominated(p, q) -> bool:
    """True when p(t) >= q(t) for every t (then p is redundant)."""
    dal = p[0] - q[0]
    dga = p[1] - q[1]
    dde = p[2] - q[2]
    if dal > 0.0:
        return dde - dga * dga / (4.0 * dal) >= 0.0
    if dal == 0.0:
        return dga == 0.0 and dde >= 0.0
    return False


def _events_key(events):
    """Tie-break metric of an event list (see module docstring)."""
    return (
        len(events),
        tuple(ev[0] for ev in events),
        tuple(_SEVERITY[(ev[1], ev[2])] for ev in events),
    )


def _prune(parabolas, cutoff):
    """Drop parabolas dominated by another entry or above the incumbent."""
    kept = []
    for p, events in parabolas:
        if _par_min(p) > cutoff:
            continue
        drop = False
        for idx, (q, qev) in enumerate(kept):
            if p == q:
                if _events_key(events) < _events_key(qev):
                    kept[idx] = (p, events)
                drop = True
                break
            if _dominated(p, q):
                drop = True
                break
        if drop:
            continue
        kept = [(q, qev) for q, qev in kept if q == p or not _dominated(q, p)]
        kept.append((p, events))
    return kept


# ---------------------------------------------------------------------------
# joint dynamic program
# ---------------------------------------------------------------------------

def solve_beam(prob: BeamProblem, max_jumps: int) -> BeamState:
    """Global minimizer over jump segmentations with at most ``max_jumps``
    jump interfaces, by the event dynamic program described in the module
    docstring.  The returned nodal values are recomputed from the winning
    configuration with :func:`solve_config`, so the state scores identically
    under :func:`beam_energy`.

    Raises
    ------
    TrivialProblem
        If the fidelity weight vanishes (the zero state would be minimal).
    """
    if prob.fidelity_weight <= 0.0:
        raise TrivialProblem("zero fidelity weight: the zero state is minimal")
    n = prob.n
    tabs = _SegmentTables(prob)
    beta = prob.beta
    key_of = _events_key

    def closure(a, b, mode_val):
        """Total cost candidates of finishing with no further jumps."""
        u_tail = tabs.u_cost(a, n - 1)
        t = tabs.tables(b, n - 1)
        if mode_val is None:
            return []
        if isinstance(mode_val, tuple):  # free: (cost, events)
            cost, events = mode_val
            return [(cost + u_tail + t["free"], events)]
        out = []
        for p, events in mode_val:  # coupled list
            out.append((_close_pair(p, t["left"]) + u_tail, events))
        return out

    # layers[j] maps (a, b, mode) -> (cost, events) for mode 'free'
    # or a parabola list [( (al, ga, de), events ), ...] for mode 'coupled'
    start = {(0, 0, "free"): (0.0, ())}
    best_cost, best_events = np.inf, None

    def consider(candidates):
        nonlocal best_cost, best_events
        for cost, events in candidates:
            key = key_of(events)
            if best_events is None or _is_better(cost, key, best_cost, key_of(best_events)):
                best_cost, best_events = cost, events

    consider(closure(0, 0, start[(0, 0, "free")]))

    layer = start
    for j in range(max_jumps):
        nxt = {}

        def merge_free(state, cost, events):
            cur = nxt.get(state)
            if cur is None or _is_better(cost, key_of(events), cur[0], key_of(cur[1])):
                nxt[state] = (cost, events)

        def merge_coupled(state, parabolas):
            cur = nxt.get(state, [])
            nxt[state] = _prune(cur + parabolas, best_cost + 1.0)

        for (a, b, mode), val in layer.items():
            coupled = mode == "coupled"
            for e in range(max(a, b), n - 1):
                u_seg = tabs.u_cost(a, e)
                t = tabs.tables(b, e)
                for du, vt in _EVENT_KINDS:
                    add_u = u_seg if du else 0.0
                    a2 = e + 1 if du else a
                    if vt is None:
                        state = (a2, b, mode)
                        if not coupled:
                            cost, events = val
                            merge_free(state, cost + beta + add_u, events + ((e, du, None),))
                        else:
                            shifted = [
                                ((p[0], p[1], p[2] + beta + add_u), ev + ((e, du, None),))
                                for p, ev in val
                            ]
                            merge_coupled(state, shifted)
                    elif vt == "step":
                        state = (a2, e + 1, "free")
                        if not coupled:
                            cost, events = val
                            merge_free(
                                state,
                                cost + t["free"] + beta + add_u,
                                events + ((e, du, "step"),),
                            )
                        else:
                            for p, ev in val:
                                merge_free(
                                    state,
                                    _close_pair(p, t["left"]) + beta + add_u,
                                    ev + ((e, du, "step"),),
                                )
                    else:  # crease
                        state = (a2, e + 1, "coupled")
                        new = []
                        if not coupled:
                            cost, events = val
                            q = t["right"]
                            new.append(
                                ((q[0], q[1], q[2] + cost + beta + add_u), events + ((e, du, "crease"),))
                            )
                        else:
                            for p, ev in val:
                                if t["node"] is not None:  # single shared node
                                    q = t["node"]
                                    comp = (p[0] + q[0], p[1] + q[1], p[2] + q[2])
                                else:
                                    comp = _compose_both(p, t["both"])
                                new.append(
                                    ((comp[0], comp[1], comp[2] + beta + add_u), ev + ((e, du, "crease"),))
                                )
                        merge_coupled(state, new)

        for (a, b, mode), val in nxt.items():
            consider(closure(a, b, val))
        layer = nxt
        if not layer:
            break

    j_u = {e for e, du, _ in best_events if du}
    j_v = {e for e, _, vt in best_events if vt == "step"}
    j_vp = {e for e, _, vt in best_events if vt == "crease"}
    state = solve_config(prob, j_u, j_v, j_vp)
    direct = beam_energy(state, prob)
    if abs(direct - best_cost) > 1e-9 * (1.0 + abs(direct)):
        raise RuntimeError(
            f"dynamic program value {best_cost!r} disagrees with direct solve {direct!r}"
        )
    return state


def stationarity_residual(state: BeamState, prob: BeamProblem) -> float:
    """Max-norm optimality residual of the state's nodal values for its own
    jump configuration (slope-only coupling included)."""
    ref = solve_config(prob, state.J_u, state.J_v, state.J_vprime)
    return float(max(np.max(np.abs(ref.u - state.u)), np.max(np.abs(ref.v - state.v))))
