"""Acceptance suite: one function per criterion, each self-contained and
seeded, returning a CheckResult with a pass flag, a short detail string, and
its wall-clock budget.  The CLI command ``paper-checks`` and the test module
``tests/test_acceptance.py`` both run these.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .beam import BeamProblem, beam_energy, brute_force_beam, solve_beam
from .compactness import (
    bridge_check,
    classify_rectangles,
    compactness_extract,
    fit_rigid_motions,
    profile_fit,
)
from .grids import Grid, sample_field
from .phasefield import StripProblem, extract_crack, minimize_alternating
from .presets import hatched_crack, piecewise_rigid_field, sharp_vertical_scan, split_strip_target
from .recovery import LimitProfile, build_recovery, gamma_sweep, polynomial_piece
from .sharp import (
    ball_vertical_mass,
    escaping_ball_example,
    evaluate_Eh,
    stressed_triangle_energy,
    triangle_counterexample,
)
from .tensor import ElasticTensor, bending_constant, isotropic_tensor
from .truss import OrientedLine, SegmentPair, f2d_closed_form, f3d_factorization, line_function_f, truss_det


@dataclass
class CheckResult:
    index: int
    name: str
    passed: bool
    detail: str
    elapsed: float
    budget: float

    @property
    def in_budget(self) -> bool:
        return self.elapsed < self.budget

    def line(self) -> str:
        status = "PASS" if (self.passed and self.in_budget) else "FAIL"
        return f"{status} criterion-{self.index} {self.name} ({self.elapsed:.2f}s / {self.budget:.0f}s budget): {self.detail}"


def _timed(index, name, budget, fn):
    t0 = time.perf_counter()
    passed, detail = fn()
    elapsed = time.perf_counter() - t0
    return CheckResult(index=index, name=name, passed=passed, detail=detail,
                       elapsed=elapsed, budget=budget)


# ---------------------------------------------------------------------------

def check_1_bending_constant():
    def run():
        rng = np.random.default_rng(101)
        worst_iso = 0.0
        for _ in range(20):
            mu = rng.uniform(0.2, 4.0)
            lam = rng.uniform(-0.9 * mu, 4.0)
            res = bending_constant(isotropic_tensor(mu, lam))
            exact = 2.0 * mu + 2.0 * mu * lam / (2.0 * mu + lam)
            worst_iso = max(worst_iso, abs(res.a - exact) / exact)
        worst_grid = 0.0
        for _ in range(5):
            m = rng.standard_normal((3, 3))
            C = ElasticTensor(m @ m.T + 0.3 * np.eye(3))
            res = bending_constant(C)
            grid_val = _bending_grid_search(C)
            worst_grid = max(worst_grid, abs(grid_val - res.a))
        ok = worst_iso <= 1e-12 and worst_grid <= 1e-5
        return ok, f"closed-form rel err {worst_iso:.2e}, grid-search gap {worst_grid:.2e}"

    return _timed(1, "bending-constant", 1.0, run)


def _bending_grid_search(C, lo=-10.0, hi=10.0, step=1e-3):
    """Exact minimum over the (b, c) grid: the inner b-scan of a convex
    quadratic attains its minimum at a grid neighbor of the vertex, so the
    full two-dimensional scan reduces to one pass over c."""
    q = C.q
    sqrt2 = math.sqrt(2.0)
    v0 = np.array([1.0, 0.0, 0.0])
    eb = np.array([0.0, 0.0, 1.0 / sqrt2])
    ec = np.array([0.0, 1.0, 0.0])
    qbb = eb @ q @ eb
    n = int(round((hi - lo) / step))
    cs = lo + step * np.arange(n + 1)
    w = v0[None, :] + cs[:, None] * ec[None, :]
    lin = w @ q @ eb
    const = np.einsum("ij,jk,ik->i", w, q, w)
    b_vertex = -lin / qbb
    best = np.inf
    for b_cand in (
        lo + np.floor((b_vertex - lo) / step) * step,
        lo + np.ceil((b_vertex - lo) / step) * step,
        np.full_like(b_vertex, lo),
        np.full_like(b_vertex, hi),
    ):
        b = np.clip(b_cand, lo, hi)
        vals = const + 2.0 * b * lin + b * b * qbb
        best = min(best, float(vals.min()))
    return best


def check_2_truss_identities():
    def run():
        rng = np.random.default_rng(202)
        worst_fact = 0.0
        worst_closed = 0.0
        n_done = 0
        while n_done < 200:
            pairs = []
            while len(pairs) < 3:
                p = rng.uniform(-2, 2, size=2)
                q = rng.uniform(-2, 2, size=2)
                if np.linalg.norm(p - q) > 0.1:
                    pairs.append(SegmentPair(p, q))
            lines = [p.line() for p in pairs]
            dirs = [ln.direction for ln in lines]
            sines = [
                abs(dirs[i][0] * dirs[j][1] - dirs[i][1] * dirs[j][0])
                for i, j in ((0, 1), (0, 2), (1, 2))
            ]
            if min(sines) < 1e-3:
                continue
            det = truss_det(pairs)
            f = line_function_f(lines)
            prod = np.prod([p.length for p in pairs])
            worst_fact = max(worst_fact, abs(abs(det) - prod * abs(f)) / max(abs(det), 1e-30))
            closed = f2d_closed_form(*lines)
            worst_closed = max(worst_closed, abs(closed - abs(f)) / max(abs(f), 1e-30))
            n_done += 1

        worst_3d = 0.0
        n_done = 0
        while n_done < 50:
            v1 = rng.standard_normal(3)
            v1 /= np.linalg.norm(v1)
            lines = [OrientedLine(rng.uniform(-1, 1, size=3), v1) for _ in range(3)]
            ok = True
            for _ in range(3):
                v = rng.standard_normal(3)
                v /= np.linalg.norm(v)
                if np.linalg.norm(v - (v1 @ v) * v1) < 0.1:
                    ok = False
                    break
                lines.append(OrientedLine(rng.uniform(-1, 1, size=3), v))
            if not ok:
                continue
            fact = f3d_factorization(lines)
            direct = abs(line_function_f(lines))
            worst_3d = max(worst_3d, abs(fact - direct) / max(direct, 1e-30))
            n_done += 1

        worst_conc = 0.0
        for _ in range(20):
            x0 = rng.uniform(-1, 1, size=2)
            pairs = []
            for _ in range(3):
                v = rng.standard_normal(2)
                v /= np.linalg.norm(v)
                t0, t1 = rng.uniform(0.2, 1.5, size=2)
                pairs.append(SegmentPair(x0 + t0 * v, x0 - t1 * v))
            worst_conc = max(worst_conc, abs(truss_det(pairs)))
        ok = worst_fact <= 1e-9 and worst_closed <= 1e-9 and worst_3d <= 1e-8 and worst_conc <= 1e-12
        return ok, (
            f"2D factorization {worst_fact:.2e}, closed form {worst_closed:.2e}, "
            f"3D factorization {worst_3d:.2e}, concurrent dets {worst_conc:.2e}"
        )

    return _timed(2, "truss-determinants", 5.0, run)


def check_3_triangle_scaling():
    def run():
        ok = True
        details = []
        for h in (1 / 8, 1 / 16, 1 / 32):
            energy = stressed_triangle_energy(h, 1.0, n=512)
            ratio = energy / h ** 6
            _, crack = triangle_counterexample(h, 1.0)
            exact_len = crack.unrescaled_length(h) == h - h ** 4
            ok = ok and 0.9 <= ratio <= 1.1 and exact_len
            details.append(f"h={h:g}: ratio={ratio:.4f}, length exact={exact_len}")
        return ok, "; ".join(details)

    return _timed(3, "triangle-counterexample", 30.0, run)


def check_4_escaping_ball():
    def run():
        beta = 1.0
        ok = True
        details = []
        for h in (1 / 8, 1 / 16, 1 / 32):
            field, crack = escaping_ball_example(h, 1.0, nx=64, ny=32)
            out = evaluate_Eh(field, crack, isotropic_tensor(1, 1), beta, cut_cells="exclude")
            mass = ball_vertical_mass(h)
            e_ok = out.total <= 2.0 * np.pi * beta * h * 1.1
            m_ok = abs(mass - (-np.pi / h)) <= 0.01 * np.pi / h
            ok = ok and e_ok and m_ok and out.elastic == 0.0
            details.append(f"h={h:g}: E={out.total:.4f} (cap {2*np.pi*h*1.1:.4f}), int y2={mass:.3f}")
        return ok, "; ".join(details)

    return _timed(4, "escaping-ball", 10.0, run)


def acceptance_profile() -> LimitProfile:
    """Sin-type bending with one value jump and one slope jump."""
    w = 2.0 * np.pi

    def mk(shift, slope):
        return (
            lambda x: np.sin(w * x) + shift + slope * (x - 0.7),
            lambda x: w * np.cos(w * x) + slope,
            lambda x: -(w ** 2) * np.sin(w * x),
        )

    return LimitProfile(
        L=1.0, u_values=[0.0], u_jumps=[],
        v_pieces=[mk(0.0, 0.0), mk(0.5, 0.0), mk(0.5, 1.0)],
        v_jumps=[0.4], vprime_jumps=[0.7],
    )


def check_5_gamma_sweep():
    def run():
        prof = acceptance_profile()
        rows = gamma_sweep(
            prof, [1 / 8, 1 / 16, 1 / 32, 1 / 64], [0.4, 0.2, 0.1, 0.05],
            isotropic_tensor(1.0, 1.0), beta=1.0, nx=512, ny=48,
        )
        rel = [abs(r["rel_gap"]) for r in rows]
        ok = rel[-1] <= 0.05 and rel[-1] <= rel[0]
        detail = ", ".join(f"(h={r['h']:g}, eta={r['eta']:g}): {r['rel_gap']:+.5f}" for r in rows)
        return ok, detail

    return _timed(5, "gamma-sweep", 120.0, run)


def check_6_beam_oracle():
    def run():
        rng = np.random.default_rng(606)
        n = 12
        x = np.linspace(0.0, 1.0, n)
        worst = 0.0
        sets_equal = True
        for trial in range(50):
            kind = trial % 3
            if kind == 0:
                g_u = np.where(x < rng.uniform(0.2, 0.8), 0.0, rng.uniform(-2, 2))
                g_v = np.sin(2 * np.pi * rng.uniform(0.5, 1.5) * x) * rng.uniform(0.3, 1.5)
            elif kind == 1:
                g_u = rng.standard_normal(n) * 0.3
                g_v = np.abs(x - rng.uniform(0.3, 0.7)) * rng.uniform(0.5, 3.0)
            else:
                g_u = np.cumsum(rng.standard_normal(n)) * 0.2
                g_v = np.cumsum(rng.standard_normal(n)) * 0.2
            prob = BeamProblem(
                a=rng.uniform(0.2, 5.0), beta=10.0 ** rng.uniform(-3, 0), L=1.0,
                g_u=g_u, g_v=g_v, fidelity_weight=rng.uniform(0.5, 4.0),
            )
            st = solve_beam(prob, max_jumps=2)
            bf = brute_force_beam(prob, max_jumps=2)
            gap = abs(beam_energy(st, prob) - beam_energy(bf, prob)) / (
                1.0 + abs(beam_energy(bf, prob))
            )
            worst = max(worst, gap)
            if (st.J_u, st.J_v, st.J_vprime) != (bf.J_u, bf.J_v, bf.J_vprime):
                sets_equal = False
        ok = worst <= 1e-9 and sets_equal
        return ok, f"worst energy gap {worst:.2e}, jump sets identical: {sets_equal}"

    return _timed(6, "beam-oracle-equivalence", 60.0, run)


def check_7_compactness_certificates():
    def run():
        rng = np.random.default_rng(707)
        h = 1 / 16
        ok = True
        details = []
        for trial in range(20):
            k = trial % 4
            positions = {0: [], 1: [0.5], 2: [0.35, 0.65], 3: [0.25, 0.5, 0.75]}[k]
            pieces = [
                (pos, rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5, size=2))
                for pos in positions + [1.0]
            ]
            grid = Grid(nx=128, ny=8, L=1.0, h=h)
            field, crack, _ = piecewise_rigid_field(grid, pieces)
            res = compactness_extract(field, crack, delta=1 / 16, eta=0.3)
            n_jumps = len(res.fields.jumps)
            m_cert = res.fields.m_cert
            max_res = float(np.max(np.abs(res.residual[res.node_mask])))
            good = n_jumps <= m_cert and max_res <= 1e-9
            ok = ok and good
            if not good or trial < 4:
                details.append(f"k={k}: jumps={n_jumps} cert={m_cert} res={max_res:.1e}")
        return ok, "; ".join(details)

    return _timed(7, "compactness-certificates", 30.0, run)


def check_8_bridge_bound():
    def run():
        grid = Grid(nx=128, ny=16, L=1.0, h=1 / 8)
        crack = hatched_crack(0.5, grid.h, total_length=0.3 * grid.h)
        ok = True
        details = []
        for s in (1e-3, 1e-2):
            def fn(X, Y):
                vals = np.empty(X.shape + (2,))
                vals[..., 0] = 0.4 * grid.h * Y + 0.1 + s * np.sin(2.7 * np.pi * X) * np.cos(np.pi * Y + 0.4)
                vals[..., 1] = -0.4 * X - 0.2 + s * np.sin(1.3 * np.pi * X * (Y + 0.2))
                return vals

            field = sample_field(grid, fn)
            part = fit_rigid_motions(classify_rectangles(field, crack, delta=1 / 16))
            reports = bridge_check(part, eta=0.3)
            rep = reports[0]
            lhs = 2.0 * rep.fitted_a_diff ** 2 + float(np.sum(rep.fitted_b_diff ** 2))
            tracks = abs(rep.truss_a - rep.fitted_a_diff) <= 10.0 * s
            ok = ok and rep.verdict == "BRIDGED" and rep.bound_holds and tracks
            details.append(
                f"s={s:g}: |dA|={abs(rep.fitted_a_diff):.2e}, lhs={lhs:.2e} <= bound={rep.bound:.2e}"
            )

        h = 1 / 8
        fieldT, crackT = triangle_counterexample(h, 1.0, nx=32, ny=64)
        partT = fit_rigid_motions(classify_rectangles(fieldT, crackT, delta=1 / 16))
        below = bridge_check(partT, eta=0.5 * h ** 3, certify=False)
        above = bridge_check(partT, eta=2.0 * h ** 3, certify=False)
        flip = [r.verdict for r in below] == ["BRIDGED"] and [r.verdict for r in above] == ["SEVERED"]
        ok = ok and flip
        details.append(f"triangle flips at eta=h^3: {flip}")
        return ok, "; ".join(details)

    return _timed(8, "bridge-bound", 30.0, run)


def check_9_profile_identification():
    def run():
        prof = LimitProfile(
            L=1.0, u_values=[0.0], u_jumps=[],
            v_pieces=[polynomial_piece([1.0, 0.0, 0.0])],
        )
        C = isotropic_tensor(1.0, 1.0)
        errs = {}
        resids = {}
        for h in (1 / 8, 1 / 16, 1 / 32):
            field, _ = build_recovery(prof, h=h, eta=1e-3, C=C, nx=64, ny=8)
            grid = field.grid
            kappa, T, resid, valid = profile_fit(field, np.zeros((grid.nx, grid.ny), bool))
            errs[h] = float(np.max(np.abs(kappa[valid] - 2.0)))
            resids[h] = float(np.max(resid[valid]))
        ok = errs[1 / 32] <= 0.2  # 10 percent of kappa = 2
        decreasing = all(
            resids[b] <= resids[a] + 1e-12 for a, b in ((1 / 8, 1 / 16), (1 / 16, 1 / 32))
        )
        ok = ok and decreasing
        return ok, (
            f"max |kappa - 2| at h=1/32: {errs[1/32]:.2e}; residuals "
            + ", ".join(f"{resids[h]:.2e}" for h in (1 / 8, 1 / 16, 1 / 32))
            + f"; non-increasing: {decreasing}"
        )

    return _timed(9, "profile-identification", 30.0, run)


def check_10_phasefield_vs_sharp():
    def run():
        grid = Grid(nx=128, ny=64, L=1.0, h=0.25)
        xstar = 0.5 + grid.dx / 2
        target = split_strip_target(grid, 0.2, xstar)
        beta, fid = 0.5, 200.0
        C = isotropic_tensor(1.0, 1.0)
        prob = StripProblem(grid=grid, C=C, beta=beta, fidelity=fid, target=target, max_iter=120)
        y, damage, report = minimize_alternating(prob)
        total = report.energy_trace[-1]
        sharp_best, sharp_pos, _ = sharp_vertical_scan(target, C, beta, fid, xstar)
        gap = abs(total - sharp_best) / sharp_best
        crack = extract_crack(damage, grid, threshold=0.3)
        xs = np.unique(crack.segments[:, :, 0]) if crack.n_segments else np.array([np.inf])
        pos_ok = bool(np.all(np.abs(xs - xstar) <= grid.dx + 1e-12))
        ok = gap <= 0.10 and pos_ok and report.converged
        return ok, (
            f"phase-field total {total:.5f} vs sharp scan {sharp_best:.5f} "
            f"(gap {100*gap:.2f}%), crack within one cell: {pos_ok}"
        )

    return _timed(10, "phasefield-vs-sharp", 300.0, run)


ALL_CHECKS = [
    check_1_bending_constant,
    check_2_truss_identities,
    check_3_triangle_scaling,
    check_4_escaping_ball,
    check_5_gamma_sweep,
    check_6_beam_oracle,
    check_7_compactness_certificates,
    check_8_bridge_bound,
    check_9_profile_identification,
    check_10_phasefield_vs_sharp,
]


def run_all(criteria=None, verbose=True):
    """Run the selected criteria (1-based indices; default all)."""
    selected = criteria or list(range(1, len(ALL_CHECKS) + 1))
    results = []
    for idx in selected:
        res = ALL_CHECKS[idx - 1]()
        results.append(res)
        if verbose:
            print(res.line(), flush=True)
    return results
