import math

import numpy as np
import pytest

from thinbeam.errors import CannotAchieveEta
from thinbeam.grids import scaled_gradients
from thinbeam.recovery import (
    LimitProfile,
    build_recovery,
    gamma_sweep,
    limit_energy,
    polynomial_piece,
    smooth_second_derivative,
)
from thinbeam.sharp import evaluate_Eh
from thinbeam.tensor import isotropic_tensor

C10 = isotropic_tensor(1.0, 0.0)
C11 = isotropic_tensor(1.0, 1.0)


def parabola_profile(L=1.0):
    return LimitProfile(L=L, u_values=[0.0], u_jumps=[], v_pieces=[polynomial_piece([1.0, 0.0, 0.0])])


def sin_profile_with_jumps(L=1.0):
    """sin-type bending with one v jump at 0.4 and one v' jump at 0.7."""
    w = 2.0 * np.pi

    def mk(shift, slope):
        v = lambda x: np.sin(w * x) + shift + slope * (x - 0.7)
        dv = lambda x: w * np.cos(w * x) + slope
        ddv = lambda x: -(w ** 2) * np.sin(w * x)
        return (v, dv, ddv)

    return LimitProfile(
        L=L,
        u_values=[0.0],
        u_jumps=[],
        v_pieces=[mk(0.0, 0.0), mk(0.5, 0.0), mk(0.5, 1.0)],
        v_jumps=[0.4],
        vprime_jumps=[0.7],
    )


class TestProfile:
    def test_piecewise_evaluation(self):
        prof = sin_profile_with_jumps()
        assert prof.v(0.2) == pytest.approx(np.sin(0.4 * np.pi))
        assert prof.v(0.5) == pytest.approx(np.sin(np.pi) + 0.5)
        assert prof.dv(0.9) == pytest.approx(2 * np.pi * np.cos(1.8 * np.pi) + 1.0)
        assert prof.all_jumps() == [0.4, 0.7]

    def test_limit_energy_closed_form(self):
        prof = parabola_profile()
        # int |v''|^2 = 4 over (0, 1)
        assert limit_energy(prof, a=2.0, beta=1.0) == pytest.approx(1.0 / 3.0, rel=1e-9)

    def test_limit_energy_counts_jumps(self):
        prof = sin_profile_with_jumps()
        e_beta1 = limit_energy(prof, a=1.0, beta=1.0)
        e_beta3 = limit_energy(prof, a=1.0, beta=3.0)
        assert e_beta3 - e_beta1 == pytest.approx(4.0, rel=1e-12)


class TestSmoothing:
    def test_quadratic_profile_is_exact(self):
        prof = parabola_profile()
        nodes, vals, err = smooth_second_derivative(prof, eta=0.5, n=101)
        assert np.allclose(vals, -2.0, atol=1e-10)
        assert err <= 1e-9

    def test_huge_eta_allows_zero(self):
        prof = parabola_profile()
        _, vals, err = smooth_second_derivative(prof, eta=10.0, n=51)
        assert np.allclose(vals, 0.0)
        assert err == pytest.approx(2.0)  # L2 norm of v'' = 2 on (0, 1)

    def test_jump_in_curvature_meets_target(self):
        # v'' jumps from 2 to -2 at 0.5 (a v' jump keeps the pieces apart)
        prof = LimitProfile(
            L=1.0,
            u_values=[0.0],
            u_jumps=[],
            v_pieces=[polynomial_piece([1.0, 0.0, 0.0]), polynomial_piece([-1.0, 1.0, 0.0])],
            vprime_jumps=[0.5],
        )
        # the nodal interpolant must ramp across the jump interval, so the
        # achievable error scales like sqrt(spacing): n must grow like 1/eta^2
        for eta, n in ((0.5, 513), (0.2, 513), (0.05, 8193)):
            _, vals, err = smooth_second_derivative(prof, eta=eta, n=n)
            assert err <= eta
        with pytest.raises(CannotAchieveEta):
            smooth_second_derivative(prof, eta=1e-9, n=17)

    def test_error_reported_matches_target_margin(self):
        prof = sin_profile_with_jumps()
        _, _, err = smooth_second_derivative(prof, eta=0.5, n=257)
        assert err <= 0.5


class TestBuildRecovery:
    def test_constant_profile_is_exact(self):
        prof = LimitProfile(
            L=1.0, u_values=[0.3], u_jumps=[],
            v_pieces=[polynomial_piece([0.7])],
        )
        field, crack = build_recovery(prof, h=0.25, eta=0.1, C=C11, nx=32, ny=8)
        assert crack.n_segments == 0
        assert np.allclose(field.values[..., 0], 0.3)
        assert np.allclose(field.values[..., 1], 0.7)
        out = evaluate_Eh(field, crack, C11, beta=1.0)
        assert out.total == pytest.approx(0.0, abs=1e-12)

    def test_parabola_energy_converges_to_limit(self):
        # E0 = 1/3 for v = x^2 with the pure-shear tensor (a = 2, b* = c* = 0)
        prof = parabola_profile()
        gaps = []
        for h in (1 / 8, 1 / 16, 1 / 32, 1 / 64):
            field, crack = build_recovery(prof, h=h, eta=1e-3, C=C10, nx=128, ny=16)
            out = evaluate_Eh(field, crack, C10, beta=1.0)
            gaps.append(abs(out.total - 1.0 / 3.0))
        assert gaps[-1] <= 2e-3
        assert gaps[-1] <= gaps[0]

    def test_sup_norm_convergence(self):
        prof = sin_profile_with_jumps()
        errs = []
        for h in (1 / 4, 1 / 8, 1 / 16):
            field, _ = build_recovery(prof, h=h, eta=0.2, C=C11, nx=64, ny=8)
            X, Y = field.grid.node_mesh()
            exact = np.stack([prof.u(X[:, 0])[:, None] * np.ones_like(Y), prof.v(X[:, 0])[:, None] * np.ones_like(Y)], axis=-1)
            errs.append(np.max(np.abs(field.values - exact)))
        assert errs[0] <= 4.0 * (1 / 4)  # ||y_h - y||_inf <= C h
        ratios = [errs[i] / errs[i + 1] for i in range(2)]
        assert min(ratios) >= 1.8  # first-order decay in h

    def test_skew_cancellation_order(self):
        # without the curvature corrector the symmetric anisotropic strain
        # of the tilted field is O(h)
        prof = sin_profile_with_jumps()
        norms = []
        hs = (1 / 8, 1 / 16, 1 / 32)
        for h in hs:
            field, crack = build_recovery(prof, h=h, eta=1e6, C=C11, nx=256, ny=8)
            grads = scaled_gradients(field)
            sym = 0.5 * (grads + np.swapaxes(grads, -1, -2))
            cellarea = field.grid.cell_area
            # mask the crack columns (one-sided cells carry the jump)
            mask = np.ones(grads.shape[:2], dtype=bool)
            for t in prof.all_jumps():
                i = int(t / field.grid.dx)
                mask[max(i - 1, 0) : i + 2, :] = False
            norms.append(math.sqrt(float(np.sum(sym[mask] ** 2) * cellarea)))
        slope = np.polyfit(np.log(hs), np.log(norms), 1)[0]
        assert slope >= 0.9


class TestGammaSweep:
    def test_zero_profile(self):
        prof = LimitProfile(L=1.0, u_values=[0.0], u_jumps=[], v_pieces=[polynomial_piece([0.0])])
        rows = gamma_sweep(prof, [1 / 8], [0.5], C11, beta=1.0, nx=32, ny=8)
        assert rows[0]["E_h"] == pytest.approx(0.0, abs=1e-12)
        assert rows[0]["E0"] == pytest.approx(0.0, abs=1e-12)

    def test_jump_cost_is_exact_for_every_h(self):
        prof = sin_profile_with_jumps()
        beta = 1.7
        for h in (1 / 4, 1 / 16, 1 / 64):
            field, crack = build_recovery(prof, h=h, eta=0.3, C=C11, nx=64, ny=8)
            out = evaluate_Eh(field, crack, C11, beta=beta)
            assert out.jump == pytest.approx(2.0 * beta, rel=1e-12)

    def test_diagonal_gap_decreases_and_meets_tolerance(self):
        prof = sin_profile_with_jumps()
        hs = [1 / 8, 1 / 16, 1 / 32, 1 / 64]
        etas = [0.4, 0.2, 0.1, 0.05]
        rows = gamma_sweep(prof, hs, etas, C11, beta=1.0, nx=512, ny=48)
        rel = [abs(r["rel_gap"]) for r in rows]
        assert rel[-1] <= 0.05
        assert rel[-1] <= rel[0]
