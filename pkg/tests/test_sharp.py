import numpy as np
import pytest

from thinbeam.errors import BallTooLarge, CrackOutsideDomain, InvalidThickness
from thinbeam.grids import (
    DisplacementField,
    Grid,
    read_field,
    rigid_motion_field,
    sample_field,
    write_field_bin,
    write_field_csv,
    read_field_csv,
)
from thinbeam.sharp import (
    CrackSet,
    ball_vertical_mass,
    clip_length,
    crack_length_in_rect,
    escaping_ball_example,
    evaluate_Eh,
    stressed_triangle_energy,
    triangle_counterexample,
    triangle_field,
)
from thinbeam.tensor import isotropic_tensor


C11 = isotropic_tensor(1.0, 1.0)


def smooth_field(grid):
    def fn(X, Y):
        vals = np.empty(X.shape + (2,))
        vals[..., 0] = np.sin(2 * np.pi * X / grid.L) * np.cos(np.pi * Y)
        vals[..., 1] = np.cos(np.pi * X / grid.L) * Y ** 2
        return vals

    return sample_field(grid, fn)


class TestGridIO:
    @pytest.mark.parametrize("writer,ext", [(write_field_csv, "csv"), (write_field_bin, "bin")])
    def test_roundtrip(self, tmp_path, writer, ext):
        grid = Grid(nx=5, ny=4, L=2.0, h=0.25)
        rng = np.random.default_rng(0)
        field = DisplacementField(grid, rng.standard_normal((6, 5, 2)))
        path = tmp_path / f"field.{ext}"
        writer(field, path)
        back = read_field(path)
        assert back.grid == grid
        assert np.array_equal(back.values, field.values)

    def test_header_check(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("something\n")
        with pytest.raises(ValueError):
            read_field_csv(p)


class TestClipping:
    def test_full_inside(self):
        assert clip_length([[0.2, 0.2], [0.4, 0.2]], 0, 1, 0, 1) == pytest.approx(0.2)

    def test_outside(self):
        assert clip_length([[2.0, 0.0], [3.0, 0.0]], 0, 1, -1, 1) == 0.0

    def test_partial(self):
        assert clip_length([[-1.0, 0.5], [1.0, 0.5]], 0, 2, 0, 1) == pytest.approx(1.0)

    def test_crack_length_in_rect(self):
        crack = CrackSet.vertical_segment(0.5, -0.5, 0.5)
        assert crack_length_in_rect(crack, 0.0, 1.0, -0.25, 0.25) == pytest.approx(0.5)


class TestEvaluateEh:
    def test_rigid_motion_zero_elastic(self):
        grid = Grid(nx=16, ny=8, L=1.0, h=0.25)
        field = rigid_motion_field(grid, a=0.7, b=[0.3, -0.1])
        out = evaluate_Eh(field, CrackSet.empty(), C11, beta=1.0)
        assert out.elastic <= 1e-12
        assert out.jump == 0.0
        assert out.total == out.elastic + out.jump

    def test_vertical_crack_cost_independent_of_h(self):
        for h in (0.5, 0.25, 0.125):
            grid = Grid(nx=8, ny=4, L=1.0, h=h)
            field = DisplacementField(grid, np.zeros((9, 5, 2)))
            crack = CrackSet.vertical_segment(0.5 + 0.01)
            out = evaluate_Eh(field, crack, C11, beta=2.0)
            assert out.jump == pytest.approx(2.0, rel=1e-12)

    def test_horizontal_crack_cost_scales(self):
        ell = 0.3
        for h in (0.5, 0.25):
            grid = Grid(nx=8, ny=4, L=1.0, h=h)
            field = DisplacementField(grid, np.zeros((9, 5, 2)))
            crack = CrackSet.horizontal_segment(0.05, 0.1, 0.1 + ell)
            out = evaluate_Eh(field, crack, C11, beta=1.0)
            assert out.jump == pytest.approx(ell / h, rel=1e-12)

    def test_frame_invariance(self):
        grid = Grid(nx=24, ny=12, L=1.0, h=0.25)
        base = smooth_field(grid)
        e0 = evaluate_Eh(base, CrackSet.empty(), C11, beta=1.0).elastic
        rigid = rigid_motion_field(grid, a=1.3, b=[0.5, 0.2])
        shifted = DisplacementField(grid, base.values + rigid.values)
        e1 = evaluate_Eh(shifted, CrackSet.empty(), C11, beta=1.0).elastic
        assert abs(e1 - e0) <= 1e-10 * max(1.0, e0)

    def test_quadrature_convergence_order(self):
        #|E(n) - E(2n)| should decay at second order for smooth fields
        h = 0.5
        energies = []
        for nx in (8, 16, 32, 64):
            grid = Grid(nx=nx, ny=nx // 2, L=1.0, h=h)
            energies.append(evaluate_Eh(smooth_field(grid), CrackSet.empty(), C11, 1.0).elastic)
        diffs = np.abs(np.diff(energies))
        slopes = np.log2(diffs[:-1] / diffs[1:])
        assert slopes.min() >= 1.8

    def test_split_mode_reduces_area_loss(self):
        # two rigid halves joined by a full vertical crack between gridlines
        grid = Grid(nx=16, ny=8, L=1.0, h=0.25)
        xc = grid.dx * (8 + 0.5)
        X, Y = grid.node_mesh()
        vals = np.zeros((17, 9, 2))
        vals[..., 0] = np.where(X < xc, -0.1, 0.1)
        field = DisplacementField(grid, vals)
        crack = CrackSet.vertical_segment(xc)
        for mode in ("split", "exclude"):
            out = evaluate_Eh(field, crack, C11, beta=1.0, cut_cells=mode)
            assert out.elastic <= 1e-12
            assert out.jump == pytest.approx(1.0)

    def test_crack_outside_domain(self):
        grid = Grid(nx=4, ny=4, L=1.0, h=0.5)
        field = DisplacementField(grid, np.zeros((5, 5, 2)))
        with pytest.raises(CrackOutsideDomain):
            evaluate_Eh(field, CrackSet.vertical_segment(1.5), C11, 1.0)

    def test_anisotropy_monotone_in_h(self):
        vertical = CrackSet.vertical_segment(0.31)
        horizontal = CrackSet.horizontal_segment(0.1, 0.2, 0.5)
        hs = [0.5, 0.25, 0.125, 0.0625]
        v_costs = [vertical.anisotropic_measure(h) for h in hs]
        h_costs = [horizontal.anisotropic_measure(h) for h in hs]
        assert np.allclose(v_costs, 1.0)
        assert all(b > a for a, b in zip(h_costs, h_costs[1:]))
        assert h_costs[0] == pytest.approx(0.3 / 0.5)


class TestTriangleExample:
    def test_invalid_thickness(self):
        with pytest.raises(InvalidThickness):
            triangle_counterexample(0.9, 1.0)

    def test_crack_length_exact(self):
        for h in (1 / 8, 1 / 16, 1 / 32):
            _, crack = triangle_counterexample(h, 1.0)
            assert crack.unrescaled_length(h) == h - h ** 4

    def test_right_field_has_zero_symmetric_gradient(self):
        h, L = 1 / 8, 1.0
        w, _ = triangle_field(h, L)
        rng = np.random.default_rng(1)
        # sample points to the right of the cut, away from the triangle
        x1 = rng.uniform(L / 2 + 0.05, L, size=200)
        x2 = rng.uniform(-h / 2, h / 2 - 2 * h ** 4, size=200)
        eps = 1e-6
        d1 = (w(x1 + eps, x2) - w(x1 - eps, x2)) / (2 * eps)
        d2 = (w(x1, x2 + eps) - w(x1, x2 - eps)) / (2 * eps)
        sym11 = d1[..., 0]
        sym22 = d2[..., 1]
        sym12 = 0.5 * (d1[..., 1] + d2[..., 0])
        assert np.max(np.abs([sym11, sym22, sym12])) < 1e-6

    @pytest.mark.parametrize("h", [1 / 8, 1 / 16, 1 / 32])
    def test_energy_scales_like_h6(self, h):
        ratio = stressed_triangle_energy(h, 1.0, n=256) / h ** 6
        assert 0.9 <= ratio <= 1.1

    def test_energy_ratio_improves_with_mesh(self):
        h = 1 / 8
        r_coarse = abs(stressed_triangle_energy(h, 1.0, n=64) / h ** 6 - 1.0)
        r_fine = abs(stressed_triangle_energy(h, 1.0, n=512) / h ** 6 - 1.0)
        assert r_fine < r_coarse


class TestBallExample:
    def test_too_large(self):
        with pytest.raises(BallTooLarge):
            escaping_ball_example(0.8, 1.0)

    def test_elastic_part_vanishes(self):
        h = 1 / 8
        field, crack = escaping_ball_example(h, 1.0, nx=96, ny=96)
        out = evaluate_Eh(field, crack, C11, beta=1.0, cut_cells="exclude")
        assert out.elastic == 0.0

    @pytest.mark.parametrize("h", [1 / 8, 1 / 16, 1 / 32])
    def test_vertical_mass(self, h):
        assert ball_vertical_mass(h) == pytest.approx(-np.pi / h, rel=1e-6)

    def test_crack_measure_vanishes_with_h(self):
        hs = [1 / 8, 1 / 16, 1 / 32]
        costs = []
        for h in hs:
            crack = CrackSet.circle((0.5, 0.0), h ** 2, 10 ** 4)
            m = crack.anisotropic_measure(h)
            assert m <= 2 * np.pi * h * 1.1
            costs.append(m)
        assert costs[0] > costs[1] > costs[2]
        # the limit constant: a circle of radius h^2 has measure ~ 4h
        assert costs[-1] == pytest.approx(4 * hs[-1], rel=0.01)
