import numpy as np
import pytest

from thinbeam.errors import (
    DegeneratePair,
    DegenerateProjection,
    NeedsReordering,
    NotParallelTriple,
    SingularTruss,
    WrongCount,
)
from thinbeam.truss import (
    OrientedLine,
    SegmentPair,
    apply_truss,
    f2d_closed_form,
    f3d_factorization,
    line_function_f,
    skew_matrix,
    solve_rigid_from_truss,
    truss_det,
    truss_matrix,
)


def random_pairs(rng, d, n, box=2.0):
    out = []
    while len(out) < n:
        p = rng.uniform(-box, box, size=d)
        q = rng.uniform(-box, box, size=d)
        if np.linalg.norm(p - q) > 1e-3:
            out.append(SegmentPair(p, q))
    return out


def unit(v):
    return np.asarray(v, dtype=float) / np.linalg.norm(v)


AXES_LINES = [
    OrientedLine([0.0, 0.0], [1.0, 0.0]),   # x-axis
    OrientedLine([0.0, 0.0], [0.0, 1.0]),   # y-axis
    OrientedLine([1.0, 0.0], [0.0, 1.0]),   # {x = 1}
]


class TestTrussMatrix:
    def test_unit_pair_row(self):
        row = truss_matrix([SegmentPair([1.0, 0.0], [0.0, 0.0])])[0]
        assert np.allclose(row, [0.0, 1.0, 0.0])

    def test_rays_annihilate_rotations(self):
        # all q_i = 0: F(A, 0) = 0 for every skew A, so F is not invertible
        rng = np.random.default_rng(0)
        pairs = [SegmentPair(rng.uniform(-1, 1, size=2), [0.0, 0.0]) for _ in range(3)]
        F = truss_matrix(pairs)
        for a in (1.0, -2.5):
            coords = np.array([a, 0.0, 0.0])
            assert np.allclose(F @ coords, 0.0, atol=1e-14)
        with pytest.raises(SingularTruss):
            solve_rigid_from_truss(pairs, np.zeros(3))

    @pytest.mark.parametrize("d", [2, 3])
    def test_forward_map_consistency(self, d):
        rng = np.random.default_rng(d)
        pairs = random_pairs(rng, d, 7)
        F = truss_matrix(pairs)
        n_skew = d * (d - 1) // 2
        for _ in range(100):
            params = rng.standard_normal(n_skew)
            b = rng.standard_normal(d)
            A = skew_matrix(params, d)
            coords = np.concatenate([np.atleast_1d(params), b])
            assert np.allclose(F @ coords, apply_truss(pairs, A, b), rtol=1e-13, atol=1e-13)

    def test_degenerate_pair(self):
        with pytest.raises(DegeneratePair):
            truss_matrix([SegmentPair([1.0, 1.0], [1.0, 1.0])])


class TestTrussDet:
    def test_wrong_count(self):
        rng = np.random.default_rng(1)
        with pytest.raises(WrongCount):
            truss_det(random_pairs(rng, 2, 4))

    def test_concurrent_lines_singular(self):
        # three segments on lines through one point
        x0 = np.array([0.3, -0.2])
        dirs = [unit([1.0, 0.0]), unit([1.0, 1.0]), unit([-1.0, 2.0])]
        pairs = [SegmentPair(x0 + 1.5 * v, x0 + 0.2 * v) for v in dirs]
        assert abs(truss_det(pairs)) < 1e-12

    def test_axes_configuration(self):
        pairs = [
            SegmentPair([1.0, 0.0], [0.0, 0.0]),
            SegmentPair([0.0, 1.0], [0.0, 0.0]),
            SegmentPair([1.0, 1.0], [1.0, 0.0]),
        ]
        assert abs(truss_det(pairs)) == pytest.approx(1.0, rel=1e-14)

    def test_length_scaling(self):
        rng = np.random.default_rng(2)
        pairs = random_pairs(rng, 2, 3)
        det1 = truss_det(pairs)
        doubled = [SegmentPair(pairs[0].q + 2.0 * (pairs[0].p - pairs[0].q), pairs[0].q)] + pairs[1:]
        assert truss_det(doubled) == pytest.approx(2.0 * det1, rel=1e-12)

    def test_antisymmetry_under_exchange(self):
        rng = np.random.default_rng(3)
        pairs = random_pairs(rng, 2, 3)
        swapped = [pairs[1], pairs[0], pairs[2]]
        assert truss_det(swapped) == pytest.approx(-truss_det(pairs), rel=1e-12)

    @pytest.mark.parametrize("d", [2, 3])
    def test_factorizes_into_lengths_times_f(self, d):
        rng = np.random.default_rng(10 + d)
        n = d * (d + 1) // 2
        for _ in range(50):
            pairs = random_pairs(rng, d, n)
            lines = [p.line() for p in pairs]
            prod = np.prod([p.length for p in pairs])
            lhs = truss_det(pairs)
            rhs = prod * line_function_f(lines)
            assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-12)

    def test_rigid_motion_invariance_of_abs_det(self):
        rng = np.random.default_rng(5)
        pairs = random_pairs(rng, 2, 3)
        th = 0.7
        R = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
        shift = np.array([1.3, -0.4])
        moved = [SegmentPair(R @ p.p + shift, R @ p.q + shift) for p in pairs]
        assert abs(truss_det(moved)) == pytest.approx(abs(truss_det(pairs)), rel=1e-9)


class TestLineFunction:
    def test_representative_independence(self):
        rng = np.random.default_rng(6)
        pts = rng.uniform(-1, 1, size=(3, 2))
        dirs = [unit(rng.standard_normal(2)) for _ in range(3)]
        lines = [OrientedLine(p, v) for p, v in zip(pts, dirs)]
        shifted = [OrientedLine(p + rng.uniform(-5, 5) * v, v) for p, v in zip(pts, dirs)]
        assert line_function_f(shifted) == pytest.approx(line_function_f(lines), abs=1e-10)

    def test_orientation_flip_changes_sign(self):
        f0 = line_function_f(AXES_LINES)
        flipped = [AXES_LINES[0], OrientedLine([0.0, 0.0], [0.0, -1.0]), AXES_LINES[2]]
        assert line_function_f(flipped) == pytest.approx(-f0, rel=1e-12)

    def test_swap_flips_sign(self):
        f0 = line_function_f(AXES_LINES)
        swapped = [AXES_LINES[1], AXES_LINES[0], AXES_LINES[2]]
        assert line_function_f(swapped) == pytest.approx(-f0, rel=1e-12)

    def test_rigid_motion_invariance(self):
        rng = np.random.default_rng(7)
        pts = rng.uniform(-1, 1, size=(3, 2))
        dirs = [unit(rng.standard_normal(2)) for _ in range(3)]
        lines = [OrientedLine(p, v) for p, v in zip(pts, dirs)]
        th = -1.1
        R = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
        shift = np.array([0.2, 2.0])
        moved = [OrientedLine(R @ p + shift, R @ v) for p, v in zip(pts, dirs)]
        assert line_function_f(moved) == pytest.approx(line_function_f(lines), abs=1e-10)

    def test_same_line_equivalence(self):
        l1 = OrientedLine([0.0, 0.0], unit([1.0, 1.0]))
        l2 = OrientedLine([2.0, 2.0], unit([1.0, 1.0]))
        l3 = OrientedLine([2.0, 2.0001], unit([1.0, 1.0]))
        assert l1.same_line(l2)
        assert not l1.same_line(l3)


class TestClosedForm2D:
    def test_three_parallel(self):
        lines = [OrientedLine([0.0, float(k)], [1.0, 0.0]) for k in range(3)]
        assert f2d_closed_form(*lines) == 0.0

    def test_axes_value_one(self):
        assert f2d_closed_form(*AXES_LINES) == pytest.approx(1.0, rel=1e-14)

    def test_needs_reordering(self):
        l1 = OrientedLine([0.0, 0.0], [1.0, 0.0])
        l2 = OrientedLine([0.0, 1.0], [1.0, 0.0])  # parallel to l1
        l3 = OrientedLine([0.0, 0.0], [0.0, 1.0])
        with pytest.raises(NeedsReordering):
            f2d_closed_form(l1, l2, l3)
        # moving the transversal line first fixes it and agrees with |f|
        val = f2d_closed_form(l3, l1, l2)
        assert val == pytest.approx(abs(line_function_f([l3, l1, l2])), abs=1e-12)

    def test_matches_determinant_on_random_transversal_triples(self):
        rng = np.random.default_rng(8)
        count = 0
        while count < 50:
            pts = rng.uniform(-2, 2, size=(3, 2))
            dirs = [unit(rng.standard_normal(2)) for _ in range(3)]
            cross2 = lambda a, b: a[0] * b[1] - a[1] * b[0]
            if min(
                abs(cross2(dirs[0], dirs[1])),
                abs(cross2(dirs[0], dirs[2])),
                abs(cross2(dirs[1], dirs[2])),
            ) < 1e-3:
                continue
            lines = [OrientedLine(p, v) for p, v in zip(pts, dirs)]
            val = f2d_closed_form(*lines)
            assert val == pytest.approx(abs(line_function_f(lines)), rel=1e-10, abs=1e-10)
            count += 1

    def test_permutation_invariance_of_abs(self):
        import itertools

        rng = np.random.default_rng(9)
        pts = rng.uniform(-1, 1, size=(3, 2))
        dirs = [unit(v) for v in ([1.0, 0.2], [0.1, 1.0], [1.0, -1.0])]
        lines = [OrientedLine(p, v) for p, v in zip(pts, dirs)]
        vals = [f2d_closed_form(*perm) for perm in itertools.permutations(lines)]
        assert np.ptp(vals) < 1e-10


def lifted_axes_config():
    """Three lines along e1 through separated points, plus the planar axes
    configuration lifted to the (e2, e3) plane."""
    e1 = np.array([1.0, 0.0, 0.0])
    first = [
        OrientedLine([0.0, 0.0, 0.0], e1),
        OrientedLine([0.0, 1.0, 0.0], e1),
        OrientedLine([0.0, 0.0, 1.0], e1),
    ]
    last = [
        OrientedLine([0.0, 0.0, 0.0], [0.0, 1.0, 0.0]),
        OrientedLine([0.0, 0.0, 0.0], [0.0, 0.0, 1.0]),
        OrientedLine([0.0, 1.0, 0.0], [0.0, 0.0, 1.0]),
    ]
    return first + last


class TestFactorization3D:
    def test_lifted_axes_value_one(self):
        lines = lifted_axes_config()
        assert f3d_factorization(lines) == pytest.approx(1.0, rel=1e-12)
        assert abs(line_function_f(lines)) == pytest.approx(1.0, rel=1e-12)

    def test_collinear_projections_vanish(self):
        e1 = np.array([1.0, 0.0, 0.0])
        first = [
            OrientedLine([0.0, 0.0, 0.0], e1),
            OrientedLine([5.0, 1.0, 1.0], e1),
            OrientedLine([-2.0, 2.0, 2.0], e1),  # projections collinear
        ]
        lines = first + lifted_axes_config()[3:]
        assert f3d_factorization(lines) == pytest.approx(0.0, abs=1e-12)

    def test_matches_direct_determinant(self):
        rng = np.random.default_rng(11)
        count = 0
        while count < 50:
            v1 = unit(rng.standard_normal(3))
            first = [OrientedLine(rng.uniform(-1, 1, size=3), v1) for _ in range(3)]
            last = []
            ok = True
            for _ in range(3):
                v = unit(rng.standard_normal(3))
                if np.linalg.norm(v - (v1 @ v) * v1) < 0.1:
                    ok = False
                    break
                last.append(OrientedLine(rng.uniform(-1, 1, size=3), v))
            if not ok:
                continue
            lines = first + last
            assert f3d_factorization(lines) == pytest.approx(
                abs(line_function_f(lines)), rel=1e-9, abs=1e-12
            )
            count += 1

    def test_not_parallel_triple(self):
        lines = lifted_axes_config()
        bad = [lines[0], OrientedLine([0.0, 1.0, 0.0], unit([1.0, 0.1, 0.0]))] + lines[2:]
        with pytest.raises(NotParallelTriple):
            f3d_factorization(bad)

    def test_degenerate_projection(self):
        lines = lifted_axes_config()
        bad = lines[:3] + [OrientedLine([0.0, 0.0, 0.0], [1.0, 0.0, 0.0])] + lines[4:]
        with pytest.raises(DegenerateProjection):
            f3d_factorization(bad)


class TestSolveRigid:
    def test_zero_measurements_give_zero_motion(self):
        rng = np.random.default_rng(12)
        pairs = random_pairs(rng, 2, 3)
        A, b = solve_rigid_from_truss(pairs, np.zeros(3))
        assert np.allclose(A, 0.0) and np.allclose(b, 0.0)

    @pytest.mark.parametrize("d", [2, 3])
    def test_roundtrip(self, d):
        rng = np.random.default_rng(13 + d)
        n = d * (d + 1) // 2
        n_skew = d * (d - 1) // 2
        for _ in range(25):
            pairs = random_pairs(rng, d, n)
            try:
                params = rng.standard_normal(n_skew)
                b0 = rng.standard_normal(d)
                A0 = skew_matrix(params, d)
                m = apply_truss(pairs, A0, b0)
                A, b = solve_rigid_from_truss(pairs, m)
            except SingularTruss:
                continue
            assert np.allclose(A, A0, rtol=1e-8, atol=1e-8)
            assert np.allclose(b, b0, rtol=1e-8, atol=1e-8)
            # conditioning bound from the cofactor identity: the inverse is
            # bounded by |det F|^-1 ||F||^(N-1) (||F||^2 in the 3x3 case)
            F = truss_matrix(pairs)
            coords = np.concatenate([np.atleast_1d(params), b0])
            bound = (
                np.linalg.norm(F, 2) ** (n - 1) / abs(np.linalg.det(F)) * np.linalg.norm(m)
            )
            assert np.linalg.norm(coords) <= bound + 1e-12

    def test_residual_of_solution(self):
        rng = np.random.default_rng(15)
        pairs = random_pairs(rng, 2, 3)
        m = rng.standard_normal(3)
        A, b = solve_rigid_from_truss(pairs, m)
        assert np.allclose(apply_truss(pairs, A, b), m, rtol=1e-8, atol=1e-10)
