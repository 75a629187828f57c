import json

import numpy as np
import pytest

from thinbeam.cli import main


def run_cli(tmp_path, command, config, extra=None):
    cfg_path = tmp_path / "config.json"
    cfg_path.write_text(json.dumps(config))
    out = tmp_path / "out"
    argv = [command, "--config", str(cfg_path), "--out", str(out)]
    if extra:
        argv.extend(extra)
    code = main(argv)
    return code, out


class TestBendingConstant:
    def test_isotropic_value(self, tmp_path, capsys):
        code, out = run_cli(
            tmp_path, "bending-constant", {"tensor": {"isotropic": {"mu": 1.0, "lambda": 1.0}}}
        )
        assert code == 0
        printed = capsys.readouterr().out.strip()
        assert printed == "a = 2.666666666666667"
        data = json.loads((out / "bending.json").read_text())
        assert data["a"] == pytest.approx(8.0 / 3.0, rel=1e-12)
        assert (out / "metadata.json").exists()

    def test_missing_key_exits_2(self, tmp_path, capsys):
        code, _ = run_cli(tmp_path, "bending-constant", {})
        assert code == 2
        err = json.loads(capsys.readouterr().err)
        assert err["error"] == "config"

    def test_unknown_key_rejected(self, tmp_path, capsys):
        code, _ = run_cli(
            tmp_path, "bending-constant",
            {"tensor": {"isotropic": {"mu": 1.0, "lambda": 0.0}}, "extra": 1},
        )
        assert code == 2

    def test_non_coercive_exits_3(self, tmp_path, capsys):
        code, _ = run_cli(
            tmp_path, "bending-constant",
            {"tensor": {"voigt": [[1, 0, 0], [0, 1, 0], [0, 0, 0]]}},
        )
        assert code == 3
        err = json.loads(capsys.readouterr().err)
        assert err["error"] == "NotCoercive"


class TestTrussDet:
    def test_pairs(self, tmp_path, capsys):
        cfg = {
            "pairs": [
                {"p": [1.0, 0.0], "q": [0.0, 0.0]},
                {"p": [0.0, 1.0], "q": [0.0, 0.0]},
                {"p": [1.0, 1.0], "q": [1.0, 0.0]},
            ]
        }
        code, out = run_cli(tmp_path, "truss-det", cfg)
        assert code == 0
        data = json.loads((out / "truss.json").read_text())
        assert abs(data["det"]) == pytest.approx(1.0)

    def test_lines(self, tmp_path):
        cfg = {
            "lines": [
                {"point": [0.0, 0.0], "dir": [1.0, 0.0]},
                {"point": [0.0, 0.0], "dir": [0.0, 1.0]},
                {"point": [1.0, 0.0], "dir": [0.0, 1.0]},
            ]
        }
        code, out = run_cli(tmp_path, "truss-det", cfg)
        assert code == 0
        data = json.loads((out / "truss.json").read_text())
        assert abs(data["f"]) == pytest.approx(1.0)


class TestEvalEh:
    def test_triangle_preset(self, tmp_path):
        cfg = {
            "tensor": {"isotropic": {"mu": 1.0, "lambda": 1.0}},
            "beta": 1.0,
            "field": {"preset": "triangle", "h": 0.125, "nx": 32, "ny": 8},
        }
        code, out = run_cli(tmp_path, "eval-eh", cfg)
        assert code == 0
        data = json.loads((out / "energy.json").read_text())
        h = 0.125
        assert data["crack_length_unrescaled"] == pytest.approx(h - h ** 4)
        assert (out / "field.png").exists()

    def test_grid_file_roundtrip(self, tmp_path):
        from thinbeam.grids import DisplacementField, Grid, write_field_csv

        grid = Grid(nx=8, ny=4, L=1.0, h=0.25)
        rigid = np.zeros((9, 5, 2))
        field_path = tmp_path / "field.csv"
        write_field_csv(DisplacementField(grid, rigid), field_path)
        cfg = {
            "tensor": {"isotropic": {"mu": 1.0, "lambda": 0.0}},
            "beta": 2.0,
            "field": {"file": str(field_path)},
            "crack": {
                "segments": [[[0.53125, -0.5], [0.53125, 0.5]]],
                "normals": [[1.0, 0.0]],
            },
        }
        code, out = run_cli(tmp_path, "eval-eh", cfg)
        assert code == 0
        data = json.loads((out / "energy.json").read_text())
        assert data["total"] == pytest.approx(2.0)


class TestSolveBeam:
    def test_kink_run_outputs(self, tmp_path):
        cfg = {
            "a": 50.0,
            "beta": 1e-3,
            "L": 1.0,
            "n": 16,
            "fidelity_weight": 1.0,
            "max_jumps": 2,
            "g_u": {"preset": "zero"},
            "g_v": {"preset": "kink", "position": 0.5},
        }
        code, out = run_cli(tmp_path, "solve-beam", cfg)
        assert code == 0
        sidecar = json.loads((out / "beam.json").read_text())
        assert sidecar["jump_interfaces"]["vprime"] == [7]
        lines = (out / "beam.csv").read_text().strip().splitlines()
        assert lines[0] == "x,u,v"
        assert len(lines) == 17
        assert (out / "beam.png").exists()


class TestGammaSweep:
    def test_deterministic_outputs(self, tmp_path):
        cfg = {
            "tensor": {"isotropic": {"mu": 1.0, "lambda": 1.0}},
            "beta": 1.0,
            "h_list": [0.125, 0.0625],
            "eta_list": [0.4, 0.2],
            "profile": {"kind": "parabola"},
            "nx": 64,
            "ny": 8,
        }
        code1, out = run_cli(tmp_path, "gamma-sweep", cfg, extra=["--seed", "7"])
        assert code1 == 0
        first = (out / "sweep.csv").read_bytes()
        code2, out = run_cli(tmp_path, "gamma-sweep", cfg, extra=["--seed", "7"])
        assert code2 == 0
        assert (out / "sweep.csv").read_bytes() == first
        assert (out / "sweep.png").exists()


class TestSolve2d:
    def test_split_strip_run(self, tmp_path):
        cfg = {
            "tensor": {"isotropic": {"mu": 1.0, "lambda": 1.0}},
            "beta": 0.5,
            "h": 0.25,
            "nx": 32,
            "ny": 16,
            "fidelity": 200.0,
            "max_iter": 40,
            "target": {"preset": "split-strip", "offset": 0.2},
        }
        code, out = run_cli(tmp_path, "solve-2d", cfg)
        assert code == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["converged"]
        trace = (out / "trace.csv").read_text().strip().splitlines()
        energies = [float(line.split(",")[1]) for line in trace[1:]]
        assert all(b <= a + 1e-10 for a, b in zip(energies, energies[1:]))
        for name in ("phi.csv", "crack.json", "displacement.bin", "phi.png", "trace.png"):
            assert (out / name).exists()

    def test_no_figures_flag(self, tmp_path):
        cfg = {
            "tensor": {"isotropic": {"mu": 1.0, "lambda": 1.0}},
            "beta": 0.5,
            "h": 0.25,
            "nx": 16,
            "ny": 8,
            "fidelity": 100.0,
            "max_iter": 10,
            "target": {"preset": "split-strip"},
        }
        code, out = run_cli(tmp_path, "solve-2d", cfg, extra=["--no-figures"])
        assert code == 0
        assert not (out / "phi.png").exists()


class TestCompactness:
    def test_two_piece_run(self, tmp_path):
        cfg = {
            "field": {
                "preset": "pieces",
                "h": 0.125,
                "nx": 64,
                "ny": 8,
                "pieces": [[0.5, 0.3, [0.0, 0.1]], [1.0, -0.2, [0.5, 0.0]]],
            },
            "delta": 0.0625,
            "eta": 0.3,
        }
        code, out = run_cli(tmp_path, "compactness", cfg)
        assert code == 0
        cert = json.loads((out / "certificates.json").read_text())
        assert cert["m_cert"] == 1
        assert len(cert["jumps"]) == 1
        for name in ("partition.json", "profiles.csv", "bending_profile.csv", "residual.bin", "profiles.png"):
            assert (out / name).exists()


class TestPaperChecks:
    def test_single_criterion(self, tmp_path, capsys):
        code, out = run_cli(tmp_path, "paper-checks", {}, extra=["--only", "1"])
        assert code == 0
        assert "PASS criterion-1" in capsys.readouterr().out
        summary = json.loads((out / "paper_checks.json").read_text())
        assert summary["passed"] == summary["total"] == 1
