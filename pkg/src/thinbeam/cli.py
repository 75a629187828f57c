"""Command-line interface: configuration ingestion, experiment orchestration,
and result emission.

Every subcommand reads one JSON config (strictly validated: unknown keys are
rejected), writes its outputs atomically into --out, and echoes the config,
seed, and package version into metadata.json.  Identical config and seed
produce byte-identical CSV/JSON outputs; figures are rendered alongside the
delimited files unless --no-figures is given.

Exit codes: 0 success, 2 configuration error, 3 numerical failure; errors
are reported as one JSON object on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile

import numpy as np

from . import __version__
from .beam import BeamProblem, beam_energy_breakdown, solve_beam
from .checks import run_all
from .compactness import compactness_extract, profile_fit
from .errors import ConfigError, NumericalFailure, ThinbeamError
from .grids import DisplacementField, Grid, read_field, rigid_motion_field, write_field_bin
from .phasefield import StripProblem, extract_crack, minimize_alternating, surface_energy
from .presets import piecewise_rigid_field, split_strip_target, vertical_pull_target
from .recovery import LimitProfile, build_recovery, gamma_sweep, polynomial_piece
from .sharp import CrackSet, escaping_ball_example, evaluate_Eh, triangle_counterexample
from .tensor import bending_constant, tensor_from_config
from .truss import OrientedLine, SegmentPair, line_function_f, truss_det

log = logging.getLogger("thinbeam")


# ---------------------------------------------------------------------------
# small IO helpers
# ---------------------------------------------------------------------------

def _atomic_write(path, data: bytes):
    directory = os.path.dirname(path) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def _write_json(path, obj):
    _atomic_write(path, (json.dumps(obj, indent=2, sort_keys=True) + "\n").encode())


def _write_csv(path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    _atomic_write(path, ("\n".join(lines) + "\n").encode())


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def _load_config(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}")


def _check_keys(cfg, required, optional, where):
    if not isinstance(cfg, dict):
        raise ConfigError(f"{where}: expected an object")
    unknown = sorted(set(cfg) - set(required) - set(optional))
    if unknown:
        raise ConfigError(f"{where}: unknown keys {unknown}")
    missing = sorted(set(required) - set(cfg))
    if missing:
        raise ConfigError(f"{where}: missing required keys {missing}")


def _tensor(cfg, where="tensor"):
    try:
        return tensor_from_config(cfg)
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"{where}: {exc}")


def _metadata(args, cfg):
    return {
        "version": __version__,
        "seed": args.seed,
        "threads": args.threads,
        "format": args.format,
        "config": cfg,
    }


# ---------------------------------------------------------------------------
# field / crack / profile builders shared by several commands
# ---------------------------------------------------------------------------

def _build_profile(cfg):
    _check_keys(cfg, ["kind"], ["amplitude", "v_jump", "vprime_jump", "shift", "slope"], "profile")
    kind = cfg["kind"]
    if kind == "parabola":
        amp = float(cfg.get("amplitude", 1.0))
        return LimitProfile(
            L=1.0, u_values=[0.0], u_jumps=[],
            v_pieces=[polynomial_piece([amp, 0.0, 0.0])],
        )
    if kind == "sin-with-jumps":
        amp = float(cfg.get("amplitude", 1.0))
        t_v = float(cfg.get("v_jump", 0.4))
        t_vp = float(cfg.get("vprime_jump", 0.7))
        shift = float(cfg.get("shift", 0.5))
        slope = float(cfg.get("slope", 1.0))
        w = 2.0 * np.pi

        def mk(s, m):
            return (
                lambda x: amp * np.sin(w * x) + s + m * (x - t_vp),
                lambda x: amp * w * np.cos(w * x) + m,
                lambda x: -amp * w ** 2 * np.sin(w * x),
            )

        return LimitProfile(
            L=1.0, u_values=[0.0], u_jumps=[],
            v_pieces=[mk(0.0, 0.0), mk(shift, 0.0), mk(shift, slope)],
            v_jumps=[t_v], vprime_jumps=[t_vp],
        )
    raise ConfigError(f"profile: unknown kind {kind!r}")


def _build_field_and_crack(cfg, C):
    """Field spec: a named preset or a grid file, with an optional explicit
    crack that overrides the preset's own."""
    _check_keys(
        cfg,
        [],
        ["preset", "file", "h", "L", "nx", "ny", "a", "b", "eta", "profile", "pieces", "offset", "position"],
        "field",
    )
    if ("preset" in cfg) == ("file" in cfg):
        raise ConfigError("field: give exactly one of 'preset' or 'file'")
    if "file" in cfg:
        return read_field(cfg["file"]), CrackSet.empty()
    name = cfg["preset"]
    h = float(cfg.get("h", 0.125))
    L = float(cfg.get("L", 1.0))
    nx = int(cfg.get("nx", 64))
    ny = int(cfg.get("ny", 16))
    if name == "triangle":
        return triangle_counterexample(h, L, nx=nx, ny=ny)
    if name == "ball":
        return escaping_ball_example(h, L, nx=nx, ny=ny)
    if name == "rigid":
        grid = Grid(nx=nx, ny=ny, L=L, h=h)
        field = rigid_motion_field(grid, float(cfg.get("a", 0.5)), cfg.get("b", [0.0, 0.0]))
        return field, CrackSet.empty()
    if name == "recovery":
        profile = _build_profile(cfg.get("profile", {"kind": "sin-with-jumps"}))
        return build_recovery(profile, h, float(cfg.get("eta", 0.1)), C, nx=nx, ny=ny)
    if name == "pieces":
        grid = Grid(nx=nx, ny=ny, L=L, h=h)
        pieces = [(float(p[0]), float(p[1]), np.asarray(p[2], float)) for p in cfg["pieces"]]
        field, crack, _ = piecewise_rigid_field(grid, pieces)
        return field, crack
    raise ConfigError(f"field: unknown preset {name!r}")


def _crack_from_config(cfg):
    _check_keys(cfg, ["segments", "normals"], [], "crack")
    return CrackSet(np.asarray(cfg["segments"], float), np.asarray(cfg["normals"], float))


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_bending_constant(args, cfg):
    _check_keys(cfg, ["tensor"], [], "config")
    res = bending_constant(_tensor(cfg["tensor"]))
    print(f"a = {res.a:.16g}")
    if args.out:
        _write_json(
            os.path.join(args.out, "bending.json"),
            {"a": res.a, "b_star": res.b_star, "c_star": res.c_star, "residual": res.residual},
        )
    return {}


def cmd_truss_det(args, cfg):
    _check_keys(cfg, [], ["pairs", "lines"], "config")
    if ("pairs" in cfg) == ("lines" in cfg):
        raise ConfigError("config: give exactly one of 'pairs' or 'lines'")
    if "pairs" in cfg:
        pairs = [SegmentPair(np.asarray(p["p"], float), np.asarray(p["q"], float)) for p in cfg["pairs"]]
        value = truss_det(pairs)
        kind = "det"
    else:
        lines = [
            OrientedLine(np.asarray(l["point"], float), np.asarray(l["dir"], float))
            for l in cfg["lines"]
        ]
        value = line_function_f(lines)
        kind = "f"
    print(f"{kind} = {value:.16g}")
    if args.out:
        _write_json(os.path.join(args.out, "truss.json"), {kind: value})
    return {}


def cmd_eval_eh(args, cfg):
    _check_keys(cfg, ["tensor", "beta", "field"], ["crack", "cut_cells"], "config")
    C = _tensor(cfg["tensor"])
    field, crack = _build_field_and_crack(cfg["field"], C)
    if "crack" in cfg:
        crack = _crack_from_config(cfg["crack"])
    out = evaluate_Eh(field, crack, C, float(cfg["beta"]), cut_cells=cfg.get("cut_cells", "split"))
    result = {
        "elastic": out.elastic,
        "jump": out.jump,
        "total": out.total,
        "h": out.h,
        "elastic_unrescaled": out.elastic_unrescaled,
        "crack_length_unrescaled": crack.unrescaled_length(out.h),
        "anisotropic_measure": crack.anisotropic_measure(out.h),
    }
    print(json.dumps(result, indent=2, sort_keys=True))
    if args.out:
        _write_json(os.path.join(args.out, "energy.json"), result)
        if args.figures:
            from .plots import save_field_figure

            save_field_figure(field, crack, os.path.join(args.out, "field.png"))
    return result


def cmd_solve_beam(args, cfg):
    _check_keys(
        cfg,
        ["beta", "L", "n", "fidelity_weight", "g_u", "g_v"],
        ["a", "tensor", "max_jumps", "bending_prefactor"],
        "config",
    )
    if ("a" in cfg) == ("tensor" in cfg):
        raise ConfigError("config: give exactly one of 'a' or 'tensor'")
    a = float(cfg["a"]) if "a" in cfg else bending_constant(_tensor(cfg["tensor"])).a
    n = int(cfg["n"])
    x = np.linspace(0.0, float(cfg["L"]), n)

    def target(spec, name):
        if isinstance(spec, list):
            arr = np.asarray(spec, float)
            if arr.shape != (n,):
                raise ConfigError(f"{name}: expected {n} values")
            return arr
        _check_keys(spec, ["preset"], ["height", "position", "frequency", "amplitude"], name)
        preset = spec["preset"]
        if preset == "step":
            return np.where(x < float(spec.get("position", 0.5)), 0.0, float(spec.get("height", 1.0)))
        if preset == "kink":
            return float(spec.get("amplitude", 1.0)) * np.abs(x - float(spec.get("position", 0.5)))
        if preset == "sin":
            return float(spec.get("amplitude", 1.0)) * np.sin(
                2.0 * np.pi * float(spec.get("frequency", 1.0)) * x / float(cfg["L"])
            )
        if preset == "zero":
            return np.zeros(n)
        raise ConfigError(f"{name}: unknown preset {preset!r}")

    prob = BeamProblem(
        a=a,
        beta=float(cfg["beta"]),
        L=float(cfg["L"]),
        g_u=target(cfg["g_u"], "g_u"),
        g_v=target(cfg["g_v"], "g_v"),
        fidelity_weight=float(cfg["fidelity_weight"]),
        bending_prefactor=float(cfg.get("bending_prefactor", 1.0 / 24.0)),
    )
    state = solve_beam(prob, int(cfg.get("max_jumps", 3)))
    elastic, jump, fidelity, total = beam_energy_breakdown(state, prob)
    sidecar = {
        "energy": {"elastic": elastic, "jump": jump, "fidelity": fidelity, "total": total},
        "jump_positions": {
            "u": [0.5 * (x[i] + x[i + 1]) for i in state.J_u],
            "v": [0.5 * (x[i] + x[i + 1]) for i in state.J_v],
            "vprime": [0.5 * (x[i] + x[i + 1]) for i in state.J_vprime],
        },
        "jump_interfaces": {"u": list(state.J_u), "v": list(state.J_v), "vprime": list(state.J_vprime)},
    }
    print(json.dumps(sidecar["energy"], indent=2, sort_keys=True))
    if args.out:
        _write_csv(
            os.path.join(args.out, "beam.csv"),
            ["x", "u", "v"],
            zip(x.tolist(), state.u.tolist(), state.v.tolist()),
        )
        _write_json(os.path.join(args.out, "beam.json"), sidecar)
        if args.figures:
            from .plots import save_beam_figure

            save_beam_figure(
                x, state.u, state.v, prob.g_u, prob.g_v,
                state.jump_union(), os.path.join(args.out, "beam.png"),
            )
    return sidecar


def cmd_solve_2d(args, cfg):
    _check_keys(
        cfg,
        ["tensor", "beta", "h", "nx", "ny", "fidelity", "target"],
        ["L", "epsilon", "k_eps", "max_iter", "tol", "phi_init", "threshold"],
        "config",
    )
    C = _tensor(cfg["tensor"])
    grid = Grid(nx=int(cfg["nx"]), ny=int(cfg["ny"]), L=float(cfg.get("L", 1.0)), h=float(cfg["h"]))
    tspec = cfg["target"]
    _check_keys(tspec, [], ["preset", "file", "offset", "position"], "target")
    if "file" in tspec:
        target = read_field(tspec["file"])
        if target.grid != grid:
            raise ConfigError("target: grid file does not match the configured grid")
    elif tspec.get("preset") == "split-strip":
        target = split_strip_target(
            grid, float(tspec.get("offset", 0.2)),
            float(tspec.get("position", 0.5 + grid.dx / 2)),
        )
    elif tspec.get("preset") == "vertical-pull":
        target = vertical_pull_target(grid, float(tspec.get("offset", 0.5)))
    else:
        raise ConfigError("target: give 'file' or preset 'split-strip'/'vertical-pull'")

    prob = StripProblem(
        grid=grid,
        C=C,
        beta=float(cfg["beta"]),
        fidelity=float(cfg["fidelity"]),
        target=target,
        epsilon=float(cfg["epsilon"]) if "epsilon" in cfg else None,
        k_eps=float(cfg.get("k_eps", 1e-6)),
        max_iter=int(cfg.get("max_iter", 200)),
        tol=float(cfg.get("tol", 1e-8)),
        phi_init=cfg.get("phi_init", "intact"),
        seed=args.seed,
    )
    y, damage, report = minimize_alternating(prob)
    if not report.converged:
        log.warning("alternating minimization hit max_iter without converging")
    crack = extract_crack(damage, grid, float(cfg.get("threshold", 0.3)))
    summary = {
        "converged": report.converged,
        "iterations": report.iterations,
        "final_energy": report.energy_trace[-1],
        "surface_energy": surface_energy(damage, grid, float(cfg["beta"])),
        "extracted_measure": crack.anisotropic_measure(grid.h),
        "epsilon": prob.epsilon,
    }
    print(json.dumps(summary, indent=2, sort_keys=True))
    if args.out:
        write_field_bin(y, os.path.join(args.out, "displacement.bin"))
        _write_csv(
            os.path.join(args.out, "phi.csv"),
            ["i", "j", "phi"],
            (
                (i, j, float(damage.phi[i, j]))
                for i in range(grid.nx + 1)
                for j in range(grid.ny + 1)
            ),
        )
        _write_csv(
            os.path.join(args.out, "trace.csv"),
            ["step", "energy"],
            enumerate(report.energy_trace),
        )
        _write_json(
            os.path.join(args.out, "crack.json"),
            {
                "segments": crack.segments.tolist(),
                "normals": crack.normals.tolist(),
                "anisotropic_measure": crack.anisotropic_measure(grid.h),
            },
        )
        _write_json(os.path.join(args.out, "summary.json"), summary)
        if args.figures:
            from .plots import save_damage_figure, save_field_figure, save_trace_figure

            save_damage_figure(grid, damage.phi, crack, os.path.join(args.out, "phi.png"))
            save_field_figure(y, crack, os.path.join(args.out, "displacement.png"))
            save_trace_figure(report.energy_trace, os.path.join(args.out, "trace.png"))
    return summary


def cmd_gamma_sweep(args, cfg):
    _check_keys(
        cfg,
        ["tensor", "beta", "h_list", "eta_list", "profile"],
        ["nx", "ny", "prefactor"],
        "config",
    )
    C = _tensor(cfg["tensor"])
    profile = _build_profile(cfg["profile"])
    rows = gamma_sweep(
        profile,
        [float(h) for h in cfg["h_list"]],
        [float(e) for e in cfg["eta_list"]],
        C,
        float(cfg["beta"]),
        nx=int(cfg.get("nx", 256)),
        ny=int(cfg.get("ny", 24)),
        prefactor=float(cfg.get("prefactor", 1.0 / 24.0)),
    )
    for r in rows:
        print(f"h={r['h']:.6g} eta={r['eta']:.6g} E_h={r['E_h']:.12g} E0={r['E0']:.12g} rel_gap={r['rel_gap']:+.3e}")
    if args.out:
        header = ["h", "eta", "nx", "ny", "E_h", "elastic", "jump", "E0", "gap", "rel_gap"]
        _write_csv(
            os.path.join(args.out, "sweep.csv"),
            header,
            ([r[k] for k in header] for r in rows),
        )
        if args.figures:
            from .plots import save_sweep_figure

            save_sweep_figure(rows, os.path.join(args.out, "sweep.png"))
    return {"rows": rows}


def cmd_compactness(args, cfg):
    _check_keys(
        cfg,
        ["field", "delta", "eta"],
        ["tensor", "crack", "delta0", "korn_budget"],
        "config",
    )
    C = _tensor(cfg["tensor"]) if "tensor" in cfg else None
    field, crack = _build_field_and_crack(cfg["field"], C)
    if "crack" in cfg:
        crack = _crack_from_config(cfg["crack"])
    res = compactness_extract(
        field,
        crack,
        delta=float(cfg["delta"]),
        eta=float(cfg["eta"]),
        delta0=float(cfg.get("delta0", 1.0 / 16.0)),
        korn_budget=float(cfg.get("korn_budget", 8.0)),
    )
    kappa, T, resid, valid = profile_fit(field, res.omega_mask)
    grid = field.grid
    summary = {
        "n_rectangles": len(res.partition.rects),
        "n_good": int(res.partition.good_flags().sum()),
        "jumps": list(res.fields.jumps),
        "m_cert": res.fields.m_cert,
        "omega_area": res.omega_area,
        "omega_perimeter": res.omega_perimeter,
        "bridges": [
            {
                "z_left": r.z_left,
                "z_right": r.z_right,
                "verdict": r.verdict,
                "crack_in_hull": r.crack_in_hull,
                "bound_holds": r.bound_holds,
            }
            for r in res.reports
        ],
    }
    print(json.dumps(summary, indent=2, sort_keys=True))
    if args.out:
        _write_json(
            os.path.join(args.out, "partition.json"),
            {
                "delta": float(cfg["delta"]),
                "eta": float(cfg["eta"]),
                "rectangles": [
                    {
                        "z": r.z,
                        "crack_len": r.crack_len,
                        "good": r.good,
                        "a": r.a,
                        "b": None if r.b is None else r.b.tolist(),
                        "residual": r.residual,
                    }
                    for r in res.partition.rects
                ],
            },
        )
        _write_json(os.path.join(args.out, "certificates.json"), summary)
        xs = np.linspace(0.0, grid.L, 512)
        a_lin = res.fields.a_lin(xs)
        a_bar = res.fields.a_bar(xs)
        b_lin = np.asarray(res.fields.b_lin(xs))
        b_bar = np.asarray(res.fields.b_bar(xs))
        _write_csv(
            os.path.join(args.out, "profiles.csv"),
            ["x", "a_lin", "a_bar", "b1_lin", "b1_bar", "b2_lin", "b2_bar"],
            zip(
                xs.tolist(), a_lin.tolist(), a_bar.tolist(),
                b_lin[:, 0].tolist(), b_bar[:, 0].tolist(),
                b_lin[:, 1].tolist(), b_bar[:, 1].tolist(),
            ),
        )
        _write_csv(
            os.path.join(args.out, "bending_profile.csv"),
            ["x", "kappa", "T", "residual", "valid"],
            zip(grid.x_cells.tolist(), kappa.tolist(), T.tolist(), resid.tolist(), valid.tolist()),
        )
        residual_field = DisplacementField(grid, res.residual)
        write_field_bin(residual_field, os.path.join(args.out, "residual.bin"))
        if args.figures:
            from .plots import save_field_figure, save_profiles_figure

            save_profiles_figure(xs, a_lin, a_bar, res.fields.jumps, os.path.join(args.out, "profiles.png"))
            save_field_figure(residual_field, crack, os.path.join(args.out, "residual.png"), title="residual field")
    return summary


def cmd_paper_checks(args, cfg):
    _check_keys(cfg, [], ["criteria"], "config")
    criteria = cfg.get("criteria")
    if args.only:
        criteria = [int(tok) for tok in args.only.split(",")]
    results = run_all(criteria)
    summary = {
        "passed": sum(1 for r in results if r.passed and r.in_budget),
        "total": len(results),
        "lines": [r.line() for r in results],
    }
    if args.out:
        _write_json(os.path.join(args.out, "paper_checks.json"), summary)
    if summary["passed"] != summary["total"]:
        raise NumericalFailure(f"{summary['total'] - summary['passed']} acceptance criteria failed")
    return summary


COMMANDS = {
    "bending-constant": cmd_bending_constant,
    "truss-det": cmd_truss_det,
    "eval-eh": cmd_eval_eh,
    "solve-beam": cmd_solve_beam,
    "solve-2d": cmd_solve_2d,
    "gamma-sweep": cmd_gamma_sweep,
    "compactness": cmd_compactness,
    "paper-checks": cmd_paper_checks,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="thinbeam",
        description="Numerical laboratory for brittle thin-strip elasticity and its beam limit.",
    )
    parser.add_argument("--version", action="version", version=f"thinbeam {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=(name != "paper-checks"), help="JSON config path")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--seed", type=int, default=0, help="seed for randomized paths")
        p.add_argument("--threads", type=int, default=1, help="recorded; evaluation is serial")
        p.add_argument("--format", choices=["csv", "json"], default="csv")
        p.add_argument("--no-figures", dest="figures", action="store_false", help="skip PNG rendering")
        if name == "paper-checks":
            p.add_argument("--only", default=None, help="comma-separated criterion numbers")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("THINBEAM_LOG", "WARNING").upper())
    args = build_parser().parse_args(argv)
    try:
        cfg = _load_config(args.config) if args.config else {}
        if args.out:
            os.makedirs(args.out, exist_ok=True)
        COMMANDS[args.command](args, cfg)
        if args.out:
            _write_json(os.path.join(args.out, "metadata.json"), _metadata(args, cfg))
    except ConfigError as exc:
        print(json.dumps({"error": "config", "message": str(exc)}), file=sys.stderr)
        return 2
    except ThinbeamError as exc:
        print(
            json.dumps({"error": type(exc).__name__, "message": str(exc)}),
            file=sys.stderr,
        )
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
