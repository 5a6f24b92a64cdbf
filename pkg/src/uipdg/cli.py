"""Command line driver.

    uipdg <run|convergence|compare|equivalence|mesh> --config cfg.json
          [--allow-low-penalty] [--out DIR] [--seed N]

Exit codes: 0 success, 2 configuration error, 3 solver failure, 4 failed check.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from contextlib import nullcontext
from pathlib import Path

import numpy as np

from . import __version__
from .bench import get_test
from .errors import ecr
from .exceptions import ConfigurationError, LocalSolveError, SolverError
from .forms import SchemeSpec, identity_relation_check
from .hybrid import one_sided_fluxes, reconstruct_traces
from .mesh import read_mesh, write_mesh
from .refelem import MAX_DEGREE
from .space import DGFunction, DGSpace, SkeletonFunction
from .study import (
    CONVERGENCE_COLUMNS,
    convergence_study,
    equivalence_check,
    evaluate_on_points,
    mesh_sequence,
    overshoot,
    sample_grid,
    solve_problem,
    write_csv,
)

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_CHECK = 0, 2, 3, 4
COMMANDS = ("run", "convergence", "compare", "equivalence", "mesh")
EQUIVALENCE_TOL = 1e-8

DEFAULTS = {
    "test": "test1",
    "lambda": 1.0,
    "schemes": ["SUIP"],
    "k": [1],
    "n0": 8,
    "levels": 4,
    "alpha0": 8.0,
    "tau_form": "trace",
    "tol": 1e-10,
    "solver": "auto",
    "diagonal": "alternate",
    "mesh_file": None,
    "grid": 128,
    "overshoot_grid": 256,
    "record_time": True,
    "identity_trials": 10,
    "out": "uipdg-out",
    "seed": 0,
}
_LABELS = {"SUIP": ("UIP", 1), "IUIP": ("UIP", 0), "NUIP": ("UIP", -1), "SWIP": ("SWIP", 1),
           "SIPF": ("IPF", 1), "IIPF": ("IPF", 0), "NIPF": ("IPF", -1)}


def load_config(path, overrides=None) -> dict:
    """Read a JSON config, reject unknown keys and fill defaults."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigurationError("config must be a JSON object")
    unknown = sorted(set(raw) - set(DEFAULTS))
    if unknown:
        raise ConfigurationError(f"unknown config key(s): {', '.join(unknown)}")
    cfg = dict(DEFAULTS)
    cfg.update(raw)
    cfg.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return validate_config(cfg)


def validate_config(cfg: dict) -> dict:
    if cfg["test"] not in ("test1", "kellogg"):
        raise ConfigurationError(f"test: unknown test case {cfg['test']!r}")
    if isinstance(cfg["schemes"], str):
        cfg["schemes"] = [cfg["schemes"]]
    for s in cfg["schemes"]:
        if s not in _LABELS:
            raise ConfigurationError(f"schemes: unknown scheme {s!r}; expected one of {sorted(_LABELS)}")
    if isinstance(cfg["k"], int):
        cfg["k"] = [cfg["k"]]
    for k in cfg["k"]:
        if not isinstance(k, int) or isinstance(k, bool) or not 1 <= k <= MAX_DEGREE:
            raise ConfigurationError(f"k: expected integers in 1..{MAX_DEGREE}, got {k!r}")
    for key in ("n0", "levels", "grid", "overshoot_grid", "identity_trials", "seed"):
        if not isinstance(cfg[key], int) or isinstance(cfg[key], bool) or cfg[key] < 0:
            raise ConfigurationError(f"{key}: expected a non-negative integer, got {cfg[key]!r}")
    if cfg["levels"] < 1 or cfg["n0"] < 1:
        raise ConfigurationError("n0 and levels must be at least 1")
    if not 0 <= cfg["seed"] < 2**64:
        raise ConfigurationError("seed: must fit in an unsigned 64-bit integer")
    if cfg["test"] == "test1" and not float(cfg["lambda"]) > 0:
        raise ConfigurationError("lambda: must be positive")
    try:
        cfg["specs"] = [
            SchemeSpec(_LABELS[s][0], _LABELS[s][1], float(cfg["alpha0"]), int(k), cfg["tau_form"])
            for k in cfg["k"]
            for s in cfg["schemes"]
        ]
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(str(exc)) from exc
    return cfg


def _metadata(cfg: dict, test, extra=None) -> dict:
    meta = {
        "uipdg": __version__,
        "test": test.name,
        "params": json.dumps(test.params, sort_keys=True),
        "alpha0": cfg["alpha0"],
        "tau_form": cfg["tau_form"],
        "solver": f"{cfg['solver']} tol={cfg['tol']}",
        "diagonal": cfg["diagonal"],
        "seed": cfg["seed"],
    }
    norms = {}
    for spec in cfg["specs"]:
        norms.setdefault(spec.scheme, {
            "UIP": "omega=tau_i/(tau1+tau2); rho0=tau1*tau2/(tau1+tau2); rho1=1/(tau1+tau2)",
            "SWIP": "omega=kappa_i/(kappa1+kappa2); sigma=alpha0*C_T^2*2k1k2/(k1+k2)*mean(|F|/|E|); no flux-jump term",
            "IPF": "tau_F=(tau1+tau2)/2; omega=1/2; rho0=tau_F/2; rho1=1/(2 tau_F)",
        }[spec.scheme])
    for name, text in norms.items():
        meta[f"normalization {name}"] = text
    if test.name == "kellogg":
        meta["kellogg assignment"] = (
            f"sector s (counterclockwise from +x) uses coefficient pair (s+{test.params['assignment_shift']}) mod 4; "
            f"value defect {test.params['assignment_value_defect']:.2e}, flux defect {test.params['assignment_flux_defect']:.2e}"
        )
    meta.update(extra or {})
    return meta


def _meshes(cfg, test):
    if cfg["mesh_file"]:
        return [read_mesh(cfg["mesh_file"])]
    return mesh_sequence(test, cfg["n0"], cfg["levels"], cfg["diagonal"])


def _strict(args) -> bool:
    return not args.allow_low_penalty


# -- subcommands ------------------------------------------------------------------


def cmd_mesh(cfg, test, out: Path, args) -> int:
    for level, mesh in enumerate(_meshes(cfg, test)):
        write_mesh(mesh, out / f"mesh_level{level}.txt")
    return EXIT_OK


def cmd_run(cfg, test, out: Path, args) -> int:
    mesh = _meshes(cfg, test)[0]
    spec = cfg["specs"][0]
    sol = solve_problem(test, mesh, spec, cfg["tol"], cfg["solver"], _strict(args))
    u = sol.u
    cols = ["element"] + [f"c{i}" for i in range(u.space.N)]
    rows = [dict(zip(cols, [e, *map(float, blk)])) for e, blk in enumerate(u.blocks)]
    meta = _metadata(cfg, test, {"scheme": spec.label, "k": spec.k})
    write_csv(out / "solution_coeffs.csv", rows, cols, meta)
    pts = sample_grid(mesh.bbox, cfg["grid"])
    vals, _ = evaluate_on_points(u, pts)
    write_csv(out / "solution_grid.csv", [{"x": p[0], "y": p[1], "u_h": v} for p, v in zip(pts, vals)], ["x", "y", "u_h"], meta)
    report = {
        "scheme": spec.label,
        "k": spec.k,
        "errors": sol.errors.as_dict(),
        "solver": {"method": sol.report.method, "iterations": sol.report.iterations, "residual": sol.report.residual},
    }
    if cfg["record_time"]:
        report["time_s"] = sol.time_s
    (out / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    print(json.dumps(report["errors"], sort_keys=True))
    return EXIT_OK


def _print_row(row):
    print(
        f"{row['scheme']:>5} k={row['k']} level={row['level']} h={row['h']:.3e} dofs={row['dofs']} "
        f"L2={row['err_l2']:.3e} ({row['ecr_l2']:.2f}) energy={row['err_energy']:.3e} ({row['ecr_energy']:.2f})"
    )


def cmd_convergence(cfg, test, out: Path, args) -> int:
    rows = convergence_study(
        test, cfg["specs"], cfg["n0"], cfg["levels"], cfg["tol"], cfg["solver"], _strict(args), cfg["diagonal"], _print_row
    )
    if not cfg["record_time"]:
        for r in rows:
            r["time_s"] = 0.0
    write_csv(out / "convergence.csv", rows, CONVERGENCE_COLUMNS, _metadata(cfg, test))
    return EXIT_OK


def cmd_compare(cfg, test, out: Path, args) -> int:
    specs = cfg["specs"]
    meshes = _meshes(cfg, test)
    by_k = {}
    for spec in specs:
        by_k.setdefault(spec.k, []).append(spec)
    rows = []
    for k, group in by_k.items():
        prev = {}
        for level, mesh in enumerate(meshes):
            row = {"k": k, "level": level, "h": mesh.h}
            for spec in group:
                sol = solve_problem(test, mesh, spec, cfg["tol"], cfg["solver"], _strict(args))
                e, p = sol.errors, prev.get(spec.label)
                row["dofs"] = e.dofs
                row[f"{spec.label}_err_l2"] = e.err_l2
                row[f"{spec.label}_ecr_l2"] = _rate(p, e, "err_l2")
                row[f"{spec.label}_err_energy"] = e.err_energy
                row[f"{spec.label}_ecr_energy"] = _rate(p, e, "err_energy")
                if test.name == "test1":
                    row[f"{spec.label}_overshoot"] = overshoot(sol.u, test, cfg["overshoot_grid"])["total"]
                prev[spec.label] = e
            rows.append(row)
            print(", ".join(f"{key}={val:.3e}" if isinstance(val, float) else f"{key}={val}" for key, val in row.items()))
    columns = []
    for r in rows:
        columns += [c for c in r if c not in columns]
    write_csv(out / "compare.csv", rows, columns, _metadata(cfg, test))
    return EXIT_OK


def _rate(prev, cur, attr):
    return ecr(getattr(prev, attr), getattr(cur, attr), prev.h, cur.h) if prev else float("nan")


def cmd_equivalence(cfg, test, out: Path, args) -> int:
    rows = []
    failed = False
    rng = np.random.default_rng(cfg["seed"])
    for mesh in _meshes(cfg, test):
        for spec in cfg["specs"]:
            if spec.scheme != "UIP":
                continue
            row = equivalence_check(test, mesh, spec.k, spec.epsilon, spec.alpha0, tol=cfg["tol"])
            row.update(_flux_check(test, mesh, spec, cfg, args))
            row["identity_defect"] = _identity_trials(mesh, spec.k, rng, cfg["identity_trials"])
            row["pass"] = int(row["rel_max_diff"] <= EQUIVALENCE_TOL and row["flux_jump"] <= 1e-10)
            failed |= not row["pass"]
            rows.append(row)
            print(
                f"{row['scheme']:>5} k={row['k']} h={row['h']:.3e} max|u_HIP-u_UIP|/max|u|={row['rel_max_diff']:.2e} "
                f"flux jump={row['flux_jump']:.2e} identity={row['identity_defect']:.2e} {'ok' if row['pass'] else 'FAIL'}"
            )
    write_csv(out / "equivalence.csv", rows, None, _metadata(cfg, test, {"threshold": EQUIVALENCE_TOL}))
    return EXIT_CHECK if failed else EXIT_OK


def _flux_check(test, mesh, spec, cfg, args) -> dict:
    sol = solve_problem(test, mesh, spec, cfg["tol"], cfg["solver"], _strict(args))
    uhat, _ = reconstruct_traces(sol.u, sol.system.coeffs, test.diffusion, test.dirichlet)
    left, right = one_sided_fluxes(sol.u, uhat, sol.system.coeffs, test.diffusion)
    interior = sol.u.space.skeleton.interior
    scale = max(np.abs(left[interior]).max(), 1e-300)
    return {"flux_jump": float(np.abs(left[interior] + right[interior]).max() / scale)}


def _identity_trials(mesh, k, rng, trials) -> float:
    if trials == 0:
        return 0.0
    space = DGSpace(mesh, k)
    sk = space.skeleton
    worst = 0.0
    for _ in range(trials):
        b = rng.standard_normal((space.ndofs, 2))
        phi = DGFunction(space, rng.standard_normal(space.ndofs))
        hat = rng.standard_normal((sk.n_faces, k + 1))
        hat[sk.boundary] = 0.0
        w1 = rng.uniform(0.0, 1.0, sk.n_faces)
        w1[sk.boundary] = 1.0
        lhs, rhs = identity_relation_check(space, b, phi, SkeletonFunction(space, hat), np.column_stack([w1, 1 - w1]))
        worst = max(worst, abs(lhs - rhs) / (abs(lhs) + 1.0))
    return worst


HANDLERS = {"run": cmd_run, "convergence": cmd_convergence, "compare": cmd_compare,
            "equivalence": cmd_equivalence, "mesh": cmd_mesh}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="uipdg", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="JSON configuration file")
    p.add_argument("--allow-low-penalty", action="store_true", help="warn instead of failing when alpha0 <= 6")
    p.add_argument("--out", help="output directory (overrides the config)")
    p.add_argument("--seed", type=int, help="seed for randomized checks (overrides the config)")
    return p


def _thread_limit():
    value = os.environ.get("UIPDG_THREADS")
    if not value:
        return nullcontext()
    try:
        n = int(value)
    except ValueError:
        raise ConfigurationError(f"UIPDG_THREADS must be an integer, got {value!r}") from None
    if n < 1:
        raise ConfigurationError("UIPDG_THREADS must be at least 1")
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=n)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, {"out": args.out, "seed": args.seed})
        test = get_test(cfg["test"], float(cfg["lambda"]))
        out = Path(cfg["out"])
        out.mkdir(parents=True, exist_ok=True)
        with _thread_limit():
            return HANDLERS[args.command](cfg, test, out, args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverError, LocalSolveError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
