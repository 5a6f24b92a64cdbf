"""Solve drivers, convergence studies, scheme comparisons and CSV output."""
from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass

import numpy as np

from .bench import TestCase
from .coeffs import DEFAULT_ALPHA0
from .errors import ErrorReport, compute_errors, ecr
from .forms import BoundaryData, LinearSystem, SchemeSpec, assemble
from .hybrid import solve_hip
from .linalg import SolveReport, solve
from .mesh import Mesh, generate_structured, refine_uniform
from .space import DGFunction, DGSpace

CONVERGENCE_COLUMNS = (
    "scheme", "epsilon", "k", "level", "h", "dofs", "err_l2", "ecr_l2",
    "err_energy", "ecr_energy", "solver_iters", "residual", "time_s",
)


@dataclass
class Solution:
    u: DGFunction
    system: LinearSystem
    report: SolveReport
    errors: ErrorReport
    time_s: float


def boundary_data(test: TestCase) -> BoundaryData:
    return BoundaryData(g_D=test.dirichlet)


def mesh_sequence(test: TestCase, n0: int, levels: int, diagonal: str = "alternate") -> list[Mesh]:
    """``levels`` nested meshes: an n0 x n0 structured mesh and its uniform refinements."""
    meshes = [generate_structured(n0, test.domain, diagonal, test.partition)]
    for _ in range(levels - 1):
        meshes.append(refine_uniform(meshes[-1]))
    return meshes


def solve_problem(
    test: TestCase,
    mesh: Mesh,
    spec: SchemeSpec,
    tol: float = 1e-10,
    method: str = "auto",
    strict: bool = True,
) -> Solution:
    """Assemble, solve and measure the error of one scheme on one mesh.

    The jump part of the energy error is weighted by the scheme's own primal
    penalty, i.e. each scheme is measured in its own energy norm.
    """
    t0 = time.perf_counter()
    space = DGSpace(mesh, spec.k)
    system = assemble(space, test.diffusion, spec, test.source, boundary_data(test), strict=strict)
    x, report = solve(system.matrix, system.rhs, tol=tol, method=method, block_size=space.N)
    elapsed = time.perf_counter() - t0
    u = DGFunction(space, x)
    errors = compute_errors(u, test.value, test.gradient, system.coeffs, test.diffusion)
    return Solution(u, system, report, errors, elapsed)


def convergence_study(
    test: TestCase,
    specs: list[SchemeSpec],
    n0: int = 8,
    levels: int = 4,
    tol: float = 1e-10,
    method: str = "auto",
    strict: bool = True,
    diagonal: str = "alternate",
    progress=None,
) -> list[dict]:
    """One row per (scheme, level) with errors and rates against the previous level."""
    meshes = mesh_sequence(test, n0, levels, diagonal)
    rows = []
    for spec in specs:
        prev = None
        for level, mesh in enumerate(meshes):
            sol = solve_problem(test, mesh, spec, tol, method, strict)
            e = sol.errors
            row = {
                "scheme": spec.label,
                "epsilon": spec.epsilon,
                "k": spec.k,
                "level": level,
                "h": e.h,
                "dofs": e.dofs,
                "err_l2": e.err_l2,
                "ecr_l2": ecr(prev.err_l2, e.err_l2, prev.h, e.h) if prev else float("nan"),
                "err_energy": e.err_energy,
                "ecr_energy": ecr(prev.err_energy, e.err_energy, prev.h, e.h) if prev else float("nan"),
                "solver_iters": sol.report.iterations,
                "residual": sol.report.residual,
                "time_s": sol.time_s,
            }
            rows.append(row)
            if progress:
                progress(row)
            prev = e
    return rows


def final_rates(rows: list[dict]) -> dict:
    """(label, k) -> (ecr_l2, ecr_energy) of the finest level pair."""
    out = {}
    for r in rows:
        out[(r["scheme"], r["k"])] = (r["ecr_l2"], r["ecr_energy"])
    return out


# -- overshoot diagnostic ----------------------------------------------------------


def sample_grid(bbox, m: int = 256):
    """Cell-centred m x m grid; never lands on the partition lines."""
    x0, x1, y0, y1 = bbox
    xs = x0 + (np.arange(m) + 0.5) * (x1 - x0) / m
    ys = y0 + (np.arange(m) + 0.5) * (y1 - y0) / m
    X, Y = np.meshgrid(xs, ys, indexing="xy")
    return np.column_stack([X.ravel(), Y.ravel()])


def locate(mesh: Mesh, points: np.ndarray) -> np.ndarray:
    """Index of a triangle containing each point (-1 when outside the mesh)."""
    points = np.asarray(points, float)
    owner = np.full(len(points), -1)
    order = np.argsort(points[:, 0], kind="stable")
    xs = points[order, 0]
    tri = mesh.vertices[mesh.triangles]
    tol = 1e-12 * max(1.0, np.abs(mesh.vertices).max())
    for e in range(mesh.n_elements):
        v = tri[e]
        lo, hi = np.searchsorted(xs, [v[:, 0].min() - tol, v[:, 0].max() + tol])
        if lo == hi:
            continue
        cand = order[lo:hi]
        cand = cand[owner[cand] < 0]
        p = points[cand]
        inside = p[:, 1] >= v[:, 1].min() - tol
        inside &= p[:, 1] <= v[:, 1].max() + tol
        cand, p = cand[inside], p[inside]
        if not len(cand):
            continue
        d = p - v[0]
        J = np.column_stack([v[1] - v[0], v[2] - v[0]])
        lam = np.linalg.solve(J, d.T).T
        hit = (lam[:, 0] >= -1e-12) & (lam[:, 1] >= -1e-12) & (lam.sum(axis=1) <= 1 + 1e-12)
        owner[cand[hit]] = e
    return owner


def evaluate_on_points(u: DGFunction, points: np.ndarray):
    """(values, element ids) of a DG function at arbitrary points."""
    elems = locate(u.space.mesh, points)
    if np.any(elems < 0):
        raise ValueError("sample point outside the mesh")
    vals = u(elems, points)
    return np.asarray(vals), elems


def overshoot(u: DGFunction, test: TestCase, m: int = 256) -> dict:
    """Over- and undershoot of ``u`` relative to the exact range on an m x m grid."""
    pts = sample_grid(test.domain, m)
    uh, elems = evaluate_on_points(u, pts)
    ue = test.value(pts[:, 0], pts[:, 1], u.space.mesh.subdomains[elems])
    over = max(0.0, float(uh.max() - ue.max()))
    under = max(0.0, float(ue.min() - uh.min()))
    return {"max_uh": float(uh.max()), "min_uh": float(uh.min()), "overshoot": over, "undershoot": under,
            "total": over + under}


# -- equivalence ------------------------------------------------------------------


def equivalence_check(test: TestCase, mesh: Mesh, k: int, epsilon: int, alpha0=DEFAULT_ALPHA0, tol=1e-10) -> dict:
    """Max-norm relative discrepancy between the UIP-DG and hybrid solutions."""
    spec = SchemeSpec("UIP", epsilon, alpha0, k)
    space = DGSpace(mesh, k)
    system = assemble(space, test.diffusion, spec, test.source, boundary_data(test))
    x, _ = solve(system.matrix, system.rhs, tol=tol, block_size=space.N)
    u_hip, _, _, _ = solve_hip(space, test.diffusion, system.coeffs, epsilon, test.source, boundary_data(test), tol=tol)
    diff = float(np.abs(u_hip.coeffs - x).max() / np.abs(x).max())
    return {"scheme": spec.label, "epsilon": epsilon, "k": k, "h": mesh.h, "dofs": space.ndofs, "rel_max_diff": diff}


# -- CSV output -------------------------------------------------------------------


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return "nan" if not np.isfinite(v) else f"{float(v):.10e}"
    return str(v)


def csv_text(rows: list[dict], columns=None, metadata: dict | None = None) -> str:
    """CSV with a commented ``# key: value`` metadata block; floats in fixed scientific notation."""
    columns = list(columns or (rows[0].keys() if rows else []))
    buf = io.StringIO()
    for key, val in (metadata or {}).items():
        buf.write(f"# {key}: {val}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in columns])
    return buf.getvalue()


def write_csv(path, rows, columns=None, metadata=None) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(csv_text(rows, columns, metadata))
