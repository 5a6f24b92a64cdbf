"""Compact hybridized interior penalty (H-IP) solver and trace reconstruction.

Unknowns are a broken P_k function u and a single-valued P_k trace uhat on
the skeleton.  Per element the form reads

    (kappa grad u, grad v)_E - <q(u), v - vhat> - eps <q(v), u - uhat>
        + <tau (u - uhat), v - vhat>

over the element boundary, with ``q(w) = kappa grad w . n_E``.  Element
unknowns are eliminated exactly, leaving a system on the interior-face traces.
On Dirichlet faces the trace is fixed to the L2 projection of g_D.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .coeffs import DiffusionField, FaceCoefficients
from .exceptions import BoundaryConditionError, LocalSolveError
from .forms import BoundaryData, homogeneous_dirichlet
from .linalg import solve
from .space import DGFunction, DGSpace, SkeletonFunction


@dataclass
class CondensedSystem:
    space: DGSpace
    epsilon: int
    matrix: sp.csr_matrix  # interior-face trace system
    rhs: np.ndarray
    interior: np.ndarray  # face ids of the unknown traces, in matrix order
    boundary_trace: np.ndarray  # (n_faces, k+1) prescribed moments, zero on interior
    local_faces: np.ndarray  # (nt, 3) face ids of each element
    Auu: np.ndarray  # (nt, N, N)
    Aul: np.ndarray  # (nt, N, 3m)
    Alu: np.ndarray  # (nt, 3m, N)
    F: np.ndarray  # (nt, N)
    X: np.ndarray  # Auu^{-1} Aul
    y: np.ndarray  # Auu^{-1} F

    @property
    def trace_block(self) -> int:
        return self.space.k + 1


def _local_blocks(space: DGSpace, diffusion: DiffusionField, coeffs: FaceCoefficients, epsilon):
    """Element matrices of the hybrid form, local face j = edge (v_j, v_j+1)."""
    sk = space.skeleton
    ft = space.faces
    k, N = space.k, space.N
    m = k + 1
    nt = space.n_elements
    subs = space.mesh.subdomains
    vt = space.volume
    K = diffusion(subs)
    Auu = np.einsum("eq,eqni,eij,eqmj->enm", vt.weights, vt.grads, K, vt.grads)
    Aul = np.zeros((nt, N, 3 * m))
    Alu = np.zeros((nt, 3 * m, N))
    All = np.zeros((nt, 3 * m, 3 * m))

    mu = ft.mu  # (q, m)
    for side in ("left", "right"):
        if side == "left":
            faces = np.arange(sk.n_faces)
            elems = sk.left
            V, G = ft.vL, ft.gL
            sign = 1.0
            tau = coeffs.tau1
        else:
            faces = sk.interior
            elems = sk.right[faces]
            V, G = ft.vR[faces], ft.gR[faces]
            sign = -1.0
            tau = coeffs.tau2[faces]
        n = sign * sk.normals[faces]
        kn = np.einsum("fij,fj->fi", K[elems], n)
        Q = np.einsum("fqni,fi->fqn", G, kn)
        w = ft.weights[faces]
        t = tau[:, None]
        uu = (
            -np.einsum("fq,fqi,fqj->fij", w, V, Q)
            - epsilon * np.einsum("fq,fqi,fqj->fij", w, Q, V)
            + t[..., None] * np.einsum("fq,fqi,fqj->fij", w, V, V)
        )
        ul = epsilon * np.einsum("fq,fqi,qb->fib", w, Q, mu) - t[..., None] * np.einsum(
            "fq,fqi,qb->fib", w, V, mu
        )
        lu = np.einsum("fq,qa,fqj->faj", w, mu, Q) - t[..., None] * np.einsum("fq,qa,fqj->faj", w, mu, V)
        ll = t[..., None] * np.einsum("fq,qa,qb->fab", w, mu, mu)
        # local slot of each face within its element
        slot = np.argmax(sk.elem_faces[elems] == faces[:, None], axis=1)
        np.add.at(Auu, elems, uu)
        for j in range(3):
            sel = slot == j
            e = elems[sel]
            cols = slice(j * m, (j + 1) * m)
            np.add.at(Aul, (e, slice(None), cols), ul[sel])
            np.add.at(Alu, (e, cols, slice(None)), lu[sel])
            np.add.at(All, (e, cols, cols), ll[sel])
    return Auu, Aul, Alu, All


def dirichlet_moments(space: DGSpace, g_D) -> np.ndarray:
    """L2 projection of g_D onto P_k of each Dirichlet face; zero elsewhere."""
    sk = space.skeleton
    ft = space.faces
    out = np.zeros((sk.n_faces, space.k + 1))
    D = sk.dirichlet
    if len(D) and g_D is not None:
        x = ft.points[D]
        g = np.broadcast_to(g_D(x[..., 0], x[..., 1], space.mesh.subdomains[sk.left[D]][:, None]), x.shape[:-1])
        out[D] = SkeletonFunction.from_face_values(space, _embed(g, D, sk.n_faces, x.shape[1])).coeffs[D]
    return out


def _embed(values, rows, n, q):
    full = np.zeros((n, q))
    full[rows] = values
    return full


def assemble_hip(
    space: DGSpace,
    diffusion: DiffusionField,
    coeffs: FaceCoefficients,
    epsilon: int,
    source=None,
    bc: BoundaryData | None = None,
    cond_limit: float = 1e13,
) -> CondensedSystem:
    """Build and statically condense the H-IP system.

    ``coeffs`` supplies the one-sided stabilizations (``tau1``, ``tau2``).
    Raises :class:`LocalSolveError` naming the first element whose local
    block is singular or too ill-conditioned to eliminate.
    """
    sk = space.skeleton
    if len(sk.neumann):
        raise BoundaryConditionError("the hybrid solver supports Dirichlet boundary faces only")
    bc = bc if bc is not None else homogeneous_dirichlet()
    bc.check(sk)
    k, N = space.k, space.N
    m = k + 1
    Auu, Aul, Alu, All = _local_blocks(space, diffusion, coeffs, epsilon)

    F = np.zeros((space.n_elements, N))
    if source is not None:
        vt = space.volume
        x = vt.points
        fq = np.broadcast_to(source(x[..., 0], x[..., 1], space.mesh.subdomains[:, None]), vt.weights.shape)
        F = np.einsum("eq,eq,qn->en", vt.weights, fq, vt.values)

    conds = np.linalg.cond(Auu)
    bad = np.flatnonzero(~np.isfinite(conds) | (conds > cond_limit))
    if len(bad):
        raise LocalSolveError(int(bad[0]), f"local block is singular (condition number {conds[bad[0]]:.3e})")
    sol = np.linalg.solve(Auu, np.concatenate([Aul, F[..., None]], axis=2))
    X, y = sol[..., :-1], sol[..., -1]

    S = All - np.einsum("eak,ekb->eab", Alu, X)  # (nt, 3m, 3m)
    g = -np.einsum("eak,ek->ea", Alu, y)

    gdofs = (sk.elem_faces[:, :, None] * m + np.arange(m)).reshape(space.n_elements, 3 * m)
    nfull = sk.n_faces * m
    rows = np.broadcast_to(gdofs[:, :, None], S.shape).ravel()
    cols = np.broadcast_to(gdofs[:, None, :], S.shape).ravel()
    Sfull = sp.coo_matrix((S.ravel(), (rows, cols)), shape=(nfull, nfull)).tocsr()
    gfull = np.bincount(gdofs.ravel(), weights=g.ravel(), minlength=nfull)

    interior = sk.interior
    idof = (interior[:, None] * m + np.arange(m)).ravel()
    bdof = (sk.boundary[:, None] * m + np.arange(m)).ravel()
    lam_b = dirichlet_moments(space, bc.g_D)
    A = Sfull[idof][:, idof].tocsr()
    A.sum_duplicates()
    A.sort_indices()
    rhs = gfull[idof] - Sfull[idof][:, bdof] @ lam_b.reshape(-1)[bdof]
    return CondensedSystem(space, epsilon, A, rhs, interior, lam_b, sk.elem_faces, Auu, Aul, Alu, F, X, y)


def trace_from_solution(cs: CondensedSystem, interior_values) -> SkeletonFunction:
    m = cs.trace_block
    lam = cs.boundary_trace.copy()
    lam[cs.interior] = np.asarray(interior_values).reshape(-1, m)
    return SkeletonFunction(cs.space, lam)


def recover_element_solution(cs: CondensedSystem, uhat: SkeletonFunction) -> DGFunction:
    """Back-substitute the element unknowns from the skeleton trace."""
    lam_loc = uhat.coeffs[cs.local_faces].reshape(cs.space.n_elements, -1)
    u = cs.y - np.einsum("enk,ek->en", cs.X, lam_loc)
    return DGFunction(cs.space, u.ravel())


def local_residual(cs: CondensedSystem, u: DGFunction, uhat: SkeletonFunction) -> float:
    """Max residual of the element equations Auu u + Aul uhat = F, relative to
    the size of the terms."""
    lam_loc = uhat.coeffs[cs.local_faces].reshape(cs.space.n_elements, -1)
    a = np.einsum("enm,em->en", cs.Auu, u.blocks)
    b = np.einsum("enk,ek->en", cs.Aul, lam_loc)
    scale = max(np.abs(a).max(), np.abs(b).max(), np.abs(cs.F).max(), np.finfo(float).tiny)
    return float(np.abs(a + b - cs.F).max() / scale)


def solve_hip(space, diffusion, coeffs, epsilon, source=None, bc=None, tol=1e-10, method="auto"):
    """Solve the hybrid problem; returns (u, uhat, condensed system, solve report)."""
    cs = assemble_hip(space, diffusion, coeffs, epsilon, source, bc)
    if cs.matrix.shape[0]:
        lam, report = solve(cs.matrix, cs.rhs, tol=tol, method=method, block_size=cs.trace_block)
    else:
        lam, report = np.zeros(0), None
    uhat = trace_from_solution(cs, lam)
    return recover_element_solution(cs, uhat), uhat, cs, report


def reconstruct_traces(u: DGFunction, coeffs: FaceCoefficients, diffusion: DiffusionField, g_D=None):
    """Numerical traces from a primal solution.

    Returns ``(uhat, sigma_n)`` where ``uhat`` is the skeleton trace
    ``{u}_omega - rho1 [kappa grad u]`` (the projected g_D, or zero, on
    boundary faces) and ``sigma_n`` is ``sigma_hat . n_left`` at the face
    quadrature points, ``-{kappa grad u}*_omega . n + rho0 [u] . n``.
    """
    space = u.space
    sk = space.skeleton
    bnd = sk.right < 0
    uL, gL, uR, gR, pL, pR = _sides(u, diffusion)
    w1, w2 = coeffs.omega1[:, None], coeffs.omega2[:, None]
    hat = w1 * uL + w2 * uR - coeffs.rho1[:, None] * (pL - pR)
    hat = np.where(bnd[:, None], 0.0, hat)
    uhat = SkeletonFunction.from_face_values(space, hat)
    uhat.coeffs[bnd] = dirichlet_moments(space, g_D)[bnd]
    sigma_n = -np.where(bnd[:, None], pL, w2 * pL + w1 * pR) + coeffs.rho0[:, None] * np.where(
        bnd[:, None], uL, uL - uR
    )
    return uhat, sigma_n


def _sides(u: DGFunction, diffusion: DiffusionField):
    space = u.space
    sk = space.skeleton
    subs = space.mesh.subdomains
    uL, gL, uR, gR = u.face_values()
    right = np.where(sk.right >= 0, sk.right, sk.left)
    pL = np.einsum("fqi,fij,fj->fq", gL, diffusion(subs[sk.left]), sk.normals)
    pR = np.einsum("fqi,fij,fj->fq", gR, diffusion(subs[right]), sk.normals)
    return uL, gL, uR, gR, pL, pR


def one_sided_fluxes(u: DGFunction, uhat: SkeletonFunction, coeffs: FaceCoefficients, diffusion: DiffusionField):
    """sigma_hat . n_E = -kappa grad u . n_E + tau_E (u - uhat) from each side.

    Returns (left, right) arrays at face quadrature points, each with respect
    to its own outward normal; on interior faces their sum is the flux jump.
    """
    uL, _, uR, _, pL, pR = _sides(u, diffusion)
    h = uhat.at_face_points()
    left = -pL + coeffs.tau1[:, None] * (uL - h)
    right = pR + np.nan_to_num(coeffs.tau2)[:, None] * (uR - h)
    return left, right
