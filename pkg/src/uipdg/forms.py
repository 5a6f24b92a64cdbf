"""Face trace operators and assembly of the UIP, SWIP and IP_F systems.

The UIP bilinear form is

    a(u, v) = (kappa grad u, grad v) + ac(u, v) + eps * ac(v, u)
              + <rho0 [u], [v]>_F - eps * <rho1 [kappa grad u], [kappa grad v]>_Fi

with the consistency term ``ac(u, v) = -<{kappa grad u}*_omega, [v]>_F``
built on the conjugate weighted mean.  Dirichlet data enter only through the
right-hand side; Neumann faces carry no face terms.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .coeffs import DiffusionField, FaceCoefficients, face_coefficients
from .exceptions import BoundaryConditionError, ConfigurationError
from .refelem import basis_eval, quadrature
from .space import DGFunction, DGSpace, SkeletonFunction

SCHEMES = ("UIP", "SWIP", "IPF")
_PREFIX = {1: "S", 0: "I", -1: "N"}


@dataclass(frozen=True)
class SchemeSpec:
    scheme: str = "UIP"
    epsilon: int = 1
    alpha0: float = 8.0
    k: int = 1
    tau_form: str = "trace"

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ConfigurationError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        if self.epsilon not in (-1, 0, 1):
            raise ConfigurationError(f"epsilon must be -1, 0 or 1, got {self.epsilon!r}")
        if self.scheme == "SWIP" and self.epsilon != 1:
            raise ConfigurationError("SWIP is only defined for epsilon = +1")

    @property
    def label(self) -> str:
        """SUIP / IUIP / NUIP, SWIP, SIPF / IIPF / NIPF."""
        if self.scheme == "SWIP":
            return "SWIP"
        return _PREFIX[self.epsilon] + self.scheme


@dataclass(frozen=True)
class BoundaryData:
    """Dirichlet and Neumann data as vectorized callables ``g(x, y, subdomain)``."""

    g_D: object = None
    g_N: object = None

    def check(self, skeleton):
        if len(skeleton.dirichlet) and self.g_D is None:
            raise BoundaryConditionError("Dirichlet faces present but no g_D given")
        if len(skeleton.neumann) and self.g_N is None:
            raise BoundaryConditionError("Neumann faces present but no g_N given")
        if len(skeleton.boundary) != len(skeleton.dirichlet) + len(skeleton.neumann):
            raise BoundaryConditionError("boundary face without a D/N marker")


def homogeneous_dirichlet():
    return BoundaryData(g_D=lambda x, y, sub: np.zeros(np.broadcast(x, y).shape))


# -- trace operators ---------------------------------------------------------------


def jump(v1, v2, n1, boundary=None):
    """Normal jump v1 n1 + v2 n2 = (v1 - v2) n1 of scalars; one-sided on boundary."""
    v1, v2 = np.asarray(v1, float), np.asarray(v2, float)
    d = v1 - v2 if boundary is None else np.where(boundary, v1, v1 - v2)
    return d[..., None] * np.asarray(n1)


def wmean(v1, v2, w1, w2, boundary=None):
    m = w1 * np.asarray(v1) + w2 * np.asarray(v2)
    return m if boundary is None else np.where(boundary, v1, m)


def conj_wmean(v1, v2, w1, w2, boundary=None):
    return wmean(v1, v2, w2, w1, boundary)


@dataclass
class FaceTrace:
    left: np.ndarray
    left_grad: np.ndarray
    right: np.ndarray
    right_grad: np.ndarray
    jump: np.ndarray
    mean: np.ndarray
    conj_mean: np.ndarray


def face_traces(u: DGFunction, face: int, coeffs: FaceCoefficients) -> FaceTrace:
    """One-sided traces and DG operators of ``u`` at the quadrature points of ``face``."""
    sk = u.space.skeleton
    uL, gL, uR, gR = (a[face] for a in u.face_values())
    bnd = bool(sk.right[face] < 0)
    w1, w2 = coeffs.omega1[face], coeffs.omega2[face]
    if bnd:
        uR, gR = np.zeros_like(uL), np.zeros_like(gL)
    return FaceTrace(
        uL,
        gL,
        uR,
        gR,
        jump(uL, uR, sk.normals[face], bnd),
        wmean(uL, uR, w1, w2, bnd),
        conj_wmean(uL, uR, w1, w2, bnd),
    )


def identity_relation_check(space: DGSpace, b, phi: DGFunction, phihat: SkeletonFunction, omega):
    """Both sides of the element-boundary/skeleton identity.

    ``b`` holds the coefficients of a vector field, shape (ndofs, 2).
    ``omega`` is (n_faces, 2) with rows summing to one on interior faces.
    The left side loops over element boundaries using reference-edge
    quadrature; the right side uses the skeleton tables and DG operators.
    """
    sk = space.skeleton
    if np.any(np.abs(phihat.coeffs[sk.boundary]) > 0):
        raise ValueError("phihat must vanish on boundary faces")
    b = np.asarray(b, dtype=float).reshape(space.n_elements, space.N, 2)
    omega = np.asarray(omega, dtype=float)
    rule = quadrature("edge", space.quad_degree)
    ref_vertices = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    verts = space.mesh.vertices
    tris = space.mesh.triangles
    lhs = 0.0
    for j in range(3):
        a_ref, b_ref = ref_vertices[j], ref_vertices[(j + 1) % 3]
        ref_pts = a_ref + rule.points[:, None] * (b_ref - a_ref)
        vals, _ = basis_eval(space.k, ref_pts)  # (N, q)
        xa, xb = verts[tris[:, j]], verts[tris[:, (j + 1) % 3]]
        d = xb - xa
        length = np.linalg.norm(d, axis=1)
        n = np.column_stack([d[:, 1], -d[:, 0]]) / length[:, None]
        x = xa[:, None, :] + rule.points[None, :, None] * d[:, None, :]
        bq = np.einsum("nq,eni->eqi", vals, b)
        phq = np.einsum("nq,en->eq", vals, phi.blocks)
        f = sk.elem_faces[:, j]
        fa, fb = verts[sk.va[f]], verts[sk.vb[f]]
        t = fb - fa
        s = np.einsum("eqi,ei->eq", x - fa[:, None, :], t) / np.einsum("ei,ei->e", t, t)[:, None]
        hat = phihat(np.repeat(f[:, None], rule.size, axis=1), s)
        integrand = np.einsum("eqi,ei->eq", bq, n) * (phq - hat)
        lhs += float(np.sum(integrand * rule.weights[None, :] * length[:, None]))

    ft = space.faces
    bnd = sk.right < 0
    right = np.where(bnd, 0, sk.right)
    bL = np.einsum("fqn,fni->fqi", ft.vL, b[sk.left])
    bR = np.einsum("fqn,fni->fqi", ft.vR, b[right])
    pL, _, pR, _ = phi.face_values()
    w1, w2 = omega[:, 0][:, None], omega[:, 1][:, None]
    n1 = sk.normals[:, None, :]
    cm = conj_wmean(bL, bR, w1[..., None], w2[..., None], bnd[:, None, None])
    jphi = jump(pL, pR, n1, bnd[:, None])
    term1 = np.einsum("fqi,fqi->fq", cm, jphi)
    jb = np.einsum("fqi,fqi->fq", bL - bR, np.broadcast_to(n1, bL.shape))
    term2 = np.where(bnd[:, None], 0.0, jb * (wmean(pL, pR, w1, w2) - phihat.at_face_points()))
    rhs = float(np.sum((term1 + term2) * ft.weights))
    return lhs, rhs


# -- assembly ------------------------------------------------------------------------


@dataclass
class LinearSystem:
    """Assembled matrix and right-hand side with the parts of the bilinear form.

    ``matrix = volume + consistency + eps * consistency.T + penalty - eps * flux_penalty``
    """

    matrix: sp.csr_matrix
    rhs: np.ndarray
    block_size: int
    spec: SchemeSpec
    coeffs: FaceCoefficients
    parts: dict = field(default_factory=dict)


def _flux_tables(space: DGSpace, diffusion: DiffusionField):
    """Normal fluxes kappa grad(phi) . n_left of the basis on both sides."""
    sk = space.skeleton
    ft = space.faces
    subs = space.mesh.subdomains
    kn_L = np.einsum("fij,fj->fi", diffusion(subs[sk.left]), sk.normals)
    right = np.where(sk.right >= 0, sk.right, sk.left)
    kn_R = np.einsum("fij,fj->fi", diffusion(subs[right]), sk.normals)
    qL = np.einsum("fqni,fi->fqn", ft.gL, kn_L)
    qR = np.einsum("fqni,fi->fqn", ft.gR, kn_R)
    return qL, qR


def volume_matrices(space: DGSpace, diffusion: DiffusionField) -> np.ndarray:
    """Element stiffness blocks (nt, N, N)."""
    vt = space.volume
    K = diffusion(space.mesh.subdomains)
    return np.einsum("eq,eqni,eij,eqmj->enm", vt.weights, vt.grads, K, vt.grads)


def _coo(blocks, dofs, n):
    m = dofs.shape[1]
    rows = np.broadcast_to(dofs[:, :, None], (len(dofs), m, m))
    cols = np.broadcast_to(dofs[:, None, :], (len(dofs), m, m))
    return sp.coo_matrix((blocks.ravel(), (rows.ravel(), cols.ravel())), shape=(n, n)).tocsr()


def assemble_parts(space: DGSpace, diffusion: DiffusionField, coeffs: FaceCoefficients) -> dict:
    """Sparse matrices of the volume, consistency, primal and flux penalty terms."""
    sk = space.skeleton
    ft = space.faces
    n = space.ndofs
    qL, qR = _flux_tables(space, diffusion)

    vol = volume_matrices(space, diffusion)
    parts = {"volume": _coo(vol, space.element_dofs(np.arange(space.n_elements)), n)}

    I = sk.interior
    D = sk.dirichlet
    w = ft.weights
    # interior faces: stacked [left, right] element dofs
    Jv = np.concatenate([ft.vL[I], -ft.vR[I]], axis=2)
    Mq = np.concatenate(
        [coeffs.omega2[I, None, None] * qL[I], coeffs.omega1[I, None, None] * qR[I]], axis=2
    )
    Jq = np.concatenate([qL[I], -qR[I]], axis=2)
    dofs_I = np.concatenate([space.element_dofs(sk.left[I]), space.element_dofs(sk.right[I])], axis=1)
    C_I = -np.einsum("fq,fqi,fqj->fij", w[I], Jv, Mq)
    P0_I = coeffs.rho0[I, None, None] * np.einsum("fq,fqi,fqj->fij", w[I], Jv, Jv)
    P1_I = coeffs.rho1[I, None, None] * np.einsum("fq,fqi,fqj->fij", w[I], Jq, Jq)

    dofs_D = space.element_dofs(sk.left[D])
    C_D = -np.einsum("fq,fqi,fqj->fij", w[D], ft.vL[D], qL[D])
    P0_D = coeffs.rho0[D, None, None] * np.einsum("fq,fqi,fqj->fij", w[D], ft.vL[D], ft.vL[D])

    parts["consistency"] = _coo(C_I, dofs_I, n) + _coo(C_D, dofs_D, n)
    parts["penalty"] = _coo(P0_I, dofs_I, n) + _coo(P0_D, dofs_D, n)
    parts["flux_penalty"] = _coo(P1_I, dofs_I, n)
    return parts


def combine(parts: dict, epsilon: int) -> sp.csr_matrix:
    C = parts["consistency"]
    A = parts["volume"] + C + epsilon * C.T.tocsr() + parts["penalty"] - epsilon * parts["flux_penalty"]
    A = A.tocsr()
    A.sum_duplicates()
    A.sort_indices()
    return A


def assemble_rhs(space: DGSpace, diffusion: DiffusionField, coeffs: FaceCoefficients, epsilon, source, bc):
    sk = space.skeleton
    vt = space.volume
    ft = space.faces
    subs = space.mesh.subdomains
    F = np.zeros((space.n_elements, space.N))
    if source is not None:
        x = vt.points
        fq = source(x[..., 0], x[..., 1], subs[:, None])
        F += np.einsum("eq,eq,qn->en", vt.weights, np.broadcast_to(fq, vt.weights.shape), vt.values)
    D, Nf = sk.dirichlet, sk.neumann
    if len(D):
        qL, _ = _flux_tables(space, diffusion)
        x = ft.points[D]
        g = np.broadcast_to(bc.g_D(x[..., 0], x[..., 1], subs[sk.left[D]][:, None]), x.shape[:-1])
        # -eps <kappa grad v . n, g_D> mirrors the eps * ac(v, u) term of the matrix
        contrib = -epsilon * np.einsum("fq,fqn,fq->fn", ft.weights[D], qL[D], g)
        contrib += coeffs.rho0[D, None] * np.einsum("fq,fqn,fq->fn", ft.weights[D], ft.vL[D], g)
        np.add.at(F, sk.left[D], contrib)
    if len(Nf):
        x = ft.points[Nf]
        g = np.broadcast_to(bc.g_N(x[..., 0], x[..., 1], subs[sk.left[Nf]][:, None]), x.shape[:-1])
        np.add.at(F, sk.left[Nf], -np.einsum("fq,fqn,fq->fn", ft.weights[Nf], ft.vL[Nf], g))
    return F.ravel()


def assemble(
    space: DGSpace,
    diffusion: DiffusionField,
    spec: SchemeSpec,
    source=None,
    bc: BoundaryData | None = None,
    coeffs: FaceCoefficients | None = None,
    strict: bool = True,
) -> LinearSystem:
    """Assemble the discrete system of ``spec`` on ``space``.

    ``source`` and the boundary data are vectorized callables
    ``g(x, y, subdomain)``.  ``strict=False`` downgrades the coercivity
    threshold check on alpha0 to a warning.
    """
    if space.k != spec.k:
        raise ConfigurationError(f"space degree {space.k} does not match scheme degree {spec.k}")
    if space.quad_degree < 2 * space.k:
        raise ConfigurationError(
            f"quadrature degree {space.quad_degree} cannot integrate the bilinear form exactly (need {2 * space.k})"
        )
    bc = bc if bc is not None else homogeneous_dirichlet()
    bc.check(space.skeleton)
    if coeffs is None:
        coeffs = face_coefficients(
            space.mesh, space.skeleton, diffusion, spec.k, spec.alpha0, spec.scheme, spec.tau_form, strict
        )
    elif coeffs.scheme != spec.scheme or coeffs.k != spec.k:
        raise ConfigurationError("face coefficients do not match the scheme specification")
    parts = assemble_parts(space, diffusion, coeffs)
    A = combine(parts, spec.epsilon)
    b = assemble_rhs(space, diffusion, coeffs, spec.epsilon, source, bc)
    return LinearSystem(A, b, space.N, spec, coeffs, parts)


def consistency_two_ways(space: DGSpace, diffusion: DiffusionField, coeffs: FaceCoefficients, u: DGFunction, w: DGFunction):
    """The consistency term ac(u, w) evaluated in two independent forms.

    Returns (conjugate weighted mean form, arithmetic mean + gamma flux-jump form).
    """
    sk = space.skeleton
    ft = space.faces
    bnd = sk.right < 0
    uL, guL, uR, guR = u.face_values()
    wL, _, wR, _ = w.face_values()
    subs = space.mesh.subdomains
    right = np.where(bnd, sk.left, sk.right)
    fL = np.einsum("fqi,fij->fqj", guL, diffusion(subs[sk.left]))
    fR = np.einsum("fqi,fij->fqj", guR, diffusion(subs[right]))
    fR = np.where(bnd[:, None, None], 0.0, fR)
    n1 = sk.normals[:, None, :]
    jw = jump(wL, wR, n1, bnd[:, None])
    w1, w2 = coeffs.omega1[:, None, None], coeffs.omega2[:, None, None]
    cm = conj_wmean(fL, fR, w1, w2, bnd[:, None, None])
    conj_form = -np.sum(ft.weights * np.einsum("fqi,fqi->fq", cm, jw))

    am = np.where(bnd[:, None, None], fL, 0.5 * (fL + fR))
    jf = np.einsum("fqi,fqi->fq", fL - fR, np.broadcast_to(n1, fL.shape))
    gamma = coeffs.gamma_n[:, None, None] * n1  # vector gamma = gamma_n n_left
    corr = np.where(bnd[:, None], 0.0, np.einsum("fqi,fqi->fq", gamma * jf[..., None], jw))
    arith_form = -np.sum(ft.weights * np.einsum("fqi,fqi->fq", am, jw)) + np.sum(ft.weights * corr)
    return float(conj_form), float(arith_form)
