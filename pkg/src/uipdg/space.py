"""Broken P_k space on a mesh with cached quadrature tables.

Degrees of freedom are element-major: dof ``e * N + i`` is the coefficient of
basis function i on element e.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .mesh import Mesh, Skeleton, build_skeleton
from .refelem import basis_eval, edge_basis_eval, n_basis, quadrature


class DGSpace:
    def __init__(self, mesh: Mesh, k: int, skeleton: Skeleton | None = None, quad_degree: int | None = None):
        self.mesh = mesh
        self.skeleton = skeleton if skeleton is not None else build_skeleton(mesh)
        self.k = int(k)
        self.N = n_basis(self.k)
        self.quad_degree = 2 * self.k + 2 if quad_degree is None else int(quad_degree)
        p = mesh.vertices[mesh.triangles]
        self.v0 = p[:, 0]
        self.jac = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=2)  # (nt, 2, 2)
        self.detj = np.abs(np.linalg.det(self.jac))
        self.inv_jac = np.linalg.inv(self.jac)

    @property
    def n_elements(self) -> int:
        return self.mesh.n_elements

    @property
    def ndofs(self) -> int:
        return self.N * self.mesh.n_elements

    def to_reference(self, elems, points):
        """Reference coordinates of physical ``points`` (..., 2) in ``elems`` (...)."""
        d = points - self.v0[elems]
        return np.einsum("...ij,...j->...i", self.inv_jac[elems], d)

    def to_physical(self, elems, ref):
        return self.v0[elems] + np.einsum("...ij,...j->...i", self.jac[elems], ref)

    def basis_at(self, elems, points):
        """Values (..., N) and physical gradients (..., N, 2) at physical points."""
        elems = np.asarray(elems)
        points = np.asarray(points, dtype=float)
        shape = points.shape[:-1]
        e = np.broadcast_to(elems, shape).reshape(-1)
        ref = self.to_reference(e, points.reshape(-1, 2))
        vals, grads = basis_eval(self.k, ref)  # (N, P), (N, P, 2)
        pg = np.einsum("npj,pji->pni", grads, self.inv_jac[e])
        return vals.T.reshape(shape + (self.N,)), pg.reshape(shape + (self.N, 2))

    # -- volume tables -----------------------------------------------------------

    @cached_property
    def volume(self) -> "VolumeTables":
        rule = quadrature("triangle", self.quad_degree)
        vals, grads = basis_eval(self.k, rule.points)
        pts = self.v0[:, None, :] + np.einsum("eij,qj->eqi", self.jac, rule.points)
        w = self.detj[:, None] * rule.weights[None, :]
        # physical gradient: inv(J)^T grad_ref
        g = np.einsum("nqj,eji->eqni", grads, self.inv_jac)
        return VolumeTables(pts, w, vals.T.copy(), g)

    # -- face tables -----------------------------------------------------------

    @cached_property
    def faces(self) -> "FaceTables":
        sk = self.skeleton
        rule = quadrature("edge", self.quad_degree)
        xa = self.mesh.vertices[sk.va]
        xb = self.mesh.vertices[sk.vb]
        pts = xa[:, None, :] + rule.points[None, :, None] * (xb - xa)[:, None, :]
        w = sk.lengths[:, None] * rule.weights[None, :]
        vL, gL = self.basis_at(sk.left[:, None], pts)
        interior = sk.right >= 0
        vR = np.zeros_like(vL)
        gR = np.zeros_like(gL)
        if interior.any():
            vR[interior], gR[interior] = self.basis_at(sk.right[interior][:, None], pts[interior])
        mu = edge_basis_eval(self.k, rule.points).T  # (q, k+1)
        return FaceTables(pts, w, rule.points, vL, gL, vR, gR, mu)

    def element_dofs(self, elems):
        return np.asarray(elems)[..., None] * self.N + np.arange(self.N)


@dataclass
class VolumeTables:
    points: np.ndarray  # (nt, q, 2)
    weights: np.ndarray  # (nt, q), includes |det J|
    values: np.ndarray  # (q, N)
    grads: np.ndarray  # (nt, q, N, 2)


@dataclass
class FaceTables:
    points: np.ndarray  # (nf, q, 2)
    weights: np.ndarray  # (nf, q), includes |F|
    s: np.ndarray  # (q,) edge parameter from va to vb
    vL: np.ndarray  # (nf, q, N)
    gL: np.ndarray  # (nf, q, N, 2)
    vR: np.ndarray  # zero on boundary faces
    gR: np.ndarray
    mu: np.ndarray  # (q, k+1) orthonormal edge basis


class DGFunction:
    """Coefficient vector of a broken polynomial on ``space``."""

    def __init__(self, space: DGSpace, coeffs=None):
        self.space = space
        if coeffs is None:
            coeffs = np.zeros(space.ndofs)
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape != (space.ndofs,):
            raise ValueError(f"expected {space.ndofs} coefficients, got shape {coeffs.shape}")
        if not np.all(np.isfinite(coeffs)):
            raise ValueError("non-finite coefficients")
        self.coeffs = coeffs

    @property
    def blocks(self) -> np.ndarray:
        return self.coeffs.reshape(-1, self.space.N)

    def __call__(self, elems, points):
        vals, _ = self.space.basis_at(elems, points)
        e = np.broadcast_to(np.asarray(elems), vals.shape[:-1])
        return np.einsum("...n,...n->...", vals, self.blocks[e])

    def gradient(self, elems, points):
        _, grads = self.space.basis_at(elems, points)
        e = np.broadcast_to(np.asarray(elems), grads.shape[:-2])
        return np.einsum("...ni,...n->...i", grads, self.blocks[e])

    def face_values(self):
        """Traces on both sides at face quadrature points: (uL, gradL, uR, gradR)."""
        ft = self.space.faces
        sk = self.space.skeleton
        b = self.blocks
        uL = np.einsum("fqn,fn->fq", ft.vL, b[sk.left])
        gL = np.einsum("fqni,fn->fqi", ft.gL, b[sk.left])
        right = np.where(sk.right >= 0, sk.right, 0)
        uR = np.einsum("fqn,fn->fq", ft.vR, b[right])
        gR = np.einsum("fqni,fn->fqi", ft.gR, b[right])
        return uL, gL, uR, gR


class SkeletonFunction:
    """Piecewise P_k trace on the skeleton in the orthonormal edge basis.

    ``coeffs`` has shape (n_faces, k+1); the edge parameter runs from ``va``
    to ``vb`` of each face.
    """

    def __init__(self, space: DGSpace, coeffs=None):
        self.space = space
        shape = (space.skeleton.n_faces, space.k + 1)
        self.coeffs = np.zeros(shape) if coeffs is None else np.asarray(coeffs, dtype=float).reshape(shape)

    def at_face_points(self) -> np.ndarray:
        """Values (n_faces, q) at the face quadrature points."""
        return self.coeffs @ self.space.faces.mu.T

    def __call__(self, faces, s):
        """Values on ``faces`` at edge parameters ``s`` (same shape)."""
        s = np.asarray(s, dtype=float)
        mu = edge_basis_eval(self.space.k, s.reshape(-1))  # (k+1, P)
        c = self.coeffs[np.broadcast_to(faces, s.shape).reshape(-1)]
        return np.einsum("pa,ap->p", c, mu).reshape(s.shape)

    @classmethod
    def from_face_values(cls, space: DGSpace, values):
        """L2 projection of values given at face quadrature points."""
        ft = space.faces
        rule_w = ft.weights / space.skeleton.lengths[:, None]
        return cls(space, np.einsum("fq,fq,qa->fa", rule_w, values, ft.mu))
