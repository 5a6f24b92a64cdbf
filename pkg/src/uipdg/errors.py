"""Error norms, elementwise L2 projection and convergence rates.

Energy norm:    |||v|||^2   = ||kappa^1/2 grad_h v||^2 + sum_F ||rho0^1/2 [v]||_F^2
Augmented norm: |||v|||_*^2 = |||v|||^2 + sum_E h_E ||kappa^1/2 grad v||_dE^2
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .coeffs import DiffusionField, FaceCoefficients
from .space import DGFunction, DGSpace


@dataclass
class ErrorReport:
    err_l2: float
    err_energy: float
    grad_part: float  # ||kappa^1/2 grad_h e||
    jump_part: float  # |e|_{0,h}
    trace_part: float  # |e|_{1,h}
    err_augmented: float
    h: float
    dofs: int

    def as_dict(self):
        return asdict(self)


def _zero(x, y, sub):
    return np.zeros(np.broadcast(x, y, sub).shape)


def _zero_grad(x, y, sub):
    return np.zeros(np.broadcast(x, y, sub).shape + (2,))


def compute_errors(
    u_h: DGFunction | None,
    value,
    gradient,
    coeffs: FaceCoefficients,
    diffusion: DiffusionField,
    space: DGSpace | None = None,
) -> ErrorReport:
    """Norms of ``e = u - u_h`` for an exact solution given per subdomain.

    ``value(x, y, sub)`` and ``gradient(x, y, sub)`` (last axis of size 2)
    are vectorized.  Each side of a face uses its own element's subdomain, so
    piecewise-defined exact solutions are evaluated consistently.  Pass
    ``u_h=None`` with ``space`` to measure the norms of the exact function.
    """
    space = u_h.space if u_h is not None else space
    value = value or _zero
    gradient = gradient or _zero_grad
    mesh = space.mesh
    sk = space.skeleton
    subs = mesh.subdomains
    vt = space.volume
    ft = space.faces
    blocks = u_h.blocks if u_h is not None else np.zeros((space.n_elements, space.N))
    K = diffusion(subs)

    x = vt.points
    sub_q = np.broadcast_to(subs[:, None], x.shape[:-1])
    e_val = value(x[..., 0], x[..., 1], sub_q) - np.einsum("qn,en->eq", vt.values, blocks)
    e_grad = gradient(x[..., 0], x[..., 1], sub_q) - np.einsum("eqni,en->eqi", vt.grads, blocks)
    l2 = float(np.sum(vt.weights * e_val**2))
    grad2 = float(np.einsum("eq,eqi,eij,eqj->", vt.weights, e_grad, K, e_grad))

    bnd = sk.right < 0
    right = np.where(bnd, sk.left, sk.right)
    y = ft.points
    sL = np.broadcast_to(subs[sk.left][:, None], y.shape[:-1])
    sR = np.broadcast_to(subs[right][:, None], y.shape[:-1])
    eL = value(y[..., 0], y[..., 1], sL) - np.einsum("fqn,fn->fq", ft.vL, blocks[sk.left])
    eR = value(y[..., 0], y[..., 1], sR) - np.einsum("fqn,fn->fq", ft.vR, blocks[right])
    jmp = np.where(bnd[:, None], eL, eL - eR)
    jump2 = float(np.sum(coeffs.rho0[:, None] * ft.weights * jmp**2))

    gL = gradient(y[..., 0], y[..., 1], sL) - np.einsum("fqni,fn->fqi", ft.gL, blocks[sk.left])
    gR = gradient(y[..., 0], y[..., 1], sR) - np.einsum("fqni,fn->fqi", ft.gR, blocks[right])
    tL = np.einsum("fqi,fij,fqj->fq", gL, K[sk.left], gL)
    tR = np.einsum("fqi,fij,fqj->fq", gR, K[right], gR)
    hL = mesh.diameters[sk.left][:, None]
    hR = mesh.diameters[right][:, None]
    trace2 = float(np.sum(ft.weights * (hL * tL + np.where(bnd[:, None], 0.0, hR * tR))))

    energy = math.sqrt(grad2 + jump2)
    return ErrorReport(
        err_l2=math.sqrt(l2),
        err_energy=energy,
        grad_part=math.sqrt(grad2),
        jump_part=math.sqrt(jump2),
        trace_part=math.sqrt(trace2),
        err_augmented=math.sqrt(grad2 + jump2 + trace2),
        h=mesh.h,
        dofs=space.ndofs,
    )


def l2_project(space: DGSpace, func) -> DGFunction:
    """Elementwise L2 projection of ``func(x, y, sub)`` onto the broken P_k space."""
    vt = space.volume
    x = vt.points
    vals = np.broadcast_to(func(x[..., 0], x[..., 1], space.mesh.subdomains[:, None]), vt.weights.shape)
    # orthonormal basis: element mass matrix is |det J| * I
    c = np.einsum("eq,eq,qn->en", vt.weights, vals, vt.values) / space.detj[:, None]
    return DGFunction(space, c.ravel())


def energy_matrix(space: DGSpace, diffusion: DiffusionField, coeffs: FaceCoefficients):
    """Matrix of |||v|||^2 on the discrete space (volume + rho0 jump parts)."""
    from .forms import assemble_parts

    parts = assemble_parts(space, diffusion, coeffs)
    return (parts["volume"] + parts["penalty"]).tocsr()


def ecr(e_coarse, e_fine, h_coarse, h_fine) -> float:
    """Observed rate log(e_c/e_f)/log(h_c/h_f); NaN when an error is not positive."""
    if not (h_coarse > h_fine > 0):
        raise ValueError("need h_coarse > h_fine > 0")
    if not (e_coarse > 0 and e_fine > 0):
        return float("nan")
    return math.log(e_coarse / e_fine) / math.log(h_coarse / h_fine)
