"""Diffusion tensors, one-sided stabilization and derived face coefficients.

The one-sided stabilization on face F of element E is

    tau_{E,F} = alpha0 * C_T^2 * kappa_{E,F} * |F| / |E|,   C_T^2 = (k+1)(k+2)/2,

which is the sharp discrete trace constant on triangles (``tau_form="trace"``).
``tau_form="diameter"`` uses ``h_E^{-1}`` in place of ``|F|/|E|``.

From the two one-sided values on an interior face the UIP triplet follows:
transmissibility weights ``omega_i = tau_i/(tau_1+tau_2)``, primal penalty
``rho0 = tau_1 tau_2/(tau_1+tau_2)`` and flux penalty ``rho1 = 1/(tau_1+tau_2)``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigurationError
from .mesh import Mesh, Skeleton

ETA0 = 3  # faces per triangle
DEFAULT_ALPHA0 = 8.0
TAU_FORMS = ("trace", "diameter")


class DiffusionField:
    """Piecewise-constant symmetric positive definite tensor, one per subdomain id."""

    def __init__(self, tensors):
        self.tensors = {}
        for sub, K in dict(tensors).items():
            K = np.array(K, dtype=float).reshape(2, 2)
            if abs(K[0, 1] - K[1, 0]) > 1e-14 * max(1.0, np.abs(K).max()):
                raise ValueError(f"tensor of subdomain {sub} is not symmetric")
            K = 0.5 * (K + K.T)
            if np.linalg.eigvalsh(K).min() <= 0:
                raise ValueError(f"tensor of subdomain {sub} is not positive definite")
            K.setflags(write=False)
            self.tensors[int(sub)] = K

    @classmethod
    def isotropic(cls, values):
        return cls({s: v * np.eye(2) for s, v in dict(values).items()})

    def __call__(self, subdomains) -> np.ndarray:
        """Stack of tensors for an array of subdomain ids."""
        subs = np.asarray(subdomains)
        missing = set(np.unique(subs).tolist()) - set(self.tensors)
        if missing:
            raise KeyError(f"no diffusion tensor for subdomains {sorted(missing)}")
        keys = np.array(sorted(self.tensors))
        table = np.array([self.tensors[s] for s in keys])
        return table[np.searchsorted(keys, subs)]

    def contrast(self) -> float:
        eig = np.concatenate([np.linalg.eigvalsh(K) for K in self.tensors.values()])
        return float(eig.max() / eig.min())


def normal_diffusivity(kappa, n) -> float:
    """n^T kappa n for a unit vector n."""
    n = np.asarray(n, dtype=float)
    if abs(np.linalg.norm(n) - 1.0) > 1e-12:
        raise ValueError("normal must have unit length")
    return float(n @ np.asarray(kappa, dtype=float) @ n)


def trace_constant(k: int) -> float:
    return (k + 1) * (k + 2) / 2


def tau_value(kappa_n, face_length, area, diameter, k, alpha0, tau_form="trace"):
    """Vectorized one-sided stabilization."""
    if tau_form == "trace":
        scale = np.asarray(face_length) / np.asarray(area)
    elif tau_form == "diameter":
        scale = 1.0 / np.asarray(diameter)
    else:
        raise ConfigurationError(f"unknown tau form {tau_form!r}")
    return alpha0 * trace_constant(k) * np.asarray(kappa_n) * scale


def tau(mesh: Mesh, skeleton: Skeleton, diffusion: DiffusionField, element, face, k, alpha0, tau_form="trace"):
    """Stabilization of ``face`` seen from ``element``."""
    if element == skeleton.left[face]:
        n = skeleton.normals[face]
    elif element == skeleton.right[face]:
        n = -skeleton.normals[face]
    else:
        raise ValueError(f"face {face} is not incident to element {element}")
    K = diffusion.tensors[int(mesh.subdomains[element])]
    return float(
        tau_value(
            normal_diffusivity(K, n),
            skeleton.lengths[face],
            mesh.areas[element],
            mesh.diameters[element],
            k,
            alpha0,
            tau_form,
        )
    )


def check_penalty(alpha0, strict=True):
    """Validate alpha0 against the coercivity threshold alpha0 > 2*eta0."""
    if not alpha0 > 0:
        raise ConfigurationError(f"alpha0 must be positive, got {alpha0}")
    if alpha0 <= 2 * ETA0:
        msg = f"alpha0={alpha0} is below the coercivity threshold {2 * ETA0}"
        if strict:
            raise ConfigurationError(msg)
        warnings.warn(msg, stacklevel=3)


@dataclass(frozen=True)
class FaceCoefficients:
    """Per-face interface parameters of one scheme.

    Arrays are indexed by skeleton face.  On boundary faces ``tau2`` is NaN,
    ``omega = (1, 0)``, ``rho0 = tau1`` and ``rho1 = gamma_n = 0``.
    """

    scheme: str
    k: int
    alpha0: float
    tau_form: str
    tau1: np.ndarray
    tau2: np.ndarray
    omega1: np.ndarray
    omega2: np.ndarray
    rho0: np.ndarray
    rho1: np.ndarray
    gamma_n: np.ndarray
    boundary: np.ndarray

    def normalization(self) -> str:
        """Human-readable description of how the face parameters are built."""
        return {
            "UIP": "omega=tau_i/(tau1+tau2); rho0=tau1*tau2/(tau1+tau2); rho1=1/(tau1+tau2)",
            "SWIP": "omega=kappa_i/(kappa1+kappa2); rho0=alpha0*C_T^2*2k1k2/(k1+k2)*mean(|F|/|E|); no flux-jump term",
            "IPF": "tau_F=(tau1+tau2)/2; omega=1/2; rho0=tau_F/2; rho1=1/(2 tau_F)",
        }[self.scheme]


def one_sided(mesh: Mesh, skeleton: Skeleton, diffusion: DiffusionField, k, alpha0, tau_form="trace"):
    """Normal diffusivities and stabilizations on both sides of each face."""
    sk = skeleton
    n = sk.normals
    interior = sk.right >= 0
    KL = diffusion(mesh.subdomains[sk.left])
    kapL = np.einsum("fi,fij,fj->f", n, KL, n)
    tauL = tau_value(kapL, sk.lengths, mesh.areas[sk.left], mesh.diameters[sk.left], k, alpha0, tau_form)
    kapR = np.full(sk.n_faces, np.nan)
    tauR = np.full(sk.n_faces, np.nan)
    r = sk.right[interior]
    KR = diffusion(mesh.subdomains[r])
    kapR[interior] = np.einsum("fi,fij,fj->f", n[interior], KR, n[interior])
    tauR[interior] = tau_value(
        kapR[interior], sk.lengths[interior], mesh.areas[r], mesh.diameters[r], k, alpha0, tau_form
    )
    return kapL, kapR, tauL, tauR


def face_coefficients(
    mesh: Mesh,
    skeleton: Skeleton,
    diffusion: DiffusionField,
    k: int,
    alpha0: float = DEFAULT_ALPHA0,
    scheme: str = "UIP",
    tau_form: str = "trace",
    strict: bool = True,
) -> FaceCoefficients:
    """Face table for ``scheme`` in {"UIP", "SWIP", "IPF"}."""
    check_penalty(alpha0, strict)
    kapL, kapR, t1, t2 = one_sided(mesh, skeleton, diffusion, k, alpha0, tau_form)
    bnd = skeleton.right < 0
    i = ~bnd
    nf = skeleton.n_faces
    w1, w2 = np.ones(nf), np.zeros(nf)
    rho0, rho1 = t1.copy(), np.zeros(nf)

    if scheme == "UIP":
        s = t1[i] + t2[i]
        w1[i], w2[i] = t1[i] / s, t2[i] / s
        rho0[i] = t1[i] * t2[i] / s
        rho1[i] = 1.0 / s
    elif scheme == "IPF":
        tf = 0.5 * (t1[i] + t2[i])
        w1[i] = w2[i] = 0.5
        rho0[i] = 0.5 * tf
        rho1[i] = 0.5 / tf
    elif scheme == "SWIP":
        k1, k2 = kapL[i], kapR[i]
        w1[i], w2[i] = k1 / (k1 + k2), k2 / (k1 + k2)
        if tau_form == "trace":
            geo = 0.5 * (
                skeleton.lengths[i] / mesh.areas[skeleton.left[i]]
                + skeleton.lengths[i] / mesh.areas[skeleton.right[i]]
            )
        else:
            geo = 0.5 * (1 / mesh.diameters[skeleton.left[i]] + 1 / mesh.diameters[skeleton.right[i]])
        rho0[i] = alpha0 * trace_constant(k) * 2 * k1 * k2 / (k1 + k2) * geo
    else:
        raise ConfigurationError(f"unknown scheme {scheme!r}")

    gamma = np.where(bnd, 0.0, 0.5 * (w1 - w2))
    arrays = [t1, t2, w1, w2, rho0, rho1, gamma, bnd]
    for a in arrays:
        a.setflags(write=False)
    return FaceCoefficients(scheme, k, float(alpha0), tau_form, *arrays)


def triplet(tau1, tau2):
    """(omega1, omega2, rho0, rho1, gamma_n) from two one-sided stabilizations."""
    tau1, tau2 = np.asarray(tau1, float), np.asarray(tau2, float)
    s = tau1 + tau2
    w1, w2 = tau1 / s, tau2 / s
    return w1, w2, tau1 * tau2 / s, 1.0 / s, 0.5 * (w1 - w2)
