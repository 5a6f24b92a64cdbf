"""Reference triangle: orthonormal modal basis, quadrature, affine maps.

The reference triangle has vertices (0,0), (1,0), (0,1) and area 1/2.  The
basis is the Dubiner (collapsed-coordinate Jacobi) basis, orthonormal under
the reference inner product, so the mass matrix on a physical element E is
``2|E| * I``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import polynomial as P
from scipy import special

MAX_DEGREE = 4
MAX_QUAD_DEGREE = 20


def n_basis(k: int) -> int:
    """Dimension of P_k on a triangle."""
    return (k + 1) * (k + 2) // 2


def _check_degree(k):
    if not (isinstance(k, (int, np.integer)) and 1 <= k <= MAX_DEGREE):
        raise ValueError(f"unsupported polynomial degree {k!r}; expected 1..{MAX_DEGREE}")


# -- quadrature ---------------------------------------------------------------


@dataclass(frozen=True)
class QuadratureRule:
    """Points and positive weights; ``points`` is (n, 2) on triangles, (n,) on edges."""

    kind: str
    points: np.ndarray
    weights: np.ndarray
    degree: int

    @property
    def size(self) -> int:
        return len(self.weights)


@lru_cache(maxsize=None)
def quadrature(kind: str, degree: int) -> QuadratureRule:
    """Quadrature rule exact for polynomials of total degree ``degree``.

    ``kind`` is ``"triangle"`` (reference triangle, weights sum to 1/2) or
    ``"edge"`` (unit interval [0, 1], weights sum to 1).  Triangle rules are
    collapsed Gauss rules (Gauss-Legendre x Gauss-Jacobi(1, 0)); the
    one-point rule is the centroid rule.
    """
    if degree < 0 or degree > MAX_QUAD_DEGREE:
        raise ValueError(f"no quadrature of degree {degree}; tables stop at {MAX_QUAD_DEGREE}")
    n = degree // 2 + 1
    xg, wg = special.roots_legendre(n)
    s = 0.5 * (xg + 1.0)
    ws = 0.5 * wg
    if kind == "edge":
        pts, wts = s, ws
    elif kind == "triangle":
        xj, wj = special.roots_jacobi(n, 1.0, 0.0)
        eta = 0.5 * (xj + 1.0)
        wj = 0.25 * wj
        xi = np.outer(1.0 - eta, s)  # (n_eta, n_s)
        et = np.repeat(eta[:, None], n, axis=1)
        pts = np.column_stack([xi.ravel(), et.ravel()])
        wts = np.outer(wj, ws).ravel()
    else:
        raise ValueError(f"unknown quadrature domain {kind!r}")
    for a in (pts, wts):
        a.setflags(write=False)
    return QuadratureRule(kind, pts, wts, 2 * n - 1)


# -- basis --------------------------------------------------------------------


def _mul2d(a, b):
    out = np.zeros((a.shape[0] + b.shape[0] - 1, a.shape[1] + b.shape[1] - 1))
    for i, j in zip(*np.nonzero(a)):
        out[i : i + b.shape[0], j : j + b.shape[1]] += a[i, j] * b
    return out


def _pad(c, size):
    out = np.zeros((size, size))
    out[: c.shape[0], : c.shape[1]] = c[:size, :size]
    return out


@lru_cache(maxsize=None)
def basis_coefficients(k: int) -> np.ndarray:
    """Monomial coefficients of the orthonormal basis.

    Returns an array ``C`` of shape (N_k, k+1, k+1) where ``C[m, i, j]`` is the
    coefficient of xi**i * eta**j in the m-th basis function.  Functions are
    ordered hierarchically by total degree.
    """
    _check_degree(k)
    size = k + 1
    # scaled Legendre Q_p(xi, eta) = (1-eta)^p P_p((2 xi - 1 + eta)/(1 - eta))
    s = np.array([[-1.0, 1.0], [2.0, 0.0]])
    t2 = np.array([[1.0, -2.0, 1.0]])
    Q = [np.ones((1, 1)), s]
    for p in range(1, k):
        Q.append(((2 * p + 1) * _pad(_mul2d(s, Q[p]), p + 2) - p * _pad(_mul2d(t2, Q[p - 1]), p + 2)) / (p + 1))
    eta_map = np.poly1d([2.0, -1.0])
    funcs = []
    for d in range(k + 1):
        for q in range(d + 1):
            p = d - q
            jac = special.jacobi(q, 2 * p + 1, 0.0)(eta_map)
            jac_c = jac.coeffs[::-1][None, :]  # increasing powers of eta
            funcs.append(_pad(_mul2d(Q[p], jac_c), size))
    C = np.array(funcs)
    rule = quadrature("triangle", 2 * k)
    vals = np.array([P.polyval2d(rule.points[:, 0], rule.points[:, 1], c) for c in C])
    norms = np.sqrt(vals**2 @ rule.weights)
    C /= norms[:, None, None]
    C.setflags(write=False)
    return C


def basis_eval(k: int, points) -> tuple[np.ndarray, np.ndarray]:
    """Values (N_k, P) and reference gradients (N_k, P, 2) at ``points`` (P, 2)."""
    C = basis_coefficients(k)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    x, y = pts[:, 0], pts[:, 1]
    vals = np.array([P.polyval2d(x, y, c) for c in C])
    dx = np.array([P.polyval2d(x, y, P.polyder(c, axis=0)) for c in C])
    dy = np.array([P.polyval2d(x, y, P.polyder(c, axis=1)) for c in C])
    return vals, np.stack([dx, dy], axis=-1)


def edge_basis_eval(k: int, s) -> np.ndarray:
    """Orthonormal Legendre basis of P_k on [0, 1]; returns (k+1,) + s.shape."""
    s = np.asarray(s, dtype=float)
    scale = np.sqrt(2 * np.arange(k + 1) + 1.0)
    return np.moveaxis(np.polynomial.legendre.legvander(2 * s - 1, k) * scale, -1, 0)


# -- affine map -----------------------------------------------------------------


@dataclass(frozen=True)
class PhysMap:
    points: np.ndarray
    jacobian: np.ndarray
    detj: float
    inv_jac_t: np.ndarray

    def grad(self, ref_grads):
        """Map reference gradients (..., 2) to physical ones."""
        return ref_grads @ self.inv_jac_t.T


def phys_map(verts, ref_points) -> PhysMap:
    """Affine map x = v0 + J xi of the reference triangle onto ``verts``."""
    v = np.asarray(verts, dtype=float)
    J = np.column_stack([v[1] - v[0], v[2] - v[0]])
    det = float(np.linalg.det(J))
    scale = max(np.abs(J).max(), 1e-300)
    if abs(det) <= 1e-14 * scale**2:
        raise ValueError("degenerate triangle")
    ref = np.atleast_2d(np.asarray(ref_points, dtype=float))
    pts = v[0] + ref @ J.T
    return PhysMap(pts, J, abs(det), np.linalg.inv(J).T)
