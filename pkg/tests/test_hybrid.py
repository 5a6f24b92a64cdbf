import dataclasses

import numpy as np
import pytest

from conftest import polynomial_case
from uipdg.bench import test1
from uipdg.coeffs import DiffusionField, face_coefficients
from uipdg.errors import compute_errors, l2_project
from uipdg.exceptions import BoundaryConditionError
from uipdg.forms import BoundaryData, SchemeSpec, assemble
from uipdg.hybrid import (
    assemble_hip,
    dirichlet_moments,
    local_residual,
    one_sided_fluxes,
    reconstruct_traces,
    solve_hip,
)
from uipdg.linalg import solve
from uipdg.mesh import Mesh, generate_structured
from uipdg.space import DGFunction, DGSpace, SkeletonFunction


def _setup(n=4, k=2, lam=1e4, partition="quadrant"):
    case = test1(lam)
    space = DGSpace(generate_structured(n, case.domain, partition=partition), k)
    coeffs = face_coefficients(space.mesh, space.skeleton, case.diffusion, k)
    return case, space, coeffs


def test_two_triangle_system_size():
    field = DiffusionField.isotropic({0: 1.0})
    space = DGSpace(generate_structured(1), 1)
    coeffs = face_coefficients(space.mesh, space.skeleton, field, 1)
    cs = assemble_hip(space, field, coeffs, 1)
    assert cs.matrix.shape == (2, 2)
    u, uhat, _, _ = solve_hip(space, field, coeffs, 1)
    assert np.abs(u.coeffs).max() == 0.0 and np.abs(uhat.coeffs).max() == 0.0


@pytest.mark.parametrize("eps", [1, 0, -1])
@pytest.mark.parametrize("k", [1, 2])
def test_patch_test(eps, k):
    value, gradient, source, field = polynomial_case(k)
    space = DGSpace(generate_structured(4), k)
    coeffs = face_coefficients(space.mesh, space.skeleton, field, k)
    u, uhat, cs, _ = solve_hip(space, field, coeffs, eps, source, BoundaryData(g_D=value), tol=1e-13)
    assert compute_errors(u, value, gradient, coeffs, field).err_energy <= 1e-10
    assert local_residual(cs, u, uhat) <= 1e-11


@pytest.mark.parametrize("eps", [1, 0, -1])
def test_equivalence_with_primal(eps):
    case, space, coeffs = _setup(n=8, k=2)
    bc = BoundaryData(g_D=case.dirichlet)
    sys_ = assemble(space, case.diffusion, SchemeSpec("UIP", eps, 8.0, 2), case.source, bc, coeffs=coeffs)
    x, _ = solve(sys_.matrix, sys_.rhs)
    u, uhat, cs, _ = solve_hip(space, case.diffusion, coeffs, eps, case.source, bc)
    # both solves sit at the floating-point floor (cond ~ 1e7 at lam = 1e4)
    assert np.abs(u.coeffs - x).max() <= 1e-8 * np.abs(x).max()
    assert local_residual(cs, u, uhat) <= 1e-11

    rec, _ = reconstruct_traces(DGFunction(space, x), coeffs, case.diffusion, case.dirichlet)
    assert np.abs(rec.coeffs - uhat.coeffs).max() <= 1e-8 * np.abs(uhat.coeffs).max()

    left, right = one_sided_fluxes(u, uhat, coeffs, case.diffusion)
    i = space.skeleton.interior
    assert np.abs(left[i] + right[i]).max() <= 1e-8 * np.abs(left[i]).max()


def test_reconstruction_of_continuous_function():
    space = DGSpace(generate_structured(4), 2)
    field = DiffusionField({0: [[2.0, 0.5], [0.5, 1.0]]})
    coeffs = face_coefficients(space.mesh, space.skeleton, field, 2)
    u = l2_project(space, lambda x, y, s: 1 + x * x - 2 * x * y)  # exactly in P_2
    uhat, sigma_n = reconstruct_traces(u, coeffs, field)
    sk = space.skeleton
    i = sk.interior
    exact = SkeletonFunction.from_face_values(space, u.face_values()[0])
    assert np.abs(uhat.coeffs[i] - exact.coeffs[i]).max() <= 1e-12

    y = space.faces.points
    grad = np.stack([2 * y[..., 0] - 2 * y[..., 1], -2 * y[..., 0]], axis=-1)
    K = field.tensors[0]
    flux = -np.einsum("fqi,ij,fj->fq", grad, K, sk.normals)
    assert np.abs(sigma_n[i] - flux[i]).max() <= 1e-10 * np.abs(flux[i]).max()


def test_reconstruction_of_piecewise_constants():
    field = DiffusionField.isotropic({0: 1.0})
    space = DGSpace(generate_structured(1), 1)
    coeffs = face_coefficients(space.mesh, space.skeleton, field, 1)
    coeffs = dataclasses.replace(coeffs, rho0=np.full_like(coeffs.rho0, 1.5))
    sk = space.skeleton
    (f,) = sk.interior
    u = DGFunction(space, np.zeros(space.ndofs))
    u.blocks[sk.right[f], 0] = 1.0 / np.sqrt(2.0)  # phi_0 = sqrt(2)
    u = DGFunction(space, u.coeffs)
    uL, _, uR, _ = u.face_values()
    assert np.allclose(uL[f], 0.0) and np.allclose(uR[f], 1.0)
    _, sigma_n = reconstruct_traces(u, coeffs, field)
    assert np.allclose(sigma_n[f], -1.5)


def test_condensed_matrix_symmetric():
    case, space, coeffs = _setup(n=4, k=2)
    A = assemble_hip(space, case.diffusion, coeffs, 1, case.source).matrix
    assert abs(A - A.T).max() <= 1e-12 * abs(A).max()


def test_neumann_rejected():
    mesh = generate_structured(2)
    mesh = Mesh(mesh.vertices, mesh.triangles, mesh.subdomains, mesh.bbox, boundary_markers={(0, 1): "N"})
    field = DiffusionField.isotropic({0: 1.0})
    space = DGSpace(mesh, 1)
    coeffs = face_coefficients(mesh, space.skeleton, field, 1)
    with pytest.raises(BoundaryConditionError):
        assemble_hip(space, field, coeffs, 1)


def test_dirichlet_moments_exact_for_polynomials():
    space = DGSpace(generate_structured(3), 2)
    g = lambda x, y, s: x * x + 3 * y - 1  # noqa: E731
    lam = dirichlet_moments(space, g)
    sk = space.skeleton
    D = sk.dirichlet
    vals = SkeletonFunction(space, lam).at_face_points()
    y = space.faces.points
    assert np.abs(vals[D] - g(y[D][..., 0], y[D][..., 1], 0)).max() <= 1e-12
    assert np.all(lam[sk.interior] == 0.0)
