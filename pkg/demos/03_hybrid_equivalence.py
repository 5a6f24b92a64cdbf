"""The UIP-DG solution is the element part of a hybridized interior penalty solution.

The hybrid method carries an extra single-valued trace uhat on the mesh
faces.  Eliminating the element unknowns (static condensation) leaves a small
system on the faces; eliminating uhat instead yields the UIP-DG form.  Both
routes must give the same broken solution up to roundoff.

We also rebuild uhat and the numerical flux from the primal solution and
check that the flux is single-valued on every interior face.
"""
import numpy as np

import uipdg
from uipdg.hybrid import one_sided_fluxes, reconstruct_traces, solve_hip

case = uipdg.test1(1e4)
mesh = uipdg.generate_structured(8, partition="quadrant")
bc = uipdg.BoundaryData(g_D=case.dirichlet)

for k in (1, 2):
    space = uipdg.DGSpace(mesh, k)
    coeffs = uipdg.face_coefficients(mesh, space.skeleton, case.diffusion, k)
    for eps in (1, 0, -1):
        system = uipdg.assemble(space, case.diffusion, uipdg.SchemeSpec("UIP", eps, 8.0, k), case.source, bc, coeffs=coeffs)
        x, _ = uipdg.solve(system.matrix, system.rhs)
        u_hip, uhat, cs, _ = solve_hip(space, case.diffusion, coeffs, eps, case.source, bc)
        diff = np.abs(u_hip.coeffs - x).max() / np.abs(x).max()

        u = uipdg.DGFunction(space, x)
        rec, _ = reconstruct_traces(u, coeffs, case.diffusion, case.dirichlet)
        left, right = one_sided_fluxes(u, rec, coeffs, case.diffusion)
        i = space.skeleton.interior
        jump = np.abs(left[i] + right[i]).max() / np.abs(left[i]).max()
        print(
            f"k={k} eps={eps:+d}: {space.ndofs} element dofs vs {cs.matrix.shape[0]} trace dofs, "
            f"max|u_HIP - u_UIP|/max|u| = {diff:.1e}, flux jump = {jump:.1e}"
        )
