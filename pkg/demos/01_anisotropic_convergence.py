"""Convergence on a smooth problem with strongly anisotropic, discontinuous diffusion.

The exact solution is u = sin(pi x) sin(pi y) on the unit square.  The
diffusion tensor is diag(lam, 1) in the lower-left and upper-right quadrants
and diag(1, 1/lam) in the other two, so for large lam the normal diffusivity
jumps by a factor lam across every interface.

We solve with the symmetric, incomplete and non-symmetric UIP variants and
print the errors and observed convergence rates (ECR) on four nested meshes.
Expected: energy rates near k, L2 rates above k for the symmetric variant.
"""
import uipdg
from uipdg.study import convergence_study

LAM = 1e4
N0, LEVELS = 4, 4

case = uipdg.test1(LAM)
specs = [uipdg.SchemeSpec("UIP", eps, alpha0=8.0, k=k) for k in (1, 2) for eps in (1, 0, -1)]

print(f"Test 1, lambda = {LAM:g}, meshes n = {N0} .. {N0 * 2 ** (LEVELS - 1)}\n")
print(f"{'scheme':>6} {'k':>2} {'h':>9} {'dofs':>6} {'L2 error':>10} {'ECR':>5} {'energy':>10} {'ECR':>5}")
for row in convergence_study(case, specs, n0=N0, levels=LEVELS):
    print(
        f"{row['scheme']:>6} {row['k']:>2} {row['h']:9.3e} {row['dofs']:6d} "
        f"{row['err_l2']:10.3e} {row['ecr_l2']:5.2f} {row['err_energy']:10.3e} {row['ecr_energy']:5.2f}"
    )

# The interface weights adapt to the contrast: on a face with tau1 >> tau2 the
# weighted average leans on the side with the larger penalty.
mesh = uipdg.generate_structured(4, partition="quadrant")
space = uipdg.DGSpace(mesh, 1)
coeffs = uipdg.face_coefficients(mesh, space.skeleton, case.diffusion, 1)
i = space.skeleton.interior
print(f"\nomega_1 on interior faces ranges over [{coeffs.omega1[i].min():.2e}, {coeffs.omega1[i].max():.6f}]")
