"""Kellogg's interface problem: a singular solution at a four-material junction.

kappa = 5 in the lower-left and upper-right quadrants of (-1,1)^2 and 1
elsewhere.  The exact solution behaves like r^alpha with alpha ~ 0.5354, so
no method can beat an energy rate of about alpha on uniform meshes.

The tabulated angular coefficients must be matched to the four quadrants.
The benchmark tries every cyclic assignment and keeps the only one that makes
u and the normal flux continuous across the interfaces.
"""
import uipdg
from uipdg.bench import kellogg_quadrant_assignment
from uipdg.study import convergence_study

assignment = kellogg_quadrant_assignment()
print("candidate assignments (value / flux mismatch on the interface rays):")
for shift, dv, df in assignment.defects:
    mark = "  <- selected" if shift == assignment.shift else ""
    print(f"  shift {shift}: {dv:.2e} / {df:.2e}{mark}")

case = uipdg.kellogg(assignment)
specs = [uipdg.SchemeSpec("UIP", 1, 8.0, 1), uipdg.SchemeSpec("SWIP", 1, 8.0, 1)]
rows = convergence_study(case, specs, n0=8, levels=3)

print(f"\n{'scheme':>6} {'h':>9} {'L2 error':>10} {'energy':>10} {'ECR':>5}")
for row in rows:
    print(f"{row['scheme']:>6} {row['h']:9.3e} {row['err_l2']:10.3e} {row['err_energy']:10.3e} {row['ecr_energy']:5.2f}")

suip = [r for r in rows if r["scheme"] == "SUIP"][-1]
swip = [r for r in rows if r["scheme"] == "SWIP"][-1]
print(f"\nfinest mesh: SUIP L2 error is {100 * (1 - suip['err_l2'] / swip['err_l2']):.0f}% below SWIP")
