"""The linear problem x u_t + p(D) u = f on a logarithmic grid.

Shows the manufactured-solution convergence study, the coercivity ratios that
single out the admissible weights, and the cascade residuals.

Run: python demos/02_linear_solver.py
"""

from tfelab.exponents import p_poly
from tfelab.linear_solver import cascade_study, coercivity_check, mms_convergence
from tfelab.loggrid import LogGrid

conv = mms_convergence(theta=0.5)
print("Crank-Nicolson, rational manufactured solution")
for row in conv["levels"]:
    print(f"  count={row['count']:5d} dt={row['dt']:.4f} error={row['error']:.3e}")
print("  observed orders:", ", ".join(f"{o:.2f}" for o in conv["orders"]))

# Coercivity holds for weights inside the admissible interval and fails outside.
g = LogGrid(-12.0, 6.0, 512)
for alpha in (-0.85, -0.5, -0.1, 0.5):
    rep = coercivity_check(p_poly(), alpha, trials=30, grid=g)
    print(f"  alpha={alpha:+.2f}: min ratio {rep.min_ratio:+.3f} (in range: {rep.in_range})")

study = cascade_study()
for level in study["levels"]:
    res = ", ".join(f"({k}) {v:.1e}" for k, v in level["residuals"].items())
    print(f"  cascade residuals at count={level['count']}: {res}")
print("  decreasing under refinement:", all(study["decreasing"].values()))
print(f"  largest residual: {max(study['levels'][-1]['residuals'].values()):.1e}")
