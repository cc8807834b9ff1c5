"""Picard iteration for the nonlinear problem and the decay of the expansion.

A small bump perturbs the travelling wave.  The iteration contracts, the
a-priori ratio stays put across amplitudes, and the coefficient of x^beta
decays at least like t^-beta.  Takes about a minute.

Run: python demos/03_picard_and_decay.py
"""

from tfelab.exponents import BETA
from tfelab.loggrid import LogGrid
from tfelab.nonlinear_solver import PicardConfig, apriori_check, bump, decay_report, picard_solve

g = LogGrid()
for eps in (1e-4, 1e-3, 1e-2):
    u0 = bump(g, eps)
    res = picard_solve(u0, PicardConfig(grid=g))
    _, _, ratio = apriori_check(res.trajectory, u0)
    hist = ", ".join(f"{h:.1e}" for h in res.history)
    print(f"eps={eps:g}: {res.iterations} iterations [{hist}], a-priori ratio {ratio:.3f}")
    if eps == 1e-3:
        rep = decay_report(res.trajectory, 1, window=(1.0, 10.0))

print(f"slope of |u_beta(t)| on [1, 10]: {rep.slope(0, 1):.3f} (theory: eventually below {-BETA:.3f})")
print(f"slope of the remainder: {rep.remainder_slope:.3f} (target {rep.remainder_target:g})")
