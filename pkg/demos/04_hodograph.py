"""From film height to hodograph variable and back, and the contact-line expansion.

Run: python demos/04_hodograph.py
"""

import numpy as np

from tfelab.exponents import lattice
from tfelab.hodograph import contact_line, from_hodograph, to_hodograph, transport_expansion
from tfelab.loggrid import Cutoff, LogGrid, extract_expansion, synthesize

g = LogGrid()
rng = np.random.default_rng(4)
coeffs = {e: rng.uniform(-0.05, 0.05) for e in lattice(2).entries}
u = synthesize(coeffs, Cutoff(0.5, 2.0), g)

profile = from_hodograph(u, Z0=0.0, N0=2)
back = to_hodograph(profile, g)
print(f"round trip h -> u: max deviation {np.max(np.abs(back.values - u.values)):.1e}")

T = transport_expansion(extract_expansion(u, 2))
print(f"x = {T.meta['leading_scale']:.6f} x~ (1 + ...), with corrections")
for e, c in sorted(T.inverse.terms.items()):
    print(f"  c_{e.label():<8} {c:+.5e}")
print("velocity expansion in x~ (the x^beta term cancels):")
for e, c in sorted(T.v_tilde.terms.items()):
    print(f"  V~_{e.label():<7} {c:+.5e}")

Z0, V0 = contact_line(np.full(5, T.u0), np.linspace(0.0, 1.0, 5))
print(f"contact-line speed {V0[0]:.6f}, position at t=1: {Z0[-1]:.6f}")
