"""The exponent lattice, the cascade index sets and the explicit weight schedule.

Run: python demos/01_exponents_and_schedule.py
"""

from tfelab.exponents import BETA, check_conditions, index_sets, lattice, p_eval, schedule

print(f"beta = {BETA:.6f},  p(beta) = {p_eval(BETA):.1e}")

# Exponents n1 + beta n2 below N0 that can appear in the expansion at x = 0.
for N0 in (1, 2, 3):
    entries = lattice(N0).entries
    print(f"K_{N0} ({len(entries)}): " + ", ".join(f"{e.label()}={e.value:.4f}" for e in entries))

# I_n collects the exponents that enter first at cascade level n.
for n in (1, 2, 3):
    fam = index_sets(n)
    print(f"I_{n} = {{{', '.join(e.label() for e in fam.I_n)}}}")

# The schedule fixes the number of spatial derivatives per weight.  At N0 = 1 and 2
# every inequality holds; from N0 = 3 one nonlinear inequality is missed by one.
for N0 in (1, 2, 3):
    sched = schedule(N0)
    rep = check_conditions(sched)
    failing = [r.name for r in rep.results if not r.passed]
    print(f"N0={N0}: k={sched.k}, delta={sched.delta:g}, all conditions hold: {rep.passed}"
          + (f" (failing: {', '.join(failing)})" if failing else ""))
