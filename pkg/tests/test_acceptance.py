"""End-to-end acceptance criteria, one test per criterion.

Every test records a ``PASS``/``FAIL`` line (criterion number, measured
values, runtime); the lines are printed in the terminal summary.
"""

import time

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.optimize import brentq

from tfelab.exponents import (
    BETA,
    AdmissibleExponent,
    QBeta,
    check_conditions,
    default_delta,
    index_sets,
    lattice,
    p_eval,
    p_poly,
    schedule,
)
from tfelab.hodograph import contact_line, from_hodograph, to_hodograph, transport_expansion
from tfelab.linear_solver import cascade_study, coercivity_check, mms_convergence, random_bumps
from tfelab.loggrid import Cutoff, GridFunction, LogGrid, extract_expansion, sup_norm, synthesize
from tfelab.nonlinear_solver import PicardConfig, apriori_check, decay_report, picard_solve
from tfelab.operators import m_sym_apply, nonlinearity, pD_apply, pD_slot_sum, velocity_tilde

RESULTS = []


class Criterion:
    def __init__(self, number: int, budget: float):
        self.number = number
        self.budget = budget
        self.items = []
        self.ok = True

    def __enter__(self):
        self._t0 = time.perf_counter()
        return self

    def record(self, label: str, passed: bool, detail: str = ""):
        self.items.append(f"{label}{' ' + detail if detail else ''}{'' if passed else ' [x]'}")
        self.ok &= bool(passed)

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self._t0
        timely = elapsed < self.budget
        ok = self.ok and timely and exc_type is None
        line = (f"{'PASS' if ok else 'FAIL'} criterion {self.number}: " + "; ".join(self.items)
                + f" ({elapsed:.1f} s of {self.budget:g} s)")
        RESULTS.append(line)
        print(line)
        if exc_type is None:
            assert timely, line
            assert self.ok, line
        return False


def test_criterion_01_exact_identities():
    with Criterion(1, 1.0) as c:
        roots = [0.0, BETA, -1.5, -BETA - 0.5]
        worst = max(abs(p_eval(r)) for r in roots)
        c.record("roots of p", worst <= 1e-12, f"max|p|={worst:.1e}")
        g = LogGrid()
        ms = sup_norm(m_sym_apply(1, 1, 1, 1, 1, grid=g))
        c.record("M_sym(1..1)=0", ms <= 1e-12, f"{ms:.1e}")
        vt = velocity_tilde(1, 1, 1, grid=g).values
        c.record("M~(1,1,1)=-3/8", bool(np.all(vt == -0.375)))


def test_criterion_02_slot_sum_equivalence():
    with Criterion(2, 10.0) as c:
        g = LogGrid()
        rng = np.random.default_rng(2)
        worst = 0.0
        for _ in range(100):
            u = GridFunction(g, random_bumps(g, rng))
            a, b = pD_apply(u).values, pD_slot_sum(u).values
            worst = max(worst, float(np.max(np.abs(a - b)) / np.max(np.abs(a))))
        c.record("pD paths", worst <= 1e-9, f"max rel dev={worst:.1e}")


def _schedule_passes(N0):
    rep = check_conditions(schedule(N0))
    bad = [r.name for r in rep.results if not r.passed]
    return rep.passed, bad


def test_criterion_03_combinatorics():
    with Criterion(3, 5.0) as c:
        I2 = {e.q for e in index_sets(2).I_n}
        c.record("I_2={2b,3b}", I2 == {QBeta(0, 2), QBeta(0, 3)})
        for N0 in (1, 2):
            ok, bad = _schedule_passes(N0)
            c.record(f"conditions N0={N0}", ok, ",".join(bad))
        c.record("k=3 at N0=1", schedule(1).k == 3)


@pytest.mark.xfail(strict=True, reason="the explicit schedule misses one nonlinear inequality by one at N0>=3")
@pytest.mark.parametrize("N0", [3, 4])
def test_criterion_03_combinatorics_high_order(N0):
    with Criterion(3, 5.0) as c:
        ok, bad = _schedule_passes(N0)
        c.record(f"conditions N0={N0}", ok, ",".join(bad))


def test_criterion_04_travelling_wave_stationary():
    with Criterion(4, 60.0) as c:
        g = LogGrid()
        res = picard_solve(g.zeros(), PicardConfig(grid=g, t_end=1.0))
        sup = res.trajectory.max_sup()
        c.record("max sup u", sup <= 1e-10, f"{sup:.1e}")


def test_criterion_05_mms_convergence():
    with Criterion(5, 300.0) as c:
        conv = mms_convergence(levels=3, theta=0.5)
        c.record("order", conv["min_order"] >= 1.8, "orders=" + ",".join(f"{o:.2f}" for o in conv["orders"]))


def test_criterion_06_coercivity():
    with Criterion(6, 120.0) as c:
        g = LogGrid(-12.0, 6.0, 512)
        d = default_delta(1)
        cases = [(p_poly(), -0.5, "p"), (p_poly(), -0.9 + d, "p"),
                 (p_poly(1), 0.5 - d, "p(.-1)"), (p_poly(1), 0.5 + d, "p(.-1)")]
        for P, alpha, name in cases:
            rep = coercivity_check(P, alpha, trials=50, grid=g)
            c.record(f"{name} a={alpha:g}", rep.in_range and rep.passed,
                     f"ratio={rep.min_ratio:.3f}/{rep.min_ratio_refined:.3f}")


def test_criterion_07_cascade_residual():
    with Criterion(7, 300.0) as c:
        study = cascade_study()
        finest = study["levels"][-1]["residuals"]
        for key in ("1,0", "2,0", "1,1"):
            ok = finest[key] <= 1e-3 and study["decreasing"][key]
            c.record(f"(n,m)=({key})", ok, f"{finest[key]:.1e}")


def test_criterion_08_nonlinearity_order():
    with Criterion(8, 60.0) as c:
        g = LogGrid()
        rng = np.random.default_rng(8)
        worst = 0.0
        for _ in range(10):
            u = GridFunction(g, random_bumps(g, rng))
            r = [sup_norm(nonlinearity(e * u)) / e**2 for e in (1e-2, 1e-3, 1e-4)]
            worst = max(worst, max(r) / min(r) - 1)
        c.record("quadratic scaling", worst < 0.1, f"max spread={worst:.3f}")


def test_criterion_09_picard_contraction(picard_runs):
    with Criterion(9, 600.0) as c:
        ratios = []
        for eps in (1e-4, 1e-3, 1e-2):
            u0, res = picard_runs.get(eps)
            ratios.append(apriori_check(res.trajectory, u0)[2])
            if eps == 1e-3:
                h = res.history
                geometric = all(h[i + 1] < 0.1 * h[i] for i in range(min(2, len(h) - 1)))
                c.record("eps=1e-3", res.converged and res.iterations <= 6 and geometric,
                         f"iterations={res.iterations}")
        spread = max(ratios) / min(ratios)
        c.record("a-priori ratio", spread < 1.25,
                 "ratios=" + ",".join(f"{r:.2f}" for r in ratios))


def test_criterion_10_decay(picard_runs):
    with Criterion(10, 600.0) as c:
        _, res = picard_runs.get(1e-3)
        rep = decay_report(res.trajectory, 1, window=(1.0, 10.0))
        sb = rep.slope(0, 1)
        c.record("slope u_beta", sb <= -BETA + 0.2, f"{sb:.3f}")
        c.record("remainder slope", rep.remainder_slope <= -1 + 0.3, f"{rep.remainder_slope:.3f}")


def test_criterion_11_hodograph():
    with Criterion(11, 60.0) as c:
        g = LogGrid()
        rng = np.random.default_rng(11)
        worst = 0.0
        for _ in range(10):
            u = GridFunction(g, 0.05 * random_bumps(g, rng))
            worst = max(worst, float(np.max(np.abs(to_hodograph(from_hodograph(u), g).values - u.values))))
        c.record("round trip", worst <= 1e-6, f"{worst:.1e}")
        a = 0.1
        T = transport_expansion({AdmissibleExponent(0, 1): a}, N0=2)

        def x_tilde(x):
            return quad(lambda y: 1 / (1 + a * y**BETA), 0, x, epsabs=0, epsrel=1e-13, limit=200)[0]

        dev = 0.0
        for X in (1e-5, 1e-4, 1e-3):
            x = brentq(lambda x: x_tilde(x) - X, 0.5 * X, 2 * X, xtol=1e-20, rtol=1e-15)
            dev = max(dev, abs(X * (1 + T.inverse(X)) - x) / X)
        c.record("transport vs quadrature inversion", dev <= 1e-6, f"{dev:.1e}")
        coeffs = {e: rng.uniform(-0.05, 0.05) for e in lattice(2).entries}
        u = synthesize(coeffs, Cutoff(0.5, 2.0), g)
        T = transport_expansion(extract_expansion(u, 2))
        prof = from_hodograph(u, N0=2)
        x, xt = prof.h ** (2 / 3), prof.z - prof.Z0
        m = (x > 1e-5) & (x < 1e-3)
        dev = float(np.max(np.abs((1 + T.u0) * xt[m] * (1 + T.inverse(xt[m])) - x[m]) / x[m]))
        c.record("transport vs sampled profile", dev <= 1e-6, f"{dev:.1e}")
        _, V0 = contact_line(np.zeros(3), np.arange(3.0))
        c.record("V0=3/8", bool(np.all(V0 == 0.375)))
