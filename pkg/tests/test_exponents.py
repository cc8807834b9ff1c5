import json
import math
from fractions import Fraction

import numpy as np
import pytest
import sympy as sym
from hypothesis import given, strategies as st

from tfelab import exponents as ex
from tfelab.exponents import BETA, AdmissibleExponent as AE, QBeta

SYM_BETA = (sym.sqrt(13) - 1) / 4
Z = sym.Symbol("z")


def _sym_value(e: AE):
    return e.n1 + e.n2 * SYM_BETA


def _sym_q(n: int):
    """Independent sympy construction of q_n from the commutator recursion."""
    if n == 1:
        return sym.Integer(0)
    I_n = [_sym_value(e) for e in ex.index_sets(n).I_n]
    I_prev = {(e.n1, e.n2) for e in ex.index_sets(n - 1).I_n}
    qt = sym.prod([Z - i for i in I_n]) - sym.prod([Z - i + 1 for i in I_n])
    extra = [
        _sym_value(e) - 1
        for e in ex.index_sets(n).I_n
        if (e.n1 - 1, e.n2) not in I_prev
    ]
    return sym.expand(qt + _sym_q(n - 1) * sym.prod([Z - i for i in extra]))


def _coeffs(expr, deg):
    poly = sym.Poly(sym.expand(expr), Z)
    c = [float(poly.coeff_monomial(Z**k)) for k in range(deg + 1)]
    return np.array(c)


# --- beta and p -------------------------------------------------------------

def test_beta_value_and_quadratic():
    assert ex.beta() == BETA
    assert abs(BETA - 0.6514) < 1e-4
    assert abs(BETA**2 + BETA / 2 - 0.75) < 1e-14
    assert abs(2 * BETA - 1.3028) < 1e-4


@pytest.mark.parametrize("root", [0.0, BETA, -1.5, -BETA - 0.5])
def test_p_roots(root):
    assert abs(ex.p_eval(root)) < 1e-12


def test_p_values():
    assert ex.p_eval(1.0) == pytest.approx(15 / 8, abs=1e-14)
    assert ex.p_eval(2.0, 1) == pytest.approx(15 / 8, abs=1e-14)


def test_p_factored_matches_expanded(rng):
    z = rng.uniform(-5, 5, 1000)
    expanded = z**4 + 2 * z**3 - 1.125 * z
    assert np.max(np.abs(ex.p_eval(z) - expanded)) < 1e-12
    assert np.max(np.abs(ex.p_poly()(z) - expanded)) < 1e-10


def test_p_poly_shift_and_roots():
    P = ex.p_poly(1.0)
    for r in P.roots:
        assert abs(P(r)) < 1e-12
    assert P(2.0) == pytest.approx(ex.p_eval(1.0))


def test_p_tilde_roots():
    pt = ex.p_tilde_poly()
    assert abs(pt(BETA)) < 1e-14 and abs(pt(-BETA - 0.5)) < 1e-14


# --- QBeta ------------------------------------------------------------------

def test_qbeta_exact_equality():
    a = QBeta(1, 2)
    assert a + QBeta(0, 1) == QBeta(1, 3)
    assert a - 1 == QBeta(0, 2)
    assert hash(QBeta(Fraction(1, 2), 0)) == hash(QBeta(Fraction(2, 4), 0))
    assert float(QBeta(0, 1)) == BETA
    assert QBeta(0, 1) < QBeta(1, 0)


# --- lattice and index sets -------------------------------------------------

def test_lattice_small():
    assert [(e.n1, e.n2) for e in ex.lattice(1)] == [(0, 0), (0, 1)]
    assert [(e.n1, e.n2) for e in ex.lattice(2)] == [(0, 0), (0, 1), (1, 0), (0, 2), (1, 1), (0, 3)]


def test_lattice_rejects_zero():
    with pytest.raises(ValueError):
        ex.lattice(0)
    with pytest.raises(ValueError):
        AE(-1, 0)


@pytest.mark.parametrize("N0", range(1, 9))
def test_lattice_exhaustive_and_separated(N0):
    lat = ex.lattice(N0)
    brute = sorted(
        (n1 + BETA * n2, n1, n2)
        for n1 in range(N0 + 1)
        for n2 in range(int(N0 / BETA) + 2)
        if n1 + BETA * n2 < N0
    )
    assert [(e.n1, e.n2) for e in lat] == [(b[1], b[2]) for b in brute]
    assert lat.min_gap() > 1e-9
    assert np.all(np.diff(lat.values) > 0)


def test_index_sets_examples():
    assert ex.index_sets(1).I_n == ()
    assert {e.q for e in ex.index_sets(2).I_n} == {QBeta(0, 2), QBeta(0, 3)}
    I3 = {e.q for e in ex.index_sets(3).I_n}
    assert I3 == {QBeta(1, 2), QBeta(0, 4), QBeta(1, 3)}


@pytest.mark.parametrize("n", range(1, 9))
def test_index_set_structure(n):
    fam = ex.index_sets(n)
    union = set()
    for k in range(1, n + 1):
        Ik = {e.q for e in ex.index_sets(k).I_n}
        assert not (union & Ik)
        union |= Ik
    assert union == {e.q for e in fam.J_n}
    if n >= 2:
        prev = {e.q + 1 for e in ex.index_sets(n - 1).I_n}
        assert prev <= {e.q for e in fam.I_n}


# --- q_n and cascade --------------------------------------------------------

@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_q_polynomial_sympy_oracle(n):
    q = ex.q_polynomial(n)
    ref = _coeffs(_sym_q(n), q.degree)
    got = np.array(q.coefficients)
    assert q.degree <= len(ex.index_sets(n).I_n) - 1
    assert np.allclose(got, ref, rtol=1e-9, atol=1e-9 * np.max(np.abs(ref)))


def test_q2_closed_form():
    c = ex.q_polynomial(2).coefficients
    assert c[0] == pytest.approx(5 * BETA - 1, abs=1e-13)
    assert c[1] == pytest.approx(-2.0, abs=1e-13)


def test_q1_is_zero():
    assert ex.q_polynomial(1).is_zero()


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_cascade_polynomial_identity(n):
    # x dt w + p(D-n) w - r = x q_n(D) dt v reduces to P_w(z) - P_r(z+1) = q_n(z) P_v(z)
    P_w, P_v, P_r = ex.cascade_polynomials(n)
    z = np.linspace(-3.0, 6.0, 301)
    lhs = P_w(z) - P_r.shifted(-1)(z)
    rhs = ex.q_polynomial(n)(z) * P_v(z)
    scale = max(np.max(np.abs(P_w(z))), 1.0)
    assert np.max(np.abs(lhs - rhs)) / scale < 1e-9


def test_cascade_polynomial_examples():
    P_w, P_v, P_r = ex.cascade_polynomials(1)
    z = np.linspace(-2, 2, 7)
    assert np.allclose(P_w(z), ex.p_eval(z))
    assert ex.cascade_polynomials(2)[0].degree == 10
    for n in range(1, 5):
        P_w, P_v, _ = ex.cascade_polynomials(n)
        I = ex._prod_linear(e.value for e in ex.index_sets(n).I_n)
        ref = P_w(z)
        assert np.max(np.abs((P_v * I)(z) - ref)) <= 1e-10 * np.max(np.abs(ref))


# --- coercivity set ---------------------------------------------------------

def test_coercivity_set_examples():
    assert ex.coercivity_set(ex.p_roots()).contains_interval(-1.0, 0.0)
    shifted = [r + 1 for r in ex.p_roots()]
    assert ex.coercivity_set(shifted).contains_interval(0.0, 1.0)
    degenerate = ex.coercivity_set([0, 0, 0, 0])
    assert not degenerate.contains(0.1) and not degenerate.contains(-0.1)
    with pytest.raises(ValueError):
        ex.coercivity_set([0, 1, 2])


# --- weights and schedules --------------------------------------------------

def test_weight_set_N0_1():
    assert set(ex.weight_set(1).pairs) == {(QBeta(0, 1), 1), (QBeta(Fraction(1, 2)), 1)}


@pytest.mark.parametrize("N0", [1, 2, 3, 4])
def test_weight_set_class_members(N0):
    A = ex.weight_set(N0)
    for N in range(1, N0 + 1):
        assert (Fraction(1, 2), N) in A
    for N in range(1, N0):
        assert (1, N) in A
    for w in A.weights:
        assert 0 <= float(w.alpha) <= 1 and 1 <= w.N <= N0 and w.rules


@pytest.mark.parametrize("N0", [1, 2, 3, 4])
def test_default_delta_valid(N0):
    d = ex.default_delta(N0)
    assert ex.validate_delta(N0, d) == []
    for w, s, ap in ex.shifted_weights(ex.weight_set(N0), d):
        assert min(abs(ap - h) for h in (0.0, 0.5, 1.0)) > 1e-12


def test_schedule_rejects_bad_delta():
    with pytest.raises(ValueError):
        ex.schedule(2, 0.3)
    with pytest.raises(ValueError):
        ex.schedule(0)


def test_schedule_N0_1_values():
    s = ex.schedule(1)
    assert s.k == 3
    assert s.ell(1, 0, QBeta(0, 1), 1) == 2
    assert s.ell(1, 0, QBeta(0, 1), -1) == 2


@pytest.mark.parametrize("N0", [1, 2, 3, 4])
def test_ell_constant_on_half_intervals(N0):
    s = ex.schedule(N0)
    for w, sign, ap in ex.shifted_weights(ex.weight_set(N0), s.delta):
        if ex._is_half_integer_weight(w.alpha):
            continue
        for m in range(w.N):
            n = w.N - m
            lo = 0.5 if ap > 0.5 else 0.0
            ref = 8 * N0 + len(ex.index_sets(N0).J_n) - 2 * math.floor(2 * (n + m + lo + 1e-3))
            assert s.ell(n, m, w.alpha, sign) == ref


@pytest.mark.parametrize("N0", [1, 2, 3, 4])
def test_kk_definition(N0):
    s = ex.schedule(N0)
    for row in s.table():
        assert row["ell"] == row["k"] + len(ex.index_sets(row["n"]).J_n) + 4 * row["n"]


@pytest.mark.parametrize("N0", [1, 2, 3, 4])
def test_offset_makes_kk_nonnegative(N0):
    rep = ex.check_conditions(ex.schedule(N0, offset=2))
    assert rep.nonnegative.passed
    base = ex.check_conditions(ex.schedule(N0))
    assert [len(r.failures) for r in rep.results] == [len(r.failures) for r in base.results]


@pytest.mark.parametrize("N0", [1, 2])
def test_explicit_schedule_passes(N0):
    rep = ex.check_conditions(ex.schedule(N0))
    assert rep.passed
    assert "compatible" in rep.note
    assert sum(r.checked for r in rep.results) > 0


@pytest.mark.parametrize("N0", [3, 4])
def test_explicit_schedule_misses_one_nonlinear_inequality(N0):
    # at the integer weights 0 and 1 with m >= 1 the half-weight count falls short by one
    rep = ex.check_conditions(ex.schedule(N0))
    failing = {r.name for r in rep.results if not r.passed}
    assert failing == {"nonlinear_c"}
    for f in rep["nonlinear_c"].failures:
        assert f["alpha"] in ("0", "1") and f["m"] >= 1 and f["lhs"] + 1 == f["rhs"]


def test_zero_schedule_fails_nonlinear_c():
    s = ex.schedule(2)
    zero = ex.DerivativeSchedule(2, s.delta, lambda n, m, a, sg: 0, 0, label="zero")
    rep = ex.check_conditions(zero)
    assert not rep["nonlinear_c"].passed


def test_reports_serialize():
    rep = ex.check_conditions(ex.schedule(2))
    text = json.dumps(rep.to_dict())
    assert json.loads(text)["passed"] is True
    json.dumps(ex.schedule(2).to_dict())
    json.dumps(ex.lattice(3).to_dict())
    json.dumps(ex.weight_set(3).to_dict())


# --- properties -------------------------------------------------------------

@given(st.floats(-5, 5), st.integers(-3, 3))
def test_p_shift_property(z, n):
    assert ex.p_eval(z + n, n) == pytest.approx(ex.p_eval(z), rel=1e-12, abs=1e-12)


@given(st.integers(0, 6), st.integers(0, 8), st.integers(0, 6), st.integers(0, 8))
def test_qbeta_order_matches_float(a1, b1, a2, b2):
    p, q = QBeta(a1, b1), QBeta(a2, b2)
    assert (p == q) == ((a1, b1) == (a2, b2))
    if p != q:
        assert (p < q) == (float(p) < float(q))


@given(st.integers(1, 6))
def test_lattice_closed_under_addition(N0):
    lat = ex.lattice(N0)
    members = set(lat.entries)
    for a in lat:
        for b in lat:
            c = a + b
            if c.value < N0:
                assert c in members


@given(st.floats(-3, 3))
def test_coercivity_set_membership_matches_definition(alpha):
    g = np.array(sorted(ex.p_roots()))
    in_ball = (alpha - g.mean()) ** 2 <= np.mean((g - g.mean()) ** 2) / 3
    in_gap = alpha < g[0] or g[1] < alpha < g[2] or alpha > g[3]
    assert ex.coercivity_set(g).contains(alpha) == bool(in_ball and in_gap)
