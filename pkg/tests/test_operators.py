import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from tfelab.exponents import BETA, p_eval, p_tilde_poly
from tfelab.linear_solver import random_bumps
from tfelab.loggrid import Cutoff, GridFunction, GridMismatch, LogGrid, sup_norm
from tfelab.operators import (
    DegenerateProfile,
    m_apply,
    m_sym_apply,
    nonlinearity,
    nonlinearity_decomposed,
    nonlinearity_parts,
    pD_apply,
    pD_slot_sum,
    velocity_decomposition,
    velocity_tilde,
    velocity_tilde_sym,
)

INNER = slice(30, -30)


def monomial_m(a):
    """M(x^a1, ..., x^a5) / x^(a1+...+a5) from the operator chain on monomials."""
    a1, a2, a3, a4, a5 = a
    s3 = a3 + a4 + a5
    return (a5 + 0.5) * (a4 + a5 - 0.5) * (s3 + 1.5) * s3


def monomial_v(a, b, c):
    return 1.5 * (c + 0.5) * (b + c - 0.5)


def _plateau(grid, rng, scale=1.0):
    return GridFunction(grid, scale * random_bumps(grid, rng))


def test_m_of_ones(grid):
    assert sup_norm(m_apply(1, 1, 1, 1, 1, grid=grid)) == 0.0
    assert sup_norm(m_sym_apply(1, 1, 1, 1, 1, grid=grid)) < 1e-12


def test_m_example_x_squared(grid):
    x2 = grid.sample(lambda x: x**2)
    out = m_apply(1, 1, 1, 1, x2)
    assert np.allclose(out.values[INNER], 26.25 * x2.values[INNER], rtol=1e-6)


@pytest.mark.parametrize("seed", range(6))
def test_m_monomial_oracle(grid, seed):
    a = np.random.default_rng(seed).uniform(-0.3, 0.6, 5)
    F = [grid.sample(lambda x, e=e: x**e) for e in a]
    out = m_apply(*F).values
    ref = monomial_m(a) * grid.x ** a.sum()
    assert np.allclose(out[INNER], ref[INNER], rtol=1e-6, atol=1e-8 * np.abs(ref[INNER]).max())


def test_velocity_monomial_oracle(grid):
    for a, b, c in [(0.1, 0.2, 0.3), (0.0, BETA, 1.0), (0.5, -0.2, 0.4)]:
        F = [grid.sample(lambda x, e=e: x**e) for e in (a, b, c)]
        ref = monomial_v(a, b, c) * grid.x ** (a + b + c)
        assert np.allclose(velocity_tilde(*F).values[INNER], ref[INNER], rtol=1e-7)


def test_velocity_of_ones_exact(grid):
    assert np.all(velocity_tilde(1, 1, 1, grid=grid).values == -0.375)


def test_velocity_first_order(grid):
    eps = 1e-5
    F = grid.sample(lambda x: 1 + eps * x)
    lin = (velocity_tilde(F, F, F).values + 0.375) / eps
    # the three one-slot substitutions add up to (3/2) p~(D) applied once
    ref = 1.5 * p_tilde_poly()(1.0) * grid.x
    win = (grid.s > -8) & (grid.s < 2)
    assert np.allclose(lin[win], ref[win], rtol=5e-4)


def test_grid_mismatch(grid):
    other = LogGrid(-12, 6, 512).constant(1.0)
    with pytest.raises(GridMismatch):
        m_apply(grid.constant(1.0), other, 1, 1, 1)


def test_pD_paths(grid, rng):
    worst = 0.0
    for _ in range(25):
        u = _plateau(grid, rng)
        a, b = pD_apply(u).values, pD_slot_sum(u).values
        worst = max(worst, np.max(np.abs(a - b)) / np.max(np.abs(a)))
    assert worst <= 1e-9


def test_pD_examples(grid):
    cut = Cutoff(1.0, 4.0)
    plateau = (grid.s > -10) & (grid.s < -0.5)
    u = grid.sample(lambda x: x**BETA * cut(x))
    assert np.max(np.abs(pD_apply(u).values[plateau] / u.values[plateau])) < 1e-6
    v = grid.sample(lambda x: x * cut(x))
    assert np.allclose(pD_apply(v).values[plateau], 15 / 8 * v.values[plateau], rtol=1e-6)


def test_m_sym_links_pD(grid, rng):
    u = _plateau(grid, rng)
    assert np.allclose(5 * m_sym_apply(u, 1, 1, 1, 1).values, pD_apply(u).values, atol=1e-9)


def test_m_sym_permutation_invariant(small_grid, rng):
    F = [_plateau(small_grid, rng, 0.3) + 1.0 for _ in range(5)]
    ref = m_sym_apply(*F).values
    for perm in list(itertools.permutations(range(5)))[::17]:
        assert np.allclose(m_sym_apply(*(F[i] for i in perm)).values, ref, atol=1e-10)


def test_nonlinearity_zero_and_guard(grid):
    assert sup_norm(nonlinearity(grid.zeros())) == 0.0
    with pytest.raises(DegenerateProfile):
        nonlinearity(grid.constant(-0.95))


def test_nonlinearity_quadratic_scaling(grid, rng):
    for _ in range(5):
        u = _plateau(grid, rng)
        r = [sup_norm(nonlinearity(e * u)) / e**2 for e in (1e-2, 1e-3, 1e-4)]
        assert max(r) / min(r) - 1 < 0.1
        assert min(r) > 0


def test_nonlinearity_no_linear_part(grid, rng):
    u = _plateau(grid, rng)
    e = 1e-4
    deriv = (nonlinearity(e * u).values - nonlinearity(-e * u).values) / (2 * e)
    assert np.max(np.abs(deriv)) <= 1e-7 * max(sup_norm(u), 1.0) * 1e3


def test_nonlinearity_at_most_quintic(grid, rng):
    u = GridFunction(grid, np.abs(random_bumps(grid, rng)))
    quint = -m_apply(u, u, u, u, u).values
    gaps = []
    for e in (1e3, 1e4, 1e5):
        ratio = nonlinearity(e * u).values / e**5
        gaps.append(np.max(np.abs(ratio - quint)) / np.max(np.abs(quint)))
    assert gaps[-1] < 1e-3
    assert gaps[1] < 0.2 * gaps[0] and gaps[2] < 0.2 * gaps[1]


def test_nonlinearity_parts_sum(grid, rng):
    u = _plateau(grid, rng, 0.05)
    parts = nonlinearity_parts(u)
    assert sorted(parts) == [2, 3, 4, 5]
    total = sum(p.values for p in parts.values())
    assert np.allclose(total, nonlinearity(u).values, atol=1e-10)
    e = 0.5
    for k, p in nonlinearity_parts(e * u).items():
        assert np.allclose(p.values, e**k * parts[k].values, atol=1e-12)


def test_nonlinearity_decomposed_matches(grid, rng):
    for _ in range(50):
        u0 = rng.uniform(-0.05, 0.05)
        u = _plateau(grid, rng, 0.05) + u0
        a = nonlinearity(u).values
        b = nonlinearity_decomposed(u, u0).values
        assert np.max(np.abs(a - b)) <= 5e-8 * np.max(np.abs(a))


def test_velocity_decomposition(grid, rng):
    d = velocity_decomposition(grid.zeros(), 0.0)
    assert d.A == -0.375 and sup_norm(d.B) == 0 and sup_norm(d.C) == 0
    c = velocity_decomposition(grid.constant(0.2), 0.2)
    assert c.A == pytest.approx(-0.375 * 1.2**3) and sup_norm(c.B) < 1e-14
    for _ in range(50):
        u0 = rng.uniform(-0.05, 0.05)
        u = _plateau(grid, rng, 0.05) + u0
        dec = velocity_decomposition(u, u0)
        F = u + 1.0
        direct = velocity_tilde(F, F, F).values
        assert np.max(np.abs(dec.total.values - direct)) <= 1e-9
        assert dec.reading == "p_tilde_of_u_minus_u0"
        assert dec.candidates["p_tilde_of_one_plus_u0"] > 0.1


@given(st.integers(0, 10_000), st.integers(0, 4), st.floats(-2, 2))
def test_m_multilinear(seed, slot, lam):
    g = LogGrid(-8.0, 4.0, 256)
    r = np.random.default_rng(seed)
    F = [GridFunction(g, random_bumps(g, r)) + 1.0 for _ in range(5)]
    v = GridFunction(g, random_bumps(g, r))
    G = list(F)
    G[slot] = F[slot] * lam + v
    H = list(F)
    H[slot] = v
    lhs = m_apply(*G).values
    rhs = lam * m_apply(*F).values + m_apply(*H).values
    assert np.allclose(lhs, rhs, atol=1e-8 * (1 + np.abs(rhs).max()))


@given(st.integers(0, 10_000), st.integers(0, 2), st.floats(-2, 2))
def test_velocity_trilinear_and_symmetric(seed, slot, lam):
    g = LogGrid(-8.0, 4.0, 256)
    r = np.random.default_rng(seed)
    F = [GridFunction(g, random_bumps(g, r)) + 1.0 for _ in range(3)]
    v = GridFunction(g, random_bumps(g, r))
    G = list(F)
    G[slot] = F[slot] * lam + v
    H = list(F)
    H[slot] = v
    lhs = velocity_tilde(*G).values
    rhs = lam * velocity_tilde(*F).values + velocity_tilde(*H).values
    assert np.allclose(lhs, rhs, atol=1e-9 * (1 + np.abs(rhs).max()))
    sym = velocity_tilde_sym(*F).values
    assert np.allclose(velocity_tilde_sym(F[2], F[0], F[1]).values, sym, atol=1e-12)


@given(st.lists(st.floats(-0.4, 0.8), min_size=5, max_size=5))
def test_monomial_chain_property(a):
    g = LogGrid(-6.0, 3.0, 512)
    F = [g.sample(lambda x, e=e: x**e) for e in a]
    ref = monomial_m(a) * g.x ** sum(a)
    out = m_apply(*F).values
    size = np.max(g.x[INNER] ** sum(a))
    assert np.allclose(out[INNER], ref[INNER], rtol=1e-5, atol=1e-6 * size)


def test_p_is_symmetrised_m_on_monomials():
    # p(a) = sum over one-slot substitutions of the monomial chain
    for a in np.linspace(-2, 2, 9):
        total = 0.0
        for j in range(5):
            e = [0.0] * 5
            e[j] = a
            total += monomial_m(e)
        assert total == pytest.approx(p_eval(a), abs=1e-12)
