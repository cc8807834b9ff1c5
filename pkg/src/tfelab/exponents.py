"""Exponent lattice, the polynomial p, index families and derivative schedules.

Everything here is exact where it can be: lattice points are integer pairs
``(n1, n2)`` standing for ``n1 + beta*n2``, weights are ``a + b*beta`` with
rational ``a, b`` (see :class:`QBeta`), and floating point only enters when a
value is handed to the numerics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache, total_ordering
from typing import Callable, Iterable

import numpy as np
from numpy.polynomial import Polynomial

__all__ = [
    "BETA",
    "beta",
    "QBeta",
    "AdmissibleExponent",
    "ExponentLattice",
    "IndexFamily",
    "RealPolynomial",
    "WeightSet",
    "Weight",
    "DerivativeSchedule",
    "ConditionResult",
    "ConditionReport",
    "IntervalUnion",
    "p_eval",
    "p_poly",
    "p_tilde_poly",
    "lattice",
    "index_sets",
    "weight_set",
    "schedule",
    "explicit_ell",
    "default_delta",
    "validate_delta",
    "check_conditions",
    "coercivity_set",
    "q_polynomial",
    "cascade_polynomials",
]


def beta() -> float:
    """Positive root of ``z**2 + z/2 - 3/4``, i.e. ``(sqrt(13) - 1) / 4``."""
    return (math.sqrt(13.0) - 1.0) / 4.0


BETA = beta()


@total_ordering
@dataclass(frozen=True)
class QBeta:
    """Exact number ``a + b*beta`` with rational ``a`` and ``b``.

    Since beta is irrational two such numbers are equal iff their parts are,
    so hashing and equality are exact; ordering goes through floats, which is
    safe for the small magnitudes used here.
    """

    a: Fraction = Fraction(0)
    b: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "a", Fraction(self.a))
        object.__setattr__(self, "b", Fraction(self.b))

    @classmethod
    def coerce(cls, x) -> "QBeta":
        if isinstance(x, QBeta):
            return x
        if isinstance(x, AdmissibleExponent):
            return x.q
        return cls(Fraction(x), Fraction(0))

    def __float__(self) -> float:
        return float(self.a) + float(self.b) * BETA

    def __add__(self, other) -> "QBeta":
        o = QBeta.coerce(other)
        return QBeta(self.a + o.a, self.b + o.b)

    __radd__ = __add__

    def __sub__(self, other) -> "QBeta":
        o = QBeta.coerce(other)
        return QBeta(self.a - o.a, self.b - o.b)

    def __rsub__(self, other) -> "QBeta":
        return QBeta.coerce(other) - self

    def __neg__(self) -> "QBeta":
        return QBeta(-self.a, -self.b)

    def __lt__(self, other) -> bool:
        o = QBeta.coerce(other)
        if self.b == o.b:
            return self.a < o.a
        return float(self) < float(o)

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = QBeta(other)
        if not isinstance(other, QBeta):
            return NotImplemented
        return self.a == other.a and self.b == other.b

    def __hash__(self) -> int:
        return hash((self.a, self.b))

    @property
    def is_rational(self) -> bool:
        return self.b == 0

    def label(self) -> str:
        parts = []
        if self.a != 0 or self.b == 0:
            parts.append(str(self.a))
        if self.b != 0:
            coef = "" if self.b == 1 else ("-" if self.b == -1 else f"{self.b}*")
            parts.append(f"{coef}beta")
        return "+".join(parts).replace("+-", "-")

    def __repr__(self) -> str:
        return f"QBeta({self.label()})"


@total_ordering
@dataclass(frozen=True)
class AdmissibleExponent:
    """Lattice point ``n1 + beta*n2`` with non-negative integers ``n1, n2``."""

    n1: int
    n2: int

    def __post_init__(self):
        if self.n1 < 0 or self.n2 < 0:
            raise ValueError("lattice indices must be non-negative")

    @property
    def value(self) -> float:
        return self.n1 + BETA * self.n2

    @property
    def q(self) -> QBeta:
        return QBeta(self.n1, self.n2)

    def __float__(self) -> float:
        return self.value

    def __lt__(self, other) -> bool:
        return self.value < float(other)

    def __add__(self, other: "AdmissibleExponent") -> "AdmissibleExponent":
        return AdmissibleExponent(self.n1 + other.n1, self.n2 + other.n2)

    def label(self) -> str:
        return self.q.label()

    def __repr__(self) -> str:
        return f"x^({self.label()})"


@dataclass(frozen=True)
class ExponentLattice:
    """All lattice points with value below ``N0``, ascending."""

    N0: int
    entries: tuple[AdmissibleExponent, ...]

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __contains__(self, item) -> bool:
        return item in self.entries

    @property
    def values(self) -> np.ndarray:
        return np.array([e.value for e in self.entries])

    def min_gap(self) -> float:
        v = self.values
        return float(np.min(np.diff(v))) if len(v) > 1 else math.inf

    def to_dict(self) -> dict:
        return {
            "N0": self.N0,
            "entries": [
                {"n1": e.n1, "n2": e.n2, "value": e.value} for e in self.entries
            ],
        }


def _points_below(upper: float) -> list[AdmissibleExponent]:
    pts = []
    for n2 in range(int(upper / BETA) + 2):
        for n1 in range(int(upper) + 2):
            if n1 + BETA * n2 < upper:
                pts.append(AdmissibleExponent(n1, n2))
    return sorted(pts, key=lambda e: e.value)


@lru_cache(maxsize=None)
def lattice(N0: int) -> ExponentLattice:
    """Admissible exponents ``n1 + beta*n2 < N0``."""
    if N0 < 1:
        raise ValueError("N0 must be a positive integer")
    return ExponentLattice(N0, tuple(_points_below(N0)))


@dataclass(frozen=True)
class IndexFamily:
    n: int
    I_n: tuple[AdmissibleExponent, ...]
    J_n: tuple[AdmissibleExponent, ...]

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "I_n": [e.label() for e in self.I_n],
            "J_n": [e.label() for e in self.J_n],
        }


@lru_cache(maxsize=None)
def index_sets(n: int) -> IndexFamily:
    """Exponents in ``(n-1, n)`` without ``n-1+beta`` and their union over ``1..n``."""
    if n < 1:
        raise ValueError("n must be positive")
    pts = _points_below(n)
    I_n = tuple(
        e for e in pts if e.value > n - 1 and not (e.n1 == n - 1 and e.n2 == 1)
    )
    # J_n drops integers (n2 = 0) and integer + beta (n2 = 1)
    J_n = tuple(e for e in pts if e.value > 0 and e.n2 >= 2)
    return IndexFamily(n, I_n, J_n)


# ---------------------------------------------------------------------------
# polynomials


@dataclass(frozen=True)
class RealPolynomial:
    """Real polynomial in ``zeta`` with optionally known real roots.

    ``coefficients`` are in ascending order.  Products of polynomials built
    from roots keep track of the roots.
    """

    coefficients: tuple[float, ...]
    roots: tuple[float, ...] | None = None

    @classmethod
    def from_roots(cls, roots: Iterable[float], lead: float = 1.0) -> "RealPolynomial":
        roots = tuple(float(r) for r in roots)
        if not roots:
            return cls((float(lead),), ())
        c = Polynomial.fromroots(roots).coef * lead
        return cls(tuple(float(x) for x in c), roots)

    @classmethod
    def constant(cls, c: float) -> "RealPolynomial":
        return cls((float(c),), () if c != 0 else None)

    @property
    def poly(self) -> Polynomial:
        return Polynomial(self.coefficients)

    @property
    def degree(self) -> int:
        c = np.trim_zeros(np.asarray(self.coefficients), "b")
        return max(len(c) - 1, 0)

    def is_zero(self) -> bool:
        return not np.any(np.asarray(self.coefficients))

    def __call__(self, zeta):
        return self.poly(zeta)

    def __mul__(self, other: "RealPolynomial") -> "RealPolynomial":
        c = (self.poly * other.poly).coef
        roots = None
        if self.roots is not None and other.roots is not None:
            roots = self.roots + other.roots
        return RealPolynomial(tuple(float(x) for x in c), roots)

    def __add__(self, other: "RealPolynomial") -> "RealPolynomial":
        return RealPolynomial(tuple(float(x) for x in (self.poly + other.poly).coef))

    def __sub__(self, other: "RealPolynomial") -> "RealPolynomial":
        return RealPolynomial(tuple(float(x) for x in (self.poly - other.poly).coef))

    def shifted(self, n: float) -> "RealPolynomial":
        """The polynomial ``zeta -> P(zeta - n)``."""
        if self.roots is not None:
            lead = self.coefficients[-1] if self.coefficients else 0.0
            return RealPolynomial.from_roots([r + n for r in self.roots], lead)
        c = self.poly(Polynomial([-n, 1.0])).coef
        return RealPolynomial(tuple(float(x) for x in c))

    def to_dict(self) -> dict:
        return {
            "coefficients": list(self.coefficients),
            "roots": None if self.roots is None else list(self.roots),
        }


def p_roots() -> tuple[float, float, float, float]:
    return (-1.5, -BETA - 0.5, 0.0, BETA)


def p_poly(shift: float = 0.0) -> RealPolynomial:
    """``p(zeta - shift)`` with ``p(z) = z (z - beta) (z + beta + 1/2) (z + 3/2)``."""
    return RealPolynomial.from_roots([r + shift for r in p_roots()])


def p_tilde_poly() -> RealPolynomial:
    """``(zeta + beta + 1/2)(zeta - beta)``; the linear velocity symbol up to 3/2."""
    return RealPolynomial.from_roots([-BETA - 0.5, BETA])


def p_eval(zeta, shift: int = 0):
    """Evaluate ``p(zeta - shift)`` in factored form."""
    z = np.asarray(zeta, dtype=float) - shift
    return z * (z - BETA) * (z + BETA + 0.5) * (z + 1.5)


def _prod_linear(points: Iterable[float]) -> RealPolynomial:
    return RealPolynomial.from_roots(list(points))


@lru_cache(maxsize=None)
def q_polynomial(n: int) -> RealPolynomial:
    """Commutator polynomial ``q_n`` of the derived-equation cascade.

    ``q_1 = 0`` and ``q_n = qt_n + q_{n-1} * prod_{i in (I_n - 1) minus I_{n-1}} (z - i)``
    where ``qt_n(z) = prod_{I_n}(z - i) - prod_{I_n}(z - i + 1)``.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if n == 1:
        return RealPolynomial((0.0,))
    I_n = index_sets(n).I_n
    I_prev = {e.q for e in index_sets(n - 1).I_n}
    qt = _prod_linear(e.value for e in I_n) - _prod_linear(e.value - 1 for e in I_n)
    shifted = [e.q - 1 for e in I_n]
    extra = [float(q) for q in shifted if q not in I_prev]
    q = qt + q_polynomial(n - 1) * _prod_linear(extra)
    c = np.asarray(q.coefficients)
    if len(c) > 1:
        c = np.trim_zeros(c, "b")
    return RealPolynomial(tuple(float(x) for x in c) or (0.0,))


def cascade_polynomials(n: int) -> tuple[RealPolynomial, RealPolynomial, RealPolynomial]:
    """Polynomials ``(P_w, P_v, P_r)`` with ``w = P_w(D)u``, ``v = P_v(D)u``, ``r = P_r(D)f``."""
    if n < 1:
        raise ValueError("n must be positive")
    J_n = [e.value for e in index_sets(n).J_n]
    J_prev = [e.value for e in index_sets(n - 1).J_n] if n > 1 else []
    ps = RealPolynomial.constant(1.0)
    for k in range(n):
        ps = ps * p_poly(k)
    pr = RealPolynomial.constant(1.0)
    for k in range(1, n + 1):
        pr = pr * p_poly(k)
    P_w = ps * _prod_linear(J_n)
    P_v = ps * _prod_linear(J_prev)
    P_r = pr * _prod_linear(J_n)
    return P_w, P_v, P_r


# ---------------------------------------------------------------------------
# coercivity criterion


@dataclass(frozen=True)
class IntervalUnion:
    """Finite union of intervals ``(lo, hi)``; each end open or closed."""

    intervals: tuple[tuple[float, float, bool, bool], ...]

    def contains(self, x: float) -> bool:
        for lo, hi, lo_closed, hi_closed in self.intervals:
            above = x >= lo if lo_closed else x > lo
            below = x <= hi if hi_closed else x < hi
            if above and below:
                return True
        return False

    def contains_interval(self, a: float, b: float) -> bool:
        """Whether the open interval ``(a, b)`` lies inside one piece."""
        return any(lo <= a and b <= hi for lo, hi, _, _ in self.intervals)

    @property
    def is_empty(self) -> bool:
        return not self.intervals

    def to_list(self) -> list:
        return [list(iv) for iv in self.intervals]


def coercivity_set(roots) -> IntervalUnion:
    """Weights for which a quartic with these real roots is coercive.

    The root-gap regions ``(-inf, g1)``, ``(g2, g3)``, ``(g4, inf)`` are united
    and then intersected with the ball ``(a - mean)^2 <= var / 3``.
    """
    g = np.sort(np.asarray(roots, dtype=float))
    if g.shape != (4,):
        raise ValueError("need exactly four real roots")
    mean = float(g.mean())
    radius = math.sqrt(float(np.mean((g - mean) ** 2)) / 3.0)
    b_lo, b_hi = mean - radius, mean + radius
    gaps = [(-math.inf, g[0]), (g[1], g[2]), (g[3], math.inf)]
    pieces = []
    for lo, hi in gaps:
        a = max(lo, b_lo)
        b = min(hi, b_hi)
        lo_closed = b_lo > lo
        hi_closed = b_hi < hi
        if a < b or (a == b and lo_closed and hi_closed):
            pieces.append((float(a), float(b), lo_closed, hi_closed))
    return IntervalUnion(tuple(pieces))


# ---------------------------------------------------------------------------
# weights and derivative schedules

HALF = Fraction(1, 2)


@dataclass(frozen=True)
class Weight:
    alpha: QBeta
    N: int
    rules: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha.label(),
            "alpha_value": float(self.alpha),
            "N": self.N,
            "rules": list(self.rules),
        }


@dataclass(frozen=True)
class WeightSet:
    N0: int
    weights: tuple[Weight, ...]

    @property
    def pairs(self) -> list[tuple[QBeta, int]]:
        return [(w.alpha, w.N) for w in self.weights]

    def __contains__(self, pair) -> bool:
        a, N = pair
        return (QBeta.coerce(a), N) in set(self.pairs)

    def __len__(self) -> int:
        return len(self.weights)

    def to_dict(self) -> dict:
        return {"N0": self.N0, "weights": [w.to_dict() for w in self.weights]}


def _open(q: QBeta, lo, hi) -> bool:
    return float(lo) < float(q) < float(hi)


@lru_cache(maxsize=None)
def weight_set(N0: int) -> WeightSet:
    """The weight pairs ``(alpha, N)`` of the two weight classes."""
    if N0 < 1:
        raise ValueError("N0 must be positive")
    bq = QBeta(0, 1)
    base = [e.q - N0 for e in index_sets(N0).I_n]
    found: dict[tuple[QBeta, int], list[str]] = {}

    def add(alpha: QBeta, N: int, rule: str):
        found.setdefault((alpha, N), []).append(rule)

    a_set = {q + 1 for q in base} | {bq}
    for N in range(2, N0 + 1):
        for a in a_set:
            add(a, N, "a1")
    for a in a_set:
        if _open(a, HALF, 1):
            add(a, 1, "a2")
    for N in range(2, N0 + 1):
        add(QBeta(0), N, "a3")
    for N in range(1, N0):
        add(QBeta(1), N, "a4")
    b1 = {q + HALF for q in base} | {bq - HALF}
    for N in range(2, N0 + 1):
        for a in b1:
            if _open(a, 0, HALF):
                add(a, N, "b1")
    for N in range(1, N0):
        for q in base:
            a = q + Fraction(3, 2)
            if _open(a, HALF, 1):
                add(a, N, "b2")
    for N in range(1, N0 + 1):
        add(QBeta(HALF), N, "b3")
    weights = tuple(
        Weight(a, N, tuple(r))
        for (a, N), r in sorted(found.items(), key=lambda kv: (kv[0][1], float(kv[0][0])))
    )
    return WeightSet(N0, weights)


def _is_half_integer_weight(alpha: QBeta) -> bool:
    return alpha.b == 0 and alpha.a in (0, HALF, 1)


def shifted_weights(A: WeightSet, delta: float):
    """Yield ``(weight, sign, alpha')`` with ``alpha' = alpha + sign*delta`` in ``(0, 1)``."""
    for w in A.weights:
        for sign in (-1, 1):
            ap = float(w.alpha) + sign * delta
            if 0.0 < ap < 1.0:
                yield w, sign, ap


def validate_delta(N0: int, delta: float) -> list[str]:
    """Reasons ``delta`` is unusable for ``N0``; empty when it is fine."""
    problems = []
    if not 0.0 < delta < 1.0:
        return [f"delta={delta} outside (0, 1)"]
    A = weight_set(N0)
    alphas = sorted({w.alpha for w in A.weights} | {QBeta(0), QBeta(HALF), QBeta(1)})
    vals = [float(a) for a in alphas]
    for lo, hi in zip(vals, vals[1:]):
        if not lo + delta < hi - delta:
            problems.append(f"separation violated between {lo:.6g} and {hi:.6g}")
    special = (0.0, 0.5, 1.0)
    lat = lattice(N0 + 1).values
    for w in A.weights:
        for sign in (-1, 1):
            ap = float(w.alpha) + sign * delta
            if not _is_half_integer_weight(w.alpha):
                if min(abs(ap - s) for s in special) < 1e-12:
                    problems.append(f"shifted weight {ap:.6g} hits a half integer")
                if 0.0 < float(w.alpha) < 1.0 and not 0.0 < ap < 1.0:
                    problems.append(f"shifted weight {ap:.6g} leaves (0,1)")
            for j in range(N0 + 1):
                if np.min(np.abs(lat - (ap + j))) < 1e-12:
                    problems.append(f"shifted weight {ap + j:.6g} hits the lattice")
    return problems


def default_delta(N0: int, start: float = 0.05) -> float:
    delta = start
    while validate_delta(N0, delta):
        delta /= 2.0
        if delta < 1e-12:
            raise ValueError("no admissible delta found")
    return delta


EllFn = Callable[[int, int, QBeta, int], int]


def explicit_ell(N0: int, delta: float, offset: int = 0) -> EllFn:
    """The explicit derivative counts ``l(n, m, alpha')`` (plus a uniform offset)."""
    C = 8 * N0 + len(index_sets(N0).J_n) + offset

    def ell(n: int, m: int, alpha: QBeta, sign: int) -> int:
        if _is_half_integer_weight(alpha):
            if (n, m, alpha) == (1, 0, QBeta(HALF)):
                # l(1,0,1/2 +- delta) = k + |J_1| + 4 with the global k
                return C - 5 + 4
            return C + 3 - 4 * (n + m) - int(4 * alpha.a)
        ap = float(alpha) + sign * delta
        return C - 2 * math.floor(2 * (n + m + ap))

    return ell


@dataclass
class DerivativeSchedule:
    """Derivative counts ``l(n,m,alpha')``, ``k(n,m,alpha')`` and the global ``k``.

    ``ell_fn`` takes ``(n, m, alpha, sign)`` with the shifted weight
    ``alpha' = alpha + sign*delta``.
    """

    N0: int
    delta: float
    ell_fn: EllFn
    k: int
    label: str = "explicit"

    def ell(self, n: int, m: int, alpha, sign: int) -> int:
        return int(self.ell_fn(n, m, QBeta.coerce(alpha), sign))

    def kk(self, n: int, m: int, alpha, sign: int) -> int:
        return self.ell(n, m, alpha, sign) - len(index_sets(n).J_n) - 4 * n

    def table(self) -> list[dict]:
        rows = []
        for w, sign, ap in shifted_weights(weight_set(self.N0), self.delta):
            for m in range(w.N):
                n = w.N - m
                rows.append(
                    {
                        "n": n,
                        "m": m,
                        "alpha": w.alpha.label(),
                        "sign": sign,
                        "alpha_prime": ap,
                        "ell": self.ell(n, m, w.alpha, sign),
                        "k": self.kk(n, m, w.alpha, sign),
                    }
                )
        return rows

    def to_dict(self) -> dict:
        return {
            "N0": self.N0,
            "delta": self.delta,
            "k": self.k,
            "label": self.label,
            "table": self.table(),
        }


def schedule(N0: int, delta: float | None = None, offset: int = 0) -> DerivativeSchedule:
    """Explicit derivative schedule for ``N0``.

    ``offset`` adds a constant to every ``l`` and to ``k``; all schedule
    inequalities are invariant under it, and ``offset=2`` makes every
    ``k(n, m, alpha')`` non-negative.
    """
    if N0 < 1:
        raise ValueError("N0 must be positive")
    if delta is None:
        delta = default_delta(N0)
    problems = validate_delta(N0, delta)
    if problems:
        raise ValueError("; ".join(problems))
    k = 8 * N0 + len(index_sets(N0).J_n) - 5 + offset
    label = "explicit" if offset == 0 else f"explicit+{offset}"
    return DerivativeSchedule(N0, delta, explicit_ell(N0, delta, offset), k, label)


@dataclass
class ConditionResult:
    name: str
    description: str
    checked: int = 0
    failures: list[dict] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "description": self.description,
            "checked": self.checked,
            "passed": self.passed,
            "witnesses": self.failures[:10],
        }


@dataclass
class ConditionReport:
    N0: int
    delta: float
    schedule_label: str
    results: list[ConditionResult]
    nonnegative: ConditionResult
    note: str = ""

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def __getitem__(self, name: str) -> ConditionResult:
        for r in self.results:
            if r.name == name:
                return r
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "N0": self.N0,
            "delta": self.delta,
            "schedule": self.schedule_label,
            "passed": self.passed,
            "conditions": [r.to_dict() for r in self.results],
            "k_nonnegative": self.nonnegative.to_dict(),
            "note": self.note,
        }


_DESCRIPTIONS = {
    "linear_a": "l(N-m-1,m+1,a') >= l(N-m,m,a') - 4 for N-m >= 2",
    "linear_b": "l(N-m,m,a'-1/2) >= l(N-m,m,a') - 2 if a' in (1/2,1), a+N >= 2",
    "linear_c": "l(N-m-1,m,a'+1/2) >= l(N-m,m,a') - 2 if a' in (0,1/2), N-m >= 2",
    "linear_d": "l(1,m-1,a'+1/2) >= l(1,m,a') + 2 if a' in (0,1/2), m >= 1",
    "linear_e": "k >= l(1,0,a') - 2 if a' in (1/2,1), a != 1/2",
    "nonlinear_a": "l(N-m,m',a') >= l(N-m,m,a') for m' <= m-1",
    "nonlinear_b": "l(1,m',1/2+-d) >= l(N-m,m,a')/2 + 1 if a'+N-m-1 < beta",
    "nonlinear_c": "l(1,m',1/2+-d) >= l(N-m,m,a') + 3 if a'+N-m-1 > beta",
    "nonlinear_d": "l(N-m,m,a'-1/2) >= l(N-m,m,a') + 2 for a' in (1/2,1), a != 1/2",
    "nonlinear_e": "l(N-m-1,m,a'+1/2) >= l(N-m,m,a') + 2 for a' in (0,1/2), a != 1/2",
    "nonlinear_f": "k >= l(1,m,a') - 2 for a' > beta",
    "nonlinear_g": "l(1,0,1-d), l(2,0,d) >= l(1,m,a') + 2 for a' > beta, m >= 1",
}


def check_conditions(sched: DerivativeSchedule) -> ConditionReport:
    """Evaluate every schedule inequality over the weights of ``weight_set(N0)``.

    Failures are collected with witnesses, never raised.
    """
    N0, d = sched.N0, sched.delta
    A = weight_set(N0)
    res = {name: ConditionResult(name, desc) for name, desc in _DESCRIPTIONS.items()}
    half = QBeta(HALF)
    ell = sched.ell

    def check(name: str, lhs: float, rhs: float, **ctx):
        r = res[name]
        r.checked += 1
        if not lhs >= rhs:
            r.failures.append({"lhs": lhs, "rhs": rhs, **ctx})

    for w, s, ap in shifted_weights(A, d):
        a, N = w.alpha, w.N
        for m in range(N):
            n = N - m
            ctx = {"alpha": a.label(), "sign": s, "N": N, "m": m}
            base = ell(n, m, a, s)
            if n >= 2:
                check("linear_a", ell(n - 1, m + 1, a, s), base - 4, **ctx)
            if 0.5 < ap < 1.0 and float(a) + N >= 2:
                check("linear_b", ell(n, m, a - half, s), base - 2, **ctx)
            if 0.0 < ap < 0.5 and n >= 2:
                check("linear_c", ell(n - 1, m, a + half, s), base - 2, **ctx)
            if 0.0 < ap < 0.5 and n == 1 and m >= 1:
                check("linear_d", ell(1, m - 1, a + half, s), base + 2, **ctx)
            if 0.5 < ap < 1.0 and a != half and n == 1 and m == 0:
                check("linear_e", sched.k, base - 2, **ctx)
            for mp in range(m):
                check("nonlinear_a", ell(n, mp, a, s), base, mp=mp, **ctx)
            crit = ap + N - m - 1
            for mp in range(m + 1):
                for s2 in (-1, 1):
                    top = ell(1, mp, half, s2)
                    if crit < BETA:
                        check("nonlinear_b", top, base / 2 + 1, mp=mp, **ctx)
                    elif crit > BETA:
                        check("nonlinear_c", top, base + 3, mp=mp, **ctx)
            # no remnant to absorb at alpha = 1/2, so the shift rules skip it
            if 0.5 < ap < 1.0 and a != half:
                check("nonlinear_d", ell(n, m, a - half, s), base + 2, **ctx)
            if 0.0 < ap < 0.5 and n >= 2 and a != half:
                check("nonlinear_e", ell(n - 1, m, a + half, s), base + 2, **ctx)
            if ap > BETA and n == 1:
                check("nonlinear_f", sched.k, base - 2, **ctx)
                if m >= 1:
                    check("nonlinear_g", ell(1, 0, QBeta(1), -1), base + 2, **ctx)
                    check("nonlinear_g", ell(2, 0, QBeta(0), 1), base + 2, **ctx)

    nonneg = ConditionResult("k>=0", "k(n,m,a') = l - |J_n| - 4n >= 0 on the weight set")
    for w, s, ap in shifted_weights(A, d):
        for m in range(w.N):
            nonneg.checked += 1
            kk = sched.kk(w.N - m, m, w.alpha, s)
            if kk < 0:
                nonneg.failures.append(
                    {"n": w.N - m, "m": m, "alpha": w.alpha.label(), "sign": s, "k": kk}
                )
    note = ""
    if sched.label.startswith("explicit"):
        note = "explicit choice; also compatible with the ``nonlinear'' conditions"
    return ConditionReport(N0, d, sched.label, list(res.values()), nonneg, note)
