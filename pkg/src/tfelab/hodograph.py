"""Hodograph variables, contact-line kinematics and transport of expansions.

The film height ``h(z)`` and the hodograph unknown ``u(x)`` are related by
``h(Z(x)) = x^{3/2}`` and ``1 + u = 1 / Z_x``.  Near the contact line both
directions of the transform are carried out on logarithmic variables, where
the traveling wave and its dilations are straight lines.

Series near ``x = 0`` are generalized power series whose exponents live on
the lattice ``n1 + beta n2``; exponents are tracked exactly as index pairs.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy.integrate import cumulative_simpson, cumulative_trapezoid
from scipy.interpolate import CubicHermiteSpline, CubicSpline

from .exponents import AdmissibleExponent, lattice
from .loggrid import ExpansionFit, FitError, GridFunction, LogGrid, extract_expansion
from .operators import _Aff, _guard, _vel_chain

__all__ = [
    "ProfileError",
    "TruncationError",
    "PhysicalProfile",
    "monotone_cubic",
    "to_hodograph",
    "from_hodograph",
    "contact_line",
    "velocity_profile",
    "GenSeries",
    "TransportedExpansion",
    "transport_expansion",
]

_ZERO = AdmissibleExponent(0, 0)


class ProfileError(ValueError):
    """Non-monotone profile or a grid reaching outside the sampled heights."""


class TruncationError(ValueError):
    """The source expansion is too short for the requested order."""


# ---------------------------------------------------------------------------
# physical profiles


@dataclass(frozen=True)
class PhysicalProfile:
    """Samples ``(z_j, h_j)`` beyond the contact point ``Z0`` (where ``h = 0``)."""

    z: np.ndarray
    h: np.ndarray
    Z0: float

    def __post_init__(self):
        z = np.asarray(self.z, dtype=float)
        h = np.asarray(self.h, dtype=float)
        if z.shape != h.shape or z.ndim != 1 or z.size < 4:
            raise ProfileError("need matching 1-d samples (at least 4)")
        if np.any(z <= self.Z0) or np.any(h <= 0):
            raise ProfileError("samples must lie strictly beyond the contact point")
        if np.any(np.diff(z) <= 0) or np.any(np.diff(h) <= 0):
            raise ProfileError("h must be strictly increasing in z")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "h", h)

    @classmethod
    def sample(cls, fn, z, Z0: float = 0.0) -> "PhysicalProfile":
        """Profile from a callable ``h = fn(z)``."""
        z = np.asarray(z, dtype=float)
        return cls(z, np.asarray(fn(z), dtype=float), Z0)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["z", "h"])
            w.writerow([repr(self.Z0), "0.0"])
            for a, b in zip(self.z, self.h):
                w.writerow([repr(float(a)), repr(float(b))])

    @classmethod
    def from_csv(cls, path) -> "PhysicalProfile":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        if data[0, 1] != 0.0:
            raise ProfileError("first row must be the contact point (Z0, 0)")
        return cls(data[1:, 0], data[1:, 1], float(data[0, 0]))


def monotone_cubic(xs: np.ndarray, ys: np.ndarray) -> CubicHermiteSpline:
    """Monotone cubic Hermite interpolant of increasing data.

    Node slopes come from a not-a-knot cubic spline and are limited to
    ``[0, 3 min(adjacent secants)]`` (Fritsch-Carlson), which keeps the
    interpolant increasing while staying high order where the data are smooth.
    """
    sec = np.diff(ys) / np.diff(xs)
    if np.any(sec <= 0):
        raise ProfileError("data must be strictly increasing")
    d = CubicSpline(xs, ys)(xs, 1)
    cap = 3.0 * np.minimum(np.r_[sec[0], sec], np.r_[sec, sec[-1]])
    return CubicHermiteSpline(xs, ys, np.clip(d, 0.0, cap))


def to_hodograph(profile: PhysicalProfile, grid: LogGrid) -> GridFunction:
    """``u = 1/Z_x - 1`` with ``Z(x) = h^{-1}(x^{3/2})``.

    ``ln(z - Z0)`` is interpolated by :func:`monotone_cubic` in ``ln h`` and
    the interpolant is differentiated analytically.
    """
    eta = np.log(profile.h)
    zeta = np.log(profile.z - profile.Z0)
    target = 1.5 * grid.s
    if target[0] < eta[0] - 1e-12 or target[-1] > eta[-1] + 1e-12:
        raise ProfileError(
            f"grid needs ln h in [{target[0]:.3g}, {target[-1]:.3g}], "
            f"profile covers [{eta[0]:.3g}, {eta[-1]:.3g}]"
        )
    interp = monotone_cubic(eta, zeta)
    target = np.clip(target, eta[0], eta[-1])
    slope = interp.derivative()(target)
    # Z - Z0 = exp(zeta), d zeta/ds = 1.5 zeta'(eta), Z_x = (Z - Z0) zeta_s / x
    log_zx = interp(target) + np.log(1.5 * slope) - grid.s
    return GridFunction(grid, np.expm1(-log_zx))


def _near_contact(u: GridFunction, N0: int, x_fit: float) -> float:
    """``Z(x_first) - Z0`` from the fitted expansion of ``1/(1+u)``."""
    x0 = float(u.grid.x[0])
    try:
        fit = extract_expansion(u, N0, x_fit)
    except FitError:
        return x0 / (1.0 + float(u.values[0]))
    phi = GenSeries.from_fit(fit, N0).shifted_constant(1.0).reciprocal().integrate()
    return x0 * phi(x0)


def from_hodograph(u: GridFunction, Z0: float = 0.0, N0: int = 1,
                   x_fit: float = 0.1, floor: float = 0.0) -> PhysicalProfile:
    """``Z(x) = Z0 + int_0^x (1+u)^{-1}`` and ``h(Z(x)) = x^{3/2}``.

    The piece ``(0, x_first)`` uses the fitted expansion; beyond it the
    exact part ``int dx`` is split off and the small correction
    ``int x u/(1+u) ds`` is integrated with Simpson's rule.
    """
    _guard(u, floor)
    grid = u.grid
    x = grid.x
    first = _near_contact(u, N0, x_fit)
    corr = cumulative_simpson(x * u.values / (1.0 + u.values), x=grid.s, initial=0.0)
    z = Z0 + first + (x - x[0]) - corr
    return PhysicalProfile(z, x**1.5, Z0)


def contact_line(u0_series, times, z_start: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """``(Z0(t), V0(t))`` with ``V0 = (3/8)(1+u0)^3`` and ``dZ0/dt = -V0``."""
    u0 = np.asarray(u0_series, dtype=float)
    t = np.asarray(times, dtype=float)
    if u0.shape != t.shape:
        raise ValueError("u0 series and times must have the same length")
    V0 = 0.375 * (1.0 + u0) ** 3
    Z0 = z_start - cumulative_trapezoid(V0, t, initial=0.0)
    return Z0, V0


def velocity_profile(u: GridFunction, floor: float = 0.1) -> GridFunction:
    """``V = M~(1+u, 1+u, 1+u)``."""
    _guard(u, floor)
    F = _Aff(1.0, u.values)
    return GridFunction(u.grid, _vel_chain(u.grid, F, F, F).full(u.grid.count))


# ---------------------------------------------------------------------------
# generalized power series


def _key(e) -> AdmissibleExponent:
    return e if isinstance(e, AdmissibleExponent) else AdmissibleExponent(*e)


class GenSeries:
    """``sum_e c_e x^e`` over lattice exponents ``e < order``.

    Arithmetic truncates at ``order``; coefficients are floats while the
    exponents stay exact index pairs.
    """

    def __init__(self, terms: Mapping, order: float):
        self.order = float(order)
        self.terms: dict[AdmissibleExponent, float] = {}
        for e, c in terms.items():
            e = _key(e)
            if e.value < self.order and c != 0.0:
                self.terms[e] = self.terms.get(e, 0.0) + float(c)

    @classmethod
    def constant_series(cls, c: float, order: float) -> "GenSeries":
        return cls({_ZERO: c}, order)

    @classmethod
    def from_fit(cls, fit: ExpansionFit, N0: int | None = None) -> "GenSeries":
        N0 = fit.N0 if N0 is None else N0
        if N0 > fit.N0:
            raise TruncationError(f"fit has order {fit.N0}, {N0} requested")
        return cls(fit.coefficients, N0)

    @property
    def constant(self) -> float:
        return self.terms.get(_ZERO, 0.0)

    def coefficient(self, n1: int, n2: int = 0) -> float:
        return self.terms.get(AdmissibleExponent(n1, n2), 0.0)

    def exponents(self) -> list[AdmissibleExponent]:
        return sorted(self.terms)

    def _min_positive(self) -> float:
        pos = [e.value for e in self.terms if e.value > 0]
        return min(pos) if pos else math.inf

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return sum((c * x**e.value for e, c in self.terms.items()), np.zeros_like(x))

    def __add__(self, other) -> "GenSeries":
        if not isinstance(other, GenSeries):
            return self.shifted_constant(float(other))
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out.get(e, 0.0) + c
        return GenSeries(out, min(self.order, other.order))

    __radd__ = __add__

    def __neg__(self) -> "GenSeries":
        return GenSeries({e: -c for e, c in self.terms.items()}, self.order)

    def __sub__(self, other) -> "GenSeries":
        return self + (-other if isinstance(other, GenSeries) else -float(other))

    def __mul__(self, other) -> "GenSeries":
        if not isinstance(other, GenSeries):
            return GenSeries({e: float(other) * c for e, c in self.terms.items()}, self.order)
        order = min(self.order, other.order)
        out: dict[AdmissibleExponent, float] = {}
        for a, ca in self.terms.items():
            for b, cb in other.terms.items():
                e = a + b
                if e.value < order:
                    out[e] = out.get(e, 0.0) + ca * cb
        return GenSeries(out, order)

    __rmul__ = __mul__

    def shifted_constant(self, c: float) -> "GenSeries":
        out = dict(self.terms)
        out[_ZERO] = out.get(_ZERO, 0.0) + c
        return GenSeries(out, self.order)

    def power(self, p: float) -> "GenSeries":
        """``self^p`` by the binomial series around the constant term."""
        a0 = self.constant
        if a0 == 0.0:
            raise ZeroDivisionError("series without constant term")
        if a0 < 0 and p != int(p):
            raise ValueError("non-integer power of a series with negative constant term")
        r = (self - a0) * (1.0 / a0)
        kmax = 0 if not r.terms else int(math.ceil(self.order / r._min_positive()))
        total = GenSeries.constant_series(1.0, self.order)
        term = GenSeries.constant_series(1.0, self.order)
        binom = 1.0
        for k in range(1, kmax + 1):
            binom *= (p - k + 1) / k
            term = term * r
            if not term.terms:
                break
            total = total + term * binom
        return total * (a0**p)

    def reciprocal(self) -> "GenSeries":
        return self.power(-1.0)

    def integrate(self) -> "GenSeries":
        """``x^{-1} int_0^x``: each coefficient picks up ``(1 + i)^{-1}``."""
        return GenSeries({e: c / (1.0 + e.value) for e, c in self.terms.items()}, self.order)

    def compose_scaled(self, psi: "GenSeries") -> "GenSeries":
        """``f(x~ psi(x~))`` as a series in ``x~``."""
        order = min(self.order, psi.order)
        total = GenSeries({}, order)
        for e, c in self.terms.items():
            factor = psi.power(e.value) if e.value else GenSeries.constant_series(1.0, order)
            mono = GenSeries({e: c}, order)
            total = total + mono * factor
        return total

    def invert_scaled(self, max_iter: int | None = None) -> "GenSeries":
        """``psi`` with ``x = x~ psi(x~)`` whenever ``x~ = x phi(x)`` for ``phi = self``."""
        if self.constant == 0.0:
            raise ZeroDivisionError("leading coefficient vanishes")
        recip = self.reciprocal()
        psi = GenSeries.constant_series(recip.constant, self.order)
        n = max_iter or len(lattice(max(1, int(math.ceil(self.order)))).entries) + 2
        for _ in range(n):
            new = recip.compose_scaled(psi)
            if new.close_to(psi, 0.0):
                return new
            psi = new
        return psi

    def close_to(self, other: "GenSeries", tol: float = 1e-12) -> bool:
        keys = set(self.terms) | set(other.terms)
        return all(abs(self.terms.get(k, 0.0) - other.terms.get(k, 0.0)) <= tol for k in keys)

    def to_dict(self) -> list[dict]:
        return [{"n1": e.n1, "n2": e.n2, "exponent": e.value, "value": c}
                for e, c in sorted(self.terms.items())]

    def __repr__(self) -> str:
        body = " + ".join(f"{c:.6g} x^{e.label()}" for e, c in sorted(self.terms.items()))
        return f"GenSeries({body or '0'}; order {self.order:g})"


def _velocity_series(F: GenSeries) -> GenSeries:
    """``M~(F, F, F)`` on monomials: ``(3/2)(c + 1/2)(b + c - 1/2) x^{a+b+c}``."""
    out: dict[AdmissibleExponent, float] = {}
    items = list(F.terms.items())
    for a, ca in items:
        for b, cb in items:
            for c, cc in items:
                e = a + b + c
                if e.value < F.order:
                    k = 1.5 * (c.value + 0.5) * (b.value + c.value - 0.5)
                    out[e] = out.get(e, 0.0) + k * ca * cb * cc
    return GenSeries(out, F.order)


@dataclass
class TransportedExpansion:
    """Expansions of ``Z_x``, ``x~``, ``x(x~)``, ``h`` and ``V`` near the contact line.

    ``x = (1+u_0) x~ (1 + sum c_i x~^i)``,
    ``h = ((1+u_0) x~)^{3/2} (1 + sum u~_i x~^i)``,
    ``V = -(3/8)(1+u_0)^3 + sum V_i x^i = -(3/8)(1+u_0)^3 + sum V~_i x~^i``.
    """

    N0: int
    source: GenSeries
    z_x: GenSeries
    x_tilde: GenSeries
    inverse: GenSeries
    h_tilde: GenSeries
    v: GenSeries
    v_tilde: GenSeries
    meta: dict = field(default_factory=dict)

    @property
    def u0(self) -> float:
        return self.source.constant

    def to_dict(self) -> dict:
        return {
            "N0": self.N0,
            "u0": self.u0,
            "source": self.source.to_dict(),
            "z_x": self.z_x.to_dict(),
            "x_tilde": self.x_tilde.to_dict(),
            "c": self.inverse.to_dict(),
            "u_tilde": self.h_tilde.to_dict(),
            "V": self.v.to_dict(),
            "V_tilde": self.v_tilde.to_dict(),
            **self.meta,
        }

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=2)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def transport_expansion(fit: ExpansionFit | Mapping, N0: int | None = None,
                        cond_limit: float = 1e12) -> TransportedExpansion:
    """Carry the expansion of ``u`` to ``Z_x``, ``x~``, ``x(x~)``, ``h`` and ``V``.

    ``fit`` may also be a plain mapping from exponents to coefficients, in
    which case ``N0`` is required.
    """
    if isinstance(fit, ExpansionFit):
        if fit.condition_number > cond_limit:
            raise ValueError(f"fit condition number {fit.condition_number:.3g} too large")
        U = GenSeries.from_fit(fit, N0)
        N0 = N0 or fit.N0
    else:
        if N0 is None:
            raise TruncationError("N0 is required for a plain coefficient mapping")
        U = GenSeries(fit, N0)
    F = U.shifted_constant(1.0)
    if F.constant <= 0:
        raise ValueError("1 + u_0 must be positive")
    z_x = F.reciprocal()
    phi = z_x.integrate()
    psi = phi.invert_scaled()
    lead = psi.constant
    rel = psi * (1.0 / lead)
    c = rel - 1.0
    h_tilde = rel.power(1.5) - 1.0
    V = _velocity_series(F)
    v_tilde = V.compose_scaled(psi)
    return TransportedExpansion(N0, U, z_x, phi, c, h_tilde, V, v_tilde,
                                meta={"leading_scale": lead})
