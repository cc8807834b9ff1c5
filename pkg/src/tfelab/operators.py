"""The 5-linear form, the linear operator ``p(D)``, the nonlinearity and the velocity form.

All operator chains use the right-action convention: every operator acts on
the whole product to its right.  Operands are carried internally as a pair
``(constant, array)`` so that ``D`` annihilates constants exactly; this keeps
the small-amplitude nonlinearity free of round-off from differentiating ``1``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .exponents import p_poly, p_tilde_poly
from .loggrid import GridFunction, GridMismatch, LogGrid, _apply_d, _poly_apply

__all__ = [
    "DegenerateProfile",
    "Operand",
    "m_apply",
    "m_sym_apply",
    "pD_apply",
    "pD_slot_sum",
    "nonlinearity",
    "nonlinearity_decomposed",
    "nonlinearity_parts",
    "velocity_tilde",
    "velocity_tilde_sym",
    "VelocityDecomposition",
    "velocity_decomposition",
]

Operand = Union[GridFunction, float, int]


class DegenerateProfile(ValueError):
    """Raised when ``F = 1 + u`` comes too close to zero."""


class _Aff:
    """``c + g`` with exact scalar ``c`` and array ``g`` (``None`` for zero)."""

    __slots__ = ("c", "g")

    def __init__(self, c: float = 0.0, g: np.ndarray | None = None):
        self.c = float(c)
        self.g = g

    def d(self, grid: LogGrid, shift: float = 0.0) -> "_Aff":
        """``(D + shift)`` applied."""
        g = None if self.g is None else _apply_d(grid, self.g, 1) + shift * self.g
        return _Aff(shift * self.c, g)

    def mul(self, other: "_Aff") -> "_Aff":
        g = None
        parts = []
        if self.g is not None:
            parts.append(other.c * self.g)
            if other.g is not None:
                parts.append(self.g * other.g)
        if other.g is not None:
            parts.append(self.c * other.g)
        if parts:
            g = sum(parts[1:], parts[0])
        return _Aff(self.c * other.c, g)

    def scale(self, k: float) -> "_Aff":
        return _Aff(k * self.c, None if self.g is None else k * self.g)

    def full(self, n: int) -> np.ndarray:
        return np.full(n, self.c) if self.g is None else self.c + self.g


def _as_aff(F: Operand) -> _Aff:
    if isinstance(F, GridFunction):
        return _Aff(0.0, F.values)
    if isinstance(F, _Aff):
        return F
    return _Aff(float(F))


def _common_grid(args) -> LogGrid:
    grids = {a.grid for a in args if isinstance(a, GridFunction)}
    if len(grids) > 1:
        raise GridMismatch("arguments live on different grids")
    if not grids:
        raise ValueError("at least one argument must be a GridFunction")
    return grids.pop()


def _m_chain(grid: LogGrid, F1, F2, F3, F4, F5) -> _Aff:
    # F1 F2 D (D + 3/2) (F3 (D - 1/2) (F4 (D + 1/2) F5))
    r = F5.d(grid, 0.5)
    r = F4.mul(r).d(grid, -0.5)
    r = F3.mul(r).d(grid, 1.5).d(grid, 0.0)
    return F1.mul(F2).mul(r)


def _to_gf(grid: LogGrid, a: _Aff) -> GridFunction:
    return GridFunction(grid, a.full(grid.count))


def m_apply(
    F1: Operand, F2: Operand, F3: Operand, F4: Operand, F5: Operand, grid: LogGrid | None = None
) -> GridFunction:
    """``F1 F2 D (D+3/2) (F3 (D-1/2) (F4 (D+1/2) F5))``.

    Scalars are accepted for constant slots; pass ``grid`` when every slot is
    a scalar.
    """
    args = (F1, F2, F3, F4, F5)
    grid = grid or _common_grid(args)
    return _to_gf(grid, _m_chain(grid, *map(_as_aff, args)))


def _key(F) -> tuple:
    return ("s", float(F)) if not isinstance(F, GridFunction) else ("f", id(F))


def _m_sym_aff(grid: LogGrid, args) -> _Aff:
    affs = [_as_aff(a) for a in args]
    keys = [_key(a) for a in args]
    cache: dict[tuple, _Aff] = {}
    total = _Aff()
    count = 0
    for perm in itertools.permutations(range(5)):
        k = tuple(keys[i] for i in perm)
        if k not in cache:
            cache[k] = _m_chain(grid, *(affs[i] for i in perm))
        r = cache[k]
        total = _Aff(total.c + r.c, r.g if total.g is None else (total.g if r.g is None else total.g + r.g))
        count += 1
    return total.scale(1.0 / count)


def m_sym_apply(
    F1: Operand, F2: Operand, F3: Operand, F4: Operand, F5: Operand, grid: LogGrid | None = None
) -> GridFunction:
    """Average of :func:`m_apply` over all 120 argument orders.

    Orders that coincide as sequences of arguments are evaluated once.
    """
    args = (F1, F2, F3, F4, F5)
    grid = grid or _common_grid(args)
    return _to_gf(grid, _m_sym_aff(grid, args))


def pD_apply(u: GridFunction) -> GridFunction:
    """``p(D) u`` by Horner's scheme in ``D``."""
    return GridFunction(u.grid, _poly_apply(u.grid, u.values, p_poly()))


def pD_slot_sum(u: GridFunction) -> GridFunction:
    """``p(D) u`` as the sum of the five one-slot substitutions into the 5-linear form."""
    grid = u.grid
    one = _Aff(1.0)
    uu = _Aff(0.0, u.values)
    total = np.zeros(grid.count)
    for j in range(5):
        slots = [one] * 5
        slots[j] = uu
        total += _m_chain(grid, *slots).full(grid.count)
    return GridFunction(grid, total)


def _guard(u: GridFunction, floor: float) -> None:
    lo = float(np.min(1.0 + u.values))
    if lo <= floor:
        raise DegenerateProfile(f"min(1+u) = {lo:.3g} is not above {floor}")


def nonlinearity(u: GridFunction, floor: float = 0.1) -> GridFunction:
    """``p(D) u - M(1+u, ..., 1+u)``."""
    _guard(u, floor)
    F = _Aff(1.0, u.values)
    m = _m_chain(u.grid, F, F, F, F, F)
    lin = _poly_apply(u.grid, u.values, p_poly())
    out = lin - m.full(u.grid.count)
    return GridFunction(u.grid, out)


def nonlinearity_parts(u: GridFunction, floor: float = 0.1) -> dict[int, GridFunction]:
    """Homogeneous parts of ``N(u)`` of degree 2..5 (they sum to ``N(u)``)."""
    _guard(u, floor)
    grid = u.grid
    uu = _Aff(0.0, u.values)
    one = _Aff(1.0)
    parts = {}
    for k in range(2, 6):
        acc = np.zeros(grid.count)
        for pos in itertools.combinations(range(5), k):
            slots = [uu if i in pos else one for i in range(5)]
            acc -= _m_chain(grid, *slots).full(grid.count)
        parts[k] = GridFunction(grid, acc)
    return parts


def nonlinearity_decomposed(u: GridFunction, u0: float | None = None, floor: float = 0.1) -> GridFunction:
    """``N(u)`` rebuilt from symmetrised forms with first slot ``u - u0``.

    With ``w = u - u0`` and ``a`` slots holding ``w`` the remaining slots are
    the constant ``1 + u0``, which gives

    ``N(u) = (1 - (1+u0)^4) p(D) w - sum_{a>=2} C(5,a) (1+u0)^(5-a) M_sym(w^a, 1^(5-a))``.

    ``u0`` defaults to the value at the left end of the grid.
    """
    _guard(u, floor)
    grid = u.grid
    if u0 is None:
        u0 = float(u.values[0])
    w = GridFunction(grid, u.values - u0)
    c = 1.0 + u0
    out = (1.0 - c**4) * _poly_apply(grid, w.values, p_poly())
    for a in range(2, 6):
        args = [w] * a + [1.0] * (5 - a)
        out = out - math.comb(5, a) * c ** (5 - a) * _m_sym_aff(grid, args).full(grid.count)
    return GridFunction(grid, out)


# ---------------------------------------------------------------------------
# velocity


def _vel_chain(grid: LogGrid, F1: _Aff, F2: _Aff, F3: _Aff) -> _Aff:
    r = F3.d(grid, 0.5)
    r = F2.mul(r).d(grid, -0.5)
    return F1.mul(r).scale(1.5)


def velocity_tilde(F1: Operand, F2: Operand, F3: Operand, grid: LogGrid | None = None) -> GridFunction:
    """``(3/2) F1 (D - 1/2) F2 (D + 1/2) F3``.

    Pass ``grid`` when all three arguments are scalars.
    """
    args = (F1, F2, F3)
    if grid is None:
        grid = _common_grid(args)
    return _to_gf(grid, _vel_chain(grid, *map(_as_aff, args)))


def velocity_tilde_sym(F1: Operand, F2: Operand, F3: Operand, grid: LogGrid | None = None) -> GridFunction:
    args = (F1, F2, F3)
    if grid is None:
        grid = _common_grid(args)
    affs = [_as_aff(a) for a in args]
    total = np.zeros(grid.count)
    for perm in itertools.permutations(range(3)):
        total += _vel_chain(grid, *(affs[i] for i in perm)).full(grid.count)
    return GridFunction(grid, total / 6.0)


@dataclass
class VelocityDecomposition:
    A: float
    B: GridFunction
    C: GridFunction
    u0: float
    reading: str
    candidates: dict = field(default_factory=dict)

    @property
    def total(self) -> GridFunction:
        return self.B + self.C + self.A


def velocity_decomposition(u: GridFunction, u0: float, floor: float = 0.1) -> VelocityDecomposition:
    """Split the velocity into a constant, a linear and a nonlinear part in ``u - u0``.

    Several readings of the linear part are evaluated; the one whose sum
    ``A + B + C`` matches the direct evaluation of ``M~(F, F, F)`` is
    returned and the mismatch of every reading is recorded in ``candidates``.
    """
    _guard(u, floor)
    grid = u.grid
    c = 1.0 + u0
    w = GridFunction(grid, u.values - u0)
    A = -0.375 * c**3
    C = 3.0 * c * velocity_tilde_sym(w, w, 1.0) + velocity_tilde_sym(w, w, w)
    pt = p_tilde_poly()
    readings = {
        "sym_form": 3.0 * c**2 * velocity_tilde_sym(w, 1.0, 1.0),
        "p_tilde_of_u_minus_u0": GridFunction(grid, 1.5 * c**2 * _poly_apply(grid, w.values, pt)),
        "p_tilde_of_one_plus_u0": grid.constant(1.5 * c**2 * pt(0.0) * c),
        "p_tilde_of_one_plus_u": GridFunction(
            grid, 1.5 * c**2 * (_poly_apply(grid, w.values, pt) + pt(0.0) * c)
        ),
    }
    F = _Aff(1.0, u.values)
    direct = _vel_chain(grid, F, F, F).full(grid.count)
    scale = max(1.0, float(np.max(np.abs(direct))))
    mism = {
        name: float(np.max(np.abs(A + B.values + C.values - direct)) / scale)
        for name, B in readings.items()
    }
    # the symmetric form is the definition; among the closed forms pick the best match
    closed = {k: v for k, v in mism.items() if k != "sym_form"}
    best = min(closed, key=closed.get)
    return VelocityDecomposition(A, readings[best], C, u0, best, mism)
