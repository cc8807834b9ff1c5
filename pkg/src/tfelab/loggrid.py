"""Grid functions on a uniform logarithmic grid ``s = ln x`` and weighted norms.

The logarithmic derivative ``D = x d/dx`` is ``d/ds`` on this grid and is
discretised with fourth-order finite differences (centred in the interior,
one-sided in the boundary bands).
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .exponents import AdmissibleExponent, RealPolynomial, lattice

__all__ = [
    "LogGrid",
    "GridFunction",
    "Trajectory",
    "ExpansionFit",
    "Cutoff",
    "GridMismatch",
    "StencilError",
    "FitError",
    "fd_weights",
    "diff_matrix",
    "d_apply",
    "poly_of_d",
    "weighted_l2",
    "sobolev",
    "initial_norm",
    "solution_norm",
    "rhs_norm",
    "extract_expansion",
    "sup_norm",
    "interior_window",
    "synthesize",
    "time_derivative",
]


class GridMismatch(ValueError):
    pass


class StencilError(ValueError):
    pass


class FitError(RuntimeError):
    pass


@dataclass(frozen=True)
class LogGrid:
    s_min: float = -12.0
    s_max: float = 6.0
    count: int = 1024

    def __post_init__(self):
        if self.count < 16:
            raise ValueError("a LogGrid needs at least 16 points")
        if not self.s_min < 0.0 < self.s_max:
            raise ValueError("need s_min < 0 < s_max")

    @property
    def h(self) -> float:
        return (self.s_max - self.s_min) / (self.count - 1)

    @property
    def s(self) -> np.ndarray:
        return np.linspace(self.s_min, self.s_max, self.count)

    @property
    def x(self) -> np.ndarray:
        return np.exp(self.s)

    def refined(self, factor: int = 2) -> "LogGrid":
        return LogGrid(self.s_min, self.s_max, (self.count - 1) * factor + 1)

    def coarsened(self, factor: int) -> "LogGrid":
        """Every ``factor``-th point starting at ``s_min`` (a short tail may be dropped)."""
        if factor < 1:
            raise ValueError("factor must be positive")
        n = (self.count - 1) // factor + 1
        return LogGrid(self.s_min, self.s_min + (n - 1) * factor * self.h, n)

    def shifted(self, ds: float) -> "LogGrid":
        return LogGrid(self.s_min + ds, self.s_max + ds, self.count)

    def zeros(self) -> "GridFunction":
        return GridFunction(self, np.zeros(self.count))

    def constant(self, c: float) -> "GridFunction":
        return GridFunction(self, np.full(self.count, float(c)))

    def sample(self, fn) -> "GridFunction":
        """Sample ``fn(x)`` on the grid."""
        return GridFunction(self, np.asarray(fn(self.x), dtype=float))

    def to_dict(self) -> dict:
        return {"s_min": self.s_min, "s_max": self.s_max, "count": self.count}


class GridFunction:
    """Immutable real values on a :class:`LogGrid`."""

    __slots__ = ("grid", "values")

    def __init__(self, grid: LogGrid, values):
        v = np.array(values, dtype=float)
        if v.shape != (grid.count,):
            raise ValueError(f"expected {grid.count} values, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("grid function has non-finite entries")
        v.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", v)

    def __setattr__(self, name, value):
        raise AttributeError("GridFunction is immutable")

    def _other(self, other):
        if isinstance(other, GridFunction):
            if other.grid != self.grid:
                raise GridMismatch("grid functions live on different grids")
            return other.values
        return other

    def __add__(self, other):
        return GridFunction(self.grid, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return GridFunction(self.grid, self.values - self._other(other))

    def __rsub__(self, other):
        return GridFunction(self.grid, self._other(other) - self.values)

    def __mul__(self, other):
        return GridFunction(self.grid, self.values * self._other(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return GridFunction(self.grid, self.values / self._other(other))

    def __neg__(self):
        return GridFunction(self.grid, -self.values)

    def __len__(self) -> int:
        return self.grid.count

    def __repr__(self) -> str:
        return f"GridFunction(count={self.grid.count}, sup={np.max(np.abs(self.values)):.3g})"

    @property
    def s(self) -> np.ndarray:
        return self.grid.s

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["s", "x", "value"])
            for s, x, v in zip(self.grid.s, self.grid.x, self.values):
                w.writerow([repr(float(s)), repr(float(x)), repr(float(v))])

    @classmethod
    def from_csv(cls, path, grid: LogGrid | None = None) -> "GridFunction":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        if grid is None:
            grid = LogGrid(float(data[0, 0]), float(data[-1, 0]), len(data))
        return cls(grid, data[:, 2])


def _check_same_grid(*fs: GridFunction) -> LogGrid:
    g = fs[0].grid
    for f in fs[1:]:
        if f.grid != g:
            raise GridMismatch("grid functions live on different grids")
    return g


# ---------------------------------------------------------------------------
# finite differences


def fd_weights(offsets: Sequence[int], order: int) -> np.ndarray:
    """Finite-difference weights at integer ``offsets`` for the ``order``-th derivative.

    Unit spacing; solves the moment (Vandermonde) system.
    """
    off = np.asarray(offsets, dtype=float)
    n = len(off)
    V = np.vander(off, n, increasing=True).T
    rhs = np.zeros(n)
    rhs[order] = math.factorial(order)
    return np.linalg.solve(V, rhs)


@lru_cache(maxsize=64)
def diff_matrix(grid: LogGrid, order: int, accuracy: int = 4) -> sp.csr_matrix:
    """Sparse matrix of ``d^order/ds^order`` with the given (even) order of accuracy.

    Interior rows use centred stencils; rows within the half-width of either
    end use one-sided stencils of ``order + accuracy`` points.
    """
    if order not in (1, 2, 3, 4):
        raise ValueError("order must be 1..4")
    if accuracy < 2 or accuracy % 2:
        raise ValueError("accuracy must be a positive even integer")
    n = grid.count
    hw = (order + 1) // 2 + accuracy // 2 - 1
    width = order + accuracy
    if n < max(2 * hw + 1, width) + 2:
        raise StencilError(f"grid with {n} points too small for order {order}")
    scale = grid.h ** (-order)
    centred = fd_weights(range(-hw, hw + 1), order) * scale
    rows, cols, vals = [], [], []
    for i in range(n):
        if i < hw:
            offs = np.arange(width) - i
        elif i >= n - hw:
            offs = np.arange(-width + 1, 1) + (n - 1 - i)
        else:
            offs = np.arange(-hw, hw + 1)
        w = centred if (hw <= i < n - hw) else fd_weights(offs, order) * scale
        rows.extend([i] * len(offs))
        cols.extend(i + offs)
        vals.extend(w)
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def _apply_d(grid: LogGrid, values: np.ndarray, order: int, accuracy: int = 4) -> np.ndarray:
    """Apply ``D**order`` along the last axis of ``values``."""
    out = np.asarray(values, dtype=float)
    remaining = order
    while remaining > 0:
        step = min(remaining, 4)
        out = (diff_matrix(grid, step, accuracy) @ out.T).T
        remaining -= step
    return out


def d_apply(u: GridFunction, order: int = 1) -> GridFunction:
    """``D**order u``; ``order`` 1..4 is a single stencil, higher orders compose."""
    if order < 1:
        raise ValueError("order must be >= 1")
    return GridFunction(u.grid, _apply_d(u.grid, u.values, order))


def _poly_apply(grid: LogGrid, values: np.ndarray, P: RealPolynomial, accuracy: int = 4) -> np.ndarray:
    c = np.asarray(P.coefficients, dtype=float)
    v = np.asarray(values, dtype=float)
    out = c[-1] * v
    for ck in c[-2::-1]:
        out = _apply_d(grid, out, 1, accuracy) + ck * v
    return out


def poly_of_d(u: GridFunction, P: RealPolynomial) -> GridFunction:
    """``P(D) u`` by Horner's scheme in ``D``."""
    return GridFunction(u.grid, _poly_apply(u.grid, u.values, P))


# ---------------------------------------------------------------------------
# norms


def _trapz_weights(s: np.ndarray) -> np.ndarray:
    w = np.empty_like(s)
    d = np.diff(s)
    w[0] = d[0] / 2
    w[-1] = d[-1] / 2
    w[1:-1] = (d[:-1] + d[1:]) / 2
    return w


def _window_mask(grid: LogGrid, window) -> np.ndarray:
    s = grid.s
    if window is None:
        return np.ones(grid.count, dtype=bool)
    lo, hi = window
    lo = -np.inf if lo is None else lo
    hi = np.inf if hi is None else hi
    return (s >= lo - 1e-12) & (s <= hi + 1e-12)


def interior_window(grid: LogGrid, sponge_fraction: float = 0.1, margin: float = 1.0) -> tuple[float, float]:
    """``s`` window that skips the left closure rows and the right sponge layer.

    High derivatives of solver output pick up grid-scale noise from the
    boundary rows; diagnostics on trajectories are evaluated on this window.
    """
    length = grid.s_max - grid.s_min
    lo = grid.s_min + margin
    hi = grid.s_max - sponge_fraction * length - margin
    if hi <= lo:
        raise ValueError("grid too short for the requested interior window")
    return (lo, hi)


def _wl2_sq(grid: LogGrid, values: np.ndarray, alpha: float, window=None) -> np.ndarray:
    """Squared weighted L2 norm along the last axis (trapezoid in ``s``)."""
    mask = _window_mask(grid, window)
    s = grid.s[mask]
    if s.size < 2:
        return np.zeros(np.shape(values)[:-1])
    w = _trapz_weights(s) * np.exp(-2.0 * alpha * s)
    v = np.asarray(values)[..., mask]
    return np.sum(w * v * v, axis=-1)


def weighted_l2(u: GridFunction, alpha: float, window=None) -> float:
    """``sqrt(int exp(-2 alpha s) u^2 ds)`` over the grid (or an ``s`` window)."""
    return float(math.sqrt(_wl2_sq(u.grid, u.values, alpha, window)))


def _sobolev_sq(grid: LogGrid, values: np.ndarray, k: int, alpha: float, window=None):
    total = _wl2_sq(grid, values, alpha, window)
    d = np.asarray(values, dtype=float)
    for _ in range(k):
        d = _apply_d(grid, d, 1)
        total = total + _wl2_sq(grid, d, alpha, window)
    return total


def sobolev(u: GridFunction, k: int, alpha: float, window=None) -> float:
    """``sqrt(sum_{l<=k} |D^l u|_alpha^2)``."""
    if k < 0:
        raise ValueError("k must be non-negative")
    return float(math.sqrt(_sobolev_sq(u.grid, u.values, k, alpha, window)))


def sup_norm(u: GridFunction) -> float:
    return float(np.max(np.abs(u.values)))


# ---------------------------------------------------------------------------
# synthesis and expansion fits


@dataclass(frozen=True)
class Cutoff:
    """Smooth cutoff equal to 1 for ``x <= x_on`` and 0 for ``x >= x_off``."""

    x_on: float = 1.0
    x_off: float = 4.0

    def __post_init__(self):
        if not 0 < self.x_on < self.x_off:
            raise ValueError("need 0 < x_on < x_off")

    def __call__(self, x) -> np.ndarray:
        s = np.log(np.asarray(x, dtype=float))
        t = (s - math.log(self.x_on)) / (math.log(self.x_off) - math.log(self.x_on))
        t = np.clip(t, 0.0, 1.0)

        def f(z):
            out = np.zeros_like(z)
            pos = z > 0
            out[pos] = np.exp(-1.0 / z[pos])
            return out

        a, b = f(1.0 - t), f(t)
        return a / (a + b)


def _exponent_value(i) -> float:
    return float(i.value) if isinstance(i, AdmissibleExponent) else float(i)


def synthesize(
    coeffs: Mapping, envelope: Cutoff | None, grid: LogGrid
) -> GridFunction:
    """``sum_i c_i x^i`` times a smooth cutoff (``None`` for no cutoff)."""
    x = grid.x
    total = np.zeros(grid.count)
    for i, c in coeffs.items():
        total += float(c) * x ** _exponent_value(i)
    if envelope is not None:
        total *= envelope(x)
    return GridFunction(grid, total)


@dataclass
class ExpansionFit:
    N0: int
    exponents: tuple[AdmissibleExponent, ...]
    coefficients: dict
    remainder_norm: float
    condition_number: float
    x_fit: float
    delta: float
    confidence: dict = field(default_factory=dict)
    near_degenerate: tuple = ()
    flagged: bool = False

    def coefficient(self, n1: int, n2: int = 0) -> float:
        return float(self.coefficients.get(AdmissibleExponent(n1, n2), 0.0))

    @property
    def u0(self) -> float:
        return self.coefficient(0, 0)

    def partial_sum(self, grid: LogGrid, below: float = math.inf) -> np.ndarray:
        x = grid.x
        out = np.zeros(grid.count)
        for e, c in self.coefficients.items():
            if e.value < below:
                out += c * x**e.value
        return out

    def to_dict(self) -> dict:
        return {
            "N0": self.N0,
            "x_fit": self.x_fit,
            "fit_window": [0.0, self.x_fit],
            "delta": self.delta,
            "coefficients": [
                {
                    "n1": e.n1,
                    "n2": e.n2,
                    "exponent": e.value,
                    "value": float(self.coefficients[e]),
                    "confidence": float(self.confidence.get(e, float("nan"))),
                }
                for e in self.exponents
            ],
            "remainder_norm": self.remainder_norm,
            "condition_number": self.condition_number,
            "near_degenerate": [[a.label(), b.label()] for a, b in self.near_degenerate],
            "flagged": self.flagged,
        }

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=2)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def _fit_system(grid: LogGrid, exps, x_fit: float, alpha: float):
    mask = grid.x <= x_fit * (1 + 1e-12)
    s = grid.s[mask]
    x = grid.x[mask]
    w = np.sqrt(_trapz_weights(s) * np.exp(-2.0 * alpha * s))
    A = np.stack([x ** e.value for e in exps], axis=1) * w[:, None]
    scale = np.linalg.norm(A, axis=0)
    return mask, w, A / scale, scale


def extract_expansion(
    u: GridFunction,
    N0: int,
    x_fit: float = 0.1,
    delta: float = 0.05,
    cond_threshold: float = 1e12,
    min_points_per_exponent: int = 5,
) -> ExpansionFit:
    """Least-squares fit of ``u`` against ``{x^i : i in K_N0}`` on ``(0, x_fit]``.

    Rows carry the weight ``x^-(N0 - delta)`` of the remainder norm, columns
    are scaled to unit norm and the system is solved by QR.  A condition
    number above ``cond_threshold`` flags the fit (coefficients still returned).
    """
    return _fit_many(u.grid, u.values[None, :], N0, x_fit, delta, cond_threshold,
                     min_points_per_exponent)[0]


def _fit_many(grid, values2d, N0, x_fit, delta, cond_threshold=1e12,
              min_points_per_exponent=5) -> list[ExpansionFit]:
    exps = lattice(N0).entries
    if not grid.x[0] < x_fit <= grid.x[-1]:
        raise FitError("x_fit outside the grid")
    alpha = N0 - delta
    mask, w, A, scale = _fit_system(grid, exps, x_fit, alpha)
    if mask.sum() < min_points_per_exponent * len(exps):
        raise FitError(
            f"only {int(mask.sum())} points below x_fit; need "
            f"{min_points_per_exponent * len(exps)}"
        )
    Q, R = np.linalg.qr(A)
    sv = np.linalg.svd(R, compute_uv=False)
    cond = float(sv[0] / sv[-1])
    Rinv = np.linalg.inv(R)
    diag = np.sqrt(np.sum(Rinv**2, axis=1)) / scale
    near = tuple(
        (a, b) for a, b in zip(exps, exps[1:]) if b.value - a.value < 0.1
    )
    flagged = cond > cond_threshold
    if flagged:
        warnings.warn(f"expansion fit ill-conditioned (cond={cond:.3g})", RuntimeWarning)
    B = np.asarray(values2d)[:, mask] * w[None, :]
    sol = np.linalg.solve(R, Q.T @ B.T)  # (nexp, nt)
    coef = sol / scale[:, None]
    resid = B - (A @ sol).T
    dof = max(mask.sum() - len(exps), 1)
    fits = []
    for j in range(B.shape[0]):
        rnorm = float(np.linalg.norm(resid[j]))
        sigma = rnorm / math.sqrt(dof)
        fits.append(
            ExpansionFit(
                N0=N0,
                exponents=exps,
                coefficients={e: float(coef[i, j]) for i, e in enumerate(exps)},
                remainder_norm=rnorm,
                condition_number=cond,
                x_fit=x_fit,
                delta=delta,
                confidence={e: float(sigma * diag[i]) for i, e in enumerate(exps)},
                near_degenerate=near,
                flagged=flagged,
            )
        )
    return fits


# ---------------------------------------------------------------------------
# trajectories


class Trajectory:
    """Time-stamped snapshots on a common grid, with optional expansion fits."""

    def __init__(self, grid: LogGrid, times, values, fits=None, meta=None):
        t = np.asarray(times, dtype=float)
        v = np.asarray(values, dtype=float)
        if v.shape != (t.size, grid.count):
            raise ValueError("values must have shape (len(times), grid.count)")
        if t.size and (t[0] < 0 or np.any(np.diff(t) <= 0)):
            raise ValueError("times must be increasing and non-negative")
        self.grid = grid
        self.times = t
        self.values = v
        self.fits = fits
        self.meta = dict(meta or {})

    @classmethod
    def from_snapshots(cls, times, snapshots: Sequence[GridFunction]) -> "Trajectory":
        grid = _check_same_grid(*snapshots)
        return cls(grid, times, np.stack([f.values for f in snapshots]))

    def __len__(self) -> int:
        return self.times.size

    @property
    def snapshots(self) -> list[GridFunction]:
        return [GridFunction(self.grid, v) for v in self.values]

    def snapshot(self, j: int) -> GridFunction:
        return GridFunction(self.grid, self.values[j])

    def scaled(self, c: float) -> "Trajectory":
        return Trajectory(self.grid, self.times, c * self.values, None, self.meta)

    def __sub__(self, other: "Trajectory") -> "Trajectory":
        if other.grid != self.grid or not np.array_equal(other.times, self.times):
            raise GridMismatch("trajectories are on different meshes")
        return Trajectory(self.grid, self.times, self.values - other.values)

    def interpolate(self, t: float) -> np.ndarray:
        """Values at time ``t`` by linear interpolation between snapshots."""
        j = int(np.searchsorted(self.times, t))
        if j <= 0:
            return self.values[0].copy()
        if j >= self.times.size:
            return self.values[-1].copy()
        t0, t1 = self.times[j - 1], self.times[j]
        th = (t - t0) / (t1 - t0)
        return (1 - th) * self.values[j - 1] + th * self.values[j]

    def fit_all(self, N0: int, x_fit: float = 0.1, delta: float = 0.05) -> list[ExpansionFit]:
        self.fits = _fit_many(self.grid, self.values, N0, x_fit, delta)
        return self.fits

    def coefficient_series(self, exponent: AdmissibleExponent) -> np.ndarray:
        if self.fits is None:
            raise FitError("trajectory has no expansion fits")
        return np.array([f.coefficients.get(exponent, 0.0) for f in self.fits])

    def max_sup(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0

    def to_csv(self, path) -> None:
        """Long format: ``t, s, x, value``."""
        s, x = self.grid.s, self.grid.x
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "s", "x", "value"])
            for t, row in zip(self.times, self.values):
                for sj, xj, v in zip(s, x, row):
                    w.writerow([repr(float(t)), repr(float(sj)), repr(float(xj)), repr(float(v))])

    @classmethod
    def from_csv(cls, path) -> "Trajectory":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        times = np.unique(data[:, 0])
        n = data.shape[0] // times.size
        s = data[:n, 1]
        grid = LogGrid(float(s[0]), float(s[-1]), n)
        return cls(grid, times, data[:, 3].reshape(times.size, n))


def time_derivative(times: np.ndarray, values: np.ndarray, m: int) -> np.ndarray:
    """``m``-th time derivative along axis 0; second-order, one-sided at the ends."""
    out = np.asarray(values, dtype=float)
    if m and times.size < 3:
        raise ValueError("need at least 3 snapshots for time derivatives")
    if m and times.size < 2 * m + 1:
        raise ValueError(f"need at least {2 * m + 1} snapshots for d^{m}/dt^{m}")
    for _ in range(m):
        out = np.gradient(out, times, axis=0, edge_order=2)
    return out


# ---------------------------------------------------------------------------
# parabolic norms


def initial_norm(
    u0: GridFunction,
    k: int,
    delta: float,
    x_fit: float = 0.1,
    max_order: int | None = 6,
    window=None,
) -> float:
    """``sqrt(|u0|_{k+6,-delta}^2 + |u0 - u0(0)|_{k+6,delta}^2)``.

    The boundary value comes from an ``N0 = 1`` expansion fit.  ``max_order``
    caps the number of derivatives actually evaluated (``None``: no cap).
    """
    order = k + 6 if max_order is None else min(k + 6, max_order)
    if not np.any(u0.values):
        return 0.0
    c0 = extract_expansion(u0, 1, x_fit, delta).u0
    a = _sobolev_sq(u0.grid, u0.values, order, -delta, window)
    b = _sobolev_sq(u0.grid, u0.values - c0, order, delta, window)
    return float(math.sqrt(a + b))


def _time_weight(times: np.ndarray, power: float) -> np.ndarray:
    with np.errstate(divide="ignore"):
        w = np.where(times > 0, times ** power, 1.0 if power == 0 else 0.0)
    return w


def _trapz_time(times: np.ndarray, y: np.ndarray) -> float:
    if times.size < 2:
        return 0.0
    return float(np.sum(np.diff(times) * (y[1:] + y[:-1]) / 2))


def _coefficient_block(traj: Trajectory, N0: int, x_fit: float, delta: float):
    fits = traj.fits
    if fits is None or fits[0].N0 != N0:
        fits = traj.fit_all(N0, x_fit, delta)
    exps = fits[0].exponents
    C = np.array([[f.coefficients[e] for e in exps] for f in fits])  # (nt, nexp)
    return exps, C


def _subtracted(grid, times, values, exps, C, m, below, lower=-math.inf):
    """``d^m/dt^m`` of values minus the partial expansion with exponents in ``(lower, below)``."""
    dv = time_derivative(times, values, m)
    dC = time_derivative(times, C, m)
    x = grid.x
    for j, e in enumerate(exps):
        if lower < e.value < below:
            dv = dv - dC[:, j : j + 1] * x[None, :] ** e.value
    return dv


def _parabolic_terms(traj: Trajectory, sched, A, kind: str, x_fit, max_order, window):
    from .exponents import shifted_weights  # local import keeps the module graph flat

    grid, times = traj.grid, traj.times
    N0 = sched.N0
    exps, C = _coefficient_block(traj, N0, x_fit, sched.delta)
    cap = (lambda o: o) if max_order is None else (lambda o: min(o, max_order))
    lower = _BETA_PLUS if kind == "rhs" else -math.inf
    total = 0.0
    terms = []
    for w, sign, ap in shifted_weights(A, sched.delta):
        alpha, N = w.alpha, w.N
        tw = _time_weight(times, 2 * (float(alpha) + N) - 3)
        for m in range(N):
            n = N - m
            ell = sched.ell(n, m, alpha, sign)
            if kind == "solution":
                wt = ap + n - 1.5
                v = _subtracted(grid, times, traj.values, exps, C, m, wt)
                sup_term = float(np.max(tw * _sobolev_sq(grid, v, cap(ell + 2), wt, window)))
                wt1 = ap + n - 2
                v1 = _subtracted(grid, times, traj.values, exps, C, m + 1, wt1)
                int1 = _trapz_time(times, tw * _sobolev_sq(grid, v1, cap(ell), wt1, window))
                wt2 = ap + n - 1
                v2 = _subtracted(grid, times, traj.values, exps, C, m, wt2)
                int2 = _trapz_time(times, tw * _sobolev_sq(grid, v2, cap(ell + 4), wt2, window))
                part = sup_term + int1 + int2
                terms.append({"alpha": alpha.label(), "sign": sign, "N": N, "m": m,
                              "sup": sup_term, "dt_int": int1, "space_int": int2})
            else:
                wt = ap + n - 1
                v = _subtracted(grid, times, traj.values, exps, C, m, wt, lower)
                part = _trapz_time(times, tw * _sobolev_sq(grid, v, cap(ell), wt, window))
                terms.append({"alpha": alpha.label(), "sign": sign, "N": N, "m": m,
                              "int": part})
            total += part
    return math.sqrt(max(total, 0.0)), terms


_BETA_PLUS = lattice(1).entries[1].value + 1e-9


def solution_norm(
    traj: Trajectory,
    sched,
    A,
    x_fit: float = 0.1,
    max_order: int | None = 6,
    window=None,
    return_terms: bool = False,
):
    """Discrete parabolic solution norm.

    Sup-in-time terms are maxima over snapshots, time integrals are
    trapezoidal, and expansion coefficients come from per-snapshot fits.
    """
    if not np.any(traj.values):
        return (0.0, []) if return_terms else 0.0
    if traj.times.size < 2 * A.N0 + 1:
        raise ValueError("not enough snapshots for the requested time derivatives")
    val, terms = _parabolic_terms(traj, sched, A, "solution", x_fit, max_order, window)
    return (val, terms) if return_terms else val


def rhs_norm(
    ftraj: Trajectory,
    sched,
    A,
    x_fit: float = 0.1,
    max_order: int | None = 6,
    window=None,
    return_terms: bool = False,
):
    """Discrete parabolic norm of a right-hand side (coefficients 0 and beta kept)."""
    if not np.any(ftraj.values):
        return (0.0, []) if return_terms else 0.0
    if ftraj.times.size < 2 * A.N0 + 1:
        raise ValueError("not enough snapshots for the requested time derivatives")
    val, terms = _parabolic_terms(ftraj, sched, A, "rhs", x_fit, max_order, window)
    return (val, terms) if return_terms else val
