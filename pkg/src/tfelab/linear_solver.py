"""Implicit time stepping for ``x u_t + P(D) u = f`` on a logarithmic grid.

In ``s = ln x`` the equation reads ``e^s u_t + P(d/ds) u = f``.  The mass
matrix ``M = diag(e^s)`` degenerates at the left end, so the scheme is
implicit (theta-method) and the factorisation of ``M + theta dt L`` is
computed once per run.

Boundary closure
----------------
* left end: ``D (D - beta) u = 0`` and ``D^2 (D - beta) u = 0``.  Both hold
  for the modes ``x^0`` and ``x^beta`` and suppress the growing modes
  ``x^{-3/2}``, ``x^{-beta-1/2}`` of ``p``.  ``left="none"`` keeps one-sided
  stencils only.
* right end: value and slope clamped to boundary data (default: the initial
  far-field value, zero slope) plus a sponge over the last part of the grid
  relaxing towards that value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spl

from .exponents import (
    BETA,
    RealPolynomial,
    cascade_polynomials,
    coercivity_set,
    p_poly,
    q_polynomial,
)
from .loggrid import (
    GridFunction,
    LogGrid,
    Trajectory,
    _apply_d,
    _poly_apply,
    _sobolev_sq,
    _trapz_time,
    _wl2_sq,
    diff_matrix,
    time_derivative,
)

__all__ = [
    "BandedOperator",
    "LinearProblem",
    "LinearSolver",
    "SolverError",
    "assemble",
    "step",
    "solve_linear",
    "random_bumps",
    "coercivity_check",
    "CoercivityReport",
    "maxreg_diagnostic",
    "cascade_verify",
    "hardy_bench",
    "anisotropic_bench",
    "mms_family",
    "mms_convergence",
    "MMSFamily",
    "RationalMMSFamily",
    "mms_run",
    "cascade_study",
]


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class BandedOperator:
    """Sparse banded discretisation of ``P(d/ds)``."""

    matrix: sp.csr_matrix
    P: RealPolynomial
    grid: LogGrid

    @property
    def bandwidth(self) -> int:
        coo = self.matrix.tocoo()
        return int(np.max(np.abs(coo.row - coo.col))) if coo.nnz else 0

    def __matmul__(self, v):
        return self.matrix @ v


def assemble(P: RealPolynomial, grid: LogGrid) -> BandedOperator:
    """``L ~ P(d/ds)`` built from the fourth-order ``D^k`` stencils (``k <= 4``).

    Degrees above four compose the order-4 stencil with a lower one.
    """
    c = np.asarray(P.coefficients, dtype=float)
    n = grid.count
    L = sp.identity(n, format="csr") * c[0]
    D4 = None
    for k in range(1, len(c)):
        if c[k] == 0.0:
            continue
        if k <= 4:
            term = diff_matrix(grid, k)
        else:
            D4 = diff_matrix(grid, 4) if D4 is None else D4
            term = sp.identity(n, format="csr")
            q, r = divmod(k, 4)
            for _ in range(q):
                term = D4 @ term
            if r:
                term = diff_matrix(grid, r) @ term
        L = L + c[k] * term
    return BandedOperator(L.tocsr(), P, grid)


Forcing = Callable[[float], np.ndarray]


@dataclass
class LinearProblem:
    P: RealPolynomial
    grid: LogGrid
    initial: GridFunction
    rhs: Forcing | Trajectory | None = None
    t_end: float = 10.0
    dt: float = 1e-3
    theta: float = 1.0
    stride: int = 10
    boundary: Callable[[float], tuple[float, float]] | None = None
    left: str = "asymptotic"
    sponge_fraction: float = 0.1
    sponge_rate: float = 50.0
    refine: int = 1

    def __post_init__(self):
        if self.dt <= 0 or self.t_end < 0:
            raise ValueError("need dt > 0 and t_end >= 0")
        if not 0.5 <= self.theta <= 1.0:
            raise ValueError("theta must lie in [1/2, 1]")
        if self.stride < 1:
            raise ValueError("stride must be >= 1")
        if self.left not in ("asymptotic", "none"):
            raise ValueError("left closure must be 'asymptotic' or 'none'")
        if self.initial.grid != self.grid:
            raise ValueError("initial data lives on another grid")

    def forcing(self, t: float) -> np.ndarray:
        if self.rhs is None:
            return np.zeros(self.grid.count)
        if isinstance(self.rhs, Trajectory):
            return self.rhs.interpolate(t)
        return np.asarray(self.rhs(t), dtype=float)


class LinearSolver:
    """Holds the factorised theta-scheme for one :class:`LinearProblem`."""

    def __init__(self, prob: LinearProblem):
        self.prob = prob
        g = prob.grid
        n = g.count
        self.op = assemble(prob.P, g)
        L = self.op.matrix
        x = g.x
        s = g.s
        width = prob.sponge_fraction * (g.s_max - g.s_min)
        ramp = np.clip((s - (g.s_max - width)) / width, 0.0, 1.0) if width > 0 else 0 * s
        self.sponge = prob.sponge_rate * ramp**2 * x
        M = sp.diags(x)
        S = sp.diags(self.sponge)
        th, dt = prob.theta, prob.dt
        A = (M + th * dt * (L + S)).tolil()
        self.B = (M - (1 - th) * dt * (L + S)).tocsr()
        D1 = diff_matrix(g, 1)
        self._slope_row = D1.getrow(n - 1)
        A[n - 1, :] = 0.0
        A[n - 1, n - 1] = 1.0
        A[n - 2, :] = self._slope_row
        self._left_rows = 0
        if prob.left == "asymptotic":
            Q = (diff_matrix(g, 2) - BETA * D1).tocsr()
            A[0, :] = Q.getrow(0)
            A[1, :] = (diff_matrix(g, 1) @ Q).getrow(0)
            self._left_rows = 2
        self.A = A.tocsc()
        # extended-precision copies for the iterative-refinement residual
        self._A_ld = A.tocsr().astype(np.longdouble)
        self._B_ld = self.B.astype(np.longdouble)
        try:
            self.lu = spl.splu(self.A)
        except RuntimeError as exc:  # singular factor
            raise SolverError(f"factorisation failed: {exc}") from exc
        u0 = prob.initial.values
        self._far = (float(u0[-1]), 0.0)

    def boundary(self, t: float) -> tuple[float, float]:
        return self._far if self.prob.boundary is None else self.prob.boundary(t)

    def step(self, u: np.ndarray, f_now: np.ndarray, f_next: np.ndarray, t_next: float) -> np.ndarray:
        """One theta-step.

        The rows of ``M + theta dt L`` are of size ``dt h^-4``, so plain LU
        leaves round-off of that relative size in every step.  ``refine``
        sweeps of iterative refinement with an extended-precision residual
        bring it back to the level of ``eps |u|``.
        """
        th, dt = self.prob.theta, self.prob.dt
        value, slope = self.boundary(t_next)
        ld = np.longdouble
        forcing = dt * (th * np.asarray(f_next, ld) + (1 - th) * np.asarray(f_now, ld))
        b = self._B_ld @ np.asarray(u, ld) + forcing + dt * self.sponge.astype(ld) * value
        b[-1] = value
        b[-2] = slope
        if self._left_rows:
            b[0] = 0.0
            b[1] = 0.0
        out = self.lu.solve(b.astype(float))
        for _ in range(self.prob.refine):
            res = b - self._A_ld @ out.astype(ld)
            out = out + self.lu.solve(res.astype(float))
        if not np.all(np.isfinite(out)):
            bad = int(np.argmax(~np.isfinite(out)))
            raise SolverError(f"non-finite solution at grid index {bad}, t = {t_next:.4g}")
        return out


def step(
    u: GridFunction,
    f_now: GridFunction,
    f_next: GridFunction,
    dt: float,
    theta: float,
    P: RealPolynomial | None = None,
    t_next: float = 0.0,
    **options,
) -> GridFunction:
    """One theta-step for ``x u_t + P(D) u = f`` (``P = p`` by default).

    Builds a throw-away solver; use :class:`LinearSolver` to reuse the factorisation.
    """
    prob = LinearProblem(P or p_poly(), u.grid, u, None, dt, dt, theta, **options)
    solver = LinearSolver(prob)
    return GridFunction(u.grid, solver.step(u.values, f_now.values, f_next.values, t_next))


def solve_linear(prob: LinearProblem, solver: LinearSolver | None = None) -> Trajectory:
    """Integrate to ``t_end``; snapshots every ``stride`` steps (and at ``t = 0``)."""
    solver = solver or LinearSolver(prob)
    nsteps = int(round(prob.t_end / prob.dt))
    u = prob.initial.values.copy()
    times = [0.0]
    snaps = [u.copy()]
    f_now = prob.forcing(0.0)
    for j in range(1, nsteps + 1):
        t = j * prob.dt
        f_next = prob.forcing(t)
        u = solver.step(u, f_now, f_next, t)
        f_now = f_next
        if j % prob.stride == 0 or j == nsteps:
            if t > times[-1]:
                times.append(t)
                snaps.append(u.copy())
    meta = {"dt": prob.dt, "theta": prob.theta, "stride": prob.stride, "grid": prob.grid.to_dict(),
            "left": prob.left}
    return Trajectory(prob.grid, times, np.array(snaps), meta=meta)


# ---------------------------------------------------------------------------
# manufactured solutions


@dataclass(frozen=True)
class MMSFamily:
    """``u*(t, x) = e^{-t} x^a e^{-x}`` with closed-form forcing for ``P``."""

    a: float = 2.0
    P: RealPolynomial = field(default_factory=p_poly)

    def _dpolys(self, k: int):
        from numpy.polynomial import Polynomial

        X = Polynomial([0.0, 1.0])
        q = Polynomial([1.0])
        out = [q]
        for _ in range(k):
            # D(q x^a e^{-x}) = (x q' + a q - x q) x^a e^{-x}
            q = X * q.deriv() + self.a * q - X * q
            out.append(q)
        return out

    def exact(self, grid: LogGrid, t: float) -> np.ndarray:
        x = grid.x
        return math.exp(-t) * x**self.a * np.exp(-x)

    def forcing(self, grid: LogGrid) -> Forcing:
        x = grid.x
        base = x**self.a * np.exp(-x)
        c = self.P.coefficients
        qs = self._dpolys(len(c) - 1)
        pu = sum(ck * q(x) for ck, q in zip(c, qs)) * base
        shape = -x * base + pu
        return lambda t: math.exp(-t) * shape

    def boundary(self, grid: LogGrid):
        x_r = grid.x[-1]
        q1 = self._dpolys(1)[1]
        val = x_r**self.a * math.exp(-x_r)
        slope = q1(x_r) * val
        return lambda t: (math.exp(-t) * val, math.exp(-t) * slope)


@dataclass(frozen=True)
class RationalMMSFamily:
    """``u*(t, x) = e^{-t} x^a (1+x)^{-c}`` with closed-form forcing for ``P``.

    With ``y = x/(1+x)`` one has ``D(Q(y) x^a (1+x)^{-c}) = (y(1-y)Q' + (a - c y)Q) x^a (1+x)^{-c}``.
    The algebraic far field lets the sponge be switched off.
    """

    a: float = 2.0
    c: float = 4.0
    P: RealPolynomial = field(default_factory=p_poly)

    def _dpolys(self, k: int):
        from numpy.polynomial import Polynomial

        Y = Polynomial([0.0, 1.0])
        q = Polynomial([1.0])
        out = [q]
        for _ in range(k):
            q = Y * (1 - Y) * q.deriv() + (self.a - self.c * Y) * q
            out.append(q)
        return out

    def _shape(self, x):
        return x**self.a * (1.0 + x) ** (-self.c)

    def exact(self, grid: LogGrid, t: float) -> np.ndarray:
        return math.exp(-t) * self._shape(grid.x)

    def forcing(self, grid: LogGrid) -> Forcing:
        x = grid.x
        y = x / (1.0 + x)
        base = self._shape(x)
        c = self.P.coefficients
        qs = self._dpolys(len(c) - 1)
        shape = -x * base + sum(ck * q(y) for ck, q in zip(c, qs)) * base
        return lambda t: math.exp(-t) * shape

    def boundary(self, grid: LogGrid):
        x_r = grid.x[-1]
        val = float(self._shape(x_r))
        slope = float(self._dpolys(1)[1](x_r / (1.0 + x_r))) * val
        return lambda t: (math.exp(-t) * val, math.exp(-t) * slope)


def mms_family(a: float = 2.0, P: RealPolynomial | None = None, kind: str = "exponential",
               c: float = 4.0):
    """``kind="exponential"``: ``x^a e^{-x}``; ``kind="rational"``: ``x^a (1+x)^{-c}``."""
    if kind == "exponential":
        return MMSFamily(a, P or p_poly())
    if kind == "rational":
        return RationalMMSFamily(a, c, P or p_poly())
    raise ValueError(f"unknown MMS kind {kind!r}")


def mms_run(fam, grid: LogGrid, dt: float, t_end: float = 1.0, theta: float = 0.5,
            snapshot_dt: float = 0.01) -> tuple[Trajectory, Trajectory]:
    """Solve a manufactured problem; returns the solution and forcing trajectories."""
    F = fam.forcing(grid)
    rational = isinstance(fam, RationalMMSFamily)
    prob = LinearProblem(
        fam.P, grid, GridFunction(grid, fam.exact(grid, 0.0)), F, t_end=t_end, dt=dt,
        theta=theta, stride=max(1, int(round(snapshot_dt / dt))), boundary=fam.boundary(grid),
        sponge_rate=0.0 if rational else 50.0,
    )
    traj = solve_linear(prob)
    ftraj = Trajectory(grid, traj.times, np.array([F(t) for t in traj.times]))
    return traj, ftraj


def cascade_study(resolutions=((512, 2e-3), (1024, 1e-3)), pairs=((1, 0), (2, 0), (1, 1)),
                  s_range=(-12.0, 6.0), t_end: float = 1.0, **options) -> dict:
    """Cascade residuals on the rational manufactured run at several resolutions."""
    fam = mms_family(kind="rational")
    rows = []
    for count, dt in resolutions:
        grid = LogGrid(s_range[0], s_range[1], count)
        traj, ftraj = mms_run(fam, grid, dt, t_end)
        res = {f"{n},{m}": cascade_verify(traj, ftraj, n, m, **options) for n, m in pairs}
        rows.append({"count": count, "dt": dt, "residuals": res})
    keys = list(rows[0]["residuals"])
    decreasing = {k: all(rows[i + 1]["residuals"][k] < rows[i]["residuals"][k]
                         for i in range(len(rows) - 1)) for k in keys}
    return {"levels": rows, "decreasing": decreasing}


def mms_convergence(
    levels: int = 3,
    base_count: int = 513,
    base_dt: float = 0.02,
    t_end: float = 1.0,
    theta: float = 0.5,
    a: float = 2.0,
    s_range=(-12.0, 6.0),
) -> dict:
    """Refine ``dt`` and ``h_s`` together (factor 2) and report errors and orders."""
    fam = mms_family(a)
    errors, rows = [], []
    for lev in range(levels):
        k = 2**lev
        grid = LogGrid(s_range[0], s_range[1], (base_count - 1) * k + 1)
        dt = base_dt / k
        prob = LinearProblem(
            fam.P, grid, GridFunction(grid, fam.exact(grid, 0.0)), fam.forcing(grid),
            t_end=t_end, dt=dt, theta=theta, stride=max(1, int(round(t_end / dt))),
            boundary=fam.boundary(grid),
        )
        traj = solve_linear(prob)
        err = float(np.max(np.abs(traj.values[-1] - fam.exact(grid, traj.times[-1]))))
        errors.append(err)
        rows.append({"count": grid.count, "dt": dt, "error": err})
    orders = [math.log2(errors[i] / errors[i + 1]) for i in range(levels - 1)]
    return {"theta": theta, "levels": rows, "orders": orders, "min_order": min(orders)}


# ---------------------------------------------------------------------------
# diagnostics


def random_bumps(grid: LogGrid, rng: np.random.Generator, n_bumps: int = 3,
                 s_range=(-7.0, 2.0), width=(0.4, 1.2)) -> np.ndarray:
    """Sum of Gaussian bumps in ``s``; numerically compactly supported inside ``s_range``."""
    s = grid.s
    out = np.zeros(grid.count)
    for _ in range(n_bumps):
        c = rng.uniform(*s_range)
        w = rng.uniform(*width)
        out += rng.uniform(-1, 1) * np.exp(-0.5 * ((s - c) / w) ** 2)
    return out


@dataclass
class CoercivityReport:
    alpha: float
    in_range: bool
    min_ratio: float
    min_ratio_refined: float
    trials: int

    @property
    def stable(self) -> bool:
        return abs(self.min_ratio_refined - self.min_ratio) <= 0.2 * abs(self.min_ratio)

    @property
    def passed(self) -> bool:
        return self.min_ratio > 0 and self.min_ratio_refined > 0 and self.stable

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "in_range": self.in_range, "min_ratio": self.min_ratio,
                "min_ratio_refined": self.min_ratio_refined, "trials": self.trials,
                "stable": self.stable, "passed": self.passed}


def _coercivity_ratios(P, alpha, grid, seeds) -> np.ndarray:
    s = grid.s
    w = np.exp(-2 * alpha * s)
    from .loggrid import _trapz_weights

    tw = _trapz_weights(s) * w
    out = []
    for seed in seeds:
        u = random_bumps(grid, np.random.default_rng(seed))
        Pu = _poly_apply(grid, u, P)
        num = float(np.sum(tw * u * Pu))
        den = float(_sobolev_sq(grid, u, 2, alpha))
        out.append(num / den)
    return np.array(out)


def coercivity_check(P: RealPolynomial, alpha: float, trials: int = 50,
                     grid: LogGrid | None = None, seed: int = 0) -> CoercivityReport:
    """Minimum of ``(u, P(D) u)_alpha / |u|_{2,alpha}^2`` over random bumps, on a grid and its refinement."""
    grid = grid or LogGrid()
    roots = sorted(P.roots) if P.roots is not None else sorted(np.real(P.poly.roots()))
    in_range = coercivity_set(roots).contains(alpha) if len(roots) == 4 else False
    seeds = range(seed, seed + trials)
    r1 = _coercivity_ratios(P, alpha, grid, seeds)
    r2 = _coercivity_ratios(P, alpha, grid.refined(2), seeds)
    return CoercivityReport(alpha, bool(in_range), float(r1.min()), float(r2.min()), trials)


def maxreg_diagnostic(
    traj: Trajectory,
    f: Trajectory | None,
    ell: int,
    alpha: float,
    sigma: float,
    window=None,
) -> tuple[float, float]:
    """Both sides of the time-weighted maximal-regularity estimate.

    ``lhs = sup t^{2 sigma} |u|_{ell+2, alpha-1/2}^2 + int t^{2 sigma} (|u_t|_{ell, alpha-1}^2 + |u|_{ell+4, alpha}^2)``,
    ``rhs = [sigma == 0] |u(0)|_{ell+2, alpha-1/2}^2 + int t^{2 sigma} |f|_{ell, alpha}^2
    + 2 sigma int t^{2 sigma - 1} |u|_{ell+2, alpha-1/2}^2``.
    """
    g, t, V = traj.grid, traj.times, traj.values
    if not np.any(V) and (f is None or not np.any(f.values)):
        return 0.0, 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        tw = np.where(t > 0, t ** (2 * sigma), 1.0 if sigma == 0 else 0.0)
        tw1 = np.where(t > 0, t ** (2 * sigma - 1), 0.0) if sigma > 0 else np.zeros_like(t)
    trace = _sobolev_sq(g, V, ell + 2, alpha - 0.5, window)
    ut = time_derivative(t, V, 1)
    lhs = float(np.max(tw * trace)) + _trapz_time(
        t, tw * (_sobolev_sq(g, ut, ell, alpha - 1, window) + _sobolev_sq(g, V, ell + 4, alpha, window))
    )
    rhs = (float(trace[0]) if sigma == 0 else 0.0) + 2 * sigma * _trapz_time(t, tw1 * trace)
    if f is not None:
        rhs += _trapz_time(t, tw * _sobolev_sq(g, f.values, ell, alpha, window))
    return lhs, rhs


def _eval_grid(grid: LogGrid, spacing: float | None, crop) -> tuple[LogGrid, np.ndarray]:
    """Sub-grid with roughly the requested spacing inside ``crop``, and its indices."""
    k = 1 if spacing is None else max(1, int(round(spacing / grid.h)))
    s = grid.s
    lo, hi = (grid.s_min, grid.s_max) if crop is None else crop
    i0 = int(np.searchsorted(s, lo - 1e-12))
    idx = np.arange(i0, grid.count, k)
    idx = idx[s[idx] <= hi + 1e-12]
    return LogGrid(float(s[idx[0]]), float(s[idx[-1]]), idx.size), idx


def cascade_verify(
    u_traj: Trajectory,
    f_traj: Trajectory | None,
    n: int,
    m: int,
    alpha_prime: float = 0.5,
    window=(-8.0, 3.0),
    eval_spacing: float | None = 0.125,
    accuracy: int = 12,
    crop=(-10.0, 4.0),
) -> float:
    """Relative residual of the derived equation for ``w^(n)`` differentiated ``m`` times in time.

    ``(x d_t + p(D - n)) d_t^m w = d_t^m r + x q_n(D) d_t^{m+1} v`` with
    ``w = P_w(D) u``, ``v = P_v(D) u``, ``r = P_r(D) f``.  The residual is
    measured in ``|.|_{0, alpha' + n - 1}`` on ``window`` over the interior
    snapshots (the first and last ``m + 1`` are dropped) and divided by the
    norm of the largest term.

    The polynomials reach degree ``4 (n + 1) + |J_n|``, far more derivatives
    than double precision survives at the solver spacing.  They are therefore
    applied on a subsampled grid with spacing close to ``eval_spacing`` using
    first-derivative stencils of the given ``accuracy``.  The data are first
    cropped to ``crop`` so the closure layers at both ends of the solver grid
    do not leak into the window through the wide composed stencils.
    """
    if u_traj.times.size < 2 * m + 5:
        raise ValueError("trajectory too short for the requested time derivatives")
    g, idx = _eval_grid(u_traj.grid, eval_spacing, crop)
    t = u_traj.times
    U = u_traj.values[:, idx]
    Pw, Pv, Pr = cascade_polynomials(n)

    def apply(P, V):
        return _poly_apply(g, V, P, accuracy)

    dw = time_derivative(t, apply(Pw, U), m)
    dw1 = time_derivative(t, dw, 1)
    terms = [g.x * dw1, apply(p_poly(n), dw)]
    lhs = terms[0] + terms[1]
    rhs = np.zeros_like(lhs)
    if f_traj is not None:
        rhs = rhs + time_derivative(t, apply(Pr, f_traj.values[:, idx]), m)
        terms.append(rhs.copy())
    if n >= 2:
        dv1 = time_derivative(t, apply(Pv, U), m + 1)
        comm = g.x * apply(q_polynomial(n), dv1)
        rhs = rhs + comm
        terms.append(comm)
    sl = slice(m + 1, t.size - m - 1)
    weight = alpha_prime + n - 1
    res = _wl2_sq(g, (lhs - rhs)[sl], weight, window)
    scale = max(np.max(_wl2_sq(g, T[sl], weight, window)) for T in terms)
    if scale == 0.0:
        return 0.0
    return float(math.sqrt(np.max(res) / scale))


def hardy_bench(
    gamma: float,
    rho: float,
    trials: int = 100,
    grid: LogGrid | None = None,
    seed: int = 0,
) -> dict:
    """Empirical constant ``max |w|_{1,rho} / |(D - gamma) w|_rho`` over random bumps.

    Reported on a grid and on its refinement.
    """
    if gamma == rho:
        raise ValueError("gamma must differ from rho")
    grid = grid or LogGrid()
    out = {}
    for label, g in (("base", grid), ("refined", grid.refined(2))):
        worst = 0.0
        for k in range(trials):
            w = random_bumps(g, np.random.default_rng(seed + k))
            num = math.sqrt(_sobolev_sq(g, w, 1, rho))
            den = math.sqrt(_wl2_sq(g, _apply_d(g, w, 1) - gamma * w, rho))
            worst = max(worst, num / den)
        out[label] = worst
    C2 = max((1 + rho**2) / (rho - gamma) ** 2, 1.0)
    out["analytic_bound"] = math.sqrt(C2 + 1.0)
    out["stable"] = abs(out["refined"] - out["base"]) <= 0.2 * out["base"]
    return out


def anisotropic_bench(traj: Trajectory, ell: int, alpha: float, delta: float, sign: int = 1,
                      window=None) -> tuple[float, float]:
    """Both sides of the anisotropic Hardy inequality on a trajectory (``alpha`` in ``(1/2, 1)``)."""
    if not 0.5 < alpha < 1.0:
        raise ValueError("alpha must lie in (1/2, 1)")
    g, t, V = traj.grid, traj.times, traj.values
    d = sign * delta
    with np.errstate(divide="ignore"):
        tw = np.where(t > 0, t ** (2 * alpha - 2), 0.0)
    lhs = _trapz_time(t, tw * _sobolev_sq(g, V, ell, alpha - 0.5 + d, window))
    rhs = _trapz_time(t, _sobolev_sq(g, time_derivative(t, V, 1), ell, -0.5 + d, window)) + _trapz_time(
        t, _sobolev_sq(g, V, ell + 1, 0.5 + d, window)
    )
    return lhs, rhs
