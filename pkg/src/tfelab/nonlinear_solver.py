"""Picard iteration for ``x u_t + p(D) u = N(u)`` and checks of the expansion and decay structure."""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .exponents import AdmissibleExponent, default_delta, lattice, p_poly, schedule, weight_set
from .linear_solver import LinearProblem, LinearSolver, solve_linear
from .loggrid import (
    GridFunction,
    LogGrid,
    Trajectory,
    _apply_d,
    _time_weight,
    _trapz_time,
    _window_mask,
    initial_norm,
    interior_window,
    solution_norm,
    time_derivative,
)
from .operators import nonlinearity

__all__ = [
    "PicardConfig",
    "PicardResult",
    "PicardDivergence",
    "SmallnessError",
    "picard_solve",
    "apriori_check",
    "DecayReport",
    "decay_report",
    "coefficient_diagnostics",
    "bump",
]

log = logging.getLogger(__name__)


class PicardDivergence(RuntimeError):
    def __init__(self, message: str, history: list[float]):
        super().__init__(message)
        self.history = history


class SmallnessError(ValueError):
    pass


@dataclass
class PicardConfig:
    N0: int = 1
    tol: float = 1e-12
    noise: float = 1e-8
    max_iter: int = 20
    grid: LogGrid = field(default_factory=LogGrid)
    dt: float = 1e-3
    t_end: float = 10.0
    stride: int = 10
    theta: float = 1.0
    refine: int = 0
    damping: float = 1.0
    x_fit: float = 0.1
    delta: float | None = None
    smallness: float = 0.05
    floor: float = 0.1

    def __post_init__(self):
        if self.tol <= 0 or self.noise < 0:
            raise ValueError("tol must be positive and noise non-negative")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not 0 < self.damping <= 1:
            raise ValueError("damping must lie in (0, 1]")
        if self.delta is None:
            self.delta = default_delta(self.N0)

    def linear_problem(self, u0: GridFunction, rhs=None) -> LinearProblem:
        return LinearProblem(
            p_poly(), self.grid, u0, rhs, t_end=self.t_end, dt=self.dt,
            theta=self.theta, stride=self.stride, refine=self.refine,
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        d["grid"] = self.grid.to_dict()
        return d


@dataclass
class PicardResult:
    trajectory: Trajectory
    iterations: int
    converged: bool
    history: list[float]

    @property
    def ratios(self) -> list[float]:
        h = self.history
        return [h[i + 1] / h[i] for i in range(len(h) - 1) if h[i] > 0]

    def __iter__(self):
        # allows ``traj, iterations, converged = picard_solve(...)``
        return iter((self.trajectory, self.iterations, self.converged))

    def history_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration", "difference"])
            for k, d in enumerate(self.history, start=1):
                w.writerow([k, repr(d)])


def bump(grid: LogGrid, eps: float, center: float = 0.0, width: float = 1.5) -> GridFunction:
    """``eps exp(-(s - center)^2 / (2 width^2))``: a smooth bump in ``s = ln x``."""
    return GridFunction(grid, eps * np.exp(-0.5 * ((grid.s - center) / width) ** 2))


def _forcing(traj: Trajectory, floor: float) -> Trajectory:
    g = traj.grid
    vals = np.array([nonlinearity(GridFunction(g, v), floor).values for v in traj.values])
    return Trajectory(g, traj.times, vals)


def picard_solve(u0: GridFunction, cfg: PicardConfig | None = None) -> PicardResult:
    """Fixed-point iteration ``u <- S[u0, N(u)]`` starting from ``S[u0, 0]``.

    Each iterate evaluates the nonlinearity on every stored snapshot; the next
    linear solve interpolates that forcing linearly in time.  The iteration
    stops when the largest sup-norm difference between consecutive iterates
    drops below ``cfg.tol``.  It also stops, flagged as stagnated, once the
    difference sits below ``cfg.noise`` times the sup norm of the iterate and
    no longer halves: that is the round-off floor of the stiff linear solves.
    Three consecutive increases of the difference raise :class:`PicardDivergence`.
    """
    cfg = cfg or PicardConfig(grid=u0.grid)
    if u0.grid != cfg.grid:
        raise ValueError("initial data lives on another grid")
    if float(np.min(1.0 + u0.values)) <= cfg.floor:
        raise SmallnessError(f"min(1+u0) must exceed {cfg.floor}")
    size = initial_norm(u0, 3, cfg.delta, cfg.x_fit)
    if size > cfg.smallness:
        raise SmallnessError(f"initial norm {size:.3g} exceeds the smallness threshold {cfg.smallness}")
    solver = LinearSolver(cfg.linear_problem(u0))
    current = solve_linear(solver.prob, solver)
    history: list[float] = []
    rises = 0
    for k in range(1, cfg.max_iter + 1):
        prob = cfg.linear_problem(u0, _forcing(current, cfg.floor))
        nxt = solve_linear(prob, _Rebound(solver, prob))
        if cfg.damping < 1.0:
            nxt = Trajectory(nxt.grid, nxt.times,
                             (1 - cfg.damping) * current.values + cfg.damping * nxt.values)
        diff = float(np.max(np.abs(nxt.values - current.values)))
        history.append(diff)
        log.info("picard iteration %d: difference %.3e", k, diff)
        current = nxt
        stalled = (len(history) > 1 and diff > 0.5 * history[-2]
                   and diff < cfg.noise * float(np.max(np.abs(nxt.values))))
        if diff < cfg.tol or stalled:
            current.meta.update({"picard_iterations": k, "picard_history": history,
                                 "picard_stagnated": stalled and diff >= cfg.tol})
            return PicardResult(current, k, True, history)
        rises = rises + 1 if len(history) > 1 and diff > history[-2] else 0
        if rises >= 3:
            raise PicardDivergence(f"difference grew for 3 iterations (last {diff:.3e})", history)
    current.meta.update({"picard_iterations": cfg.max_iter, "picard_history": history,
                         "picard_stagnated": False})
    return PicardResult(current, cfg.max_iter, False, history)


class _Rebound:
    """A factorised solver re-used for a problem that differs only in its forcing."""

    def __init__(self, solver: LinearSolver, prob: LinearProblem):
        self._solver = solver
        self.prob = prob

    def step(self, *args):
        return self._solver.step(*args)


def apriori_check(traj: Trajectory, u0: GridFunction, sched=None, A=None,
                  x_fit: float = 0.1, max_order: int | None = 6,
                  window="interior") -> tuple[float, float, float]:
    """``(solution_norm, initial_norm, ratio)``; the ratio is 1 for zero data.

    Both norms are taken over ``window``; the default is
    :func:`~tfelab.loggrid.interior_window` of the trajectory grid.
    """
    if window == "interior":
        window = interior_window(traj.grid)
    N0 = 1 if sched is None else sched.N0
    sched = sched or schedule(N0)
    A = A or weight_set(N0)
    lhs = float(solution_norm(traj, sched, A, x_fit=x_fit, max_order=max_order, window=window))
    rhs = float(initial_norm(u0, sched.k, sched.delta, x_fit, max_order=max_order, window=window))
    if rhs == 0.0:
        return lhs, rhs, 1.0 if lhs == 0.0 else math.inf
    return lhs, rhs, lhs / rhs


@dataclass
class DecayReport:
    N0: int
    window: tuple[float, float]
    slopes: dict
    targets: dict
    remainder_slope: float
    remainder_target: float
    indeterminate: list = field(default_factory=list)

    def slope(self, n1: int, n2: int = 0) -> float:
        return self.slopes[AdmissibleExponent(n1, n2)]

    def to_dict(self) -> dict:
        return {
            "N0": self.N0,
            "window": list(self.window),
            "coefficients": [
                {"n1": e.n1, "n2": e.n2, "exponent": e.value,
                 "slope": None if math.isnan(s) else s, "target": self.targets[e],
                 "indeterminate": e in self.indeterminate}
                for e, s in self.slopes.items()
            ],
            "remainder_slope": self.remainder_slope,
            "remainder_target": self.remainder_target,
        }

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=2)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def _loglog_slope(t: np.ndarray, y: np.ndarray) -> float:
    return float(np.polyfit(np.log(t), np.log(y), 1)[0])


def decay_report(traj: Trajectory, N0: int, window=(1.0, 10.0), x_fit: float = 0.1,
                 delta: float = 0.05, noise_floor: float = 1e-13) -> DecayReport:
    """Log-log slopes of ``|u_i(t)|`` and of the fit remainder over ``window``.

    A coefficient whose magnitude falls below ``noise_floor`` (relative to the
    largest value of the trajectory) anywhere in the window is marked
    indeterminate and its slope is NaN.
    """
    t0, t1 = window
    if t1 < 4 * t0:
        raise ValueError("window must span at least a factor of 4 in time")
    if traj.fits is None or traj.fits[0].N0 != N0:
        traj.fit_all(N0, x_fit, delta)
    mask = (traj.times >= t0 - 1e-12) & (traj.times <= t1 + 1e-12)
    t = traj.times[mask]
    scale = max(traj.max_sup(), 1e-300)
    slopes, targets, indet = {}, {}, []
    for e in lattice(N0).entries:
        y = np.abs(traj.coefficient_series(e)[mask])
        targets[e] = -e.value
        if y.size < 2 or np.min(y) <= noise_floor * scale:
            slopes[e] = math.nan
            indet.append(e)
        else:
            slopes[e] = _loglog_slope(t, y)
    R = np.array([f.remainder_norm for f in traj.fits])[mask]
    rslope = _loglog_slope(t, R) if np.min(R) > 0 else math.nan
    return DecayReport(N0, (t0, t1), slopes, targets, rslope, -float(N0), indet)


def coefficient_diagnostics(traj: Trajectory, sched=None, A=None, x_fit: float = 0.1,
                            max_order: int | None = 6, c0_order: int = 2,
                            window="interior") -> dict:
    """Ratios of the coefficient bounds against the squared solution norm.

    Integral bounds ``int t^{2i+2m-1} |d^m u_i/dt^m|^2`` for ``i`` in
    ``K_{N0-m}`` without 0, and sup bounds ``sup t^{2i+2m} |d^m u_i/dt^m|^2``
    for ``i`` in ``K_{N0-m-1/2}``.  Entries of kind ``c0`` hold
    ``sup t^{2m} (|d^m D^l u|_inf^2 + |d^m D^l (u - u_0)|_inf^2)`` for ``l <= c0_order``.
    """
    N0 = 1 if sched is None else sched.N0
    sched = sched or schedule(N0)
    A = A or weight_set(N0)
    if not np.any(traj.values):
        return {"norm_sq": 0.0, "entries": [], "max_ratio": 0.0}
    if traj.fits is None or traj.fits[0].N0 != N0:
        traj.fit_all(N0, x_fit, sched.delta)
    if window == "interior":
        window = interior_window(traj.grid)
    norm_sq = float(solution_norm(traj, sched, A, x_fit=x_fit, max_order=max_order, window=window)) ** 2
    mask = _window_mask(traj.grid, window)
    t = traj.times
    entries = []
    for m in range(N0):
        for e in lattice(N0).entries:
            series = time_derivative(t, traj.coefficient_series(e), m)
            i = e.value
            if i < N0 - m and i > 0:
                w = _time_weight(t, 2 * i + 2 * m - 1)
                val = _trapz_time(t, w * series**2)
                entries.append({"kind": "integral", "exponent": e.label(), "m": m,
                                "value": val, "ratio": val / norm_sq if norm_sq else 0.0})
            if i < N0 - m - 0.5:
                w = t ** (2 * i + 2 * m)
                val = float(np.max(w * series**2))
                entries.append({"kind": "sup", "exponent": e.label(), "m": m,
                                "value": val, "ratio": val / norm_sq if norm_sq else 0.0})
    # sup-norm control of D^l u and D^l (u - u_0)
    u0_series = traj.coefficient_series(lattice(N0).entries[0])
    for m in range(N0):
        dv = time_derivative(t, traj.values, m)
        dw = time_derivative(t, traj.values - u0_series[:, None], m)
        tw = _time_weight(t, 2 * m)
        for ell in range(c0_order + 1):
            a = np.max(np.abs(_apply_d(traj.grid, dv, ell)[:, mask] if ell else dv[:, mask]), axis=1)
            b = np.max(np.abs(_apply_d(traj.grid, dw, ell)[:, mask] if ell else dw[:, mask]), axis=1)
            val = float(np.max(tw * (a**2 + b**2)))
            entries.append({"kind": "c0", "exponent": "-", "m": m, "ell": ell,
                            "value": val, "ratio": val / norm_sq if norm_sq else 0.0})
    return {"norm_sq": norm_sq, "entries": entries,
            "max_ratio": max((e["ratio"] for e in entries), default=0.0)}
