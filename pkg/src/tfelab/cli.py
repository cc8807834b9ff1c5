"""Command-line driver: ``tfelab {verify,schedule,linear,nonlinear,expansion,decay}``.

Exit codes: 0 all checks pass, 1 a check failed, 2 usage or configuration
error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import exponents as ex
from .hodograph import (
    PhysicalProfile,
    ProfileError,
    contact_line,
    from_hodograph,
    to_hodograph,
    transport_expansion,
    velocity_profile,
)
from .linear_solver import (
    LinearProblem,
    SolverError,
    cascade_study,
    coercivity_check,
    hardy_bench,
    maxreg_diagnostic,
    mms_convergence,
    random_bumps,
    solve_linear,
)
from .loggrid import Cutoff, FitError, GridFunction, LogGrid, Trajectory, extract_expansion, synthesize
from .nonlinear_solver import (
    PicardConfig,
    PicardDivergence,
    SmallnessError,
    apriori_check,
    bump,
    decay_report,
    picard_solve,
)
from .operators import DegenerateProfile, m_sym_apply, pD_apply, pD_slot_sum, velocity_tilde

log = logging.getLogger("tfelab")

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    N0: int = 1
    s_min: float = -12.0
    s_max: float = 6.0
    count: int = 1024
    dt: float = 1e-3
    t_end: float = 10.0
    stride: int = 10
    theta: float = 1.0
    delta: float | None = None
    epsilon: float = 1e-3
    seed: int = 0
    x_fit: float = 0.1
    window: list = field(default_factory=lambda: [1.0, 10.0])
    tol: float = 1e-12
    max_iter: int = 20
    damping: float = 1.0
    smallness: float = 0.05
    max_n0: int = 4
    trials: int = 20
    jobs: int = 1
    inject_beta: float | None = None
    out: str = "tfelab-out"

    def validate(self) -> None:
        problems = []
        if not 1 <= self.N0 <= self.max_n0:
            problems.append(f"N0 must lie in 1..{self.max_n0}")
        if not self.s_min < self.s_max:
            problems.append("need s_min < s_max")
        if self.count < 64:
            problems.append("count must be at least 64")
        if self.dt <= 0 or self.t_end <= 0:
            problems.append("dt and t_end must be positive")
        if self.stride < 1:
            problems.append("stride must be >= 1")
        if not 0.5 <= self.theta <= 1.0:
            problems.append("theta must lie in [1/2, 1]")
        if self.epsilon < 0:
            problems.append("epsilon must be non-negative")
        if not 0 < self.damping <= 1:
            problems.append("damping must lie in (0, 1]")
        if len(self.window) != 2 or not 0 < self.window[0] < self.window[1]:
            problems.append("window must be [t0, t1] with 0 < t0 < t1")
        if self.delta is not None:
            problems += ex.validate_delta(self.N0, self.delta)
        if problems:
            raise ConfigError("; ".join(problems))

    @property
    def grid(self) -> LogGrid:
        return LogGrid(self.s_min, self.s_max, self.count)

    @property
    def delta_value(self) -> float:
        return ex.default_delta(self.N0) if self.delta is None else self.delta

    def hash(self) -> str:
        d = asdict(self)
        d.pop("out")
        d.pop("jobs")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:16]

    def resolution(self) -> dict:
        return {"s_min": self.s_min, "s_max": self.s_max, "count": self.count,
                "dt": self.dt, "t_end": self.t_end, "stride": self.stride, "theta": self.theta}

    def picard(self, **over) -> PicardConfig:
        kw = dict(N0=self.N0, tol=self.tol, max_iter=self.max_iter, grid=self.grid, dt=self.dt,
                  t_end=self.t_end, stride=self.stride, theta=self.theta, damping=self.damping,
                  x_fit=self.x_fit, delta=self.delta_value, smallness=self.smallness)
        kw.update(over)
        return PicardConfig(**kw)


def load_config(path: str | None, overrides: dict) -> RunConfig:
    data = {}
    if path:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
    names = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    data.update({k: v for k, v in overrides.items() if v is not None})
    try:
        cfg = RunConfig(**data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    cfg.validate()
    return cfg


# ---------------------------------------------------------------------------
# reports


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def check(name: str, lhs: float, rhs: float, passed: bool, **extra) -> dict:
    ratio = lhs / rhs if rhs not in (0, 0.0) else (0.0 if lhs == 0 else math.inf)
    return {"name": name, "lhs": lhs, "rhs": rhs, "ratio": ratio, "passed": bool(passed), **extra}


def emit(cfg: RunConfig, command: str, payload: dict, name: str | None = None) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    report = {"command": command, "config": asdict(cfg), "config_hash": cfg.hash(),
              "resolution": cfg.resolution(), **payload}
    path = out / f"{name or command}.json"
    path.write_text(json.dumps(_clean(report), indent=2, sort_keys=True) + "\n")
    return path


def _summarize(checks: list[dict]) -> int:
    for c in checks:
        print(f"{'PASS' if c['passed'] else 'FAIL'}  {c['name']}: lhs={c['lhs']:.4g} rhs={c['rhs']:.4g}")
    return EXIT_OK if all(c["passed"] for c in checks) else EXIT_CHECK


# ---------------------------------------------------------------------------
# commands


def cmd_verify(cfg: RunConfig, args) -> int:
    checks = []
    beta = ex.BETA if cfg.inject_beta is None else cfg.inject_beta
    for name, r in [("p(0)", 0.0), ("p(beta)", beta), ("p(-3/2)", -1.5), ("p(-beta-1/2)", -ex.BETA - 0.5)]:
        v = abs(float(ex.p_eval(r)))
        checks.append(check(f"root {name}", v, 1e-12, v <= 1e-12))
    g = cfg.grid
    ms = float(np.max(np.abs(m_sym_apply(1, 1, 1, 1, 1, grid=g).values)))
    checks.append(check("M_sym(1,...,1) = 0", ms, 1e-12, ms <= 1e-12))
    vt = float(np.max(np.abs(velocity_tilde(1, 1, 1, grid=g).values + 0.375)))
    checks.append(check("M~(1,1,1) = -3/8", vt, 0.0, vt == 0.0))
    rng = np.random.default_rng(cfg.seed)
    dev = 0.0
    for _ in range(cfg.trials):
        u = GridFunction(g, random_bumps(g, rng))
        a, b = pD_apply(u).values, pD_slot_sum(u).values
        dev = max(dev, float(np.max(np.abs(a - b)) / np.max(np.abs(a))))
    checks.append(check("slot-sum equivalence", dev, 1e-9, dev <= 1e-9))
    # p(D)(x g) = x p(D+1) g
    u = GridFunction(g, random_bumps(g, rng))
    lhs = pD_apply(u * g.x).values
    from .loggrid import poly_of_d

    rhs = g.x * poly_of_d(u, ex.p_poly(-1)).values
    win = (g.s > -9) & (g.s < 3)
    comm = float(np.max(np.abs(lhs - rhs)[win]) / np.max(np.abs(rhs[win])))
    checks.append(check("commutator p(D) x = x p(D+1)", comm, 1e-4, comm <= 1e-4))
    q1 = float(np.max(np.abs(ex.q_polynomial(1).coefficients)))
    checks.append(check("q_1 = 0", q1, 0.0, q1 == 0.0))
    I2 = {e.q for e in ex.index_sets(2).I_n}
    ok = I2 == {ex.QBeta(0, 2), ex.QBeta(0, 3)}
    checks.append(check("I_2 = {2beta, 3beta}", float(len(I2)), 2.0, ok))
    sched = ex.schedule(cfg.N0, cfg.delta)
    rep = ex.check_conditions(sched)
    fails = sum(len(r.failures) for r in rep.results)
    checks.append(check(f"schedule conditions N0={cfg.N0}", float(fails), 0.0, rep.passed))
    if cfg.N0 == 1:
        checks.append(check("k = 3 at N0 = 1", float(sched.k), 3.0, sched.k == 3))
    small = LogGrid(cfg.s_min, cfg.s_max, 512)
    coer = coercivity_check(ex.p_poly(), -0.5, trials=cfg.trials, grid=small, seed=cfg.seed)
    checks.append(check("coercivity p at alpha=-1/2", coer.min_ratio, 0.0, coer.passed,
                        refined=coer.min_ratio_refined))
    hb = hardy_bench(0.0, 0.5, trials=cfg.trials, grid=small, seed=cfg.seed)
    checks.append(check("Hardy constant stable", hb["refined"], hb["base"], hb["stable"]))
    emit(cfg, "verify", {"checks": checks})
    return _summarize(checks)


def cmd_schedule(cfg: RunConfig, args) -> int:
    N0 = cfg.N0
    sched = ex.schedule(N0, cfg.delta)
    rep = ex.check_conditions(sched)
    lat = ex.lattice(N0)
    print(f"K_{N0}: " + ", ".join(e.label() for e in lat.entries) + f"  ({len(lat)} entries)")
    for n in range(1, N0 + 1):
        fam = ex.index_sets(n)
        print(f"I_{n} = {{{', '.join(e.label() for e in fam.I_n)}}}   "
              f"J_{n} = {{{', '.join(e.label() for e in fam.J_n)}}}")
    A = ex.weight_set(N0)
    print("weights: " + ", ".join(f"({w.alpha.label()}, {w.N})" for w in A.weights))
    print(f"delta = {sched.delta:g}, k = {sched.k}")
    print(f"{'n':>3} {'m':>3} {'alpha':>10} {'sign':>5} {'ell':>5} {'k':>5}")
    for row in sched.table():
        print(f"{row['n']:>3} {row['m']:>3} {row['alpha']:>10} {row['sign']:>5} {row['ell']:>5} {row['k']:>5}")
    for r in rep.results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}: {r.description} ({r.checked} checked)")
    emit(cfg, "schedule", {"lattice": lat.to_dict(),
                           "index_sets": [ex.index_sets(n).to_dict() for n in range(1, N0 + 1)],
                           "weights": A.to_dict(), "schedule": sched.to_dict(),
                           "conditions": rep.to_dict()}, name=f"schedule_N0_{N0}")
    return EXIT_OK if rep.passed else EXIT_CHECK


def cmd_linear(cfg: RunConfig, args) -> int:
    checks = []
    if args.mms:
        conv = mms_convergence()
        checks.append(check("MMS order (theta=1/2)", conv["min_order"], 1.8, conv["min_order"] >= 1.8))
        print(f"{'count':>7} {'dt':>9} {'error':>11}")
        for row in conv["levels"]:
            print(f"{row['count']:>7} {row['dt']:>9.3g} {row['error']:>11.3e}")
        print("orders: " + ", ".join(f"{o:.3f}" for o in conv["orders"]))
        casc = cascade_study()
        fine = casc["levels"][-1]["residuals"]
        for key, val in fine.items():
            ok = val <= 1e-3 and casc["decreasing"][key]
            checks.append(check(f"cascade residual (n,m)=({key})", val, 1e-3, ok))
        emit(cfg, "linear_mms", {"convergence": conv, "cascade": casc, "checks": checks})
        return _summarize(checks)
    g = cfg.grid
    u0 = bump(g, cfg.epsilon)
    prob = LinearProblem(ex.p_poly(), g, u0, None, t_end=cfg.t_end, dt=cfg.dt,
                         theta=cfg.theta, stride=cfg.stride)
    traj = solve_linear(prob)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    traj.to_csv(out / "linear_trajectory.csv")
    from .loggrid import interior_window

    win = interior_window(g)
    # alpha = -1/2 lies inside the coercivity range of p
    lhs, rhs = maxreg_diagnostic(traj, None, 2, -0.5, 0.0, window=win)
    finite = math.isfinite(lhs) and math.isfinite(rhs)
    checks.append(check("maxreg sigma=0, alpha=-1/2 (finite)", lhs, rhs, finite))
    emit(cfg, "linear", {"checks": checks, "max_sup": traj.max_sup()})
    return _summarize(checks)


def _parse_sweep(text: str) -> list[float]:
    key, _, vals = text.partition("=")
    if key.strip() not in ("eps", "epsilon") or not vals:
        raise ConfigError('sweep must look like "eps=1e-4,1e-3,1e-2"')
    try:
        return [float(v) for v in vals.split(",")]
    except ValueError as exc:
        raise ConfigError(f"bad sweep value: {exc}") from exc


def _nonlinear_run(cfg: RunConfig, eps: float) -> dict:
    g = cfg.grid
    u0 = bump(g, eps)
    res = picard_solve(u0, cfg.picard())
    traj = res.trajectory
    row = {"epsilon": eps, "iterations": res.iterations, "converged": res.converged,
           "history": res.history, "contraction": res.ratios, "max_sup": traj.max_sup()}
    if eps > 0:
        lhs, rhs, ratio = apriori_check(traj, u0, ex.schedule(cfg.N0, cfg.delta), ex.weight_set(cfg.N0),
                                        x_fit=cfg.x_fit)
        row["apriori"] = {"lhs": lhs, "rhs": rhs, "ratio": ratio}
    return row


def cmd_nonlinear(cfg: RunConfig, args) -> int:
    checks = []
    if args.sweep:
        eps_list = sorted(_parse_sweep(args.sweep))
        if cfg.jobs > 1:
            with ProcessPoolExecutor(cfg.jobs) as pool:
                rows = list(pool.map(_nonlinear_run, [cfg] * len(eps_list), eps_list))
        else:
            rows = [_nonlinear_run(cfg, e) for e in eps_list]
        ratios = [r["apriori"]["ratio"] for r in rows if "apriori" in r]
        spread = max(ratios) / min(ratios) if ratios else 1.0
        checks.append(check("a-priori constant across sweep (max/min)", spread, 1.25, spread <= 1.25,
                            constant=max(ratios) if ratios else 0.0))
        iters = [r["iterations"] for r in rows]
        mono = all(a <= b for a, b in zip(iters, iters[1:]))
        checks.append(check("iterations monotone in epsilon", float(iters[0]), float(iters[-1]), mono))
        for r in rows:
            checks.append(check(f"converged eps={r['epsilon']:g}", float(r["iterations"]),
                                float(cfg.max_iter), r["converged"]))
            print(f"eps={r['epsilon']:<8g} iterations={r['iterations']:<3} "
                  f"ratio={r.get('apriori', {}).get('ratio', float('nan')):.4g}")
        emit(cfg, "nonlinear_sweep", {"runs": rows, "checks": checks})
        return _summarize(checks)
    g = cfg.grid
    u0 = bump(g, cfg.epsilon)
    res = picard_solve(u0, cfg.picard())
    traj = res.trajectory
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    traj.to_csv(out / "nonlinear_trajectory.csv")
    res.history_csv(out / "picard_history.csv")
    checks.append(check("Picard converged", float(res.iterations), float(cfg.max_iter), res.converged))
    payload = {"iterations": res.iterations, "history": res.history, "contraction": res.ratios}
    if cfg.epsilon == 0:
        sup = traj.max_sup()
        checks.append(check("stationary traveling wave", sup, 1e-10, sup <= 1e-10))
        payload["stationary"] = True
    else:
        lhs, rhs, ratio = apriori_check(traj, u0, ex.schedule(cfg.N0, cfg.delta), ex.weight_set(cfg.N0),
                                        x_fit=cfg.x_fit)
        payload["apriori"] = {"name": "apriori", "lhs": lhs, "rhs": rhs, "ratio": ratio}
        t0, t1 = cfg.window
        if t1 <= cfg.t_end + 1e-12 and t1 >= 4 * t0:
            rep = decay_report(traj, cfg.N0, (t0, t1), x_fit=cfg.x_fit)
            rep.to_json(out / "decay.json")
            payload["decay"] = rep.to_dict()
            _print_decay(rep)
    emit(cfg, "nonlinear", {**payload, "checks": checks})
    return _summarize(checks)


def _print_decay(rep) -> None:
    print(f"{'exponent':>10} {'slope':>9} {'target':>9}")
    for e, s in rep.slopes.items():
        sl = "indet." if math.isnan(s) else f"{s:9.4f}"
        print(f"{e.label():>10} {sl:>9} {rep.targets[e]:9.4f}")
    print(f"{'remainder':>10} {rep.remainder_slope:9.4f} {rep.remainder_target:9.4f}")


def cmd_decay(cfg: RunConfig, args) -> int:
    t0, t1 = cfg.window
    if t1 < 4 * t0 or t1 > cfg.t_end + 1e-12:
        raise ConfigError("decay window must satisfy 4 t0 <= t1 <= t_end")
    if args.input:
        traj = Trajectory.from_csv(args.input)
    else:
        traj = picard_solve(bump(cfg.grid, cfg.epsilon), cfg.picard()).trajectory
    rep = decay_report(traj, cfg.N0, (t0, t1), x_fit=cfg.x_fit)
    _print_decay(rep)
    checks = []
    sb = rep.slopes[ex.AdmissibleExponent(0, 1)]
    target = -ex.BETA + 0.2
    checks.append(check("slope of u_beta", sb, target, (not math.isnan(sb)) and sb <= target))
    if cfg.N0 == 1:
        rt = -cfg.N0 + 0.3
        checks.append(check("remainder slope", rep.remainder_slope, rt, rep.remainder_slope <= rt))
    emit(cfg, "decay", {"decay": rep.to_dict(), "checks": checks})
    return _summarize(checks)


def cmd_expansion(cfg: RunConfig, args) -> int:
    g = cfg.grid
    if args.profile:
        profile = PhysicalProfile.from_csv(args.profile)
    else:
        e = cfg.epsilon
        coeffs = {ex.AdmissibleExponent(0, 0): e, ex.AdmissibleExponent(0, 1): e}
        profile = from_hodograph(synthesize(coeffs, Cutoff(1.0, 4.0), g), N0=cfg.N0)
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        profile.to_csv(out / "profile.csv")
    u = to_hodograph(profile, g)
    fit = extract_expansion(u, cfg.N0, cfg.x_fit, cfg.delta_value)
    T = transport_expansion(fit, cfg.N0)
    V = velocity_profile(u)
    vfit = extract_expansion(V, cfg.N0, cfg.x_fit, cfg.delta_value)
    lead = -0.375 * (1 + fit.u0) ** 3
    rel = abs(vfit.u0 - lead) / abs(lead)
    Z0, V0 = contact_line(np.array([fit.u0, fit.u0]), np.array([0.0, 1.0]), profile.Z0)
    checks = [
        check("fit conditioning", fit.condition_number, 1e12, not fit.flagged),
        check("velocity constant vs -(3/8)(1+u0)^3", rel, 1e-3, rel <= 1e-3),
    ]
    print(f"{'exponent':>10} {'u_i':>12} {'+-':>10}")
    for e in fit.exponents:
        print(f"{e.label():>10} {fit.coefficients[e]:12.4e} {fit.confidence[e]:10.2e}")
    print(f"V0 = {V0[0]:.6f}, dZ0/dt = {-V0[0]:.6f}")
    for label, series in [("c_i", T.inverse), ("u~_i", T.h_tilde), ("V~_i", T.v_tilde)]:
        body = ", ".join(f"{e.label()}: {c:.4e}" for e, c in sorted(series.terms.items())) or "(empty)"
        print(f"{label}: {body}")
    emit(cfg, "expansion", {"fit": fit.to_dict(), "transported": T.to_dict(),
                            "contact_line": {"V0": float(V0[0]), "Z0": Z0.tolist(), "times": [0.0, 1.0]},
                            "checks": checks})
    return _summarize(checks)


COMMANDS = {
    "verify": cmd_verify,
    "schedule": cmd_schedule,
    "linear": cmd_linear,
    "nonlinear": cmd_nonlinear,
    "expansion": cmd_expansion,
    "decay": cmd_decay,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON run configuration")
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument("--seed", type=int)
    common.add_argument("--n0", type=int, dest="N0", metavar="K")
    common.add_argument("--epsilon", type=float, metavar="X", help="initial-data amplitude")
    common.add_argument("--mms", action="store_true", help="linear: manufactured-solution study")
    common.add_argument("--sweep", metavar="SPEC", help='nonlinear: e.g. "eps=1e-4,1e-3,1e-2"')
    common.add_argument("--profile", metavar="PATH", help="expansion: (z, h) profile CSV")
    common.add_argument("--input", metavar="PATH", help="decay: trajectory CSV")
    common.add_argument("-v", "--verbose", action="store_true")
    parser = argparse.ArgumentParser(prog="tfelab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=(fn.__doc__ or name).strip())
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, {"out": args.out, "seed": args.seed, "N0": args.N0,
                                        "epsilon": args.epsilon})
        return COMMANDS[args.command](cfg, args)
    except (ConfigError, SmallnessError, ProfileError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SolverError, PicardDivergence, DegenerateProfile, FitError, FloatingPointError,
            np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
