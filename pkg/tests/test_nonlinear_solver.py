import csv
import json
import math

import numpy as np
import pytest

from tfelab.exponents import BETA, AdmissibleExponent
from tfelab.linear_solver import solve_linear
from tfelab.loggrid import LogGrid
from tfelab.nonlinear_solver import (
    PicardConfig,
    PicardDivergence,
    SmallnessError,
    apriori_check,
    bump,
    coefficient_diagnostics,
    decay_report,
    picard_solve,
)
from tfelab.nonlinear_solver import _forcing

FAMILY = (1e-4, 1e-3, 1e-2)


def test_config_validation():
    with pytest.raises(ValueError):
        PicardConfig(tol=0.0)
    with pytest.raises(ValueError):
        PicardConfig(max_iter=0)
    with pytest.raises(ValueError):
        PicardConfig(damping=1.5)
    assert PicardConfig(N0=2).delta > 0


def test_zero_data_is_travelling_wave(grid):
    res = picard_solve(grid.zeros(), PicardConfig(grid=grid, t_end=1.0))
    traj, iterations, converged = res
    assert iterations == 1 and converged
    assert res.history == [0.0]
    assert traj.max_sup() == 0.0


def test_constant_data_frozen(grid):
    c = 1e-3
    res = picard_solve(grid.constant(c), PicardConfig(grid=grid, t_end=1.0))
    near = grid.x < 0.01
    assert res.iterations == 1
    assert np.max(np.abs(res.trajectory.values[:, near] - c)) < 1e-8


def test_smallness_guards(small_grid):
    cfg = PicardConfig(grid=small_grid, t_end=0.1)
    with pytest.raises(SmallnessError):
        picard_solve(bump(small_grid, 0.5), cfg)
    with pytest.raises(SmallnessError):
        picard_solve(small_grid.constant(-0.95), cfg)
    with pytest.raises(ValueError):
        picard_solve(LogGrid(-12, 6, 256).zeros(), cfg)


def test_divergence_detected(small_grid):
    cfg = PicardConfig(grid=small_grid, t_end=1.0, smallness=np.inf, max_iter=30)
    with pytest.raises(PicardDivergence) as info:
        picard_solve(bump(small_grid, 0.3), cfg)
    assert len(info.value.history) >= 4


def test_contraction_at_default_amplitude(picard_runs):
    _, res = picard_runs.get(1e-3)
    assert res.converged and res.iterations <= 6
    assert all(r < 0.1 for r in res.ratios[:2])
    h = res.history
    assert all(h[i + 1] < h[i] for i in range(len(h) - 1))


def test_ratio_scales_with_amplitude(picard_runs):
    _, a = picard_runs.get(1e-3)
    _, b = picard_runs.get(2e-3)
    assert 1.6 <= b.ratios[0] / a.ratios[0] <= 2.4


def test_fixed_point_residual(picard_runs):
    u0, res = picard_runs.get(1e-3)
    cfg = PicardConfig(grid=u0.grid)
    again = solve_linear(cfg.linear_problem(u0, _forcing(res.trajectory, cfg.floor)))
    assert np.max(np.abs(again.values - res.trajectory.values)) < 2 * cfg.tol


def test_iterations_monotone_in_amplitude(picard_runs):
    counts = [picard_runs.get(e)[1].iterations for e in FAMILY]
    assert counts == sorted(counts)


def test_stagnation_flag(picard_runs):
    _, small = picard_runs.get(1e-4)
    _, large = picard_runs.get(1e-2)
    assert small.trajectory.meta["picard_stagnated"] is False
    assert large.converged
    h = large.history
    assert h[-1] < 1e-8 * large.trajectory.max_sup()


@pytest.mark.slow
def test_apriori_family_and_refinement(picard_runs, grid):
    ratios = [apriori_check(picard_runs.get(e)[1].trajectory, picard_runs.get(e)[0])[2] for e in FAMILY]
    assert max(ratios) / min(ratios) < 1.25
    coarse = LogGrid(-12.0, 6.0, 768)
    u0 = bump(coarse, 1e-3)
    r = apriori_check(picard_solve(u0, PicardConfig(grid=coarse)).trajectory, u0)[2]
    assert abs(r / ratios[1] - 1) < 0.25


def test_apriori_zero(grid):
    traj = picard_solve(grid.zeros(), PicardConfig(grid=grid, t_end=1.0)).trajectory
    assert apriori_check(traj, grid.zeros()) == (0.0, 0.0, 1.0)


def test_decay_slopes(picard_runs):
    _, res = picard_runs.get(1e-3)
    rep = decay_report(res.trajectory, 1)
    assert rep.slope(0, 1) <= -BETA + 0.2
    assert rep.remainder_slope <= -1 + 0.3
    assert rep.targets[AdmissibleExponent(0, 1)] == pytest.approx(-BETA)
    data = json.loads(rep.to_json())
    assert data["remainder_target"] == -1.0
    assert all(math.isfinite(c["slope"]) for c in data["coefficients"])


def test_decay_zero_is_indeterminate(grid):
    traj = picard_solve(grid.zeros(), PicardConfig(grid=grid)).trajectory
    rep = decay_report(traj, 1)
    assert len(rep.indeterminate) == len(rep.slopes)
    assert all(math.isnan(s) for s in rep.slopes.values())
    with pytest.raises(ValueError):
        decay_report(traj, 1, window=(1.0, 2.0))


@pytest.mark.slow
def test_coefficient_diagnostics(picard_runs, grid):
    zero = picard_solve(grid.zeros(), PicardConfig(grid=grid, t_end=1.0)).trajectory
    assert coefficient_diagnostics(zero)["max_ratio"] == 0.0
    _, res = picard_runs.get(1e-3)
    _, half = picard_runs.get(1e-3, stride=5)
    a = coefficient_diagnostics(res.trajectory)
    b = coefficient_diagnostics(half.trajectory)
    assert 0 < a["max_ratio"] < 1
    assert abs(b["max_ratio"] / a["max_ratio"] - 1) < 0.2


def test_history_csv(picard_runs, tmp_path):
    _, res = picard_runs.get(1e-3)
    path = tmp_path / "history.csv"
    res.history_csv(path)
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["iteration", "difference"]
    assert [float(r[1]) for r in rows[1:]] == res.history


def test_damped_iteration_converges(small_grid):
    u0 = bump(small_grid, 1e-3)
    plain = picard_solve(u0, PicardConfig(grid=small_grid, t_end=1.0))
    damped = picard_solve(u0, PicardConfig(grid=small_grid, t_end=1.0, damping=0.5, max_iter=60))
    assert damped.converged and damped.iterations > plain.iterations
    assert np.max(np.abs(damped.trajectory.values - plain.trajectory.values)) < 1e-10
