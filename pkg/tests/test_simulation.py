import math

import numpy as np
import pytest

from shocklab.diagnostics import entropy_balance_residual
from shocklab.simulation import choose_dt, run_simulation
from shocklab.solver import (Grid3, NumericalFailure, PerturbationSpec, Solver, SolverConfig, init_state,
                             read_snapshot)


@pytest.fixture(scope="module")
def short_run(weak_table):
    cfg = SolverConfig(t_end=1.0, perturbation=PerturbationSpec(0.01))
    return run_simulation(weak_table, Grid3(20.0, 128, 8, 8), cfg, output_interval=0.25)


def test_records_on_output_grid(short_run):
    ts = [r.t for r in short_run.records]
    np.testing.assert_allclose(ts, [0.0, 0.25, 0.5, 0.75, 1.0], atol=1e-12)
    assert short_run.steps * short_run.dt == pytest.approx(1.0, rel=1e-12)
    assert short_run.shift_t.size == short_run.steps + 1


def test_mass_balance_over_run(short_run):
    assert short_run.mass_error_max <= 1e-9
    assert short_run.mass_error <= short_run.mass_error_max


def test_balance_residual_filled_for_interior_records(short_run):
    res = [r.balance_residual for r in short_run.records]
    assert math.isnan(res[0]) and math.isnan(res[-1])
    assert all(math.isfinite(x) for x in res[1:-1])


def test_shift_trace_matches_records(short_run):
    last = short_run.records[-1]
    assert short_run.shift_X[-1] == last.X
    assert short_run.shift_Xdot[-1] == last.Xdot


def test_dt_divides_output_interval(weak_table):
    g = Grid3(20.0, 128, 8, 8)
    solver = Solver(weak_table, g, SolverConfig())
    dt, per = choose_dt(solver, init_state(weak_table, g, PerturbationSpec(0.01)), 0.1)
    assert dt * per == pytest.approx(0.1, rel=1e-15)
    assert dt <= 0.95 * solver.cfl_dt(init_state(weak_table, g, PerturbationSpec(0.01)))


def test_t_end_must_be_multiple(weak_table):
    with pytest.raises(ValueError):
        run_simulation(weak_table, Grid3(20.0, 64, 4, 4), SolverConfig(t_end=0.25), output_interval=0.1)


def test_snapshots_and_failure_snapshot(tmp_path, weak_table):
    g = Grid3(10.0, 64, 4, 4)
    run_simulation(weak_table, g, SolverConfig(t_end=0.2), output_interval=0.1, snapshot_dir=tmp_path,
                   snapshot_interval=0.1)
    snaps = sorted(tmp_path.glob("snapshot_*.bin"))
    assert len(snaps) == 2
    state, t, _ = read_snapshot(snaps[-1])
    assert t == pytest.approx(0.2) and state.grid.shape == g.shape
    with pytest.raises(NumericalFailure) as info:
        run_simulation(weak_table, g, SolverConfig(t_end=1.0, cfl=5.0, perturbation=PerturbationSpec(0.05)),
                       output_interval=0.5, snapshot_dir=tmp_path)
    assert (tmp_path / "failure_snapshot.bin").exists()
    assert info.value.records


def test_record_balance_matches_post_processing(weak_table):
    # records taken every step: the in-run residual equals the one recomputed from the history
    g = Grid3(20.0, 64, 4, 4)
    solver = Solver(weak_table, g, SolverConfig())
    dt, _ = choose_dt(solver, init_state(weak_table, g, PerturbationSpec(0.01)), 0.05)
    cfg = SolverConfig(t_end=4 * dt)
    run = run_simulation(weak_table, g, cfg, output_interval=dt, with_norms=False)
    post = entropy_balance_residual(run.records)
    for (t, absres, _), rec in zip(post, run.records[1:-1]):
        assert abs(rec.balance_residual) == pytest.approx(absres, rel=1e-12, abs=1e-18)
