"""Run driver: fixed-step integration with periodic diagnostics."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, List, Optional

import numpy as np

from .diagnostics import FunctionalRecord, functional_suite, weighted_relative_entropy, with_extras
from .profile import ProfileTable
from .solver import (CFLViolation, FluidState, Grid3, NumericalFailure, Solver, SolverConfig, boundary_activity,
                     init_state, write_snapshot)
from .weight import ShiftState

DT_SAFETY = 0.95


@dataclass
class RunResult:
    records: List[FunctionalRecord]
    state: FluidState
    shift: ShiftState
    dt: float
    steps: int
    wall_time: float
    mass_initial: float
    mass_final: float
    boundary_inflow: float
    mass_error_max: float
    shift_t: np.ndarray = field(repr=False, default=None)
    shift_X: np.ndarray = field(repr=False, default=None)
    shift_Xdot: np.ndarray = field(repr=False, default=None)

    @property
    def mass_error(self) -> float:
        return abs(self.mass_final - self.mass_initial - self.boundary_inflow)


def choose_dt(solver: Solver, state: FluidState, output_interval: float) -> tuple:
    """Largest dt below the CFL limit that divides the output interval."""
    dt_max = DT_SAFETY * solver.cfl_dt(state)
    per_out = max(1, math.ceil(output_interval / dt_max - 1e-12))
    return output_interval / per_out, per_out


def run_simulation(table: ProfileTable, grid: Grid3, cfg: SolverConfig, *, output_interval: float = 0.1,
                   with_norms: bool = True, state: Optional[FluidState] = None,
                   snapshot_dir: Optional[Path] = None, snapshot_interval: Optional[float] = None,
                   progress: Optional[Callable[[FunctionalRecord], None]] = None,
                   record_shift_every_step: bool = True) -> RunResult:
    """Integrate to ``cfg.t_end``, recording the functional suite every ``output_interval``.

    Each record's balance residual uses the entropy one step before and after
    the output step (central difference in time).  On a numerical failure
    the offending state is written as a snapshot (when ``snapshot_dir`` is
    given) before the exception propagates.
    """
    n_out = cfg.t_end / output_interval
    if abs(n_out - round(n_out)) > 1e-9 * n_out:
        raise ValueError("t_end must be a whole multiple of the output interval")
    n_out = int(round(n_out))
    solver = Solver(table, grid, cfg)
    s = init_state(table, grid, cfg.perturbation) if state is None else state
    shift = solver.initial_shift(s)
    dt, per_out = choose_dt(solver, s, output_interval)
    nsteps = per_out * n_out
    snap_every = None
    if snapshot_dir is not None and snapshot_interval:
        snap_every = max(1, int(round(snapshot_interval / dt)))
    reference = s.U.copy()
    weight = solver.weight
    m0 = s.total_mass()
    inflow = 0.0
    mass_err = 0.0
    records: List[FunctionalRecord] = []
    record_at = {}  # step index -> position in records
    energy = {}  # step index -> E_weighted, kept only around output steps
    ts, xs, xds = [0.0], [0.0], [shift.Xdot]

    def full_record(st, sh):
        rec = functional_suite(st, table, weight, sh, with_norms=with_norms)
        return with_extras(rec, boundary_activity=boundary_activity(st, reference))

    def near_output(k):
        return (k + 1) % per_out == 0 or (k - 1) % per_out == 0

    t0 = time.perf_counter()
    records.append(full_record(s, shift))
    record_at[0] = 0
    energy[0] = records[0].E_weighted
    n = 0
    try:
        for n in range(1, nsteps + 1):
            try:
                s, shift = solver.step(s, shift, dt, check_cfl=True)
            except CFLViolation as exc:
                # dt is fixed at the start; a state that outgrows it is a failed run
                raise NumericalFailure(f"t={shift.t:.6g}: {exc}", s, shift) from exc
            inflow += solver.last_flux
            if record_shift_every_step:
                ts.append(shift.t)
                xs.append(shift.X)
                xds.append(shift.Xdot)
            if n % per_out == 0:
                rec = full_record(s, shift)
                record_at[n] = len(records)
                records.append(rec)
                energy[n] = rec.E_weighted
                mass_err = max(mass_err, abs(s.total_mass() - m0 - inflow))
                if progress is not None:
                    progress(rec)
            elif near_output(n):
                energy[n] = weighted_relative_entropy(s, table, weight, shift.X)
            m = n - 1
            if m in record_at and m - 1 in energy:
                i = record_at[m]
                res = (energy[n] - energy[m - 1]) / (2.0 * dt) - records[i].balance_rhs
                records[i] = with_extras(records[i], balance_residual=res)
            for k in [k for k in energy if k < n - 1]:
                del energy[k]
            if snap_every and n % snap_every == 0:
                write_snapshot(Path(snapshot_dir) / f"snapshot_{n:08d}.bin", s, shift.t, shift.X)
    except NumericalFailure as exc:
        if snapshot_dir is not None and exc.state is not None:
            write_snapshot(Path(snapshot_dir) / "failure_snapshot.bin", exc.state, shift.t + dt, shift.X)
        exc.records = records
        raise
    wall = time.perf_counter() - t0
    m1 = s.total_mass()
    mass_err = max(mass_err, abs(m1 - m0 - inflow))
    return RunResult(records, s, shift, dt, nsteps, wall, m0, m1, inflow, mass_err,
                     np.array(ts), np.array(xs), np.array(xds))
