"""Weight function a(xi1) and the time-dependent shift X(t)."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import rk
from .kernels import shift_slabs
from .profile import ProfileTable


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class WeightFn:
    table: ProfileTable
    nu: float
    delta: float

    @classmethod
    def from_table(cls, table: ProfileTable) -> "WeightFn":
        delta = table.constants.delta
        return cls(table, math.sqrt(delta), delta)

    def at(self, s, sample=None):
        """(a, a') at unshifted profile coordinates ``s``."""
        law, vm = self.table.law, self.table.end_states.v_minus
        prof = self.table.sample(s) if sample is None else sample
        c = self.nu / self.delta
        a = 1.0 + c * (law.p(vm) - law.p(prof.v))
        da = -c * law.dp(prof.v) * prof.dv
        return a, da


def weight_eval(w: WeightFn, xi1, shift: float = 0.0):
    """a and a' evaluated at ``xi1 - shift``."""
    return w.at(np.asarray(xi1, dtype=float) - shift)


@dataclass(frozen=True)
class ShiftState:
    t: float = 0.0
    X: float = 0.0
    Xdot: float = 0.0


def _check_compatible(grid, table):
    if grid.L > table.half_length:
        raise ConfigurationError(
            f"profile table half-length {table.half_length:g} does not cover the grid (L={grid.L:g})")


def shift_rhs(state, table: ProfileTable, w: WeightFn, X: float) -> float:
    """Right-hand side of the shift ODE for the current fluid state.

    Trapezoidal rule in xi1 and the periodic rectangle rule in xi2, xi3; the
    per-plane sums are accumulated in a fixed order and combined with
    ``math.fsum`` so the result is reproducible run to run.
    """
    grid = state.grid
    _check_compatible(grid, table)
    consts, law = table.constants, table.law
    s = grid.xi1 - X
    prof = table.sample(s)
    a, _ = w.at(s, prof)
    s1, s2 = shift_slabs(state.rho, prof.v, law.gamma)
    wq = grid.weights1 * grid.cell_area
    i1 = math.fsum(wq * a / consts.sigma_star * prof.dh1 * s1)
    i2 = math.fsum(wq * a * law.dp(prof.v) * prof.dv * s2)
    return -consts.shift_gain / consts.delta * (i1 - i2)


def shift_step(s: ShiftState, rhs, dt: float) -> ShiftState:
    """Advance X by one SSP-RK3 step.

    ``rhs`` is a constant or a callable ``rhs(t, X)``.  The stored ``Xdot`` is
    the right-hand side at the completed step.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    f = rhs if callable(rhs) else (lambda t, x, c=float(rhs): c)
    X = rk.ssprk3_scalar(f, s.t, s.X, dt)
    t = s.t + dt
    xdot = f(t, X)
    if not math.isfinite(xdot):
        raise FloatingPointError(f"non-finite shift velocity at t={t}")
    return ShiftState(t, X, xdot)


def coarse_shift_bound(table: ProfileTable, w: WeightFn, v_max: float) -> float:
    """Bound on |Xdot| for states with v <= v_max (sup-norm bound of the shift ODE).

    |Xdot| <= (M/delta) * max|a| * [ sup|rho (p(v)-p(vs))| * int|h1s'|/sigma_*
                                     + sup|rho p'(vs)(v - vs)| * int|vs'| ]
    evaluated with v in [v_-/2, v_max], rho = 1/v.
    """
    c, law = table.constants, table.law
    hx = table.spacing
    a_max = 1.0 + w.nu
    vmin = 0.5 * table.end_states.v_minus
    rho_max = 1.0 / vmin
    int_dh = np.sum(np.abs(table.dh1)) * hx
    int_dv = np.sum(np.abs(table.d1v)) * hx
    pmax = law.p(vmin)
    dp_max = abs(law.dp(table.end_states.v_minus))
    term1 = rho_max * pmax * int_dh / c.sigma_star
    term2 = rho_max * dp_max * (v_max - table.end_states.v_minus + (table.end_states.v_plus - vmin)) * int_dv
    return c.shift_gain / c.delta * a_max * (term1 + term2)
