"""Convergence studies for the flow solver.

* manufactured solution with a symbolic forcing term (spatial order)
* dt-halving self-convergence of the coupled flow + shift update (temporal order)
* grid refinement of the entropy balance residual
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Sequence

import numpy as np
import sympy as sp

from .diagnostics import entropy_balance_residual, functional_suite
from .gas import GasLaw
from .profile import ProfileTable
from .solver import FluidState, Grid3, PerturbationSpec, Solver, SolverConfig, init_state
from .weight import ShiftState


def observed_orders(errors: Sequence[float], ratio: float = 2.0) -> List[float]:
    e = np.asarray(errors, dtype=float)
    return [float(math.log(e[i] / e[i + 1]) / math.log(ratio)) for i in range(e.size - 1)]


# ---------------------------------------------------------------- manufactured solution


@dataclass(frozen=True)
class MMSProblem:
    gamma: float = 2.0
    mu: float = 0.1
    lam: float = 0.05
    sigma: float = 0.5
    L: float = 6.0


@lru_cache(maxsize=8)
def _mms_functions(prob: MMSProblem):
    x, y, z, t = sp.symbols("x y z t", real=True)
    tp = 2 * sp.pi
    env = sp.exp(-x ** 2)
    rho = 1 + sp.Rational(1, 5) * env * (1 + sp.sin(tp * y) * sp.cos(tp * z) / 2) * (1 + sp.sin(t) / 2)
    u = [sp.Rational(3, 10) * env * sp.cos(tp * y) * (1 + t),
         sp.Rational(1, 5) * env * sp.sin(tp * z) * sp.cos(t),
         sp.Rational(1, 5) * env * sp.cos(tp * y) * sp.sin(tp * z) * sp.exp(-t)]
    X = (x, y, z)
    g, mu, lam, sig = sp.nsimplify(prob.gamma), sp.nsimplify(prob.mu), sp.nsimplify(prob.lam), sp.nsimplify(prob.sigma)
    m = [rho * ui for ui in u]
    p = rho ** g
    div_u = sum(sp.diff(u[b], X[b]) for b in range(3))
    src = [sp.diff(rho, t) - sig * sp.diff(rho, x) + sum(sp.diff(m[b], X[b]) for b in range(3))]
    for a in range(3):
        flux = sum(sp.diff(m[a] * u[b], X[b]) for b in range(3))
        visc = mu * sum(sp.diff(u[a], X[b], 2) for b in range(3)) + (mu + lam) * sp.diff(div_u, X[a])
        src.append(sp.diff(m[a], t) - sig * sp.diff(m[a], x) + flux + sp.diff(p, X[a]) - visc)
    exact = sp.lambdify((x, y, z, t), [rho] + m, modules="numpy", cse=True)
    source = sp.lambdify((x, y, z, t), src, modules="numpy", cse=True)
    return exact, source


def _stack(vals, shape):
    return np.stack([np.broadcast_to(np.asarray(v, dtype=float), shape) for v in vals])


class _MMSSource:
    def __init__(self, prob, grid):
        self.fn = _mms_functions(prob)[1]
        self.mesh = grid.mesh()
        self.shape = grid.shape

    def __call__(self, t):
        return _stack(self.fn(*self.mesh, t), self.shape)


def mms_exact(prob: MMSProblem, grid: Grid3, t: float) -> np.ndarray:
    return _stack(_mms_functions(prob)[0](*grid.mesh(), t), grid.shape)


def _dummy_table(prob: MMSProblem):
    # the solver only needs gamma and the frame speed when the shift is frozen
    from .gas import solve_rankine_hugoniot
    from .profile import Viscosity, solve_profile
    law = GasLaw(prob.gamma)
    st, c = solve_rankine_hugoniot(1.0, 1.5, 0.0, law)
    return solve_profile(st, c, law, Viscosity(prob.mu, prob.lam))


def mms_error(prob: MMSProblem, N1: int, N2: int, t_end: float = 0.05, cfl: float = 1.0) -> float:
    """Max-norm error of the forced solution at ``t_end`` (all four fields)."""
    grid = Grid3(prob.L, N1, N2, N2)
    cfg = SolverConfig(mu=prob.mu, lam=prob.lam, cfl=cfl, t_end=t_end, perturbation=PerturbationSpec(0.0))
    solver = Solver(_dummy_table(prob), grid, cfg, couple_shift=False, source=_MMSSource(prob, grid),
                    sigma=prob.sigma)
    state = FluidState(mms_exact(prob, grid, 0.0), grid)
    dt_max = 0.95 * solver.cfl_dt(state)
    n = max(1, math.ceil(t_end / dt_max))
    dt = t_end / n
    shift = ShiftState()
    for _ in range(n):
        state, shift = solver.step(state, shift, dt)
    return float(np.max(np.abs(state.U - mms_exact(prob, grid, t_end))))


def mms_truncation(prob: MMSProblem, N1: int, N2: int, t: float = 0.3) -> float:
    """max |discrete RHS + forcing - dU/dt| on interior nodes for the exact fields."""
    grid = Grid3(prob.L, N1, N2, N2)
    cfg = SolverConfig(mu=prob.mu, lam=prob.lam, perturbation=PerturbationSpec(0.0))
    solver = Solver(_dummy_table(prob), grid, cfg, couple_shift=False, source=_MMSSource(prob, grid),
                    sigma=prob.sigma)
    U = mms_exact(prob, grid, t)
    h = 1e-4
    dUdt = (mms_exact(prob, grid, t + h) - mms_exact(prob, grid, t - h)) / (2 * h)
    return float(np.max(np.abs(solver.rhs(U, t) - dUdt)[:, 1:-1]))


def mms_study(levels=((64, 8), (128, 16), (256, 32)), prob: MMSProblem = MMSProblem(), t_end: float = 0.05):
    errs = [mms_error(prob, n1, n2, t_end) for n1, n2 in levels]
    return errs, observed_orders(errs)


# ---------------------------------------------------------------- temporal self-convergence


def temporal_study(table: ProfileTable, grid: Grid3, cfg: SolverConfig, t_end: float, base_steps: int,
                   levels: int = 3):
    """Solve with dt, dt/2, dt/4 ... and return successive differences and orders.

    Differences are taken in the max norm over (U, X) at ``t_end``.
    """
    sols = []
    for k in range(levels):
        n = base_steps * 2 ** k
        dt = t_end / n
        solver = Solver(table, grid, cfg)
        s = init_state(table, grid, cfg.perturbation)
        sh = solver.initial_shift(s)
        for _ in range(n):
            s, sh = solver.step(s, sh, dt)
        sols.append((s.U, sh.X))
    diffs = [max(float(np.max(np.abs(a[0] - b[0]))), abs(a[1] - b[1])) for a, b in zip(sols, sols[1:])]
    return diffs, observed_orders(diffs)


# ---------------------------------------------------------------- balance residual refinement


def balance_residual_at(table: ProfileTable, grid: Grid3, cfg: SolverConfig, t_end: float):
    """Entropy-balance residual at ``t_end`` from three consecutive records."""
    solver = Solver(table, grid, cfg)
    s = init_state(table, grid, cfg.perturbation)
    sh = solver.initial_shift(s)
    dt_max = 0.95 * solver.cfl_dt(s)
    n = max(2, math.ceil(t_end / dt_max))
    dt = t_end / n
    recs = []
    identity = []
    for i in range(n + 1):
        if i >= n - 1:
            r = functional_suite(s, table, solver.weight, sh, with_norms=False)
            recs.append(r)
            identity.append(r.shift_identity_error())
        s, sh = solver.step(s, sh, dt)
    r = functional_suite(s, table, solver.weight, sh, with_norms=False)
    recs.append(r)
    identity.append(r.shift_identity_error())
    (_, absres, relres), = entropy_balance_residual(recs)
    return absres, relres, max(identity)


def balance_study(table: ProfileTable, levels=((64, 8), (128, 16), (256, 32)), L: float = 8.0,
                  t_end: float = 0.02, cfl: float = 1.0):
    out = []
    for n1, n2 in levels:
        cfg = SolverConfig(mu=table.viscosity.mu, lam=table.viscosity.lam, cfl=cfl, t_end=t_end)
        out.append(balance_residual_at(table, Grid3(L, n1, n2, n2), cfg, t_end))
    errs = [o[0] for o in out]
    return out, observed_orders(errs)
