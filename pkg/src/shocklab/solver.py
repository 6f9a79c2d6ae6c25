"""Moving-frame compressible Navier-Stokes on a truncated strip [-L, L] x T^2.

Conservative unknowns (rho, rho u) on a node lattice: N1 + 1 nodes in xi1
including the two Dirichlet planes, N2 x N3 periodic nodes transversally.
Time stepping is three-stage SSP Runge-Kutta with the shift ODE advanced in
lockstep (X re-evaluated from every stage state).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import rk
from .gas import GasLaw
from .kernels import _d1, rhs_kernel, stage_update, wave_speeds
from .profile import ProfileTable, Viscosity
from .weight import ConfigurationError, ShiftState, WeightFn, shift_rhs

SNAPSHOT_MAGIC = "SHOCKLAB1"


class NumericalFailure(RuntimeError):
    """Raised when a step produces a non-physical state; carries that state."""

    def __init__(self, msg, state=None, shift=None):
        super().__init__(msg)
        self.state = state
        self.shift = shift


class CFLViolation(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Grid3:
    L: float
    N1: int
    N2: int
    N3: int

    def __post_init__(self):
        if self.N1 < 64 or self.N2 < 4 or self.N3 < 4:
            raise ConfigurationError(f"grid too coarse: N1={self.N1} (>=64), N2={self.N2}, N3={self.N3} (>=4)")
        if not self.L > 0:
            raise ConfigurationError("L must be positive")
        xi1 = np.linspace(-self.L, self.L, self.N1 + 1)
        w1 = np.full(self.N1 + 1, self.dx1)
        w1[0] = w1[-1] = 0.5 * self.dx1
        object.__setattr__(self, "xi1", xi1)
        object.__setattr__(self, "xi2", np.arange(self.N2) / self.N2)
        object.__setattr__(self, "xi3", np.arange(self.N3) / self.N3)
        object.__setattr__(self, "weights1", w1)

    @property
    def dx1(self):
        return 2.0 * self.L / self.N1

    @property
    def dx2(self):
        return 1.0 / self.N2

    @property
    def dx3(self):
        return 1.0 / self.N3

    @property
    def spacing(self):
        return (self.dx1, self.dx2, self.dx3)

    @property
    def shape(self):
        return (self.N1 + 1, self.N2, self.N3)

    @property
    def cell_area(self):
        return self.dx2 * self.dx3

    def mesh(self):
        return np.meshgrid(self.xi1, self.xi2, self.xi3, indexing="ij")

    def integrate(self, f):
        """Trapezoid in xi1, rectangle rule on the torus (vectorised path)."""
        f = np.asarray(f, dtype=float)
        if f.ndim == 1:
            return float(np.dot(self.weights1, f))
        return float(np.dot(self.weights1, f.sum(axis=(1, 2)))) * self.cell_area

    def refined(self, factor=2):
        return Grid3(self.L, self.N1 * factor, self.N2 * factor, self.N3 * factor)


@dataclass(eq=False)
class FluidState:
    U: np.ndarray
    grid: Grid3

    @property
    def rho(self):
        return self.U[0]

    @property
    def mom(self):
        return self.U[1:]

    @property
    def v(self):
        return 1.0 / self.U[0]

    @property
    def u(self):
        return self.U[1:] / self.U[0]

    def copy(self):
        return FluidState(self.U.copy(), self.grid)

    @classmethod
    def from_primitive(cls, v, u, grid):
        v = np.asarray(v, dtype=float)
        if np.any(~(v > 0)):
            raise ValueError("non-positive specific volume")
        rho = 1.0 / v
        U = np.empty((4,) + grid.shape)
        U[0] = rho
        U[1:] = rho * np.asarray(u, dtype=float)
        return cls(U, grid)

    def total_mass(self):
        return self.grid.integrate(self.rho)


@dataclass(frozen=True)
class PerturbationSpec:
    epsilon: float = 0.01
    shape: str = "gaussian"
    seed: int = 0

    SHAPES = ("gaussian", "planar", "bump", "random")

    def __post_init__(self):
        if self.shape not in self.SHAPES:
            raise ConfigurationError(f"unknown perturbation shape {self.shape!r}; choose from {self.SHAPES}")


@dataclass(frozen=True)
class SolverConfig:
    mu: float = 1.0
    lam: float = 0.0
    cfl: float = 1.2
    t_end: float = 50.0
    perturbation: PerturbationSpec = field(default_factory=PerturbationSpec)

    def __post_init__(self):
        Viscosity(self.mu, self.lam)  # validates mu > 0, 2mu+3lam >= 0
        if not self.cfl > 0:
            raise ConfigurationError("cfl must be positive")
        if not self.t_end > 0:
            raise ConfigurationError("t_end must be positive")

    @property
    def viscosity(self):
        return Viscosity(self.mu, self.lam)

    @property
    def kappa(self):
        return 2.0 * self.mu + self.lam


def perturbation_shape(spec: PerturbationSpec, grid: Grid3):
    """Unit-amplitude (phi, psi) on the grid; multiply by epsilon for the state.

    Every shape is localised in xi1 and has non-zero mean, so the zero-mass
    condition fails by construction.
    """
    X1, X2, X3 = grid.mesh()
    tp = 2.0 * np.pi
    if spec.shape == "gaussian":
        env = np.exp(-X1 ** 2)
        phi = env * (1.0 + np.cos(tp * X2) * np.cos(tp * X3))
        psi = np.stack([env * (1.0 + np.sin(tp * X2) * np.sin(tp * X3)),
                        env * np.cos(tp * X3),
                        env * np.sin(tp * X2)])
    elif spec.shape == "planar":
        env = np.exp(-X1 ** 2)
        phi = env * np.ones_like(X2)
        psi = np.stack([env, 0.0 * env, 0.0 * env])
    elif spec.shape == "bump":
        env = np.exp(-X1 ** 2 / 4.0)
        phi = env * np.exp(np.cos(tp * X2) + np.cos(tp * X3) - 2.0)
        psi = np.stack([-phi, 0.5 * env * np.sin(tp * X3), 0.5 * env * np.sin(tp * X2)])
    else:
        rng = np.random.default_rng(spec.seed)
        env = np.exp(-X1 ** 2)
        phi = env.copy()
        psi = np.stack([env.copy(), np.zeros_like(env), np.zeros_like(env)])
        for _ in range(4):
            k2, k3 = rng.integers(0, 3, size=2)
            for comp in range(4):
                amp, ph = rng.uniform(-0.5, 0.5), rng.uniform(0, tp)
                term = amp * env * np.cos(tp * (k2 * X2 + k3 * X3) + ph)
                if comp == 0:
                    phi += term
                else:
                    psi[comp - 1] += term
    return phi, psi


def init_state(table: ProfileTable, grid: Grid3, pert: PerturbationSpec) -> FluidState:
    prof = table.sample(grid.xi1)
    vs = np.broadcast_to(prof.v[:, None, None], grid.shape)
    u = np.zeros((3,) + grid.shape)
    u[0] = prof.u1[:, None, None]
    if pert.epsilon != 0.0:
        phi, psi = perturbation_shape(pert, grid)
        v = vs + pert.epsilon * phi
        u = u + pert.epsilon * psi
    else:
        v = vs.copy()
    if np.any(~(v > 0)):
        raise ConfigurationError("perturbation makes the density non-positive")
    return FluidState.from_primitive(v, u, grid)


def rhs_eval(state: FluidState, grid: Grid3, cfg: SolverConfig, sigma: float, law: GasLaw) -> np.ndarray:
    return rhs_kernel(state.U, law.gamma, sigma, cfg.mu, cfg.lam, *grid.spacing)


def cfl_dt(state: FluidState, grid: Grid3, cfg: SolverConfig, law: GasLaw, sigma: float) -> float:
    """cfl * min(acoustic limit over axes, dx_min^2 rho_min / (2 kappa dim))."""
    s1, s2, s3, rmin = wave_speeds(state.U, law.gamma, sigma)
    acoustic = min(grid.dx1 / s1, grid.dx2 / s2, grid.dx3 / s3)
    dxm = min(grid.spacing)
    parabolic = dxm * dxm * rmin / (2.0 * cfg.kappa * 3)
    return cfg.cfl * min(acoustic, parabolic)


def effective_velocity(state: FluidState, grid: Grid3, cfg: SolverConfig) -> np.ndarray:
    """h = u - kappa grad v with the solver stencils; d1 v is zero on the end planes."""
    v = state.v
    h = state.u.copy()
    for a in range(3):
        h[a] -= cfg.kappa * _d1(v, a, grid.spacing[a])
    return h


def boundary_mass_flux(U, grid: Grid3, sigma: float) -> float:
    """Net inflow rate of mass: -(f_N + f_{N-1} - f_1 - f_0)/2 times the torus area, f = m1 - sigma rho.

    This is exactly the rate of change of the trapezoid-weighted total mass
    under the central-difference scheme.
    """
    idx = [0, 1, -2, -1]
    fs = (U[1, idx] - sigma * U[0, idx]).sum(axis=(1, 2))
    return -0.5 * (fs[3] + fs[2] - fs[1] - fs[0]) * grid.cell_area


class Solver:
    """Flow plus shift stepping for one configuration.

    ``couple_shift=False`` freezes X (used by manufactured-solution tests);
    ``source(t)`` adds a forcing term on interior nodes.
    """

    def __init__(self, table: ProfileTable, grid: Grid3, cfg: SolverConfig, *,
                 couple_shift: bool = True, source: Optional[Callable] = None,
                 sigma: Optional[float] = None):
        self.table = table
        self.grid = grid
        self.cfg = cfg
        self.law = table.law
        self.sigma = table.constants.sigma if sigma is None else sigma
        self.weight = WeightFn.from_table(table)
        self.couple_shift = couple_shift
        self.source = source
        self.last_flux = 0.0
        if couple_shift and grid.L > table.half_length:
            raise ConfigurationError(
                f"profile table half-length {table.half_length:g} does not cover the grid (L={grid.L:g})")

    def rhs(self, U, t):
        out = rhs_kernel(U, self.law.gamma, self.sigma, self.cfg.mu, self.cfg.lam, *self.grid.spacing)
        if self.source is not None:
            src = self.source(t)
            out[:, 1:-1] += src[:, 1:-1]
        return out

    def xdot(self, U, X):
        if not self.couple_shift:
            return 0.0
        return shift_rhs(FluidState(U, self.grid), self.table, self.weight, X)

    def cfl_dt(self, state: FluidState) -> float:
        return cfl_dt(state, self.grid, self.cfg, self.law, self.sigma)

    def step(self, state: FluidState, shift: ShiftState, dt: float, check_cfl: bool = True):
        """One SSP-RK3 step of (U, X).  Returns new (FluidState, ShiftState).

        ``self.last_flux`` holds the boundary mass inflow over the step,
        integrated with the same stage weights as the update.
        """
        if check_cfl:
            lim = self.cfl_dt(state)
            if dt > lim * (1.0 + 1e-12):
                raise CFLViolation(f"dt={dt:.6g} exceeds CFL limit {lim:.6g}")
        U0, X0, t0 = state.U, shift.X, shift.t
        Uk = U0
        ks = []
        flux = 0.0
        for a, b, c, wgt in zip(rk.A, rk.B, rk.C, rk.WEIGHTS):
            tk = t0 + c * dt
            L = self.rhs(Uk, tk)
            ks.append(self.xdot(Uk, rk.stage_input(X0, ks, dt)))
            flux += wgt * boundary_mass_flux(Uk, self.grid, self.sigma)
            Uk = stage_update(U0, Uk, L, dt, a, b)
        Xk = rk.stage_input(X0, ks, dt)
        self.last_flux = dt * flux
        t1 = t0 + dt
        new = FluidState(Uk, self.grid)
        if not np.all(np.isfinite(Uk)):
            raise NumericalFailure(f"non-finite state at t={t1:.6g}", new, shift)
        if Uk[0].min() <= 0.0:
            raise NumericalFailure(f"negative density at t={t1:.6g}", new, shift)
        xd = self.xdot(Uk, Xk)
        if not math.isfinite(xd):
            raise NumericalFailure(f"non-finite shift velocity at t={t1:.6g}", new, shift)
        return new, ShiftState(t1, Xk, xd)

    def initial_shift(self, state: FluidState) -> ShiftState:
        return ShiftState(0.0, 0.0, self.xdot(state.U, 0.0))


def boundary_activity(state: FluidState, reference: np.ndarray) -> float:
    """Max |U - reference| over the outer 5% of the xi1 extent (both ends)."""
    n = state.U.shape[1]
    k = max(1, int(math.ceil(0.05 * n)))
    d = np.abs(state.U - reference)
    return float(max(d[:, :k].max(), d[:, n - k:].max()))


def write_snapshot(path, state: FluidState, t: float, X: float):
    g = state.grid
    header = f"{SNAPSHOT_MAGIC} {g.N1} {g.N2} {g.N3} {g.L!r} {float(t)!r} {float(X)!r}\n"
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(np.ascontiguousarray(state.U, dtype="<f8").tobytes())
    return path


def read_snapshot(path):
    with open(path, "rb") as fh:
        header = fh.readline().decode("ascii").split()
        if len(header) != 7 or header[0] != SNAPSHOT_MAGIC:
            raise ValueError(f"{path}: not a {SNAPSHOT_MAGIC} snapshot")
        n1, n2, n3 = (int(x) for x in header[1:4])
        L, t, X = (float(x) for x in header[4:7])
        grid = Grid3(L, n1, n2, n3)
        data = np.frombuffer(fh.read(), dtype="<f8")
    expected = 4 * (n1 + 1) * n2 * n3
    if data.size != expected:
        raise ValueError(f"{path}: expected {expected} values, found {data.size}")
    U = data.reshape((4,) + grid.shape).astype(float)
    return FluidState(U, grid), t, X


__all__ = [
    "Grid3", "FluidState", "PerturbationSpec", "SolverConfig", "Solver", "NumericalFailure",
    "CFLViolation", "init_state", "rhs_eval", "cfl_dt", "effective_velocity", "boundary_mass_flux",
    "boundary_activity", "write_snapshot", "read_snapshot", "perturbation_shape",
]
