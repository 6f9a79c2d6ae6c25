import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from shocklab.kernels import rhs_kernel
from shocklab.solver import (CFLViolation, FluidState, Grid3, NumericalFailure, PerturbationSpec, Solver,
                             SolverConfig, cfl_dt, effective_velocity, init_state, perturbation_shape,
                             read_snapshot, rhs_eval, write_snapshot)
from shocklab.diagnostics import perturbation_fields, sobolev_norms
from shocklab.weight import ConfigurationError, ShiftState

# H2 norm of the default perturbation at epsilon = 0.01, frozen from oracles.perturbation_h2
DEFAULT_H2 = 0.7860564428731434


def test_grid_layout():
    g = Grid3(10.0, 128, 8, 4)
    assert g.shape == (129, 8, 4)
    assert g.xi1[0] == -10.0 and g.xi1[-1] == 10.0
    assert g.dx1 == pytest.approx(20.0 / 128)
    assert g.xi2[-1] == pytest.approx(1.0 - 1.0 / 8)
    assert g.integrate(np.ones(g.shape)) == pytest.approx(20.0, rel=1e-14)


@pytest.mark.parametrize("args", [(10.0, 32, 8, 8), (10.0, 128, 2, 8), (0.0, 128, 8, 8)])
def test_grid_rejects_bad_sizes(args):
    with pytest.raises(ConfigurationError):
        Grid3(*args)


def test_solver_rejects_grid_wider_than_table(strong_table):
    with pytest.raises(ConfigurationError):
        Solver(strong_table, Grid3(strong_table.half_length + 1.0, 64, 4, 4), SolverConfig())


@given(st.floats(0.2, 5.0), st.floats(-2.0, 2.0), st.floats(-2.0, 2.0), st.floats(-3.0, 3.0),
       st.floats(1.1, 3.0))
def test_constant_state_has_zero_rhs(rho, u1, u2, sigma, gamma):
    g = Grid3(5.0, 64, 4, 4)
    U = np.empty((4,) + g.shape)
    U[0], U[1], U[2], U[3] = rho, rho * u1, rho * u2, 0.0
    out = rhs_kernel(U, gamma, sigma, 1.0, 0.2, *g.spacing)
    assert np.max(np.abs(out)) <= 1e-12 * max(1.0, rho ** gamma / g.dx1, rho * u1 * u1 / g.dx1)


def test_unperturbed_init_is_profile(strong_table, small_grid):
    s = init_state(strong_table, small_grid, PerturbationSpec(epsilon=0.0))
    prof = strong_table.sample(small_grid.xi1)
    np.testing.assert_allclose(s.v[:, 0, 0], prof.v, rtol=1e-15)  # stored as 1/v
    np.testing.assert_allclose(s.u[0, :, 3, 5], prof.u1, rtol=1e-15)
    assert np.all(s.U[2:] == 0.0)


@pytest.mark.parametrize("shape", PerturbationSpec.SHAPES)
def test_perturbation_has_non_zero_mass(small_grid, shape):
    phi, psi = perturbation_shape(PerturbationSpec(0.01, shape, seed=4), small_grid)
    assert abs(small_grid.integrate(phi)) > 0.1
    assert np.max(np.abs(phi[[0, -1]])) < 1e-12


def test_unknown_shape_rejected():
    with pytest.raises(ConfigurationError):
        PerturbationSpec(0.01, "square")


def test_default_perturbation_h2_norm(weak_table):
    g = Grid3(12.0, 1024, 32, 32)
    f = perturbation_fields(init_state(weak_table, g, PerturbationSpec(0.01)), weak_table, 0.0)
    h2 = sobolev_norms(np.concatenate([f.phi[None], f.psi]), g)[2]
    assert h2 == pytest.approx(DEFAULT_H2, rel=0.01)


def test_profile_is_discrete_steady_state_to_second_order(strong_table):
    errs = []
    for n1 in (128, 256, 512):
        g = Grid3(10.0, n1, 4, 4)
        cfg = SolverConfig()
        s = init_state(strong_table, g, PerturbationSpec(0.0))
        errs.append(np.max(np.abs(rhs_eval(s, g, cfg, strong_table.constants.sigma, strong_table.law))))
    orders = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
    assert all(1.9 <= o <= 2.1 for o in orders)


def test_cfl_limit_matches_formula(strong_table, small_grid):
    cfg = SolverConfig(cfl=0.8)
    s = init_state(strong_table, small_grid, PerturbationSpec(0.01))
    law, sigma = strong_table.law, strong_table.constants.sigma
    rho, u = s.rho, s.u
    c = np.sqrt(2.0 * rho)
    acoustic = min(small_grid.dx1 / np.max(np.abs(u[0] - sigma) + c),
                   small_grid.dx2 / np.max(np.abs(u[1]) + c), small_grid.dx3 / np.max(np.abs(u[2]) + c))
    parabolic = min(small_grid.spacing) ** 2 * rho.min() / (2 * 2.0 * 3)
    assert cfl_dt(s, small_grid, cfg, law, sigma) == pytest.approx(0.8 * min(acoustic, parabolic), rel=1e-14)


def test_cfl_violation_raised(strong_table, small_grid):
    solver = Solver(strong_table, small_grid, SolverConfig())
    s = init_state(strong_table, small_grid, PerturbationSpec(0.01))
    with pytest.raises(CFLViolation):
        solver.step(s, solver.initial_shift(s), 2.0 * solver.cfl_dt(s))


def test_effective_velocity(strong_table, small_grid):
    g = small_grid
    cfg = SolverConfig()
    U = np.zeros((4,) + g.shape)
    U[0], U[1], U[3] = 2.0, 1.0, -0.5
    h = effective_velocity(FluidState(U, g), g, cfg)
    np.testing.assert_array_equal(h, FluidState(U, g).u)
    s = init_state(strong_table, g, PerturbationSpec(0.0))
    h = effective_velocity(s, g, cfg)
    prof = strong_table.sample(g.xi1)
    # central differences of v_s: O(dx^2) in the interior
    assert np.max(np.abs(h[0, 1:-1, 0, 0] - prof.h1[1:-1])) <= 2.0 * g.dx1 ** 2
    assert np.all(h[1:] == 0.0)


def test_mass_balance_per_step(weak_table):
    g = Grid3(20.0, 128, 4, 4)
    solver = Solver(weak_table, g, SolverConfig())
    s = init_state(weak_table, g, PerturbationSpec(0.05, "bump"))
    sh = solver.initial_shift(s)
    dt = 0.9 * solver.cfl_dt(s)
    for _ in range(20):
        m0 = s.total_mass()
        s, sh = solver.step(s, sh, dt)
        assert s.total_mass() - m0 == pytest.approx(solver.last_flux, abs=1e-13 * m0)


def test_numerical_failure_carries_state(strong_table, small_grid):
    solver = Solver(strong_table, small_grid, SolverConfig())
    s = init_state(strong_table, small_grid, PerturbationSpec(0.01))
    with pytest.raises(NumericalFailure) as info:
        sh = solver.initial_shift(s)
        for _ in range(50):
            s, sh = solver.step(s, sh, 50.0 * solver.cfl_dt(s), check_cfl=False)
    assert info.value.state is not None


def test_snapshot_round_trip(tmp_path, strong_table, small_grid):
    s = init_state(strong_table, small_grid, PerturbationSpec(0.01, "random", seed=9))
    path = write_snapshot(tmp_path / "s.bin", s, 1.25, -0.5)
    back, t, X = read_snapshot(path)
    np.testing.assert_array_equal(back.U, s.U)
    assert (t, X) == (1.25, -0.5)
    assert back.grid.shape == small_grid.shape
    assert path.read_bytes().startswith(b"SHOCKLAB1 128 8 8 12.0 1.25 -0.5\n")


def test_snapshot_rejects_foreign_file(tmp_path):
    p = tmp_path / "x.bin"
    p.write_bytes(b"hello\n")
    with pytest.raises(ValueError):
        read_snapshot(p)


def test_frozen_shift_leaves_x_at_zero(strong_table, small_grid):
    solver = Solver(strong_table, small_grid, SolverConfig(), couple_shift=False)
    s = init_state(strong_table, small_grid, PerturbationSpec(0.01))
    sh = ShiftState()
    s, sh = solver.step(s, sh, solver.cfl_dt(s))
    assert sh.X == 0.0 and sh.Xdot == 0.0
