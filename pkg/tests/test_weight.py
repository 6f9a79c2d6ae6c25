import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from shocklab.solver import FluidState, Grid3, PerturbationSpec, init_state
from shocklab.weight import (ConfigurationError, ShiftState, WeightFn, coarse_shift_bound, shift_rhs, shift_step,
                             weight_eval)


@pytest.fixture(scope="module")
def weight(strong_table):
    return WeightFn.from_table(strong_table)


def test_weight_limits(weight):
    a, da = weight_eval(weight, np.array([-1e9, 1e9]), 0.0)
    assert a[0] == 1.0
    assert a[1] == pytest.approx(1.0 + weight.nu, rel=1e-15)
    np.testing.assert_array_equal(da, 0.0)
    assert weight.nu == math.sqrt(weight.delta)


def test_weight_derivative_non_negative_on_samples(weight):
    rng = np.random.default_rng(3)
    xi = rng.uniform(-60.0, 60.0, 1000)
    _, da = weight_eval(weight, xi, rng.normal())
    assert np.all(da >= 0.0)


@given(st.floats(-40.0, 40.0), st.floats(-5.0, 5.0))
def test_weight_strictly_between_bounds(strong_table, xi, shift):
    w = WeightFn.from_table(strong_table)
    a, da = weight_eval(w, xi, shift)
    assert 1.0 < a < 1.0 + w.nu
    assert da > 0.0


def test_weight_bounds_on_grid(weight):
    xi = np.linspace(-30.0, 30.0, 4001)
    for shift in (-3.0, 0.0, 2.5):
        a, da = weight_eval(weight, xi, shift)
        assert np.all(a > 1.0) and np.all(a < 1.0 + weight.nu)
        assert np.all(da > 0.0)


def test_weight_derivative_matches_difference_quotient(weight):
    xi = np.linspace(-10.0, 10.0, 41)
    h = 1e-5
    a_p, _ = weight_eval(weight, xi + h)
    a_m, _ = weight_eval(weight, xi - h)
    _, da = weight_eval(weight, xi)
    np.testing.assert_allclose((a_p - a_m) / (2 * h), da, rtol=1e-7, atol=1e-12)


def _shifted_profile_state(table, grid, X):
    prof = table.sample(grid.xi1 - X)
    v = np.broadcast_to(prof.v[:, None, None], grid.shape).copy()
    u = np.zeros((3,) + grid.shape)
    u[0] = prof.u1[:, None, None]
    return FluidState.from_primitive(v, u, grid)


@pytest.mark.parametrize("X", [0.0, 0.37, -2.0])
def test_shift_rhs_vanishes_on_shifted_profile(weak_table, X):
    grid = Grid3(100.0, 256, 4, 4)
    state = _shifted_profile_state(weak_table, grid, X)
    w = WeightFn.from_table(weak_table)
    assert abs(shift_rhs(state, weak_table, w, X)) <= 1e-10 * grid.dx1 * grid.cell_area


def test_shift_rhs_rejects_uncovered_grid(strong_table):
    grid = Grid3(strong_table.half_length * 2, 64, 4, 4)
    state = FluidState(np.ones((4,) + grid.shape), grid)
    with pytest.raises(ConfigurationError):
        shift_rhs(state, strong_table, WeightFn.from_table(strong_table), 0.0)


def _pointwise_constant(table, w, v_lo, v_hi, rho_max):
    """C with |Xdot| <= C sup|v - vs| from the mean value theorem on each integrand."""
    c, law = table.constants, table.law
    hx = table.spacing
    dp_max = abs(law.dp(v_lo))
    int_dh = np.sum(np.abs(table.dh1)) * hx
    int_dv = np.sum(np.abs(table.d1v)) * hx
    dps_max = abs(law.dp(table.end_states.v_minus))
    return c.shift_gain / c.delta * (1.0 + w.nu) * rho_max * (dp_max * int_dh / c.sigma_star + dps_max * int_dv)


@given(st.integers(0, 2 ** 31 - 1), st.floats(1e-4, 0.05))
def test_shift_rhs_bounded_by_perturbation_size(weak_table, seed, amp):
    grid = Grid3(40.0, 128, 4, 4)
    w = WeightFn.from_table(weak_table)
    rng = np.random.default_rng(seed)
    base = _shifted_profile_state(weak_table, grid, 0.0)
    env = np.exp(-grid.xi1 ** 2 / rng.uniform(1.0, 50.0))[:, None, None]
    phi = amp * env * rng.uniform(-1.0, 1.0, grid.shape)
    v = base.v + phi
    state = FluidState.from_primitive(v, base.u, grid)
    C = _pointwise_constant(weak_table, w, float(v.min()), float(v.max()), float(1.0 / v.min()))
    assert abs(shift_rhs(state, weak_table, w, 0.0)) <= C * np.max(np.abs(phi)) * (1 + 1e-9)


def test_coarse_bound_over_ensemble(weak_table):
    grid = Grid3(40.0, 128, 4, 4)
    w = WeightFn.from_table(weak_table)
    es = weak_table.end_states
    bound = coarse_shift_bound(weak_table, w, 2.0 * es.v_plus)
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(50):
        v = rng.uniform(0.5 * es.v_minus, 2.0 * es.v_plus, grid.shape)
        state = FluidState.from_primitive(v, np.zeros((3,) + grid.shape), grid)
        worst = max(worst, abs(shift_rhs(state, weak_table, w, rng.uniform(-5, 5))))
    assert worst <= bound
    assert math.isfinite(bound)


def test_shift_step_zero_and_constant_rhs():
    s = ShiftState()
    s1 = shift_step(s, 0.0, 0.1)
    assert s1.X == 0.0 and s1.t == 0.1 and s1.Xdot == 0.0
    s = ShiftState()
    for _ in range(64):
        s = shift_step(s, 0.5, 0.25)
    assert s.X == 0.5 * 64 * 0.25
    assert s.Xdot == 0.5
    s = ShiftState()
    for _ in range(10):
        s = shift_step(s, 0.3, 0.1)
    assert s.X == pytest.approx(0.3, rel=1e-15)


def _orders(rhs, exact):
    errs = []
    for n in (10, 20, 40):
        s = ShiftState()
        for _ in range(n):
            s = shift_step(s, rhs, 1.0 / n)
        errs.append(abs(s.X - exact))
    return [math.log2(errs[i] / errs[i + 1]) for i in range(2)]


def test_shift_step_converges_at_scheme_order():
    # X' = cos t - X + sin t has X = sin t; the X dependence exposes the third order
    orders = _orders(lambda t, x: math.cos(t) - x + math.sin(t), math.sin(1.0))
    assert all(2.8 <= o <= 3.3 for o in orders)
    # a pure quadrature (X' = cos t) reduces the nodes to Simpson's rule: fourth order
    orders = _orders(lambda t, x: math.cos(t), math.sin(1.0))
    assert all(o >= 3.0 for o in orders)


def test_shift_step_rejects_bad_input():
    with pytest.raises(ValueError):
        shift_step(ShiftState(), 1.0, 0.0)
    with pytest.raises(FloatingPointError):
        shift_step(ShiftState(), float("nan"), 0.1)


def test_initial_shift_is_zero(weak_table):
    grid = Grid3(100.0, 128, 4, 4)
    from shocklab.solver import Solver, SolverConfig
    solver = Solver(weak_table, grid, SolverConfig())
    sh = solver.initial_shift(init_state(weak_table, grid, PerturbationSpec()))
    assert sh.X == 0.0 and sh.t == 0.0 and sh.Xdot != 0.0
