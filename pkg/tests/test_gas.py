import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

import oracles
from shocklab.gas import (DomainError, GasLaw, ShockError, internal_energy, lax_speeds, pressure,
                          pressure_derivative, relative_quantity, rh_residuals, shift_gain_alt,
                          shift_gain_constant, solve_rankine_hugoniot, v_plus_for_strength)

G2 = GasLaw(2.0)


def test_pressure_values():
    assert pressure(1.0, G2) == 1.0
    assert pressure(2.0, G2) == 0.25
    assert pressure_derivative(1.0, G2) == -2.0
    assert pressure_derivative(1.0, G2, order=2) == 6.0


def test_internal_energy_values():
    assert internal_energy(1.0, G2) == 1.0
    assert internal_energy(2.0, G2) == 0.5
    assert internal_energy(4.0, G2) == 0.25


@pytest.mark.parametrize("bad", [0.0, -1.0, np.array([1.0, -0.5])])
def test_non_positive_volume_is_rejected(bad):
    with pytest.raises(DomainError):
        pressure(bad, G2)
    with pytest.raises(DomainError):
        internal_energy(bad, G2)


def test_gamma_must_exceed_one():
    with pytest.raises(ValueError):
        GasLaw(1.0)


def test_relative_quantity_values():
    assert relative_quantity("p", 1.7, 1.7, G2) == 0.0
    assert relative_quantity("p", 1.0, 2.0, G2) == pytest.approx(0.5, rel=1e-15)
    assert relative_quantity("Q", 1.0, 2.0, G2) == pytest.approx(0.25, rel=1e-15)
    with pytest.raises(ValueError):
        relative_quantity("T", 1.0, 2.0, G2)


@given(st.floats(0.1, 10.0), st.floats(0.1, 10.0), st.floats(1.05, 3.0))
def test_relative_quantities_positive_off_diagonal(v, w, gamma):
    assume(abs(v - w) > 1e-6 * w)
    law = GasLaw(gamma)
    assert relative_quantity("p", v, w, law) > 0
    assert relative_quantity("Q", v, w, law) > 0


@given(st.floats(0.5, 5.0), st.floats(-1e-3, 1e-3), st.floats(1.1, 3.0))
def test_q_relative_is_locally_quadratic(w, dv, gamma):
    law = GasLaw(gamma)
    v = w + dv
    quad = 0.5 * (-law.dp(w)) * dv * dv
    # Taylor remainder: Q''' = -p'', largest at the smaller volume
    bound = gamma * (gamma + 1) * (w - abs(dv)) ** (-gamma - 2) / 6.0 * abs(dv) ** 3
    # plus round-off from cancelling Q(v) - Q(w), which grows like 1/(gamma - 1)
    noise = 8 * np.finfo(float).eps * (law.Q(v) + law.Q(w))
    assert abs(relative_quantity("Q", v, w, law) - quad) <= bound * (1 + 1e-6) + noise


def test_rankine_hugoniot_strong_example():
    ref = oracles.shock_constants(2, 1, 2)
    st_, c = solve_rankine_hugoniot(1.0, 2.0, 0.0, G2)
    assert c.sigma_star == pytest.approx(ref["sigma_star"], rel=1e-14)
    assert st_.u1_minus == pytest.approx(ref["u1_minus"], rel=1e-14)
    assert c.sigma == pytest.approx(ref["sigma"], rel=1e-14)
    assert c.delta == pytest.approx(0.75, rel=1e-15)
    assert c.sigma_star == pytest.approx(0.866025, abs=1e-6)
    assert c.sigma == pytest.approx(1.732051, abs=1e-6)
    lam_minus, lam_plus = lax_speeds(st_, G2)
    assert lam_minus == pytest.approx(2.280, abs=1e-3)
    assert lam_plus == pytest.approx(1.0, rel=1e-15)
    assert lam_plus < c.sigma < lam_minus


def test_rankine_hugoniot_weak_default():
    ref = oracles.shock_constants(2, 1, 1.1)
    _, c = solve_rankine_hugoniot(1.0, 1.1, 0.0, G2)
    for k in ("sigma_star", "sigma", "delta", "shift_gain"):
        assert getattr(c, k) == pytest.approx(ref[k], rel=1e-13)
    assert c.nu == pytest.approx(math.sqrt(ref["delta"]), rel=1e-15)


@pytest.mark.parametrize("vp", [1.0, 0.9])
def test_degenerate_or_reversed_states_rejected(vp):
    with pytest.raises(ShockError):
        solve_rankine_hugoniot(1.0, vp, 0.3, G2)


def test_shift_gain_examples():
    st_, _ = solve_rankine_hugoniot(1.0, 2.0, 0.0, G2)
    assert shift_gain_constant(st_, G2) == pytest.approx(1.25 * 0.75 * 2 ** 1.5, rel=1e-14)
    assert shift_gain_constant(st_, G2) == pytest.approx(2.651650, abs=1e-6)
    law = GasLaw(1.4)
    st14, c14 = solve_rankine_hugoniot(1.0, 1.5, 0.0, law)
    assert shift_gain_alt(st14, law) == pytest.approx(shift_gain_constant(st14, law), rel=1e-12)
    assert c14.shift_gain == pytest.approx(oracles.shock_constants(1.4, 1, 1.5)["shift_gain"], rel=1e-13)


@given(st.floats(1.1, 3.0), st.floats(0.2, 5.0), st.floats(1e-3, 4.0), st.floats(-3.0, 3.0))
def test_rankine_hugoniot_consistency(gamma, vm, jump, u1p):
    law = GasLaw(gamma)
    vp = vm * (1.0 + jump)
    states, c = solve_rankine_hugoniot(vm, vp, u1p, law)
    r1, r2 = rh_residuals(states, c, law)
    assert abs(r1) <= 1e-12 and abs(r2) <= 1e-12
    right = states.u1_plus + c.sigma_star * states.v_plus
    assert abs(c.sigma - right) <= 1e-12 * max(abs(c.sigma), abs(right), 1.0)
    assert c.delta > 0 and c.nu == pytest.approx(math.sqrt(c.delta))
    assert shift_gain_alt(states, law) == pytest.approx(c.shift_gain, rel=1e-12)


@given(st.floats(1e-3, 0.9))
def test_v_plus_for_strength_round_trip(delta):
    vp = v_plus_for_strength(1.0, delta, G2)
    assert G2.p(1.0) - G2.p(vp) == pytest.approx(delta, rel=1e-12)
