import os
import subprocess
import sys

import numpy as np
import pytest

from shocklab import _accel
from shocklab import rk
from shocklab.kernels import (rhs_numba, rhs_numpy, shift_slabs_numba, shift_slabs_numpy, stage_update_numba,
                              stage_update_numpy, wave_speeds_numba, wave_speeds_numpy)

pytestmark = pytest.mark.skipif(not _accel.HAVE_NUMBA, reason="numba not installed")


def _random_state(seed, shape=(33, 8, 6)):
    rng = np.random.default_rng(seed)
    U = np.empty((4,) + shape)
    U[0] = rng.uniform(0.5, 1.5, shape)
    U[1:] = rng.normal(0.0, 0.3, (3,) + shape)
    return U


@pytest.mark.parametrize("gamma", [2.0, 1.4, 3.0])
def test_rhs_paths_agree(gamma):
    U = _random_state(1)
    args = (gamma, 0.7, 1.0, 0.3, 0.05, 1 / 8, 1 / 6)
    a, b = rhs_numba(U, *args), rhs_numpy(U, *args)
    scale = np.max(np.abs(b))
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-12 * scale)
    assert np.all(a[:, 0] == 0.0) and np.all(a[:, -1] == 0.0)


def test_shift_slabs_agree():
    rho = _random_state(2)[0]
    vs = np.linspace(1.0, 1.1, rho.shape[0])
    for x, y in zip(shift_slabs_numba(rho, vs, 2.0), shift_slabs_numpy(rho, vs, 2.0)):
        np.testing.assert_allclose(x, y, rtol=1e-14, atol=1e-14)


def test_wave_speeds_agree():
    U = _random_state(3)
    np.testing.assert_allclose(wave_speeds_numba(U, 2.0, 1.4), wave_speeds_numpy(U, 2.0, 1.4), rtol=1e-14)


@pytest.mark.parametrize("a,b", [(0.0, 1.0), (0.75, 0.25), (1 / 3, 2 / 3)])
def test_stage_update_agrees(a, b):
    U0, Uk, L = _random_state(4), _random_state(5), _random_state(6)
    np.testing.assert_allclose(stage_update_numba(U0, Uk, L, 0.01, a, b),
                               stage_update_numpy(U0, Uk, L, 0.01, a, b), rtol=1e-15, atol=1e-15)


@pytest.mark.parametrize("update", [stage_update_numba, stage_update_numpy])
def test_stage_update_keeps_a_frozen_state_exactly(update):
    # the final SSP stage weights 1/3 and 2/3 do not sum to one in floating point
    rng = np.random.default_rng(8)
    U = rng.uniform(0.5, 2.0, (4, 9, 4, 4))
    Uk = U.copy()
    for a, b in zip(rk.A, rk.B):
        Uk = update(U, Uk, np.zeros_like(U), 0.01, a, b)
    np.testing.assert_array_equal(Uk, U)


def test_numba_switch_off_selects_numpy():
    env = dict(os.environ, SHOCKLAB_NUMBA="0")
    code = ("from shocklab import kernels, _accel; "
            "print(_accel.USE_NUMBA, kernels.rhs_kernel is kernels.rhs_numpy)")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.split() == ["False", "True"]


def test_set_threads_from_environment(monkeypatch):
    monkeypatch.setenv("SHOCKLAB_THREADS", "1")
    assert _accel.set_threads() == 1
    assert _accel.set_threads(1) == 1
