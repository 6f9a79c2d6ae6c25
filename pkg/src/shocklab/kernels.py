"""Hot loops of the solver: moving-frame RHS and shift-integral reduction.

Each kernel exists twice: a fused numba loop and a vectorised numpy
version.  ``rhs_kernel`` / ``shift_slab_sums`` dispatch on
:data:`shocklab._accel.USE_NUMBA`; the explicit ``*_numba`` / ``*_numpy``
names are kept public for the benchmark and the cross-check tests.

Array layout: conserved fields ``U`` have shape ``(4, n1, n2, n3)`` holding
``(rho, m1, m2, m3)``; xi1 is the slowest node index, xi2/xi3 are periodic.
The first and last xi1 planes are Dirichlet nodes and get zero RHS.
"""
import numpy as np

from ._accel import USE_NUMBA, njit, prange


@njit(inline="always")
def _gpow(r, gamma):
    # integer exponents avoid the libm pow call in the hot loops
    if gamma == 2.0:
        return r * r
    if gamma == 3.0:
        return r * r * r
    return r ** gamma


@njit(parallel=True)
def rhs_numba(U, gamma, sigma, mu, lam, dx1, dx2, dx3):
    n1, n2, n3 = U.shape[1], U.shape[2], U.shape[3]
    out = np.zeros_like(U)
    u = np.empty((3, n1, n2, n3))
    p = np.empty((n1, n2, n3))
    for i in prange(n1):
        for j in range(n2):
            for k in range(n3):
                r = U[0, i, j, k]
                ir = 1.0 / r
                u[0, i, j, k] = U[1, i, j, k] * ir
                u[1, i, j, k] = U[2, i, j, k] * ir
                u[2, i, j, k] = U[3, i, j, k] * ir
                p[i, j, k] = _gpow(r, gamma)

    a1 = 0.5 / dx1
    a2 = 0.5 / dx2
    a3 = 0.5 / dx3
    b1 = 1.0 / (dx1 * dx1)
    b2 = 1.0 / (dx2 * dx2)
    b3 = 1.0 / (dx3 * dx3)
    c12 = 0.25 / (dx1 * dx2)
    c13 = 0.25 / (dx1 * dx3)
    c23 = 0.25 / (dx2 * dx3)
    mul = mu + lam

    for i in prange(1, n1 - 1):
        ip = i + 1
        im = i - 1
        for j in range(n2):
            jp = j + 1 if j + 1 < n2 else 0
            jm = j - 1 if j > 0 else n2 - 1
            for k in range(n3):
                kp = k + 1 if k + 1 < n3 else 0
                km = k - 1 if k > 0 else n3 - 1

                # mass
                drho = (sigma * (U[0, ip, j, k] - U[0, im, j, k])
                        - (U[1, ip, j, k] - U[1, im, j, k])) * a1
                drho -= (U[2, i, jp, k] - U[2, i, jm, k]) * a2
                drho -= (U[3, i, j, kp] - U[3, i, j, km]) * a3
                out[0, i, j, k] = drho

                # second derivatives of velocity shared by all components
                for c in range(3):
                    q = 1 + c
                    # frame advection and convective flux
                    val = (sigma * (U[q, ip, j, k] - U[q, im, j, k])
                           - (U[q, ip, j, k] * u[0, ip, j, k] - U[q, im, j, k] * u[0, im, j, k])) * a1
                    val -= (U[q, i, jp, k] * u[1, i, jp, k] - U[q, i, jm, k] * u[1, i, jm, k]) * a2
                    val -= (U[q, i, j, kp] * u[2, i, j, kp] - U[q, i, j, km] * u[2, i, j, km]) * a3
                    uc = u[c, i, j, k]
                    lap = ((u[c, ip, j, k] - 2.0 * uc + u[c, im, j, k]) * b1
                           + (u[c, i, jp, k] - 2.0 * uc + u[c, i, jm, k]) * b2
                           + (u[c, i, j, kp] - 2.0 * uc + u[c, i, j, km]) * b3)
                    val += mu * lap
                    out[q, i, j, k] = val

                # pressure gradient
                out[1, i, j, k] -= (p[ip, j, k] - p[im, j, k]) * a1
                out[2, i, j, k] -= (p[i, jp, k] - p[i, jm, k]) * a2
                out[3, i, j, k] -= (p[i, j, kp] - p[i, j, km]) * a3

                # grad div u
                d11 = (u[0, ip, j, k] - 2.0 * u[0, i, j, k] + u[0, im, j, k]) * b1
                d22 = (u[1, i, jp, k] - 2.0 * u[1, i, j, k] + u[1, i, jm, k]) * b2
                d33 = (u[2, i, j, kp] - 2.0 * u[2, i, j, k] + u[2, i, j, km]) * b3
                m12_1 = (u[1, ip, jp, k] - u[1, ip, jm, k] - u[1, im, jp, k] + u[1, im, jm, k]) * c12
                m13_1 = (u[2, ip, j, kp] - u[2, ip, j, km] - u[2, im, j, kp] + u[2, im, j, km]) * c13
                m12_0 = (u[0, ip, jp, k] - u[0, ip, jm, k] - u[0, im, jp, k] + u[0, im, jm, k]) * c12
                m23_2 = (u[2, i, jp, kp] - u[2, i, jp, km] - u[2, i, jm, kp] + u[2, i, jm, km]) * c23
                m13_0 = (u[0, ip, j, kp] - u[0, ip, j, km] - u[0, im, j, kp] + u[0, im, j, km]) * c13
                m23_1 = (u[1, i, jp, kp] - u[1, i, jp, km] - u[1, i, jm, kp] + u[1, i, jm, km]) * c23
                out[1, i, j, k] += mul * (d11 + m12_1 + m13_1)
                out[2, i, j, k] += mul * (m12_0 + d22 + m23_2)
                out[3, i, j, k] += mul * (m13_0 + m23_1 + d33)
    return out


def _d1(f, ax, h):
    """Central first difference; along axis 0 only interior planes are valid."""
    if ax == 0:
        out = np.zeros_like(f)
        out[1:-1] = (f[2:] - f[:-2]) / (2.0 * h)
        return out
    return (np.roll(f, -1, ax) - np.roll(f, 1, ax)) / (2.0 * h)


def _d2(f, ax, h):
    if ax == 0:
        out = np.zeros_like(f)
        out[1:-1] = (f[2:] - 2.0 * f[1:-1] + f[:-2]) / (h * h)
        return out
    return (np.roll(f, -1, ax) - 2.0 * f + np.roll(f, 1, ax)) / (h * h)


def dxx(f, a, b, spacing):
    """Second derivative d_a d_b with the solver stencils (compact on the diagonal)."""
    if a == b:
        return _d2(f, a, spacing[a])
    return _d1(_d1(f, a, spacing[a]), b, spacing[b])


def rhs_numpy(U, gamma, sigma, mu, lam, dx1, dx2, dx3):
    h = (dx1, dx2, dx3)
    rho = U[0]
    m = U[1:]
    u = m / rho
    p = rho ** gamma
    out = np.zeros_like(U)
    out[0] = sigma * _d1(rho, 0, dx1) - sum(_d1(m[b], b, h[b]) for b in range(3))
    for a in range(3):
        val = sigma * _d1(m[a], 0, dx1) - _d1(p, a, h[a])
        for b in range(3):
            val -= _d1(m[a] * u[b], b, h[b])
            val += mu * _d2(u[a], b, h[b])
            val += (mu + lam) * dxx(u[b], a, b, h)
        out[1 + a] = val
    out[:, 0] = 0.0
    out[:, -1] = 0.0
    return out


@njit(parallel=True)
def shift_slabs_numba(rho, vs, gamma):
    """Per-xi1-plane sums of rho*(p(v) - p(vs)) and rho*(v - vs), fixed order."""
    n1, n2, n3 = rho.shape
    s1 = np.zeros(n1)
    s2 = np.zeros(n1)
    for i in prange(n1):
        pvs = 1.0 / _gpow(vs[i], gamma)
        vsi = vs[i]
        acc1 = 0.0
        acc2 = 0.0
        for j in range(n2):
            for k in range(n3):
                r = rho[i, j, k]
                acc1 += r * (_gpow(r, gamma) - pvs)
                acc2 += 1.0 - r * vsi
        s1[i] = acc1
        s2[i] = acc2
    return s1, s2


def shift_slabs_numpy(rho, vs, gamma):
    n1 = rho.shape[0]
    pvs = 1.0 / vs ** gamma
    a = (rho * (rho ** gamma - pvs[:, None, None])).reshape(n1, -1)
    b = (1.0 - rho * vs[:, None, None]).reshape(n1, -1)
    # sequential accumulation per plane, same order as the loop kernel
    return np.add.accumulate(a, axis=1)[:, -1], np.add.accumulate(b, axis=1)[:, -1]


@njit(parallel=True)
def wave_speeds_numba(U, gamma, sigma):
    """Per-axis max of |u_a - sigma e1_a| + c and the minimum density."""
    n1 = U.shape[1]
    part = np.zeros((n1, 4))
    for i in prange(n1):
        s1 = 0.0
        s2 = 0.0
        s3 = 0.0
        rmin = np.inf
        for j in range(U.shape[2]):
            for k in range(U.shape[3]):
                r = U[0, i, j, k]
                c = np.sqrt(gamma * _gpow(r, gamma) / r)
                ir = 1.0 / r
                s1 = max(s1, abs(U[1, i, j, k] * ir - sigma) + c)
                s2 = max(s2, abs(U[2, i, j, k] * ir) + c)
                s3 = max(s3, abs(U[3, i, j, k] * ir) + c)
                rmin = min(rmin, r)
        part[i, 0] = s1
        part[i, 1] = s2
        part[i, 2] = s3
        part[i, 3] = rmin
    return part[:, 0].max(), part[:, 1].max(), part[:, 2].max(), part[:, 3].min()


def wave_speeds_numpy(U, gamma, sigma):
    rho = U[0]
    c = np.sqrt(gamma * rho ** (gamma - 1.0))
    return (float(np.max(np.abs(U[1] / rho - sigma) + c)),
            float(np.max(np.abs(U[2] / rho) + c)),
            float(np.max(np.abs(U[3] / rho) + c)),
            float(rho.min()))


@njit(parallel=True)
def stage_update_numba(U0, Uk, L, dt, a, b):
    """a * U0 + b * (Uk + dt * L) in one pass, with b = 1 - a.

    Evaluated as U0 + b * (Uk + dt * L - U0): fl(1/3) + fl(2/3) < 1, and
    the plain convex combination would shave mass off every step.
    """
    out = np.empty_like(Uk)
    n1 = Uk.shape[1]
    for i in prange(n1):
        for q in range(Uk.shape[0]):
            for j in range(Uk.shape[2]):
                for k in range(Uk.shape[3]):
                    y = Uk[q, i, j, k] + dt * L[q, i, j, k]
                    if a == 0.0:
                        out[q, i, j, k] = b * y
                    else:
                        out[q, i, j, k] = U0[q, i, j, k] + b * (y - U0[q, i, j, k])
    return out


def stage_update_numpy(U0, Uk, L, dt, a, b):
    out = L * dt
    out += Uk
    if a != 0.0:
        out -= U0
        out *= b
        out += U0
    elif b != 1.0:
        out *= b
    return out


if USE_NUMBA:
    rhs_kernel = rhs_numba
    shift_slabs = shift_slabs_numba
    wave_speeds = wave_speeds_numba
    stage_update = stage_update_numba
else:
    rhs_kernel = rhs_numpy
    shift_slabs = shift_slabs_numpy
    wave_speeds = wave_speeds_numpy
    stage_update = stage_update_numpy
