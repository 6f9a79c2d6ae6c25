"""Viscous 2-shock profile: solve, tabulate, query.

The 2x2 traveling-wave system collapses through the mass-flux first integral
``u1 - u1_- = -sigma_*(v - v_-)`` to one autonomous scalar ODE

    kappa * sigma_* * v' = g(v) = -sigma_*^2 (v - v_-) - (p(v) - p(v_-)),

with ``kappa = 2 mu + lambda``.  Each half-line is integrated in the variable
``log|v - v_endpoint|`` so that the exponential tails keep full relative
precision all the way out.
"""
from __future__ import annotations

import csv
import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad, solve_ivp

from .gas import EndStates, GasLaw, ShockConstants

logger = logging.getLogger(__name__)

ATOL = 1e-12
RTOL = 3e-14


class ProfileError(RuntimeError):
    pass


@dataclass(frozen=True)
class Viscosity:
    mu: float
    lam: float = 0.0

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError("mu must be positive")
        if 2 * self.mu + 3 * self.lam < 0:
            raise ValueError("2 mu + 3 lambda must be non-negative")

    @property
    def kappa(self) -> float:
        return 2.0 * self.mu + self.lam


def profile_length_scale(consts: ShockConstants, visc: Viscosity) -> float:
    return visc.kappa / (consts.sigma_star * consts.delta)


def default_half_length(consts: ShockConstants, visc: Viscosity) -> float:
    return float(np.clip(40.0 * profile_length_scale(consts, visc), 50.0, 5000.0))


@dataclass(frozen=True)
class ProfileSample:
    """Profile quantities at a set of coordinates (already shifted)."""

    v: np.ndarray
    u1: np.ndarray
    h1: np.ndarray
    dv: np.ndarray
    du1: np.ndarray
    dh1: np.ndarray
    d2v: np.ndarray

    def as_tuple(self):
        return self.v, self.u1, self.h1, self.dv, self.du1, self.dh1


@dataclass(frozen=True, eq=False)
class ProfileTable:
    xi: np.ndarray
    v: np.ndarray
    dev_minus: np.ndarray  # v - v_-, full relative precision
    dev_plus: np.ndarray   # v_+ - v
    d1v: np.ndarray
    d2v: np.ndarray
    d3v: np.ndarray
    u1: np.ndarray
    h1: np.ndarray
    law: GasLaw
    end_states: EndStates
    constants: ShockConstants
    viscosity: Viscosity
    normalization_point: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def half_length(self) -> float:
        return float(self.xi[-1])

    @property
    def spacing(self) -> float:
        return float(self.xi[-1] - self.xi[0]) / (self.xi.size - 1)

    @property
    def d1u(self):
        return -self.constants.sigma_star * self.d1v

    @property
    def d2u(self):
        return -self.constants.sigma_star * self.d2v

    @property
    def d3u(self):
        return -self.constants.sigma_star * self.d3v

    @property
    def dh1(self):
        return self.d1u - self.viscosity.kappa * self.d2v

    def sample(self, s) -> ProfileSample:
        """Cubic Hermite evaluation at coordinates ``s`` (no shift applied)."""
        s = np.asarray(s, dtype=float)
        xi0, hx = self.xi[0], self.spacing
        n = self.xi.size - 1
        left = s <= xi0
        right = s >= self.xi[-1]
        pos = np.clip((s - xi0) / hx, 0.0, n)
        i = np.minimum(pos.astype(np.intp), n - 1)
        t = pos - i
        t2 = t * t
        t3 = t2 * t
        h00 = 2 * t3 - 3 * t2 + 1
        h10 = t3 - 2 * t2 + t
        h01 = -2 * t3 + 3 * t2
        h11 = t3 - t2

        def herm(f, df):
            return h00 * f[i] + hx * h10 * df[i] + h01 * f[i + 1] + hx * h11 * df[i + 1]

        v = herm(self.v, self.d1v)
        dv = herm(self.d1v, self.d2v)
        d2v = herm(self.d2v, self.d3v)

        es, k = self.end_states, self.viscosity.kappa
        v = np.where(left, es.v_minus, np.where(right, es.v_plus, v))
        dv = np.where(left | right, 0.0, dv)
        d2v = np.where(left | right, 0.0, d2v)

        sstar = self.constants.sigma_star
        u1 = es.u1_minus - sstar * (v - es.v_minus)
        du1 = -sstar * dv
        h1 = u1 - k * dv
        dh1 = du1 - k * d2v
        return ProfileSample(v, u1, h1, dv, du1, dh1, d2v)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["xi1", "v_s", "u1_s", "h1_s", "dv", "du1"])
            for row in zip(self.xi, self.v, self.u1, self.h1, self.d1v, self.d1u):
                wr.writerow([repr(float(x)) for x in row])


def query_shifted(table: ProfileTable, xi1, shift: float = 0.0):
    """``(v, u1, h1, v', u1', h1')`` of the profile at ``xi1 - shift``."""
    return table.sample(np.asarray(xi1, dtype=float) - shift).as_tuple()


class _ReducedODE:
    """Right-hand side pieces of the scalar profile ODE."""

    def __init__(self, states: EndStates, consts: ShockConstants, law: GasLaw, visc: Viscosity):
        self.vm, self.vp = states.v_minus, states.v_plus
        self.s = consts.sigma_star
        self.law = law
        self.ks = visc.kappa * consts.sigma_star

    def g_left(self, d):
        # d = v - v_-
        return -self.s**2 * d - self.law.pressure_jump(self.vm, d)

    def g_right(self, d):
        # d = v_+ - v ; the constant part cancels by the jump conditions
        return self.s**2 * d - self.law.pressure_jump(self.vp, -d)

    def g(self, v):
        return -self.s**2 * (v - self.vm) - (self.law.p(v) - self.law.p(self.vm))

    def dg(self, v):
        return -self.s**2 - self.law.dp(v)

    def d2g(self, v):
        return -self.law.d2p(v)

    def rate_left(self):
        return self.dg(self.vm) / self.ks

    def rate_right(self):
        return -self.dg(self.vp) / self.ks


def solve_profile(states: EndStates, consts: ShockConstants, law: GasLaw, visc: Viscosity,
                  half_length: float | None = None, spacing: float | None = None) -> ProfileTable:
    """Integrate the reduced profile ODE and tabulate it on a uniform grid.

    The profile is normalised so that ``v_s(0) = (v_- + v_+)/2``; derivatives
    are evaluated from the ODE right-hand side, not by differencing.
    """
    if not visc.kappa > 0:
        raise ValueError("2 mu + lambda must be positive")
    ode = _ReducedODE(states, consts, law, visc)
    ell = profile_length_scale(consts, visc)
    L = default_half_length(consts, visc) if half_length is None else float(half_length)
    hx = ell / 200.0 if spacing is None else float(spacing)
    nhalf = int(math.ceil(L / hx))
    hx = L / nhalf
    # integer multiples of hx: the midpoint is exactly 0 and node queries are exact
    xi = np.arange(-nhalf, nhalf + 1) * hx
    vm, vp = states.v_minus, states.v_plus
    dmid = 0.5 * (vp - vm)
    ks = ode.ks

    def rhs_left(_, z):
        d = np.exp(z)
        return ode.g_left(d) / d / ks

    def rhs_right(_, y):
        d = np.exp(y)
        return -ode.g_right(d) / d / ks

    xl = xi[: nhalf + 1][::-1]  # 0 -> -L
    xr = xi[nhalf:]             # 0 -> +L
    kw = dict(method="RK45", rtol=RTOL, atol=ATOL)
    sol_l = solve_ivp(rhs_left, (0.0, xl[-1]), [math.log(dmid)], t_eval=xl, **kw)
    sol_r = solve_ivp(rhs_right, (0.0, xr[-1]), [math.log(dmid)], t_eval=xr, **kw)
    if not (sol_l.success and sol_r.success):
        raise ProfileError(f"profile integration failed: {sol_l.message} / {sol_r.message}")

    dev_minus = np.empty_like(xi)
    dev_plus = np.empty_like(xi)
    dl = np.exp(sol_l.y[0])[::-1]
    dr = np.exp(sol_r.y[0])
    dev_minus[: nhalf + 1] = dl
    dev_plus[: nhalf + 1] = (vp - vm) - dl
    dev_plus[nhalf:] = dr
    dev_minus[nhalf:] = (vp - vm) - dr
    if np.any(dev_minus[: nhalf + 1] <= 0) or np.any(dev_plus[nhalf:] <= 0):
        raise ProfileError("profile left the interval (v_-, v_+)")

    v = np.where(xi <= 0, vm + dev_minus, vp - dev_plus)
    g = np.where(xi <= 0, ode.g_left(dev_minus), ode.g_right(dev_plus))
    if np.any(g <= 0):
        raise ProfileError("profile ODE right-hand side changed sign")
    d1 = g / ks
    dg = ode.dg(v)
    d2 = dg * d1 / ks
    d3 = (ode.d2g(v) * d1**2 + dg * d2) / ks

    sstar = consts.sigma_star
    u1 = np.where(xi <= 0, states.u1_minus - sstar * dev_minus, states.u1_plus + sstar * dev_plus)
    h1 = u1 - visc.kappa * d1

    gap = max(dev_minus[0], dev_plus[-1]) / (vp - vm)
    if gap > 1e-10:
        warnings.warn(f"profile tails unresolved: relative endpoint gap {gap:.3e}", RuntimeWarning)
    logger.debug("profile: L=%g h=%g nodes=%d gap=%.2e", L, hx, xi.size, gap)

    return ProfileTable(
        xi=xi, v=v, dev_minus=dev_minus, dev_plus=dev_plus, d1v=d1, d2v=d2, d3v=d3,
        u1=u1, h1=h1, law=law, end_states=states, constants=consts, viscosity=visc,
        meta={"endpoint_gap": gap, "length_scale": ell},
    )


def linearized_rates(table: ProfileTable):
    ode = _ReducedODE(table.end_states, table.constants, table.law, table.viscosity)
    return float(ode.rate_left()), float(ode.rate_right())


def decay_rate_fit(table: ProfileTable):
    """Least-squares tail exponents of |v_s - v_-| (left) and |v_s - v_+| (right).

    Fits over the outer half of each tail, dropping values below the
    floating-point floor.
    """
    xi = table.xi
    L = table.half_length
    rates = []
    for mask, dev in ((xi <= -0.5 * L, table.dev_minus), (xi >= 0.5 * L, table.dev_plus)):
        d = dev[mask]
        x = np.abs(xi[mask])
        ok = np.isfinite(d) & (d > np.finfo(float).tiny)
        if ok.sum() < 2:
            raise ProfileError("not enough representable tail points to fit")
        slope = np.polyfit(x[ok], np.log(d[ok]), 1)[0]
        rates.append(float(-slope))
    return rates[0], rates[1]


def _central_d1_6(f, hx):
    c = (f[6:] - f[:-6]) / 60.0 - 3.0 * (f[5:-1] - f[1:-5]) / 20.0 + 3.0 * (f[4:-2] - f[2:-4]) / 4.0
    return c / hx


def ode_residual(table: ProfileTable) -> float:
    """Max residual of the reduced ODE using a 6th-order difference of the tabulated v."""
    s = table.constants.sigma_star
    k = table.viscosity.kappa
    vm = table.end_states.v_minus
    dv = _central_d1_6(table.v, table.spacing)
    dm = table.dev_minus[3:-3]
    r = k * s * dv + s**2 * dm + table.law.pressure_jump(vm, dm)
    return float(np.max(np.abs(r)))


def quadrature_position_error(table: ProfileTable, stride: int = 97) -> float:
    """Independent check of the table by inverting the ODE with adaptive quadrature.

    For sampled nodes, xi(v) = int_{v_mid}^{v} kappa sigma_* / g(s) ds is
    computed in log-deviation variables and converted to a volume error
    |xi_quad - xi_node| * v'.
    """
    ode = _ReducedODE(table.end_states, table.constants, table.law, table.viscosity)
    vm, vp = table.end_states.v_minus, table.end_states.v_plus
    zmid = math.log(0.5 * (vp - vm))
    worst = 0.0
    for i in range(0, table.xi.size, stride):
        x = table.xi[i]
        if x <= 0:
            z = math.log(table.dev_minus[i])
            f = lambda zz: ode.ks * math.exp(zz) / ode.g_left(math.exp(zz))
            xq = quad(f, zmid, z, epsabs=1e-13, epsrel=1e-13, limit=200)[0]
        else:
            z = math.log(table.dev_plus[i])
            f = lambda zz: -ode.ks * math.exp(zz) / ode.g_right(math.exp(zz))
            xq = quad(f, zmid, z, epsabs=1e-13, epsrel=1e-13, limit=200)[0]
        worst = max(worst, abs(xq - x) * table.d1v[i])
    return worst
