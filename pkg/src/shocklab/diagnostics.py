"""Relative-entropy functionals, perturbation norms and the entropy balance.

Everything here is a plain numpy reduction with the grid's trapezoid/rectangle
rule (``Grid3.integrate``).  The shift velocity is deliberately recomputed
through a separate summation path so it can be checked against the
stepper's value.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, fields, replace
from typing import Optional, Sequence

import numpy as np

from .kernels import _d1, _d2, dxx
from .profile import ProfileTable
from .solver import FluidState, effective_velocity
from .inequalities import GN_CONSTANT, GNResult
from .weight import ShiftState, WeightFn


@dataclass(frozen=True, eq=False)
class PerturbationFields:
    phi: np.ndarray
    psi: np.ndarray
    eta: np.ndarray
    w: np.ndarray


@dataclass(frozen=True, eq=False)
class _Context:
    """Shifted profile and weight broadcast onto the grid, plus the perturbation."""
    vs: np.ndarray
    dvs: np.ndarray
    u1s: np.ndarray
    h1s: np.ndarray
    dh1s: np.ndarray
    a: np.ndarray
    da: np.ndarray
    v: np.ndarray
    rho: np.ndarray
    u: np.ndarray
    h: np.ndarray
    fields: PerturbationFields


def _column(x):
    return x[:, None, None]


def _context(state: FluidState, table: ProfileTable, weight: WeightFn, X: float) -> _Context:
    grid = state.grid
    s = grid.xi1 - X
    prof = table.sample(s)
    a, da = weight.at(s, prof)
    visc = table.viscosity
    v, u = state.v, state.u
    h = effective_velocity(state, grid, visc)
    vs, dvs = _column(prof.v), _column(prof.dv)
    phi = v - vs
    psi = u.copy()
    psi[0] -= _column(prof.u1)
    eta = h.copy()
    eta[0] -= _column(prof.h1)
    law = table.law
    w = law.p(v) - law.p(vs)
    return _Context(vs, dvs, _column(prof.u1), _column(prof.h1), _column(prof.dh1),
                    _column(a), _column(da), v, state.rho, u, h,
                    PerturbationFields(phi, psi, eta, w))


def perturbation_fields(state: FluidState, table: ProfileTable, X: float) -> PerturbationFields:
    return _context(state, table, WeightFn.from_table(table), X).fields


def weighted_relative_entropy(state: FluidState, table: ProfileTable, weight: WeightFn, X: float) -> float:
    c = _context(state, table, weight, X)
    law = table.law
    q = law.Q(c.v) - law.Q(c.vs) - law.dQ(c.vs) * c.fields.phi
    integrand = c.a * c.rho * (q + 0.5 * np.sum(c.fields.eta ** 2, axis=0))
    return state.grid.integrate(integrand)


FUNCTIONAL_NAMES = (
    "E_weighted", "Y1", "Y2", "Y3", "Y4", "Y5", "Y",
    "B1", "B2", "B3", "B4", "B5", "B6", "B7", "B8", "B9", "B",
    "G1", "G2", "G3", "G4", "G", "D",
    "G2_tilde", "G3_tilde", "G_s", "D_plain",
)
NORM_NAMES = ("L2_phi", "L2_psi", "H1", "H2", "sup_norm")


@dataclass(frozen=True)
class FunctionalRecord:
    t: float
    X: float
    Xdot: float
    XdotY: float
    Xdot_from_Y: float
    E_weighted: float
    Y1: float
    Y2: float
    Y3: float
    Y4: float
    Y5: float
    Y: float
    B1: float
    B2: float
    B3: float
    B4: float
    B5: float
    B6: float
    B7: float
    B8: float
    B9: float
    B: float
    G1: float
    G2: float
    G3: float
    G4: float
    G: float
    D: float
    G2_tilde: float
    G3_tilde: float
    G_s: float
    D_plain: float
    L2_phi: float
    L2_psi: float
    H1: float
    H2: float
    sup_norm: float
    balance_residual: float = math.nan
    boundary_activity: float = math.nan

    @property
    def balance_rhs(self):
        return self.XdotY + self.B - self.G - self.D

    def shift_identity_error(self) -> float:
        """Relative mismatch between the stepper's Xdot and -(M/delta)(Y1+Y2)."""
        scale = max(abs(self.Xdot), abs(self.Xdot_from_Y), 1e-300)
        return abs(self.Xdot - self.Xdot_from_Y) / scale

    def nonnegative_violations(self):
        keys = ("E_weighted", "D", "G_s", "G1", "G2", "G3", "G4", "G2_tilde", "G3_tilde", "D_plain")
        return [k for k in keys if getattr(self, k) < 0.0]


def _grad(f, spacing):
    return [_d1(f, a, spacing[a]) for a in range(3)]


def sobolev_norms(f, grid):
    """(L2, H1, H2, sup) of a scalar field or a stack of fields (leading axis).

    Derivatives use the solver stencils; the Hessian includes mixed
    derivatives (each counted twice, as in sum_{a,b} |d_a d_b f|^2).
    """
    f = np.asarray(f, dtype=float)
    comps = f.reshape((-1,) + grid.shape)
    h = grid.spacing
    l2 = d1 = d2 = 0.0
    for c in comps:
        l2 += grid.integrate(c * c)
        for a in range(3):
            g = _d1(c, a, h[a])
            d1 += grid.integrate(g * g)
            for b in range(3):
                hab = dxx(c, a, b, h)
                d2 += grid.integrate(hab * hab)
    sup = float(np.max(np.abs(comps))) if comps.size else 0.0
    return math.sqrt(l2), math.sqrt(l2 + d1), math.sqrt(l2 + d1 + d2), sup


def gn_bound(f, grid, constant: float = GN_CONSTANT) -> GNResult:
    """Sup-norm bound of a grid field with the solver stencils.

    sup|f| against sqrt2 |f|^1/2 |d1 f|^1/2 + C |grad f|^1/2 |grad^2 f|^1/2.
    """
    f = np.asarray(f, dtype=float)
    h = grid.spacing
    I = grid.integrate
    g = _grad(f, h)
    hess2 = sum(dxx(f, a, b, h) ** 2 for a in range(3) for b in range(3))
    t1 = math.sqrt(2.0) * math.sqrt(math.sqrt(I(f * f)) * math.sqrt(I(g[0] ** 2)))
    t2 = math.sqrt(math.sqrt(I(g[0] ** 2 + g[1] ** 2 + g[2] ** 2)) * math.sqrt(I(hess2)))
    return GNResult(float(np.max(np.abs(f))), t1, t2, constant)


def functional_suite(state: FluidState, table: ProfileTable, weight: WeightFn, shift: ShiftState,
                     with_norms: bool = True) -> FunctionalRecord:
    grid = state.grid
    hsp = grid.spacing
    I = grid.integrate
    law, k = table.law, table.constants
    visc = table.viscosity
    kappa, mu = visc.kappa, visc.mu
    ss = k.sigma_star
    c = _context(state, table, weight, shift.X)
    phi, psi, eta, w = c.fields.phi, c.fields.psi, c.fields.eta, c.fields.w
    a, da, rho, v, vs, dvs = c.a, c.da, c.rho, c.v, c.vs, c.dvs

    q_rel = law.Q(v) - law.Q(vs) - law.dQ(vs) * phi
    p_rel = law.p(v) - law.p(vs) - law.dp(vs) * phi
    eta2 = np.sum(eta ** 2, axis=0)
    trans2 = eta[1] ** 2 + eta[2] ** 2
    e1 = eta[0]
    minus = e1 - w / ss
    plus = e1 + w / ss
    dps = law.dp(vs) * dvs  # d/dxi1 p(vs)
    g = law.gamma
    inv_p = law.p(v) ** (-1.0 - 1.0 / g) / g
    inv_diff = inv_p - law.p(vs) ** (-1.0 - 1.0 / g) / g

    E = I(a * rho * (q_rel + 0.5 * eta2))
    Y1 = I(a / ss * rho * c.dh1s * w)
    Y2 = -I(a * rho * law.dp(vs) * phi * dvs)
    Y3 = I(a * rho * c.dh1s * minus)
    Y4 = -0.5 * I(da * rho * minus * plus)
    Y5 = -I(da * rho * (q_rel + 0.5 * trans2)) - I(da * rho * w ** 2 / (2.0 * ss ** 2))
    Y = Y1 + Y2 + Y3 + Y4 + Y5

    dphi1 = _d1(phi, 0, hsp[0])
    gw = _grad(w, hsp)
    F = (ss * phi + psi[0]) / v
    B1 = I(da * w ** 2) / (2.0 * ss)
    B2 = ss * I(a * p_rel * dvs)
    B3 = k.delta / weight.nu * I(a * da * e1 ** 2 / (ss * v))
    B4 = I(F * da * (q_rel + 0.5 * eta2))
    B5 = I(a * kappa / v * law.dp(vs) * dvs * dphi1 * (phi - e1 / ss))
    B6 = -kappa * I(a * gw[0] * dps * inv_diff)
    B7 = -kappa * I(da * inv_p * w * gw[0])
    B8 = -kappa * I(da * w * dps * inv_diff)

    u = c.u
    gu = [_grad(u[j], hsp) for j in range(3)]  # gu[j][i] = d_i u_j
    gv = _grad(v, hsp)
    divu = gu[0][0] + gu[1][1] + gu[2][2]
    B9_int = np.zeros_like(v)
    for i in range(3):
        conv = sum(gu[j][i] * gv[j] for j in range(3))
        graddiv = sum(dxx(u[j], i, j, hsp) for j in range(3))
        lap = sum(_d2(u[i], b, hsp[b]) for b in range(3))
        R_i = kappa / v * (conv - divu * gv[i]) - mu * (graddiv - lap)
        B9_int += eta[i] * R_i
    B9 = I(a * B9_int)
    B = B1 + B2 + B3 + B4 + B5 + B6 + B7 + B8 + B9

    G1 = ss * I(da * q_rel)
    G2 = ss * I(da * 0.5 * trans2)
    G3 = 0.5 * ss * I(da * minus ** 2)
    G4 = I(a * ss / v * np.abs(law.dp(vs)) * dvs * phi ** 2)
    gw2 = gw[0] ** 2 + gw[1] ** 2 + gw[2] ** 2
    D = kappa * I(a * inv_p * gw2)
    G = G1 + G2 + G3 + G4

    nd = weight.nu / k.delta
    G2t = nd * I(np.abs(dvs) * trans2)
    G3t = nd * I(np.abs(dvs) * minus ** 2)
    Gs = I(np.abs(dvs) * w ** 2)
    Dp = I(gw2)

    xdot_y = -k.shift_gain / k.delta * (Y1 + Y2)
    if with_norms:
        l2phi = math.sqrt(I(phi ** 2))
        l2psi = math.sqrt(I(np.sum(psi ** 2, axis=0)))
        stack = np.concatenate([phi[None], psi])
        _, h1, h2, sup = sobolev_norms(stack, grid)
    else:
        l2phi = l2psi = h1 = h2 = math.nan
        sup = float(max(np.abs(phi).max(), np.abs(psi).max()))
    return FunctionalRecord(
        t=shift.t, X=shift.X, Xdot=shift.Xdot, XdotY=shift.Xdot * Y, Xdot_from_Y=xdot_y,
        E_weighted=E, Y1=Y1, Y2=Y2, Y3=Y3, Y4=Y4, Y5=Y5, Y=Y,
        B1=B1, B2=B2, B3=B3, B4=B4, B5=B5, B6=B6, B7=B7, B8=B8, B9=B9, B=B,
        G1=G1, G2=G2, G3=G3, G4=G4, G=G, D=D,
        G2_tilde=G2t, G3_tilde=G3t, G_s=Gs, D_plain=Dp,
        L2_phi=l2phi, L2_psi=l2psi, H1=h1, H2=h2, sup_norm=sup,
    )


class IrregularStepError(ValueError):
    pass


def entropy_balance_residual(records: Sequence[FunctionalRecord], rtol_dt: float = 1e-9):
    """Central-difference dE/dt minus (Xdot Y + B - G - D) at each interior record.

    Returns a list of (t, absolute residual, residual relative to the largest
    term magnitude).  Records must be equally spaced in time.
    """
    if len(records) < 3:
        raise ValueError("need at least three consecutive records")
    ts = np.array([r.t for r in records])
    dts = np.diff(ts)
    if np.any(np.abs(dts - dts[0]) > rtol_dt * max(abs(dts[0]), 1e-300)):
        raise IrregularStepError("records are not equally spaced in time")
    dt = dts[0]
    out = []
    for prev, mid, nxt in zip(records, records[1:], records[2:]):
        dE = (nxt.E_weighted - prev.E_weighted) / (2.0 * dt)
        res = dE - mid.balance_rhs
        scale = max(abs(dE), abs(mid.XdotY), abs(mid.B), abs(mid.G), abs(mid.D))
        out.append((mid.t, abs(res), abs(res) / scale if scale > 0 else 0.0))
    return out


@dataclass(frozen=True)
class DecayReport:
    sup_initial: float
    sup_final: float
    sup_ratio: float
    H2_initial: float
    H2_final: float
    xdot_early: float
    xdot_final: float
    x_rate_half: float
    x_rate_final: float
    e_nonincreasing_fraction: float
    sup_pass: bool
    xdot_pass: bool
    x_rate_pass: bool
    entropy_pass: bool

    @property
    def passed(self) -> bool:
        return self.sup_pass and self.xdot_pass and self.x_rate_pass and self.entropy_pass


def _at_time(records, t):
    ts = np.array([r.t for r in records])
    return records[int(np.argmin(np.abs(ts - t)))]


def decay_report(history: Sequence[FunctionalRecord], transient: float = 5.0, early_time: float = 1.0,
                 sup_factor: float = 0.5, monotone_fraction: float = 0.95, zero_tol: float = 1e-13) -> DecayReport:
    """Trends of a completed run and the stability pass/fail verdicts.

    A run whose perturbation is identically zero passes trivially: every
    trend is zero.
    """
    first, last = history[0], history[-1]
    T = last.t
    mid = _at_time(history, 0.5 * T)
    early = _at_time(history, early_time)
    x_half = abs(mid.X) / mid.t if mid.t > 0 else 0.0
    x_end = abs(last.X) / T if T > 0 else 0.0
    post = [r for r in history if r.t >= transient]
    if len(post) < 2:
        post = list(history)
    steps = len(post) - 1
    ok = sum(1 for r0, r1 in zip(post, post[1:]) if r1.E_weighted <= r0.E_weighted + zero_tol * max(1.0, abs(r0.E_weighted)))
    frac = ok / steps if steps else 1.0
    trivial = first.sup_norm <= zero_tol
    sup_ratio = last.sup_norm / first.sup_norm if first.sup_norm > 0 else 0.0
    if trivial:
        sup_pass = xdot_pass = x_pass = True
    else:
        sup_pass = last.sup_norm <= sup_factor * first.sup_norm
        xdot_pass = abs(last.Xdot) < abs(early.Xdot)
        x_pass = x_end < x_half
    return DecayReport(
        sup_initial=float(first.sup_norm), sup_final=float(last.sup_norm), sup_ratio=float(sup_ratio),
        H2_initial=float(first.H2), H2_final=float(last.H2),
        xdot_early=float(early.Xdot), xdot_final=float(last.Xdot),
        x_rate_half=float(x_half), x_rate_final=float(x_end),
        e_nonincreasing_fraction=float(frac),
        sup_pass=bool(sup_pass), xdot_pass=bool(xdot_pass), x_rate_pass=bool(x_pass),
        entropy_pass=bool(frac >= monotone_fraction),
    )


RECORD_COLUMNS = tuple(f.name for f in fields(FunctionalRecord))


def write_diagnostics_csv(path, records: Sequence[FunctionalRecord]):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(RECORD_COLUMNS)
        for r in records:
            wr.writerow([repr(float(x)) for x in (getattr(r, c) for c in RECORD_COLUMNS)])


def read_diagnostics_csv(path):
    with open(path, newline="") as fh:
        rd = csv.DictReader(fh)
        return [FunctionalRecord(**{k: float(v) for k, v in row.items()}) for row in rd]


def with_extras(rec: FunctionalRecord, balance_residual: Optional[float] = None,
                boundary_activity: Optional[float] = None) -> FunctionalRecord:
    kw = {}
    if balance_residual is not None:
        kw["balance_residual"] = balance_residual
    if boundary_activity is not None:
        kw["boundary_activity"] = boundary_activity
    return replace(rec, **kw)


__all__ = [
    "PerturbationFields", "FunctionalRecord", "perturbation_fields", "weighted_relative_entropy",
    "functional_suite", "entropy_balance_residual", "gn_bound", "sobolev_norms", "decay_report", "DecayReport",
    "write_diagnostics_csv", "read_diagnostics_csv", "with_extras", "RECORD_COLUMNS",
]
