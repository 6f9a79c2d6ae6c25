"""Gamma-law thermodynamics, relative quantities and 2-shock algebra.

All functions accept scalars or numpy arrays.  Specific volume ``v`` is the
working variable; pressure is ``p(v) = v**(-gamma)`` with the constant
normalised to one.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class DomainError(ValueError):
    """Raised when a thermodynamic function is evaluated outside v > 0."""


class ShockError(ValueError):
    """Raised for end states that do not form an admissible 2-shock."""


def _check_positive(*arrays):
    for a in arrays:
        if np.any(np.asarray(a) <= 0) or np.any(~np.isfinite(a)):
            raise DomainError("specific volume must be finite and positive")


@dataclass(frozen=True)
class GasLaw:
    gamma: float
    pressure_scale: float = 1.0

    def __post_init__(self):
        if not self.gamma > 1.0:
            raise ValueError(f"gamma must exceed 1, got {self.gamma}")
        if self.pressure_scale != 1.0:
            raise ValueError("pressure_scale is normalised to 1")

    def p(self, v):
        return np.power(v, -self.gamma)

    def dp(self, v):
        return -self.gamma * np.power(v, -self.gamma - 1.0)

    def d2p(self, v):
        return self.gamma * (self.gamma + 1.0) * np.power(v, -self.gamma - 2.0)

    def Q(self, v):
        return np.power(v, 1.0 - self.gamma) / (self.gamma - 1.0)

    def dQ(self, v):
        return -np.power(v, -self.gamma)

    def pressure_jump(self, base, dv):
        """``p(base + dv) - p(base)`` without cancellation for small ``dv``."""
        return np.power(base, -self.gamma) * np.expm1(-self.gamma * np.log1p(dv / base))

    def sound_speed_density(self, rho):
        """Eulerian sound speed sqrt(d/drho rho**gamma)."""
        return np.sqrt(self.gamma * np.power(rho, self.gamma - 1.0))


def pressure(v, law: GasLaw):
    _check_positive(v)
    return law.p(v)


def pressure_derivative(v, law: GasLaw, order: int = 1):
    _check_positive(v)
    if order == 1:
        return law.dp(v)
    if order == 2:
        return law.d2p(v)
    raise ValueError("order must be 1 or 2")


def internal_energy(v, law: GasLaw):
    _check_positive(v)
    return law.Q(v)


def relative_quantity(kind: str, v, w, law: GasLaw):
    """F(v|w) = F(v) - F(w) - F'(w)(v - w) for F in {pressure, internal_energy}."""
    _check_positive(v, w)
    if kind in ("pressure", "p"):
        return law.p(v) - law.p(w) - law.dp(w) * (v - w)
    if kind in ("internal_energy", "Q"):
        return law.Q(v) - law.Q(w) - law.dQ(w) * (v - w)
    raise ValueError(f"unknown relative quantity {kind!r}")


@dataclass(frozen=True)
class EndStates:
    v_minus: float
    v_plus: float
    u1_minus: float
    u1_plus: float

    @property
    def rho_minus(self):
        return 1.0 / self.v_minus

    @property
    def rho_plus(self):
        return 1.0 / self.v_plus


@dataclass(frozen=True)
class ShockConstants:
    sigma: float
    sigma_star: float
    delta: float
    nu: float
    sigma_minus: float
    alpha_minus: float
    shift_gain: float


def lax_speeds(states: EndStates, law: GasLaw):
    """Second characteristic speeds u1 + c(rho) on both sides."""
    lam_minus = states.u1_minus + law.sound_speed_density(states.rho_minus)
    lam_plus = states.u1_plus + law.sound_speed_density(states.rho_plus)
    return float(lam_minus), float(lam_plus)


def shift_gain_constant(states: EndStates, law: GasLaw) -> float:
    g = law.gamma
    vm = states.v_minus
    sigma_minus = math.sqrt(-law.dp(vm))
    return 1.25 * (g + 1.0) / (2.0 * g) * sigma_minus**3 * vm**2 / law.p(vm)


def shift_gain_alt(states: EndStates, law: GasLaw) -> float:
    """Same constant written through alpha_-: (5/4) alpha_- sigma_-^4 v_-^2."""
    g = law.gamma
    vm = states.v_minus
    sigma_minus = math.sqrt(-law.dp(vm))
    alpha_minus = (g + 1.0) / (2.0 * g * sigma_minus * law.p(vm))
    return 1.25 * alpha_minus * sigma_minus**4 * vm**2


def solve_rankine_hugoniot(v_minus: float, v_plus: float, u1_plus: float, law: GasLaw):
    """Build a 2-shock from (v-, v+, u1+).

    Returns ``(EndStates, ShockConstants)``.  Raises :class:`ShockError` unless
    ``0 < v_minus < v_plus``.
    """
    _check_positive(v_minus, v_plus)
    if not v_minus < v_plus:
        raise ShockError(f"2-shock needs v_minus < v_plus, got {v_minus} >= {v_plus}")
    dp = law.p(v_plus) - law.p(v_minus)
    sigma_star = math.sqrt(-dp / (v_plus - v_minus))
    u1_minus = u1_plus + sigma_star * (v_plus - v_minus)
    sigma = u1_minus + sigma_star * v_minus
    delta = law.p(v_minus) - law.p(v_plus)
    states = EndStates(v_minus, v_plus, u1_minus, u1_plus)

    lam_minus, lam_plus = lax_speeds(states, law)
    if not lam_plus < sigma < lam_minus:
        raise ShockError(
            f"Lax condition violated: {lam_plus} < {sigma} < {lam_minus} is false")

    sigma_minus = math.sqrt(-law.dp(v_minus))
    alpha_minus = (law.gamma + 1.0) / (2.0 * law.gamma * sigma_minus * law.p(v_minus))
    consts = ShockConstants(
        sigma=sigma,
        sigma_star=sigma_star,
        delta=delta,
        nu=math.sqrt(delta),
        sigma_minus=sigma_minus,
        alpha_minus=alpha_minus,
        shift_gain=shift_gain_constant(states, law),
    )
    return states, consts


def rh_residuals(states: EndStates, consts: ShockConstants, law: GasLaw):
    """Relative residuals of both jump conditions (mass, momentum) in v-form."""
    s = consts.sigma_star
    du = states.u1_plus - states.u1_minus
    dv = states.v_plus - states.v_minus
    r1 = (-s * dv - du) / max(abs(du), abs(s * dv))
    dpr = law.p(states.v_plus) - law.p(states.v_minus)
    r2 = (-s * du + dpr) / max(abs(s * du), abs(dpr))
    return r1, r2


def v_plus_for_strength(v_minus: float, delta: float, law: GasLaw) -> float:
    """Right volume with p(v-) - p(v+) = delta."""
    pm = law.p(v_minus)
    if not 0.0 < delta < pm:
        raise ShockError(f"strength {delta} outside (0, p(v_minus)={pm})")
    return (pm - delta) ** (-1.0 / law.gamma)
