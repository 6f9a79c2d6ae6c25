"""Numerical checks of the functional inequalities behind the stability estimate.

* weighted Poincare inequality on [0,1] x T^2 with degenerate weight y(1-y)
* Legendre machinery (projection, Legendre ODE, spectral identity)
* Gagliardo-Nirenberg type sup-norm bound on R x T^2
* relative-quantity bounds for p and Q, and the inverse-pressure expansion

Quadrature: Gauss-Legendre in y1 (interior nodes, so the singular weight
1/(y(1-y)) is never evaluated at an endpoint) and the rectangle rule on the
torus, exact for trigonometric polynomials of degree below the node count.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np
from numpy.polynomial import legendre as npleg
from numpy.polynomial import polynomial as nppoly

from .gas import GasLaw, relative_quantity, v_plus_for_strength

POINCARE_TRANSVERSE_CONST = 1.0 / (16.0 * math.pi ** 2)
GN_CONSTANT = 10.0


# ---------------------------------------------------------------- Poincare


@dataclass(frozen=True)
class TestFunction2p1:
    """f(y1, y2, y3) on [0,1] x T^2 with its gradient.

    ``grad`` returns the three partial derivatives; when omitted they are
    approximated by fourth-order central differences.
    """
    f: Callable
    grad: Optional[Callable] = None
    name: str = "f"
    seed: Optional[int] = None
    integrable: bool = True

    __test__ = False  # not a pytest class

    def gradient(self, y1, y2, y3):
        if self.grad is not None:
            return self.grad(y1, y2, y3)
        h = 1e-3
        out = []
        for ax in range(3):
            def shifted(d):
                args = [y1, y2, y3]
                args[ax] = args[ax] + d
                return self.f(*args)
            out.append((-shifted(2 * h) + 8 * shifted(h) - 8 * shifted(-h) + shifted(-2 * h)) / (12 * h))
        return out


def gauss_legendre_unit(n: int):
    x, w = npleg.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


@dataclass(frozen=True)
class PoincareResult:
    lhs: float
    rhs: float
    rhs_longitudinal: float
    rhs_transverse: float
    margin: float
    quad_error: float
    verdict: str  # "holds" | "violated" | "hypothesis-violated"


def _poincare_terms(fn: TestFunction2p1, n1: int, m: int):
    y1, w1 = gauss_legendre_unit(n1)
    y2 = np.arange(m) / m
    Y1, Y2, Y3 = np.meshgrid(y1, y2, y2, indexing="ij")
    W = w1[:, None, None] / (m * m)
    f = np.broadcast_to(fn.f(Y1, Y2, Y3), Y1.shape)
    g1, g2, g3 = (np.broadcast_to(g, Y1.shape) for g in fn.gradient(Y1, Y2, Y3))
    mean = np.sum(W * f)
    lhs = np.sum(W * (f - mean) ** 2)
    wy = Y1 * (1.0 - Y1)
    longi = 0.5 * np.sum(W * wy * g1 ** 2)
    trans_raw = np.sum(W * (g2 ** 2 + g3 ** 2) / wy)
    return float(lhs), float(longi), float(trans_raw)


def poincare_check(fn: TestFunction2p1, n1: int = 64, m: int = 16) -> PoincareResult:
    """Both sides of the weighted Poincare inequality and ``margin = rhs - lhs``.

    The quadrature error bound is the change in the margin between ``n1`` and
    ``n1/2`` Gauss nodes plus a round-off allowance.  A transverse weighted
    integral that keeps growing under refinement is reported as a hypothesis
    violation rather than a failure.
    """
    lhs, longi, trans = _poincare_terms(fn, n1, m)
    lhs_c, longi_c, trans_c = _poincare_terms(fn, max(2, n1 // 2), m)
    _, _, trans_f = _poincare_terms(fn, 2 * n1, m)
    rhs = longi + POINCARE_TRANSVERSE_CONST * trans
    rhs_c = longi_c + POINCARE_TRANSVERSE_CONST * trans_c
    margin = rhs - lhs
    scale = max(abs(lhs), abs(rhs), 1e-300)
    quad = abs(margin - (rhs_c - lhs_c)) + 64 * np.finfo(float).eps * scale
    divergent = trans_f > 1e-14 and abs(trans_f - trans) > 1e-3 * max(abs(trans), 1e-300)
    if divergent or not fn.integrable:
        verdict = "hypothesis-violated"
    else:
        verdict = "holds" if margin >= -quad else "violated"
    return PoincareResult(lhs, rhs, longi, POINCARE_TRANSVERSE_CONST * trans, margin, quad, verdict)


def random_test_function(seed: int, y_degree: int = 6, trig_degree: int = 4, n_modes: int = 3) -> TestFunction2p1:
    """p0(y1) + y1(1-y1) * sum_k p_k(y1) * trig_k(y2, y3), all random.

    The y1(1-y1) factor on transverse modes keeps the weighted transverse
    integral finite.
    """
    rng = np.random.default_rng(seed)
    p0 = nppoly.Polynomial(rng.normal(size=rng.integers(1, y_degree + 1) + 1))
    damp = nppoly.Polynomial([0.0, 1.0, -1.0])
    modes = []
    for _ in range(n_modes):
        deg = int(rng.integers(0, max(0, y_degree - 2) + 1))
        pk = damp * nppoly.Polynomial(rng.normal(size=deg + 1))
        k2, k3 = (int(x) for x in rng.integers(-trig_degree, trig_degree + 1, size=2))
        phase = rng.uniform(0.0, 2.0 * math.pi)
        modes.append((pk, pk.deriv(), k2, k3, phase))
    dp0 = p0.deriv()
    tp = 2.0 * math.pi

    def f(y1, y2, y3):
        out = p0(y1) + 0.0 * y2 + 0.0 * y3
        for pk, _, k2, k3, ph in modes:
            out = out + pk(y1) * np.cos(tp * (k2 * y2 + k3 * y3) + ph)
        return out

    def grad(y1, y2, y3):
        g1 = dp0(y1) + 0.0 * y2 + 0.0 * y3
        g2 = 0.0 * g1
        g3 = 0.0 * g1
        for pk, dpk, k2, k3, ph in modes:
            arg = tp * (k2 * y2 + k3 * y3) + ph
            c, s = np.cos(arg), np.sin(arg)
            g1 = g1 + dpk(y1) * c
            g2 = g2 - tp * k2 * pk(y1) * s
            g3 = g3 - tp * k3 * pk(y1) * s
        return g1, g2, g3

    return TestFunction2p1(f, grad, name=f"random[{seed}]", seed=seed)


def poincare_suite(count: int = 500, base_seed: int = 20240601, n1: int = 64, m: int = 16):
    """Randomised suite; seeds are ``base_seed + i``.  Returns (seed, result) pairs."""
    out = []
    for i in range(count):
        seed = base_seed + i
        out.append((seed, poincare_check(random_test_function(seed), n1, m)))
    return out


def linear_witness() -> TestFunction2p1:
    return TestFunction2p1(lambda y1, y2, y3: y1 + 0.0 * y2,
                           lambda y1, y2, y3: (np.ones_like(y1 + y2), 0.0 * y1 * y2, 0.0 * y1 * y3),
                           name="y1")


# ---------------------------------------------------------------- Legendre


def legendre_unit(i: int):
    """Orthonormal Legendre polynomial on [0,1]: sqrt(2i+1) P_i(2y-1)."""
    c = np.zeros(i + 1)
    c[i] = math.sqrt(2 * i + 1)
    return lambda y: npleg.legval(2.0 * np.asarray(y) - 1.0, c)


def legendre_decompose(f: Callable, order: int, n_quad: int = 64, m: int = 16):
    """Coefficients c_i(y') = int_0^1 f(y1, y') L_i(y1) dy1 for i <= order.

    Returns an array of shape (order + 1, m, m) on the transverse grid
    ``arange(m)/m``.
    """
    if order >= n_quad:
        raise ValueError(f"order {order} not supported by {n_quad} quadrature nodes")
    y1, w1 = gauss_legendre_unit(n_quad)
    y2 = np.arange(m) / m
    Y1, Y2, Y3 = np.meshgrid(y1, y2, y2, indexing="ij")
    vals = np.broadcast_to(f(Y1, Y2, Y3), Y1.shape)
    basis = np.array([legendre_unit(i)(y1) for i in range(order + 1)])
    return np.einsum("iq,q,qjk->ijk", basis, w1, vals)


def legendre_gram(n: int = 11, n_quad: int = 64):
    y1, w1 = gauss_legendre_unit(n_quad)
    B = np.array([legendre_unit(i)(y1) for i in range(n)])
    return (B * w1) @ B.T


def legendre_ode_residual(n: int, samples: int = 2001) -> float:
    """max |((1 - x^2) P_n')' + n(n+1) P_n| on a uniform grid of [-1, 1]."""
    c = np.zeros(n + 1)
    c[n] = 1.0
    dP = npleg.legder(c)
    flux = npleg.legmul(npleg.legsub([1.0], npleg.legmul([0.0, 1.0], [0.0, 1.0])), dP)
    res = npleg.legadd(npleg.legder(flux), n * (n + 1) * c)
    x = np.linspace(-1.0, 1.0, samples)
    return float(np.max(np.abs(npleg.legval(x, res))))


def spectral_identity(coeffs: Sequence[float], n_quad: int = 64):
    """Both sides of int_{-1}^{1} (1 - x^2) |w'|^2 = sum i(i+1) c_i^2.

    ``coeffs`` are coordinates in the orthonormal basis sqrt((2i+1)/2) P_i.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    scale = np.sqrt((2.0 * np.arange(coeffs.size) + 1.0) / 2.0)
    series = coeffs * scale
    x, w = npleg.leggauss(n_quad)
    dw = npleg.legval(x, npleg.legder(series))
    lhs = float(np.sum(w * (1.0 - x ** 2) * dw ** 2))
    i = np.arange(coeffs.size)
    rhs = float(np.sum(i * (i + 1) * coeffs ** 2))
    return lhs, rhs


# ---------------------------------------------------------------- Gagliardo-Nirenberg


@dataclass(frozen=True)
class WindowedTrigField:
    """Re sum_k A_k exp(-x1^2 / (2 s^2)) exp(i (k1 x1 + 2 pi (k2 x2 + k3 x3)))."""
    amps: np.ndarray  # complex
    k1: np.ndarray
    k2: np.ndarray
    k3: np.ndarray
    width: float = 1.0

    @classmethod
    def gaussian(cls):
        return cls(np.array([1.0 + 0j]), np.zeros(1), np.zeros(1, int), np.zeros(1, int), 1.0)

    @classmethod
    def random(cls, seed: int, n_modes: int = 4):
        rng = np.random.default_rng(seed)
        amps = rng.normal(size=n_modes) + 1j * rng.normal(size=n_modes)
        return cls(amps, rng.uniform(-3.0, 3.0, n_modes), rng.integers(-2, 3, n_modes),
                   rng.integers(-2, 3, n_modes), float(rng.uniform(0.5, 2.0)))

    def derivatives(self, X1, X2, X3):
        """g, grad g (3), Hessian (3x3) on the given mesh."""
        s2 = self.width ** 2
        W = np.exp(-X1 ** 2 / (2.0 * s2))
        g = np.zeros(X1.shape)
        grad = np.zeros((3,) + X1.shape)
        hess = np.zeros((3, 3) + X1.shape)
        tp = 2.0 * math.pi
        for A, a1, a2, a3 in zip(self.amps, self.k1, self.k2, self.k3):
            E = A * W * np.exp(1j * (a1 * X1 + tp * (a2 * X2 + a3 * X3)))
            d = [(-X1 / s2 + 1j * a1), 1j * tp * a2, 1j * tp * a3]
            g += E.real
            for i in range(3):
                grad[i] += (d[i] * E).real
                for j in range(3):
                    extra = -1.0 / s2 if (i == 0 and j == 0) else 0.0
                    hess[i, j] += ((d[i] * d[j] + extra) * E).real
        return g, grad, hess


@dataclass(frozen=True)
class GNResult:
    lhs: float
    rhs_term1: float
    rhs_term2: float
    constant: float

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs_term1 + self.constant * self.rhs_term2

    @property
    def margin(self) -> float:
        return self.rhs_term1 + self.constant * self.rhs_term2 - self.lhs


def gn_check(field: WindowedTrigField, L: float = 16.0, n1: int = 1025, m: int = 8,
             constant: float = GN_CONSTANT) -> GNResult:
    """sup|g| against sqrt2 |g|^1/2 |d1 g|^1/2 + C |grad g|^1/2 |grad^2 g|^1/2 on R x T^2."""
    x1 = np.linspace(-L, L, n1)
    x2 = np.arange(m) / m
    X1, X2, X3 = np.meshgrid(x1, x2, x2, indexing="ij")
    g, grad, hess = field.derivatives(X1, X2, X3)
    w = np.full(n1, x1[1] - x1[0])
    w[0] = w[-1] = 0.5 * w[0]
    W = w[:, None, None] / (m * m)

    def norm(f2):
        return math.sqrt(float(np.sum(W * f2)))

    edge = max(np.abs(g[0]).max(), np.abs(g[-1]).max())
    if edge > 1e-8 * max(np.abs(g).max(), 1e-300):
        warnings.warn(f"field has not decayed at |x1|={L}: edge value {edge:.3e}")
    lhs = float(np.abs(g).max())
    t1 = math.sqrt(2.0) * math.sqrt(norm(g ** 2) * norm(grad[0] ** 2))
    t2 = math.sqrt(norm(np.sum(grad ** 2, axis=0)) * norm(np.sum(hess ** 2, axis=(0, 1))))
    return GNResult(lhs, t1, t2, constant)


def gn_random_suite(count: int = 200, base_seed: int = 777):
    return [(base_seed + i, gn_check(WindowedTrigField.random(base_seed + i))) for i in range(count)]


# ---------------------------------------------------------------- relative quantities


@dataclass(frozen=True)
class RelativeReport:
    delta: float
    samples: int
    skipped: int
    bound4_constant_Q: float
    bound4_constant_p: float
    pressure_K: float
    lower_bound_violations: int
    lower_bound_worst: float
    upper_K: float


def _pairs_for_delta(law: GasLaw, v_minus: float, delta: float, n: int, rng):
    """(v, w) with |p(w) - p(v-)| < delta and |p(v) - p(w)| < delta."""
    pm = law.p(v_minus)
    pw = pm + rng.uniform(-1.0, 1.0, n) * delta
    frac = rng.uniform(0.01, 1.0, n) * rng.choice([-1.0, 1.0], n)
    pv = pw + frac * delta
    ok = (pw > 0) & (pv > 0)
    w = pw[ok] ** (-1.0 / law.gamma)
    v = pv[ok] ** (-1.0 / law.gamma)
    return v, w, int(np.count_nonzero(~ok))


def relative_inequality_suite(law: GasLaw, v_minus: float, delta_list: Sequence[float],
                              samples: int = 20000, seed: int = 0) -> List[RelativeReport]:
    """Per-delta report on the relative-quantity bounds.

    The O(delta) constants are reported as fitted values
    K = max[(ratio - leading coefficient) / delta] over the samples.
    """
    rng = np.random.default_rng(seed)
    g = law.gamma
    # uniform two-sided bounds on the compact range 0 < w < 2v-, 0 < v <= 3v-
    w4 = rng.uniform(0.02, 2.0, samples) * v_minus
    v4 = rng.uniform(0.02, 3.0, samples) * v_minus
    keep = np.abs(v4 - w4) > 1e-3 * v_minus
    w4, v4 = w4[keep], v4[keep]
    c4q = float(np.max((v4 - w4) ** 2 / relative_quantity("Q", v4, w4, law)))
    c4p = float(np.max((v4 - w4) ** 2 / relative_quantity("p", v4, w4, law)))
    out = []
    for delta in delta_list:
        v, w, skipped = _pairs_for_delta(law, v_minus, delta, samples, rng)
        dp = law.p(v) - law.p(w)
        pw = law.p(w)
        prel = relative_quantity("p", v, w, law)
        qrel = relative_quantity("Q", v, w, law)
        lead_p = (g + 1.0) / (2.0 * g) / pw
        K1 = float(np.max((prel / dp ** 2 - lead_p) / delta))
        lead_q = 1.0 / (2.0 * g * pw ** (1.0 + 1.0 / g))
        lower = dp ** 2 * lead_q - (1.0 + g) / (3.0 * g * g) * dp ** 3 / pw ** (2.0 + 1.0 / g)
        gap = qrel - lower
        tol = 1e-12 * np.abs(qrel) + 1e-300
        viol = int(np.count_nonzero(gap < -tol))
        K3 = float(np.max((qrel / dp ** 2 - lead_q) / delta))
        out.append(RelativeReport(delta, int(v.size), skipped, c4q, c4p, K1, viol,
                                  float(np.min(gap / np.maximum(np.abs(qrel), 1e-300))), K3))
    return out


def q_leading_ratio(law: GasLaw, w: float, v: float):
    """(Q(v|w) / |p(v) - p(w)|^2, 1 / (2 gamma p(w)^(1 + 1/gamma)))."""
    dp = law.p(v) - law.p(w)
    ratio = float(relative_quantity("Q", v, w, law) / dp ** 2)
    return ratio, 1.0 / (2.0 * law.gamma * law.p(w) ** (1.0 + 1.0 / law.gamma))


# ---------------------------------------------------------------- inverse pressure


def inverse_pressure_bracket(law: GasLaw, v_minus: float, v_plus: float, v):
    """(v - v-)/(p(v) - p(v-)) + (v - v+)/(p(v+) - p(v)) + p''(v-)/(2 p'(v-)^2) (v- - v+).

    Removable singularities at the endpoints use first-order Taylor patches.
    """
    v = np.asarray(v, dtype=float)
    span = v_plus - v_minus
    tiny = 1e-7 * span
    h_m = v - v_minus
    h_p = v - v_plus
    with np.errstate(divide="ignore", invalid="ignore"):
        r1 = np.where(np.abs(h_m) > tiny, h_m / law.pressure_jump(v_minus, h_m),
                      1.0 / (law.dp(v_minus) + 0.5 * law.d2p(v_minus) * h_m))
        # (v - v+)/(p(v+) - p(v)) = -(h_p)/(p(v+ + h_p) - p(v+))
        r2 = np.where(np.abs(h_p) > tiny, -h_p / law.pressure_jump(v_plus, h_p),
                      -1.0 / (law.dp(v_plus) + 0.5 * law.d2p(v_plus) * h_p))
    corr = 0.5 * law.d2p(v_minus) / law.dp(v_minus) ** 2 * (v_minus - v_plus)
    return r1 + r2 + corr


@dataclass(frozen=True)
class ScalingFit:
    deltas: np.ndarray
    maxima: np.ndarray
    slope: float
    intercept: float


def inverse_pressure_scaling(law: GasLaw, v_minus: float, delta_list: Sequence[float],
                             samples: int = 10000) -> ScalingFit:
    maxima = []
    for delta in delta_list:
        v_plus = v_plus_for_strength(v_minus, delta, law)
        v = np.linspace(v_minus, v_plus, samples)
        b = inverse_pressure_bracket(law, v_minus, v_plus, v)
        if not np.all(np.isfinite(b)):
            raise FloatingPointError(f"non-finite bracket at delta={delta}")
        maxima.append(float(np.max(np.abs(b))))
    d = np.asarray(delta_list, dtype=float)
    m = np.asarray(maxima)
    slope, icpt = np.polyfit(np.log(d), np.log(m), 1)
    return ScalingFit(d, m, float(slope), float(icpt))


# ---------------------------------------------------------------- report


@dataclass(frozen=True)
class CheckRow:
    name: str
    lhs: float
    rhs: float
    margin: float
    verdict: str
    seed: Optional[int] = None


def write_report(path, rows: Sequence[CheckRow]):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["name", "lhs", "rhs", "margin", "verdict", "seed"])
        for r in rows:
            wr.writerow([r.name, repr(float(r.lhs)), repr(float(r.rhs)), repr(float(r.margin)), r.verdict,
                         "" if r.seed is None else r.seed])


def verify_rows(law: GasLaw, v_minus: float = 1.0, count: int = 500, gn_count: int = 200,
                base_seed: int = 20240601) -> List[CheckRow]:
    """Every inequality check as report rows (used by the ``verify`` mode)."""
    rows: List[CheckRow] = []
    r = poincare_check(linear_witness())
    rows.append(CheckRow("poincare:witness_y1", r.lhs, r.rhs, r.margin,
                         "pass" if abs(r.margin) <= 1e-10 else "fail"))
    for seed, res in poincare_suite(count, base_seed):
        rows.append(CheckRow("poincare:random", res.lhs, res.rhs, res.margin,
                             "pass" if res.verdict == "holds" else res.verdict, seed))
    for n in range(11):
        res = legendre_ode_residual(n)
        rows.append(CheckRow(f"legendre:ode_n{n}", res, 1e-10, 1e-10 - res, "pass" if res <= 1e-10 else "fail"))
    G = legendre_gram(11)
    dev = float(np.max(np.abs(G - np.eye(11))))
    rows.append(CheckRow("legendre:gram", dev, 1e-10, 1e-10 - dev, "pass" if dev <= 1e-10 else "fail"))
    gr = gn_check(WindowedTrigField.gaussian())
    rows.append(CheckRow("gn:gaussian", gr.lhs, gr.rhs_term1 + gr.constant * gr.rhs_term2, gr.margin,
                         "pass" if gr.holds else "fail"))
    for seed, res in gn_random_suite(gn_count):
        rows.append(CheckRow("gn:random", res.lhs, res.rhs_term1 + res.constant * res.rhs_term2, res.margin,
                             "pass" if res.holds else "fail", seed))
    ratio, lead = q_leading_ratio(law, 1.0, 1.001)
    rel = abs(ratio / lead - 1.0)
    rows.append(CheckRow("relative:Q_leading", ratio, lead, 0.01 - rel, "pass" if rel <= 0.01 else "fail"))
    for rep in relative_inequality_suite(law, v_minus, [0.1, 0.05, 0.025]):
        rows.append(CheckRow(f"relative:lower_bound_delta{rep.delta:g}", rep.lower_bound_worst, 0.0,
                             rep.lower_bound_worst, "pass" if rep.lower_bound_violations == 0 else "fail"))
        rows.append(CheckRow(f"relative:K_pressure_delta{rep.delta:g}", rep.pressure_K, math.inf, math.inf,
                             "pass" if math.isfinite(rep.pressure_K) else "fail"))
    fit = inverse_pressure_scaling(law, v_minus, [0.1, 0.05, 0.025, 0.0125])
    rows.append(CheckRow("inverse_pressure:slope", fit.slope, 2.0, 0.2 - abs(fit.slope - 2.0),
                         "pass" if 1.8 <= fit.slope <= 2.2 else "fail"))
    return rows
