"""Layer-speed solvers for the four skin-friction models.

All models reduce to one balance for the tangential momentum flux
P(s) = w(s) * b(s) along the arc:

    dP/ds = db/ds * dx/ds - (friction sink)

with P(0) = 0.  Closed forms exist for the frictionless case, the
velocity-power law at exponents 1 and 2, the Coulomb law, and the
velocity-scaled condition; any other exponent goes through a fixed-step
RK4 integrator started just off the singular tip.

Speed fields are evaluated from cumulative quadrature tables in x (the
abscissa), splined once per solve; evaluation at arbitrary arc length is
then O(1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .errors import (DomainError, InvalidExponent, LayerUndefined,
                     StartFailure)
from .numerics import adaptive_simpson

_GRID = 4097            # cumulative-quadrature nodes in x
_ODE_STEPS = 4096       # initial RK4 step count
_ODE_TOL = 1e-8         # refinement agreement target on w
_B_FLOOR = 1e-280       # height below this counts as "no layer yet"


# ---------------------------------------------------------------------------
# friction model specs

@dataclass(frozen=True)
class Frictionless:
    def label(self):
        return "frictionless"


@dataclass(frozen=True)
class VelocityPower:
    """Friction f = k * w_rho * w**alpha (linear damping at alpha = 1,
    quadratic drag at alpha = 2)."""
    k: float
    alpha: float

    def __post_init__(self):
        if self.k <= 0.0:
            raise DomainError(f"friction coefficient k must be > 0, got {self.k}")
        if self.alpha < 1.0:
            raise InvalidExponent(f"exponent alpha must be >= 1, got {self.alpha}")

    def label(self):
        return f"vpower:k={self.k:g},alpha={self.alpha:g}"


@dataclass(frozen=True)
class Coulomb:
    """Dry friction f = eta * N (proportional to the normal pressure)."""
    eta: float

    def __post_init__(self):
        if self.eta <= 0.0:
            raise DomainError(f"Coulomb coefficient eta must be > 0, got {self.eta}")

    def label(self):
        return f"coulomb:eta={self.eta:g}"


@dataclass(frozen=True)
class VelocityScaled:
    """Layer velocity pinned to mu times the frictionless one, 0 < mu <= 1."""
    mu: float

    def __post_init__(self):
        if not 0.0 < self.mu <= 1.0:
            raise DomainError(f"scaling mu must lie in (0, 1], got {self.mu}")

    def label(self):
        return f"scaled:mu={self.mu:g}"


@dataclass(frozen=True)
class Frozen:
    """mu -> 0 limit: accreted particles stop dead (no speed field exists)."""

    def label(self):
        return "frozen"


# ---------------------------------------------------------------------------
# speed field

class SpeedField:
    """Layer speed w(s) with its validity horizon.

    Attributes: w0 (tip limit of w), s_valid (largest arc length with
    w > 0; loads may tighten it further on N/f sign), method
    ('closed-form' or 'ode'), spec (the friction model), tip_s (below
    this the analytic tip limits apply), grid ((s, w) arrays for
    ODE-solved fields, else None), alpha1_integrand_root (first sign
    change of the alpha = 1 source integrand, if any).
    """

    def __init__(self, chart, spec, method, w0, s_valid, w_fn, rate_fn,
                 tip_s, grid=None, alpha1_integrand_root=None):
        self.chart = chart
        self.spec = spec
        self.method = method
        self.w0 = w0
        self.s_valid = s_valid
        self.s_max = chart.s_max
        self.tip_s = tip_s
        self.grid = grid
        self.alpha1_integrand_root = alpha1_integrand_root
        self._w_fn = w_fn
        self._rate_fn = rate_fn

    def _eval(self, fn, tip_value, s):
        arr = np.asarray(s, dtype=float)
        scalar = arr.ndim == 0
        arr = np.atleast_1d(arr)
        out = np.full(arr.shape, tip_value)
        m = arr > self.tip_s
        if m.any():
            out[m] = fn(arr[m])
        return float(out[0]) if scalar else out

    def w(self, s):
        """Layer speed at arc length s (scalar or array)."""
        return self._eval(self._w_fn, self.w0, s)

    def w_rate(self, s):
        """dw/ds at arc length s; analytic for closed forms, 4th-order
        finite differences on the solver grid for ODE fields.  Not
        meaningful below tip_s (loads use the tip limits there)."""
        return self._eval(self._rate_fn, 0.0, s)


def _tip_cut(chart):
    return 1e-11 * (1.0 + chart.s_max)


def _slope_terms(chart, x):
    m = chart.profile.slope(x)
    den = 1.0 + m * m
    return m, den, np.sqrt(den)


def _cumulative_on_grid(chart, integrand):
    """Cumulative integral of a scalar integrand over the solver x-grid,
    returned as a cubic spline clamped to the exact slope at the tip
    (keeps w = P/b well-behaved where numerator and denominator vanish)."""
    x_nodes = np.linspace(0.0, chart.x_max, _GRID)
    vals = np.zeros(_GRID)
    total = 0.0
    for i in range(1, _GRID):
        total += adaptive_simpson(integrand, x_nodes[i - 1], x_nodes[i],
                                  rel_tol=1e-12, abs_tol=1e-15)
        vals[i] = total
    spline = CubicSpline(x_nodes, vals,
                         bc_type=((1, float(integrand(0.0))), "not-a-knot"))
    return x_nodes, vals, spline


def _closed_form_field(chart, spec, P_x, P_nodes, x_nodes, w0, rate_fn,
                       alpha1_integrand_root=None):
    """Assemble a SpeedField from a momentum-flux spline P(x)."""
    profile = chart.profile

    def w_fn(s):
        x = chart.x_at_s_fast(s)
        b = np.asarray(profile.height(x), dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            val = np.where(b > _B_FLOOR, P_x(x) / np.where(b > _B_FLOOR, b, 1.0), w0)
        return val

    s_valid = _locate_w_root(chart, P_x, P_nodes, x_nodes, w0)
    return SpeedField(chart, spec, "closed-form", w0, s_valid, w_fn, rate_fn,
                      tip_s=_tip_cut(chart),
                      alpha1_integrand_root=alpha1_integrand_root)


def _locate_w_root(chart, P_x, P_nodes, x_nodes, w0):
    """First zero of w (equivalently of P beyond the tip), bisected on the
    momentum-flux spline; s_max when w stays positive."""
    if w0 <= 0.0:
        return 0.0
    neg = np.where(P_nodes[1:] <= 0.0)[0]
    if neg.size == 0:
        return chart.s_max
    i = neg[0] + 1
    lo, hi = x_nodes[i - 1], x_nodes[i]
    if i == 1:
        # P(0) = 0 identically; bracket away from the tip endpoint.
        lo = 1e-9 * x_nodes[1]
        if P_x(lo) <= 0.0:
            return 0.0
    elif P_x(lo) <= 0.0:
        return chart.s_of_x(lo)
    x_root = brentq(P_x, lo, hi, xtol=1e-14, rtol=1e-15)
    return chart.s_of_x(x_root)


# ---------------------------------------------------------------------------
# the four models

def solve_frictionless(chart):
    """No skin friction: w(s(x)) = H0(x) / b(x) with
    H0(x) = integral of b'(t) / sqrt(1 + b'(t)^2)."""
    profile = chart.profile
    if profile.height(chart.x_max) <= _B_FLOOR:
        raise LayerUndefined("ramp height is identically zero: no layer forms")
    m0 = profile.slope(0.0)
    w0 = 1.0 / math.sqrt(1.0 + m0 * m0)

    def integrand(x):
        m = profile.slope(x)
        return m / math.sqrt(1.0 + m * m)

    x_nodes, vals, P_x = _cumulative_on_grid(chart, integrand)

    def rate_fn(s):
        x = chart.x_at_s_fast(s)
        m, den, _ = _slope_terms(chart, x)
        b = np.asarray(profile.height(x), dtype=float)
        w = P_x(x) / b
        # dP/ds = db/ds * dx/ds; dw/ds = (dP/ds - db/ds * w) / b
        return (m / den - (m / np.sqrt(den)) * w) / b

    return _closed_form_field(chart, Frictionless(), P_x, vals, x_nodes, w0, rate_fn)


def solve_velocity_power(chart, k, alpha, method="auto"):
    """Velocity-power friction f = k * w_rho * w**alpha.

    alpha = 1 and alpha = 2 evaluate the closed forms by adaptive
    quadrature; other exponents integrate dP/ds = db/ds*dx/ds -
    k*b*(P/b)**(alpha-1) with a classical RK4 stepper started at
    s0 = max(1e-6, 1e-6*s_max), P(s0) = w0*b(s0).  method may force
    'closed' or 'ode'.
    """
    spec = VelocityPower(k, alpha)
    if method == "auto":
        method = "closed" if alpha in (1.0, 2.0) else "ode"
    if method == "closed" and alpha not in (1.0, 2.0):
        raise InvalidExponent(f"no closed form at alpha = {alpha}")

    profile = chart.profile
    if profile.height(chart.x_max) <= _B_FLOOR:
        raise LayerUndefined("ramp height is identically zero: no layer forms")
    m0 = profile.slope(0.0)
    rt0 = math.sqrt(1.0 + m0 * m0)
    w0 = 1.0 / rt0

    if method == "ode":
        return _solve_power_ode(chart, spec, w0)

    if alpha == 1.0:
        # P(x) = integral of [b'/(1+b'^2) - k*b] * sqrt(1+b'^2) dx
        def integrand(x):
            m = profile.slope(x)
            rt = math.sqrt(1.0 + m * m)
            return m / rt - k * profile.height(x) * rt

        x_nodes, vals, P_x = _cumulative_on_grid(chart, integrand)
        root = _alpha1_integrand_root(chart, k, x_nodes)

        def rate_fn(s):
            x = chart.x_at_s_fast(s)
            m, den, _ = _slope_terms(chart, x)
            b = np.asarray(profile.height(x), dtype=float)
            w = P_x(x) / b
            return (m / den - k * b - (m / np.sqrt(den)) * w) / b

        return _closed_form_field(chart, spec, P_x, vals, x_nodes, w0, rate_fn,
                                  alpha1_integrand_root=root)

    # alpha == 2: P(s) = exp(-k s) * integral of db/ds*dx/ds * exp(k t) dt,
    # accumulated segment-by-segment with shifted exponents so large k*s
    # never overflows.
    s_fast = chart.s_at_x_fast
    x_nodes = np.linspace(0.0, chart.x_max, _GRID)
    s_at_nodes = np.array([chart.s_of_x(x) for x in x_nodes])
    vals = np.zeros(_GRID)
    for i in range(1, _GRID):
        s_hi = s_at_nodes[i]

        def integrand(t, s_hi=s_hi):
            m = profile.slope(t)
            rt = math.sqrt(1.0 + m * m)
            return (m / rt) * math.exp(k * (float(s_fast(t)) - s_hi))

        seg = adaptive_simpson(integrand, x_nodes[i - 1], x_nodes[i],
                               rel_tol=1e-12, abs_tol=1e-15)
        vals[i] = vals[i - 1] * math.exp(-k * (s_hi - s_at_nodes[i - 1])) + seg
    P_x = CubicSpline(x_nodes, vals, bc_type=((1, m0 / rt0), "not-a-knot"))

    def rate_fn(s):
        x = chart.x_at_s_fast(s)
        m, den, _ = _slope_terms(chart, x)
        b = np.asarray(profile.height(x), dtype=float)
        P = P_x(x)
        w = P / b
        return (m / den - k * P - (m / np.sqrt(den)) * w) / b

    return _closed_form_field(chart, spec, P_x, vals, x_nodes, w0, rate_fn)


def _alpha1_integrand_root(chart, k, x_nodes):
    """First sign change of db/ds*dx/ds - k*b along the arc (alpha = 1
    diagnostic: beyond it the source integrand drains momentum)."""
    profile = chart.profile

    def g(x):
        m = profile.slope(x)
        return m / (1.0 + m * m) - k * profile.height(x)

    vals = np.array([g(x) for x in x_nodes])
    neg = np.where(vals[1:] <= 0.0)[0]
    if neg.size == 0:
        return None
    i = neg[0] + 1
    if vals[i - 1] <= 0.0:
        return chart.s_of_x(x_nodes[i - 1]) if i > 1 else None
    x_root = brentq(g, x_nodes[i - 1], x_nodes[i], xtol=1e-14, rtol=1e-15)
    return chart.s_of_x(x_root)


def _solve_power_ode(chart, spec, w0):
    """Fixed-step RK4 on dP/ds with step halving until two refinements
    agree within 1e-8 on w; the 0/0 tip is skipped by a series start."""
    k, alpha = spec.k, spec.alpha
    profile = chart.profile
    s_max = chart.s_max
    s0 = max(1e-6, 1e-6 * s_max)
    if s0 >= s_max:
        raise DomainError("ramp too short for the ODE startup offset")
    b0 = profile.height(chart.x_of_s(s0))
    if b0 <= 0.0:
        raise StartFailure(f"b(s0) = 0 at s0 = {s0:g}: tip too flat to start")
    P_start = w0 * b0

    n = _ODE_STEPS
    prev_w = None
    for _ in range(5):
        h = (s_max - s0) / n
        s_half = s0 + 0.5 * h * np.arange(2 * n + 1)
        x_half = chart.x_at_s_fast(s_half)
        m = np.asarray(profile.slope(x_half), dtype=float)
        A = m / (1.0 + m * m)                       # db/ds * dx/ds
        B = np.asarray(profile.height(x_half), dtype=float)

        def rhs(j, P):
            w = max(P, 0.0) / B[j]
            return A[j] - k * B[j] * w ** (alpha - 1.0)

        Ps = np.empty(n + 1)
        Ps[0] = P_start
        P = P_start
        for i in range(n):
            j = 2 * i
            k1 = rhs(j, P)
            k2 = rhs(j + 1, P + 0.5 * h * k1)
            k3 = rhs(j + 1, P + 0.5 * h * k2)
            k4 = rhs(j + 2, P + h * k3)
            P += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            Ps[i + 1] = P
        w_nodes = Ps / B[::2]
        if prev_w is not None:
            agree = np.max(np.abs(w_nodes[::2] - prev_w))
            if agree <= _ODE_TOL:
                break
        prev_w = w_nodes
        n *= 2

    s_nodes = s0 + h * np.arange(Ps.size)
    P_spline = CubicSpline(s_nodes, Ps)
    s_valid = s_max
    neg = np.where(Ps <= 0.0)[0]
    if neg.size and neg[0] > 0:
        i = neg[0]
        s_valid = brentq(P_spline, s_nodes[i - 1], s_nodes[i],
                         xtol=1e-12, rtol=1e-15)
    elif neg.size:
        s_valid = float(s_nodes[0])

    w_spline = CubicSpline(s_nodes, w_nodes)
    rate_spline = CubicSpline(s_nodes, _fd4(w_nodes, h))

    def w_fn(s):
        return w_spline(np.clip(s, s_nodes[0], s_nodes[-1]))

    def rate_fn(s):
        return rate_spline(np.clip(s, s_nodes[0], s_nodes[-1]))

    return SpeedField(chart, spec, "ode", w0, s_valid, w_fn, rate_fn,
                      tip_s=s0, grid=(s_nodes, w_nodes.copy()))


def _fd4(y, h):
    """4th-order first derivative on a uniform grid, one-sided at the ends."""
    n = y.size
    d = np.empty(n)
    if n < 5:
        return np.gradient(y, h)
    d[2:-2] = (-y[4:] + 8.0 * y[3:-1] - 8.0 * y[1:-3] + y[:-4]) / (12.0 * h)
    d[0] = (-25.0 * y[0] + 48.0 * y[1] - 36.0 * y[2] + 16.0 * y[3] - 3.0 * y[4]) / (12.0 * h)
    d[1] = (-3.0 * y[0] - 10.0 * y[1] + 18.0 * y[2] - 6.0 * y[3] + y[4]) / (12.0 * h)
    d[-1] = (25.0 * y[-1] - 48.0 * y[-2] + 36.0 * y[-3] - 16.0 * y[-4] + 3.0 * y[-5]) / (12.0 * h)
    d[-2] = (3.0 * y[-1] + 10.0 * y[-2] - 18.0 * y[-3] + 6.0 * y[-4] - y[-5]) / (12.0 * h)
    return d


def solve_coulomb(chart, eta):
    """Coulomb friction f = eta * N.

    The integrating factor reduces in x to I(x) = exp(-eta * (atan b'(x)
    - atan b'(0))) — the tangent-angle change — so only one non-nested
    quadrature remains: P(x) = I(x) * integral of b'(1 - eta b') /
    (I sqrt(1 + b'^2)).
    """
    spec = Coulomb(eta)
    profile = chart.profile
    if profile.height(chart.x_max) <= _B_FLOOR:
        raise LayerUndefined("ramp height is identically zero: no layer forms")
    m0 = profile.slope(0.0)
    rt0 = math.sqrt(1.0 + m0 * m0)
    w0 = (1.0 - eta * m0) / rt0
    ang0 = math.atan(m0)

    def I_of_x(x):
        return np.exp(-eta * (np.arctan(profile.slope(x)) - ang0))

    def integrand(x):
        m = profile.slope(x)
        return m * (1.0 - eta * m) / (float(I_of_x(x)) * math.sqrt(1.0 + m * m))

    x_nodes, Wvals, W_x = _cumulative_on_grid(chart, integrand)
    P_nodes = I_of_x(x_nodes) * Wvals

    def P_x(x):
        return I_of_x(x) * W_x(x)

    def rate_fn(s):
        x = chart.x_at_s_fast(s)
        m, den, rt = _slope_terms(chart, x)
        c = np.asarray(profile.second_deriv(x), dtype=float)
        kappa = c / (den * rt)
        b = np.asarray(profile.height(x), dtype=float)
        P = P_x(x)
        w = P / b
        Pdot = -eta * (kappa * P + m * m / den) + m / den
        return (Pdot - (m / rt) * w) / b

    return _closed_form_field(chart, spec, P_x, P_nodes, x_nodes, w0, rate_fn)


def solve_velocity_scaled(chart, mu):
    """Velocity pinned to mu times the frictionless field; the line density
    downstream scales as 1/mu automatically through w_rho = b/w."""
    spec = VelocityScaled(mu)
    base = solve_frictionless(chart)

    def w_fn(s):
        return mu * base._w_fn(s)

    def rate_fn(s):
        return mu * base._rate_fn(s)

    return SpeedField(chart, spec, "closed-form", mu * base.w0, base.s_valid,
                      w_fn, rate_fn, tip_s=base.tip_s)


@dataclass
class FrozenLoads:
    """mu -> 0 limit: purely geometric loads, infinite line density.

    The four maps take the abscissa x.  w is identically zero and w_rho
    is symbolically infinite (w_value / w_rho_value carry the
    serialization convention).
    """
    chart: object
    w_value: float = 0.0
    w_rho_value: float = math.inf

    def n_of_x(self, x):
        m = np.asarray(self.chart.profile.slope(x), dtype=float)
        return m * m / (1.0 + m * m)

    def f_of_x(self, x):
        m = np.asarray(self.chart.profile.slope(x), dtype=float)
        return m / (1.0 + m * m)

    def wf1_of_x(self, x):
        m = np.asarray(self.chart.profile.slope(x), dtype=float)
        return -m / np.sqrt(1.0 + m * m)

    def wf2_of_x(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))


def frozen_limit_loads(chart):
    """Closed-form mu -> 0 loads: N = b'^2/(1+b'^2), f = b'/(1+b'^2),
    force on the gas (-b'/sqrt(1+b'^2), 0) per unit arc."""
    return FrozenLoads(chart)


def solve(chart, spec):
    """Dispatch a friction spec to its solver; Frozen has no speed field
    and must go through frozen_limit_loads instead."""
    if isinstance(spec, Frictionless):
        return solve_frictionless(chart)
    if isinstance(spec, VelocityPower):
        return solve_velocity_power(chart, spec.k, spec.alpha)
    if isinstance(spec, Coulomb):
        return solve_coulomb(chart, spec.eta)
    if isinstance(spec, VelocityScaled):
        return solve_velocity_scaled(chart, spec.mu)
    if isinstance(spec, Frozen):
        raise DomainError("the frozen model has no speed field; "
                          "use frozen_limit_loads")
    raise TypeError(f"unknown friction spec {spec!r}")
