"""Independent verification of the surface solutions.

Two mechanisms, both deliberately decoupled from the solvers:

* a discrete particle-accretion oracle that rebuilds w, N and f from
  impulse bookkeeping alone (gather incoming mass with free-stream
  momentum, project onto the rotated tangent, subtract the friction
  impulse) — its refinement limit is the layer momentum balance;

* a numerical evaluator of the pairing-form conservation statements
  against compactly supported C2 bump functions: area integral over the
  gas region above the curve, line integrals along the ramp with the
  Dirac-layer weights, momentum source terms, and the inflow flux.

Finitely many bumps are evidence, not proof; the CLI report says so.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, StepTooLarge, SupportOutsideDomain
from .loads import surface_state
from .numerics import adaptive_simpson, gauss_nodes
from .solvers import (Coulomb, Frictionless, VelocityPower, VelocityScaled,
                      solve)


# ---------------------------------------------------------------------------
# accretion oracle

@dataclass
class AccretionState:
    """Oracle state at station s: accumulated mass flux M (= b(s) exactly),
    tangential momentum flux P, and the per-unit-arc forces recovered from
    the impulses of the step ending at s."""
    s: float
    M: float
    P: float
    N: float
    f: float

    @property
    def w(self):
        return self.P / self.M if self.M > 0.0 else 0.0


def run_accretion(chart, model, ds, s_max):
    """March the accretion oracle with step ds up to s_max.

    Each step gathers the newly impinging mass dM = b(s1) - b(s0) carrying
    free-stream momentum dM*(1,0), projects the total onto the tangent at
    s1 (the normal part is the pressure impulse), and removes the friction
    impulse of the chosen model.  First-order accurate; exact on straight
    ramps for the frictionless and Coulomb models, where no projection or
    speed-quadrature error exists.
    """
    if ds <= 0.0:
        raise DomainError(f"step must be positive, got {ds}")
    if s_max > chart.s_max * (1.0 + 1e-12):
        raise DomainError("s_max exceeds the charted arc")
    if chart.profile.slope(0.0) <= 0.0:
        raise DomainError("accretion oracle needs b'(0) > 0 "
                          "(immediate mass gathering at the tip)")
    profile = chart.profile
    n_steps = int(round(s_max / ds))
    if abs(n_steps * ds - s_max) > 1e-9 * (1.0 + s_max):
        n_steps = int(math.floor(s_max / ds))

    mu = model.mu if isinstance(model, VelocityScaled) else None

    def frame(s):
        x = chart.x_of_s(s)
        dxds, dbds, _, _, _ = chart.geom_at_x(x)
        return np.array([dxds, dbds]), np.array([dbds, -dxds]), profile.height(x)

    t0, _, b0 = frame(0.0)
    w0_fl = t0[0]
    states = [AccretionState(s=0.0, M=0.0, P=0.0,
                             N=t0[1] ** 2, f=_tip_friction(model, t0, w0_fl))]
    P = 0.0
    P_free = 0.0          # parallel frictionless flux for the scaled model
    for i in range(n_steps):
        s1 = (i + 1) * ds
        t1, n1, b1 = frame(s1)
        dM = b1 - b0
        Q = P * t0 + dM * np.array([1.0, 0.0])
        P_star = float(Q @ t1)
        if P_star < 0.0:
            raise StepTooLarge(f"tangential flux projected negative at s = {s1:g}")
        J_N = float(Q @ n1)

        if isinstance(model, Frictionless):
            J_f = 0.0
        elif isinstance(model, VelocityPower):
            w_mid = P_star / b1 if b1 > 0.0 else 0.0
            J_f = model.k * b1 * w_mid ** (model.alpha - 1.0) * ds
            J_f = min(J_f, P_star)
        elif isinstance(model, Coulomb):
            J_f = model.eta * J_N
        elif isinstance(model, VelocityScaled):
            P_free = float((P_free * t0 + dM * np.array([1.0, 0.0])) @ t1)
            J_f = P_star - mu * P_free
        else:
            raise TypeError(f"no accretion rule for {model!r}")

        P = max(P_star - J_f, 0.0)
        states.append(AccretionState(s=s1, M=b1, P=P,
                                     N=J_N / ds, f=J_f / ds))
        t0, b0 = t1, b1
    return states


def _tip_friction(model, t0, w0_fl):
    """Limit of f at the tip for the state-0 record."""
    if isinstance(model, Coulomb):
        return model.eta * t0[1] ** 2
    if isinstance(model, VelocityScaled):
        return (1.0 - model.mu) * t0[1] * t0[0]
    return 0.0


# ---------------------------------------------------------------------------
# bump test functions

@dataclass(frozen=True)
class BumpTestFunction:
    """C2 compactly supported bump
    phi(x, y) = [(1 - ((x-x_c)/r_x)^2)+]^3 * [(1 - ((y-y_c)/r_y)^2)+]^3."""
    x_c: float
    y_c: float
    r_x: float
    r_y: float

    @staticmethod
    def _g(t):
        u = np.clip(1.0 - t * t, 0.0, None)
        return u ** 3

    @staticmethod
    def _dg(t):
        u = np.clip(1.0 - t * t, 0.0, None)
        return -6.0 * t * u * u

    def value(self, x, y):
        return self._g((np.asarray(x) - self.x_c) / self.r_x) * \
            self._g((np.asarray(y) - self.y_c) / self.r_y)

    def dx(self, x, y):
        return self._dg((np.asarray(x) - self.x_c) / self.r_x) / self.r_x * \
            self._g((np.asarray(y) - self.y_c) / self.r_y)

    def dy(self, x, y):
        return self._g((np.asarray(x) - self.x_c) / self.r_x) * \
            self._dg((np.asarray(y) - self.y_c) / self.r_y) / self.r_y

    @property
    def bounds(self):
        return (self.x_c - self.r_x, self.x_c + self.r_x,
                self.y_c - self.r_y, self.y_c + self.r_y)


def standard_bumps(chart, x_hi=None):
    """Three canonical placements: strictly interior to the gas, straddling
    the ramp surface, and touching the inflow boundary x = 0.  x_hi caps the
    placements when the validity horizon ends before x_max."""
    x_max = x_hi if x_hi is not None else chart.x_max
    b_end = float(chart.profile.height(chart.x_max))
    pad = 0.25 * (1.0 + b_end)
    x_mid = 0.5 * x_max
    return [
        ("interior", BumpTestFunction(x_mid, b_end + 2.0 * pad, 0.25 * x_max, pad)),
        ("straddle", BumpTestFunction(x_mid, float(chart.profile.height(x_mid)),
                                      0.25 * x_max, pad)),
        ("inflow", BumpTestFunction(0.0, b_end + 2.0 * pad, 0.25 * x_max, pad)),
    ]


# ---------------------------------------------------------------------------
# weak-form residual

_EQUATIONS = ("mass", "x-momentum", "y-momentum", "energy")


def weak_form_residual(chart, weights, phi, equation, include_friction=True,
                       n_gauss=32):
    """Normalized residual of one pairing-form balance against one bump.

    Sums the gas-region area integral (columns above the curve, tensor
    Gauss-Legendre, 32x32 default), the Dirac line integrals with the
    layer weights, the momentum source term (force on the gas, omitted
    when include_friction is False — the deliberate-failure knob), and the
    inflow flux when the support reaches x = 0.  The result is |sum| over
    the sum of absolute-integrand magnitudes, so "small" is scale-free.
    """
    if equation not in _EQUATIONS:
        raise ValueError(f"equation must be one of {_EQUATIONS}, got {equation!r}")
    x_lo_s, x_hi_s, y_lo, y_hi = phi.bounds
    if x_hi_s <= 0.0:
        raise SupportOutsideDomain("support lies left of the inflow boundary")
    if x_lo_s >= chart.x_max:
        raise SupportOutsideDomain("support lies beyond the charted region")
    if x_hi_s > chart.x_max * (1.0 + 1e-12):
        raise SupportOutsideDomain("support extends past the charted region; "
                                   "the balance cannot be closed there")
    x_lo = max(x_lo_s, 0.0)
    x_hi = min(x_hi_s, chart.x_max)
    if y_hi <= float(chart.profile.height(x_lo)):
        raise SupportOutsideDomain("support lies below the ramp surface")

    E0 = weights.E0
    area_coeff, idx, source, inflow_coeff = {
        "mass": (1.0, 0, None, 1.0),
        "x-momentum": (1.0, 1, weights.wf1, 1.0),
        "y-momentum": (0.0, 2, weights.wf2, 0.0),
        "energy": (E0, 3, None, E0),
    }[equation]
    if not include_friction:
        source = None

    crossings = _curve_crossings(chart.profile, x_lo, x_hi, (y_lo, y_hi))
    terms = []
    mags = []

    if area_coeff != 0.0:
        signed, mag = _area_integral(chart, phi, x_lo, x_hi, crossings, n_gauss)
        terms.append(area_coeff * signed)
        mags.append(abs(area_coeff) * mag)

    s_lo = chart.s_of_x(x_lo)
    s_hi = chart.s_of_x(x_hi)
    s_cuts = [s_lo] + [chart.s_of_x(xc) for xc in crossings] + [s_hi]
    if s_hi > s_lo:
        if not weights.covers(s_lo, s_hi):
            raise SupportOutsideDomain(
                "layer weights do not cover the arc under the support")

        def dirac_integrand(s):
            x = chart.x_at_s_fast(s)
            y = chart.profile.height(x)
            return weights.wm(idx, s) * phi.dx(x, y) + \
                weights.wn(idx, s) * phi.dy(x, y)

        signed, mag = _line_integral(dirac_integrand, s_cuts)
        terms.append(signed)
        mags.append(mag)

        if source is not None:
            def source_integrand(s):
                x = chart.x_at_s_fast(s)
                return source(s) * phi.value(x, chart.profile.height(x))

            signed, mag = _line_integral(source_integrand, s_cuts)
            terms.append(signed)
            mags.append(mag)

    if inflow_coeff != 0.0 and x_lo_s < 0.0:
        yl = max(y_lo, 0.0)
        if y_hi > yl:
            nodes, wts = gauss_nodes(64)
            half = 0.5 * (y_hi - yl)
            y = yl + half * (nodes + 1.0)
            val = half * float(np.dot(wts, phi.value(0.0, y)))
            terms.append(inflow_coeff * val)
            mags.append(abs(inflow_coeff) * val)   # phi >= 0

    total_mag = sum(mags)
    if total_mag == 0.0:
        return 0.0
    return abs(sum(terms)) / total_mag


def _curve_crossings(profile, x_lo, x_hi, targets):
    """x where the (monotone) curve crosses a horizontal support edge."""
    h_lo = float(profile.height(x_lo))
    h_hi = float(profile.height(x_hi))
    out = set()
    for t in targets:
        if h_lo < t < h_hi:
            out.add(brentq(lambda x: float(profile.height(x)) - t,
                           x_lo, x_hi, xtol=1e-13))
    return sorted(out)


def _area_integral(chart, phi, x_lo, x_hi, crossings, n):
    """Signed and absolute integrals of phi_x over the gas region above the
    curve, clipped to the support.  Tensor Gauss per x-panel; panels split
    where the curve crosses the support edges so each column integrand is
    smooth."""
    xg, wx = gauss_nodes(n)
    yg, wy = gauss_nodes(n)
    cuts = [x_lo] + list(crossings) + [x_hi]
    _, _, y_lo, y_hi = phi.bounds
    signed = 0.0
    mag = 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        if b <= a:
            continue
        half_x = 0.5 * (b - a)
        x_nodes = a + half_x * (xg + 1.0)
        yl = np.maximum(np.asarray(chart.profile.height(x_nodes), dtype=float), y_lo)
        span = np.clip(y_hi - yl, 0.0, None)
        # y grid: one column per x node, scaled to [yl, y_hi]
        Y = yl[:, None] + 0.5 * span[:, None] * (yg[None, :] + 1.0)
        vals = phi.dx(x_nodes[:, None], Y)
        col = 0.5 * span * (vals @ wy)
        col_abs = 0.5 * span * (np.abs(vals) @ wy)
        signed += half_x * float(np.dot(wx, col))
        mag += half_x * float(np.dot(wx, col_abs))
    return signed, mag


def _line_integral(f, cuts, rel_tol=1e-10, abs_tol=1e-14):
    """Adaptive Simpson over each panel plus a fixed-order magnitude pass."""
    nodes, wts = gauss_nodes(64)
    signed = 0.0
    mag = 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        if b <= a:
            continue
        signed += adaptive_simpson(f, a, b, rel_tol=rel_tol, abs_tol=abs_tol)
        half = 0.5 * (b - a)
        sn = a + half * (nodes + 1.0)
        mag += half * float(np.dot(wts, np.abs([f(s) for s in sn])))
    return signed, mag


# ---------------------------------------------------------------------------
# convergence study

@dataclass
class ConvergenceRow:
    ds: float
    err_w: float
    err_N: float
    err_f: float


@dataclass
class ConvergenceStudy:
    """Oracle-vs-solver error table with the fitted log-log order of the
    speed error; exact marks cases where the oracle has no discretization
    error at all (straight ramps, geometric friction) and a fitted order
    would be noise."""
    rows: list
    order_w: float | None
    exact: bool


def convergence_study(chart, model, ds_list):
    """Errors of the accretion oracle against the solver field at each step
    size, plus the fitted convergence order of the speed error."""
    ds_list = list(ds_list)
    if not ds_list:
        return ConvergenceStudy(rows=[], order_w=None, exact=False)
    field = solve(chart, model)
    horizon = min(field.s_valid, chart.s_max)
    rows = []
    for ds in ds_list:
        states = run_accretion(chart, model, ds, horizon)[1:]
        svals = [st.s for st in states]
        ref = surface_state(chart, field, svals)
        states = states[:len(ref)]      # horizon may have been tightened
        rows.append(ConvergenceRow(
            ds=ds,
            err_w=max(abs(a.w - r.w) for a, r in zip(states, ref)),
            err_N=max(abs(a.N - r.N) for a, r in zip(states, ref)),
            err_f=max(abs(a.f - r.f) for a, r in zip(states, ref))))
    exact = all(r.err_w < 1e-11 for r in rows)
    order = None
    if not exact and len(rows) >= 2 and all(r.err_w > 0.0 for r in rows):
        logs = np.log([r.ds for r in rows])
        errs = np.log([r.err_w for r in rows])
        order = float(np.polyfit(logs, errs, 1)[0])
    return ConvergenceStudy(rows=rows, order_w=order, exact=exact)
