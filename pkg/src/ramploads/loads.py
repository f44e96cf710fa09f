"""Surface load assembly: velocity, line density, boundary forces, normal
pressure, skin friction, cumulative drag/lift and conservation residuals.

Per unit arc length, with w the layer speed and (dx/ds, db/ds) the unit
tangent:

    force on the gas   (wf1, wf2)  from the momentum balance of the layer,
    normal pressure    N = w * b * kappa + (db/ds)^2,
    skin friction      f = -dw/ds * b - db/ds * w + db/ds * dx/ds.

Reported N, f, drag and lift follow the force-on-the-ramp sign convention,
i.e. drag_cum(s) = integral of -wf1, lift_cum(s) = integral of -wf2; wf1 and
wf2 themselves keep the force-on-the-gas sign.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.interpolate import CubicSpline

from .errors import (DegenerateStation, OutOfValidityRange, UnsortedStations)
from .numerics import FastPPoly

F_CLAMP = 1e-9          # friction this close below zero is quadrature noise
_N_TOL = 1e-12          # tolerance on N >= 0 when tightening the horizon


@dataclass
class SurfaceStation:
    """Layer state at one station: abscissa, arc length, speed, velocity
    components, line mass density, force on the gas per unit arc, normal
    pressure and skin friction on the ramp, and cumulative drag/lift on the
    ramp from the tip."""
    x: float
    s: float
    w: float
    u: float
    v: float
    w_rho: float
    wf1: float
    wf2: float
    N: float
    f: float
    drag_cum: float = 0.0
    lift_cum: float = 0.0


def _check_sorted(svals):
    if np.any(np.diff(svals) <= 0.0):
        raise UnsortedStations("stations must be strictly increasing in s")


def surface_state(chart, field, stations, f_clamp=F_CLAMP):
    """Evaluate the full surface state at the given arc-length stations.

    Stations must be sorted, within [0, field.s_valid].  Tightens
    field.s_valid (and truncates the output) at the first station where
    N < 0 or f < -f_clamp; f within (-f_clamp, 0) is clamped to zero.
    Cumulative drag/lift are integrated over the supplied grid, so include
    s = 0 to anchor them at the tip.
    """
    svals = np.asarray(stations, dtype=float)
    if svals.size == 0:
        return []
    _check_sorted(svals)
    tol = 1e-9 * (1.0 + field.s_valid)
    if svals[0] < -tol or svals[-1] > field.s_valid + tol:
        raise OutOfValidityRange(
            f"stations must lie in [0, {field.s_valid:g}], got "
            f"[{svals[0]:g}, {svals[-1]:g}]")

    tip_cut = max(field.tip_s, 1e-11 * (1.0 + chart.s_max))
    profile = chart.profile
    out = []
    for s in svals:
        if s <= tip_cut:
            out.append(_tip_station(chart, field, float(s)))
            continue
        x = chart.x_of_s(float(s))
        b = float(profile.height(x))
        if b <= 0.0:
            raise DegenerateStation(f"b(s) = 0 at s = {s:g} > 0")
        dxds, dbds, d2x, d2b, kappa = chart.geom_at_x(x)
        w = float(field.w(s))
        wdot = float(field.w_rate(s))
        wf1 = wdot * dxds * b + w * d2x * b + w * dxds * dbds - dbds
        wf2 = wdot * dbds * b + w * d2b * b + w * dbds * dbds
        N = w * b * kappa + dbds * dbds
        f = -wdot * b - dbds * w + dbds * dxds
        if -f_clamp < f < 0.0:
            f = 0.0
        out.append(SurfaceStation(
            x=x, s=float(s), w=w, u=w * dxds, v=w * dbds, w_rho=b / w,
            wf1=wf1, wf2=wf2, N=N, f=f))

    # Tighten the validity horizon at the first inadmissible station.
    for i, st in enumerate(out):
        if st.N < -_N_TOL or st.f < -f_clamp:
            field.s_valid = min(field.s_valid, st.s)
            out = out[:i]
            break
    if out:
        for st, (d, l) in zip(out, cumulative_loads(out)):
            st.drag_cum = d
            st.lift_cum = l
    return out


def _tip_station(chart, field, s):
    """Analytic limits at the tip (every formula has a removable
    singularity at s = 0)."""
    dxds, dbds, _, _, _ = chart.geom_at_x(0.0)
    w0 = field.w0
    return SurfaceStation(
        x=0.0, s=s, w=w0, u=w0 * dxds, v=w0 * dbds, w_rho=0.0,
        wf1=dbds * (w0 * dxds - 1.0), wf2=w0 * dbds * dbds,
        N=dbds * dbds, f=dbds * (dxds - w0))


def cumulative_loads(stationed):
    """Cumulative (drag, lift) on the ramp at each station.

    drag_cum = integral of -wf1, lift_cum = integral of -wf2, by composite
    quadrature (cubic-spline antiderivative; trapezoids below 4 stations)
    over the station grid.  The integral starts at the first station, so
    grids should start at s = 0 for tip-anchored totals.
    """
    if not stationed:
        return []
    svals = np.array([st.s for st in stationed])
    _check_sorted(svals)
    if svals.size == 1:
        return [(0.0, 0.0)]
    g1 = np.array([-st.wf1 for st in stationed])
    g2 = np.array([-st.wf2 for st in stationed])
    if svals.size >= 4:
        drag = CubicSpline(svals, g1).antiderivative()(svals)
        lift = CubicSpline(svals, g2).antiderivative()(svals)
    else:
        drag = cumulative_trapezoid(g1, svals, initial=0.0)
        lift = cumulative_trapezoid(g2, svals, initial=0.0)
    return list(zip(drag.tolist(), lift.tolist()))


@dataclass
class ConservationRow:
    s: float
    r_mass: float
    r_x: float
    r_y: float
    r_E: float


@dataclass
class ConservationReport:
    """Per-station residuals of the layer balance: mass (w_rho*w - b),
    x-momentum (b*u - b - integral of wf1), y-momentum (b*v - integral of
    wf2), and energy (E - E0, zero by construction since the total enthalpy
    is constant through the layer)."""
    rows: list

    @property
    def max_abs(self):
        if not self.rows:
            return {"r_mass": 0.0, "r_x": 0.0, "r_y": 0.0, "r_E": 0.0}
        return {k: max(abs(getattr(r, k)) for r in self.rows)
                for k in ("r_mass", "r_x", "r_y", "r_E")}


def conservation_report(chart, field, stationed):
    """Check that layer flux plus cumulative ramp force equals the incoming
    free-stream flux, station by station.

    The force integrals are evaluated by quadrature of the wf1/wf2 station
    values, independently of the algebraic identities that produced u, v.
    """
    if not stationed:
        return ConservationReport(rows=[])
    cums = cumulative_loads(stationed)
    rows = []
    for st, (drag, lift) in zip(stationed, cums):
        b = float(chart.profile.height(st.x))
        rows.append(ConservationRow(
            s=st.s,
            r_mass=st.w_rho * st.w - b,
            r_x=b * st.u - b + drag,
            r_y=b * st.v + lift,
            r_E=0.0))
    return ConservationReport(rows=rows)


class WeakFormWeights:
    """Dirac-layer weights for the pairing-form balance checks.

    Indices 0..3 are mass, x-momentum, y-momentum, energy; wm[i] multiplies
    the x-derivative of the test function along the arc and wn[i] the
    y-derivative.  The static-pressure weight is identically zero in the
    hypersonic limit; the energy weights are E0 times the mass weights.
    Tabulated on the station grid with cubic interpolation, plus the force
    weights wf1/wf2 needed by the momentum source terms.
    """

    def __init__(self, s, wm, wn, wf1, wf2, E0):
        self.s_lo = float(s[0])
        self.s_hi = float(s[-1])
        self.E0 = E0
        self._wm = [FastPPoly(CubicSpline(s, w)) for w in wm]
        self._wn = [FastPPoly(CubicSpline(s, w)) for w in wn]
        self.wf1 = FastPPoly(CubicSpline(s, wf1))
        self.wf2 = FastPPoly(CubicSpline(s, wf2))

    def wm(self, i, s):
        return self._wm[i](s)

    def wn(self, i, s):
        return self._wn[i](s)

    @staticmethod
    def pressure_weight(s):
        return np.zeros_like(np.asarray(s, dtype=float))

    def covers(self, s_lo, s_hi):
        pad = 1e-9 * (1.0 + self.s_hi)
        return s_lo >= self.s_lo - pad and s_hi <= self.s_hi + pad


def weak_weights(chart, field, stationed, E0=1.0):
    """Tabulate the eight Dirac weights on the station grid.

    wm0 = b*dx/ds and wn0 = b*db/ds; momentum weights carry the velocity
    components; energy weights are E0-proportional.  All vanish at s = 0.
    """
    if len(stationed) < 4:
        raise ValueError("need at least 4 stations to tabulate weights")
    s = np.array([st.s for st in stationed])
    _check_sorted(s)
    b = np.array([chart.profile.height(st.x) for st in stationed])
    u = np.array([st.u for st in stationed])
    v = np.array([st.v for st in stationed])
    geo = [chart.geom_at_x(st.x) for st in stationed]
    dxds = np.array([g[0] for g in geo])
    dbds = np.array([g[1] for g in geo])
    wm0, wn0 = b * dxds, b * dbds
    wm = [wm0, dxds * b * u, dxds * b * v, E0 * wm0]
    wn = [wn0, dbds * b * u, dbds * b * v, E0 * wn0]
    wf1 = np.array([st.wf1 for st in stationed])
    wf2 = np.array([st.wf2 for st in stationed])
    return WeakFormWeights(s, wm, wn, wf1, wf2, E0)
