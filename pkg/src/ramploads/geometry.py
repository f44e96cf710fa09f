"""Ramp profiles and the arc-length chart.

A ramp is the graph y = b(x), x in [0, x_max], with b(0) = 0 and b'(x) >= 0.
The chart provides the arc-length map s(x) = integral of sqrt(1 + b'(t)^2),
its inverse x(s), the height along the arc, unit tangent/normal frames and
the curvature — everything downstream solvers need.

Conventions: the unit tangent points downstream, t(s) = (dx/ds, db/ds); the
unit normal n(s) = (db/ds, -dx/ds) points out of the gas region, i.e. into
the ramp.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import DomainError, NonMonotoneProfile
from .numerics import FastPPoly, adaptive_simpson, safeguarded_newton

_SLOPE_FLOOR = -1e-12      # slopes below this count as a monotonicity violation
_CHART_NODES = 2049        # cached arc-length table resolution


@dataclass
class Finding:
    """One admissibility finding; level is 'fatal' or 'warning'."""
    level: str
    code: str
    message: str


def _horner(coeffs, x):
    acc = 0.0
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


def _poly_derivative(coeffs):
    return tuple(i * c for i, c in enumerate(coeffs))[1:] or (0.0,)


class RampProfile:
    """The boundary curve y = b(x) in one of four forms.

    kinds: 'polynomial' (coefficient list, constant term first),
    'straight' (inclination angle), 'power' (b = c * x**q, q >= 1),
    'tabulated' (strictly increasing samples with a C2 cubic-spline
    interpolant).
    """

    def __init__(self, kind, x_max, **params):
        if x_max <= 0.0:
            raise DomainError(f"x_max must be positive, got {x_max}")
        self.kind = kind
        self.x_max = float(x_max)
        self._params = params

    # -- constructors ------------------------------------------------------

    @classmethod
    def polynomial(cls, coeffs, x_max):
        coeffs = tuple(float(c) for c in coeffs)
        if not coeffs:
            coeffs = (0.0,)
        p = cls("polynomial", x_max, coeffs=coeffs)
        p._c0 = coeffs
        p._c1 = _poly_derivative(coeffs)
        p._c2 = _poly_derivative(p._c1)
        return p

    @classmethod
    def straight(cls, theta, x_max):
        """Straight ramp with tangent inclination theta (radians)."""
        if not 0.0 <= theta < 0.5 * math.pi:
            raise DomainError(f"inclination must lie in [0, pi/2), got {theta}")
        p = cls("straight", x_max, theta=theta)
        p._slope = math.tan(theta)
        p.theta = theta
        return p

    @classmethod
    def power(cls, c, q, x_max):
        if q < 1.0:
            raise DomainError(f"power profile needs exponent q >= 1, got {q}")
        p = cls("power", x_max, c=float(c), q=float(q))
        p._c = float(c)
        p._q = float(q)
        return p

    @classmethod
    def tabulated(cls, xs, bs, x_max=None):
        xs = np.asarray(xs, dtype=float)
        bs = np.asarray(bs, dtype=float)
        if xs.size != bs.size or xs.size < 3:
            raise DomainError("tabulated profile needs >= 3 matching samples")
        if np.any(np.diff(xs) <= 0.0):
            raise DomainError("tabulated profile needs strictly increasing x")
        p = cls("tabulated", x_max if x_max is not None else float(xs[-1]),
                xs=xs, bs=bs)
        if p.x_max > xs[-1]:
            raise DomainError("x_max exceeds the tabulated range")
        # Natural cubic spline: C2 as the curvature term requires.  A cubic
        # that is both C2 and monotone-by-construction does not exist for all
        # data, so monotonicity is checked by validate_profile instead.
        p._spline = FastPPoly(CubicSpline(xs, bs, bc_type="natural"))
        p._dspline = FastPPoly(p._spline._pp.derivative(1))
        p._ddspline = FastPPoly(p._spline._pp.derivative(2))
        return p

    @classmethod
    def from_csv(cls, path, x_max=None):
        """Read a tabulated profile from CSV with header 'x,b'."""
        xs, bs = [], []
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [h.strip().lower() for h in header[:2]] != ["x", "b"]:
                raise DomainError(f"{path}: expected CSV header 'x,b'")
            for row in reader:
                if not row or row[0].lstrip().startswith("#"):
                    continue
                xs.append(float(row[0]))
                bs.append(float(row[1]))
        return cls.tabulated(xs, bs, x_max=x_max)

    # -- evaluation --------------------------------------------------------

    def height(self, x):
        if self.kind == "polynomial":
            if np.isscalar(x):
                return _horner(self._c0, x)
            return np.polynomial.polynomial.polyval(np.asarray(x, float), self._c0)
        if self.kind == "straight":
            return self._slope * np.asarray(x, float) if not np.isscalar(x) else self._slope * x
        if self.kind == "power":
            return self._c * np.power(x, self._q)
        return self._spline(x)

    def slope(self, x):
        if self.kind == "polynomial":
            if np.isscalar(x):
                return _horner(self._c1, x)
            return np.polynomial.polynomial.polyval(np.asarray(x, float), self._c1)
        if self.kind == "straight":
            return self._slope * np.ones_like(x) if not np.isscalar(x) else self._slope
        if self.kind == "power":
            if self._q == 1.0:
                return self._c * np.ones_like(x) if not np.isscalar(x) else self._c
            return self._c * self._q * np.power(x, self._q - 1.0)
        return self._dspline(x)

    def second_deriv(self, x):
        if self.kind == "polynomial":
            if np.isscalar(x):
                return _horner(self._c2, x)
            return np.polynomial.polynomial.polyval(np.asarray(x, float), self._c2)
        if self.kind == "straight":
            return np.zeros_like(x) if not np.isscalar(x) else 0.0
        if self.kind == "power":
            q = self._q
            if q == 1.0:
                return np.zeros_like(x) if not np.isscalar(x) else 0.0
            # q in (1, 2) diverges at x = 0; that is the true curve behaviour.
            with np.errstate(divide="ignore"):
                return self._c * q * (q - 1.0) * np.power(x, q - 2.0)
        return self._ddspline(x)

    def describe(self):
        if self.kind == "straight":
            return f"straight:{math.degrees(self.theta):g}deg"
        if self.kind == "polynomial":
            return "poly:" + ",".join(f"{c:g}" for c in self._c0)
        if self.kind == "power":
            return f"power:{self._c:g},{self._q:g}"
        return f"table:{self._params['xs'].size}pts"

    def __repr__(self):
        return f"RampProfile({self.describe()}, x_max={self.x_max:g})"


def validate_profile(profile, samples=1025):
    """Admissibility findings for a profile; findings are data, not errors.

    Checks: height at the origin (fatal when nonzero), slope sign on a dense
    grid (fatal when negative), a flat tip (warning: the layer may not attach
    at the leading point), no growth at all (warning), and the tabulated
    curvature-accuracy caveat.
    """
    findings = []
    xs = np.linspace(0.0, profile.x_max, samples)
    h0 = float(profile.height(0.0))
    scale = 1.0 + abs(float(profile.height(profile.x_max)))
    if abs(h0) > 1e-12 * scale:
        findings.append(Finding("fatal", "origin-offset",
                                f"b(0) = {h0:g}, profile must start at the origin"))
    slopes = np.asarray(profile.slope(xs), dtype=float)
    bad = np.where(slopes < -1e-9)[0]
    if bad.size:
        findings.append(Finding("fatal", "negative-slope",
                                f"b'(x) < 0 near x = {xs[bad[0]]:g} "
                                f"(min slope {slopes.min():g})"))
    elif float(profile.slope(0.0)) <= 1e-12:
        findings.append(Finding("warning", "flat-tip",
                                "b'(0) = 0: concentration may not start at the tip; "
                                "loads there are curvature-dominated"))
    if float(profile.height(profile.x_max)) <= 1e-15:
        findings.append(Finding("warning", "no-growth",
                                "b(x) stays at zero: no layer forms on this ramp"))
    if profile.kind == "tabulated":
        findings.append(Finding("warning", "tabulated-curvature",
                                "second derivative comes from the interpolant and is "
                                "only second-order accurate; normal pressure inherits "
                                "that accuracy"))
    return findings


def has_fatal(findings):
    return any(f.level == "fatal" for f in findings)


class ArcChart:
    """Arc-length chart of a ramp profile.

    s_of_x integrates sqrt(1 + b'^2) by adaptive Simpson from a cached node
    table (exact to quad_tol); x_of_s inverts it by safeguarded Newton to
    1e-12 in s.  Fast spline evaluators back the hot inner loops of the
    solvers; public maps always go through quadrature/root-finding.

    Immutable after construction; safe for concurrent reads.
    """

    def __init__(self, profile, quad_tol=1e-10):
        if profile.x_max <= 0.0:
            raise DomainError("x_max must be positive")
        self.profile = profile
        self.quad_tol = quad_tol
        self.x_max = profile.x_max

        self._x_nodes = np.linspace(0.0, self.x_max, _CHART_NODES)
        self._dx = self._x_nodes[1] - self._x_nodes[0]
        seg = np.empty(_CHART_NODES - 1)
        g = self._arc_integrand
        for i in range(seg.size):
            seg[i] = adaptive_simpson(g, self._x_nodes[i], self._x_nodes[i + 1],
                                      rel_tol=quad_tol, abs_tol=1e-15)
        self._s_nodes = np.concatenate(([0.0], np.cumsum(seg)))
        self.s_max = float(self._s_nodes[-1])
        self._s_spline = FastPPoly(CubicSpline(self._x_nodes, self._s_nodes))
        self._x_spline = FastPPoly(CubicSpline(self._s_nodes, self._x_nodes))

    # -- integrand with monotonicity guard ---------------------------------

    def _arc_integrand(self, x):
        m = self.profile.slope(x)
        if m < _SLOPE_FLOOR:
            raise NonMonotoneProfile(f"b'({x:g}) = {m:g} < 0")
        return math.sqrt(1.0 + m * m)

    # -- public maps (exact) ------------------------------------------------

    def s_of_x(self, x):
        """Arc length from the tip to abscissa x (adaptive quadrature)."""
        if not np.isscalar(x):
            return np.array([self.s_of_x(xi) for xi in np.asarray(x, float)])
        if x < -1e-12 or x > self.x_max * (1.0 + 1e-12) + 1e-15:
            raise DomainError(f"x = {x:g} outside [0, {self.x_max:g}]")
        x = min(max(x, 0.0), self.x_max)
        i = min(_CHART_NODES - 2, int(x / self._dx))
        return float(self._s_nodes[i]) + adaptive_simpson(
            self._arc_integrand, self._x_nodes[i], x,
            rel_tol=self.quad_tol, abs_tol=1e-15)

    def x_of_s(self, s):
        """Abscissa at arc length s (safeguarded Newton on s_of_x)."""
        if not np.isscalar(s):
            return np.array([self.x_of_s(si) for si in np.asarray(s, float)])
        if s < -1e-12 or s > self.s_max * (1.0 + 1e-12) + 1e-15:
            raise DomainError(f"s = {s:g} outside [0, {self.s_max:g}]")
        s = min(max(s, 0.0), self.s_max)
        if s == 0.0:
            return 0.0
        if s == self.s_max:
            return self.x_max
        guess = float(np.clip(self._x_spline(s), 0.0, self.x_max))
        return safeguarded_newton(
            lambda x: self.s_of_x(x) - s, self._arc_integrand,
            0.0, self.x_max, guess, f_tol=1e-12 * (1.0 + abs(s)))

    def height_of_s(self, s):
        return self.profile.height(self.x_of_s(s))

    # -- fast interpolated maps for inner loops -----------------------------

    def x_at_s_fast(self, s):
        """Spline inverse map; error ~ grid^4, fine for quadrature inner loops."""
        return np.clip(self._x_spline(s), 0.0, self.x_max)

    def s_at_x_fast(self, x):
        return np.clip(self._s_spline(x), 0.0, self.s_max)

    # -- frames --------------------------------------------------------------

    def geom_at_x(self, x):
        """(dx/ds, db/ds, d2x/ds2, d2b/ds2, curvature) at abscissa x.

        Closed forms from the chain rule; no finite differences.
        """
        m = self.profile.slope(x)
        c = self.profile.second_deriv(x)
        den = 1.0 + m * m
        rt = np.sqrt(den)
        dxds = 1.0 / rt
        dbds = m / rt
        d2b = c / (den * den)
        d2x = -m * c / (den * den)
        kappa = c / (den * rt)
        return dxds, dbds, d2x, d2b, kappa

    def _check_s(self, s):
        if s < -1e-12 or s > self.s_max * (1.0 + 1e-12) + 1e-15:
            raise DomainError(f"s = {s:g} outside [0, {self.s_max:g}]")

    def tangent(self, s):
        self._check_s(s)
        dxds, dbds, _, _, _ = self.geom_at_x(self.x_of_s(s))
        return np.array([dxds, dbds])

    def normal(self, s):
        self._check_s(s)
        dxds, dbds, _, _, _ = self.geom_at_x(self.x_of_s(s))
        return np.array([dbds, -dxds])

    def curvature(self, s):
        self._check_s(s)
        return self.geom_at_x(self.x_of_s(s))[4]

    def frame_at(self, s):
        """Unit tangent, outward (of the gas) unit normal and curvature at s."""
        self._check_s(s)
        dxds, dbds, _, _, kappa = self.geom_at_x(self.x_of_s(s))
        return np.array([dxds, dbds]), np.array([dbds, -dxds]), kappa


def build_chart(profile, quad_tol=1e-10):
    """Build the arc-length chart for an admissible profile."""
    return ArcChart(profile, quad_tol=quad_tol)


def frame_at(chart, s):
    return chart.frame_at(s)
