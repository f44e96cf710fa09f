"""Shared numerical kernels: adaptive Simpson quadrature, Gauss-Legendre rules,
and a safeguarded Newton/bisection root finder.

These are deliberately small scalar routines; the heavy lifting elsewhere is
vectorized numpy on precomputed grids.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np


def _simpson_panel(f, a, fa, b, fb):
    m = 0.5 * (a + b)
    fm = f(m)
    return m, fm, (b - a) * (fa + 4.0 * fm + fb) / 6.0


def _adapt(f, a, fa, b, fb, m, fm, whole, tol, depth):
    lm, flm, left = _simpson_panel(f, a, fa, m, fm)
    rm, frm, right = _simpson_panel(f, m, fm, b, fb)
    delta = left + right - whole
    if depth <= 0 or abs(delta) <= 15.0 * tol:
        return left + right + delta / 15.0
    half = 0.5 * tol
    return (_adapt(f, a, fa, m, fm, lm, flm, left, half, depth - 1)
            + _adapt(f, m, fm, b, fb, rm, frm, right, half, depth - 1))


def adaptive_simpson(f, a, b, rel_tol=1e-10, abs_tol=1e-14, max_depth=48):
    """Integrate f over [a, b] by adaptive Simpson subdivision.

    The local error target is max(abs_tol, rel_tol * |first estimate|),
    split in half at every subdivision.
    """
    if a == b:
        return 0.0
    sign = 1.0
    if b < a:
        a, b = b, a
        sign = -1.0
    fa = f(a)
    fb = f(b)
    m, fm, whole = _simpson_panel(f, a, fa, b, fb)
    tol = max(abs_tol, rel_tol * abs(whole))
    return sign * _adapt(f, a, fa, b, fb, m, fm, whole, tol, max_depth)


@lru_cache(maxsize=32)
def gauss_nodes(n):
    """Gauss-Legendre nodes and weights on [-1, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def gauss_integrate(f, a, b, n=32):
    """Fixed-order Gauss-Legendre quadrature of a vectorized integrand."""
    if a == b:
        return 0.0
    x, w = gauss_nodes(n)
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    return half * float(np.dot(w, f(mid + half * x)))


def cumulative_quadrature(f, nodes, rel_tol=1e-12, abs_tol=1e-15):
    """Cumulative integral of scalar f at the given sorted nodes.

    Each segment is integrated by adaptive Simpson, so node values are exact
    to the stated tolerance; interpolate between nodes separately.
    """
    nodes = np.asarray(nodes, dtype=float)
    out = np.zeros_like(nodes)
    total = 0.0
    for i in range(1, nodes.size):
        total += adaptive_simpson(f, nodes[i - 1], nodes[i],
                                  rel_tol=rel_tol, abs_tol=abs_tol)
        out[i] = total
    return out


class FastPPoly:
    """Piecewise-polynomial wrapper with a cheap scalar evaluation path.

    scipy splines carry ~20 microseconds of overhead per scalar call, which
    dominates adaptive quadrature; this wrapper does searchsorted + Horner
    for scalars and defers to the underlying PPoly for arrays.
    """

    def __init__(self, ppoly):
        self._pp = ppoly
        self._x = ppoly.x
        self._cT = np.ascontiguousarray(ppoly.c.T)
        self._n = len(self._x) - 2

    def __call__(self, t):
        if not np.isscalar(t):
            return self._pp(t)
        i = np.searchsorted(self._x, t) - 1
        if i < 0:
            i = 0
        elif i > self._n:
            i = self._n
        dt = t - self._x[i]
        acc = 0.0
        for c in self._cT[i]:
            acc = acc * dt + c
        return acc


def safeguarded_newton(f, df, lo, hi, x0, f_tol, max_iter=80):
    """Find the root of monotone f on [lo, hi] by Newton steps with a
    bisection fallback whenever an iterate leaves the bracket.

    f(lo) <= 0 <= f(hi) is assumed; convergence is declared on |f| <= f_tol.
    """
    x = min(max(x0, lo), hi)
    for _ in range(max_iter):
        fx = f(x)
        if abs(fx) <= f_tol:
            return x
        if fx > 0.0:
            hi = x
        else:
            lo = x
        d = df(x)
        step_ok = d > 0.0
        if step_ok:
            x_next = x - fx / d
            step_ok = lo < x_next < hi
        x = x_next if step_ok else 0.5 * (lo + hi)
    return x
