"""Projection onto {0 <= f <= cap, sum w f^p <= A} in the w-weighted L2 metric."""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import brentq

from hconf.errors import InfeasibleConstraintError


def _shrink(y: np.ndarray, lam: float, p: float) -> np.ndarray:
    """Nonnegative root of f + lam*p*f^{p-1} = y (zero where y <= 0).

    The left side is convex and increasing for p >= 2, so Newton started at
    f = y decreases monotonically onto the root.
    """
    f = np.maximum(y, 0.0)
    if lam == 0.0:
        return f
    pos = f > 0
    x = f[pos].copy()
    yy = y[pos]
    for _ in range(100):
        h = x + lam * p * x ** (p - 1) - yy
        dh = 1.0 + lam * p * (p - 1) * x ** (p - 2)
        step = h / dh
        x = np.maximum(x - step, 0.0)
        if np.all(np.abs(step) <= 1e-15 * np.maximum(yy, 1e-300)):
            break
    f[pos] = x
    return f


def lp_mass(f: np.ndarray, w: np.ndarray, p: float) -> float:
    return float(np.dot(w, np.abs(f) ** p))


def project(y, w, p: float, A: float, cap: float | None = None) -> np.ndarray:
    """Nearest point to y (weighted by w) with 0 <= f <= cap and sum w f^p <= A."""
    y = np.asarray(y, float)
    w = np.asarray(w, float)
    hi = math.inf if cap is None else cap

    def point(lam):
        return np.minimum(_shrink(y, lam, p), hi)

    f = point(0.0)
    if lp_mass(f, w, p) <= A:
        return f
    g = lambda log_lam: lp_mass(point(math.exp(log_lam)), w, p) - A
    lo, up = -60.0, 0.0
    while g(up) > 0:
        up += 10.0
        if up > 700:
            raise InfeasibleConstraintError("projection multiplier diverged")
    return point(math.exp(brentq(g, lo, up, xtol=1e-14, rtol=1e-15, maxiter=500)))


def saturate(f, w, p: float, A: float, cap: float | None = None) -> np.ndarray:
    """Scale f up (clipping at cap) until sum w f^p = A."""
    f = np.asarray(f, float)
    w = np.asarray(w, float)
    hi = math.inf if cap is None else cap
    if cap is not None and lp_mass(np.full_like(f, cap), w, p) < A * (1 - 1e-14):
        raise InfeasibleConstraintError("cap too small for the requested area")
    if not np.any(f > 0):
        f = np.ones_like(f)
    cur = lp_mass(f, w, p)
    if abs(cur - A) <= 1e-15 * A:
        return f
    if cur > A:
        return f * (A / cur) ** (1.0 / p)
    g = lambda s: lp_mass(np.minimum(s * f, hi), w, p) - A
    up = 2.0
    while g(up) < 0:
        up *= 2.0
    s = brentq(g, 1.0, up, xtol=1e-15, rtol=1e-15, maxiter=500)
    return np.minimum(s * f, hi)
