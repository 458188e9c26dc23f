"""Scalar minimization and quadrature kernels used by every bound."""
from __future__ import annotations

import math
from functools import lru_cache
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy.special import logsumexp

from .errors import EmptyDomain, MaxSubdivisions, NonFinite, NotSPD

INTERIOR = "interior"
BOUNDARY = "boundary_limit"

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0
_MAX_LADDER = 60


class MinResult(NamedTuple):
    x: float
    fun: float
    status: str


@dataclass(frozen=True)
class ScalarObjective:
    """Objective on the open interval (domain_lo, domain_hi); may return +inf."""

    eval: Callable[[float], float]
    domain_hi: float = math.inf
    domain_lo: float = 0.0

    def __call__(self, x: float) -> float:
        return self.eval(x)


@dataclass(frozen=True)
class QuadratureSpec:
    abs_tol: float = 1e-13
    rel_tol: float = 1e-10
    max_subdivisions: int = 40
    transform: str = "semi_infinite_rational"
    order: int = 20

    def __post_init__(self):
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise ValueError("quadrature tolerances must be positive")
        if self.order < 2:
            raise ValueError("Gauss-Hermite order must be at least 2")
        if self.transform not in ("none", "semi_infinite_rational", "gauss_hermite"):
            raise ValueError(f"unknown transform {self.transform!r}")


def _checked(f, x):
    v = float(f(x))
    if math.isnan(v):
        raise NonFinite(f"objective returned NaN at x={x!r}")
    return v


def minimize_scalar(obj, tol: float = 1e-8, lo: float | None = None,
                    hi: float | None = None, x0: float | None = None) -> MinResult:
    """Minimize a quasiconvex function on an open interval.

    Geometric bracket expansion (doubling toward an infinite endpoint, halving
    the gap toward a finite one) followed by golden-section search. When the
    objective keeps decreasing toward an endpoint the best probed value is
    returned with status ``boundary_limit``. Every returned value is an actual
    evaluation of the objective, never an extrapolation.
    """
    if isinstance(obj, ScalarObjective):
        lo = obj.domain_lo if lo is None else lo
        hi = obj.domain_hi if hi is None else hi
        f = obj.eval
    else:
        f = obj
        lo = 0.0 if lo is None else lo
        hi = math.inf if hi is None else hi
    if not hi > lo:
        raise EmptyDomain(f"empty interval ({lo}, {hi})")

    def up(x):
        if math.isinf(hi):
            return lo + 2.0 * (x - lo)
        return hi - 0.5 * (hi - x)

    def down(x):
        return lo + 0.5 * (x - lo)

    if x0 is None:
        x0 = lo + 1.0 if math.isinf(hi) else lo + min(1.0, 0.5 * (hi - lo))

    # find a finite starting point
    f0 = _checked(f, x0)
    if math.isinf(f0):
        x = x0
        for step in (down, up):
            x = x0
            for _ in range(_MAX_LADDER):
                x = step(x)
                if not lo < x < hi:
                    break
                fx = _checked(f, x)
                if not math.isinf(fx):
                    x0, f0 = x, fx
                    break
            if not math.isinf(f0):
                break
        else:
            raise EmptyDomain("objective is +inf at every probed point")
        if math.isinf(f0):
            raise EmptyDomain("objective is +inf at every probed point")

    def small(delta, fv):
        return delta <= 0.01 * tol * max(1.0, abs(fv))

    # expand toward hi
    x1 = up(x0)
    f1 = _checked(f, x1) if lo < x1 < hi else math.inf
    if f1 < f0:
        a, fa, b, fb = x0, f0, x1, f1
        for _ in range(_MAX_LADDER):
            c = up(b)
            fc = _checked(f, c) if (lo < c < hi and c != b) else math.inf
            if fc >= fb:
                return _golden(f, a, b, c, fa, fb, fc, tol)
            if small(fb - fc, fc):
                return MinResult(c, fc, BOUNDARY)
            a, fa, b, fb = b, fb, c, fc
        return MinResult(b, fb, BOUNDARY)

    # expand toward lo
    c, fc, b, fb = x1, f1, x0, f0
    for _ in range(_MAX_LADDER):
        a = down(b)
        fa = _checked(f, a) if (lo < a < hi and a != b) else math.inf
        if fa >= fb:
            return _golden(f, a, b, c, fa, fb, fc, tol)
        if small(fb - fa, fa):
            return MinResult(a, fa, BOUNDARY)
        c, fc, b, fb = b, fb, a, fa
    return MinResult(b, fb, BOUNDARY)


def _golden(f, a, b, c, fa, fb, fc, tol, maxiter=200):
    """Golden-section search on [a, c]; b is any point with f(b) <= f(a), f(c)."""
    best_x, best_f = b, fb
    x1 = c - _INVPHI * (c - a)
    x2 = a + _INVPHI * (c - a)
    f1 = _checked(f, x1)
    f2 = _checked(f, x2)
    xtol = min(tol, 1e-9)
    for _ in range(maxiter):
        for x, fx in ((x1, f1), (x2, f2)):
            if fx < best_f:
                best_x, best_f = x, fx
        if c - a <= xtol * (abs(a) + abs(c)) + 1e-300:
            break
        if f1 <= f2:
            c, x2, f2 = x2, x1, f1
            x1 = c - _INVPHI * (c - a)
            f1 = _checked(f, x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _INVPHI * (c - a)
            f2 = _checked(f, x2)
    return MinResult(best_x, best_f, INTERIOR)


# ---------------------------------------------------------------- quadrature

def _simpson_adaptive(g, a, b, spec: QuadratureSpec):
    """Adaptive Simpson on [a, b] with a coarse initial partition."""
    n0 = 16
    xs = np.linspace(a, b, 2 * n0 + 1)
    ys = [g(x) for x in xs]
    panels = []
    coarse = 0.0
    for i in range(n0):
        x0, xm, x1 = xs[2 * i], xs[2 * i + 1], xs[2 * i + 2]
        y0, ym, y1 = ys[2 * i], ys[2 * i + 1], ys[2 * i + 2]
        s = (x1 - x0) / 6.0 * (y0 + 4.0 * ym + y1)
        coarse += s
        panels.append((x0, x1, y0, ym, y1, s, 0))
    total = 0.0
    scale = abs(coarse)
    stack = panels[::-1]
    while stack:
        x0, x1, y0, ym, y1, whole, depth = stack.pop()
        xm = 0.5 * (x0 + x1)
        xl, xr = 0.5 * (x0 + xm), 0.5 * (xm + x1)
        yl, yr = g(xl), g(xr)
        left = (xm - x0) / 6.0 * (y0 + 4.0 * yl + ym)
        right = (x1 - xm) / 6.0 * (ym + 4.0 * yr + y1)
        err = left + right - whole
        width = (x1 - x0) / (b - a)
        local_tol = max(spec.abs_tol, spec.rel_tol * scale) * max(width, 1e-300)
        if abs(err) <= 15.0 * local_tol or (depth >= 3 and abs(err) < 1e-300):
            total += left + right + err / 15.0
            continue
        if depth + 1 > spec.max_subdivisions:
            raise MaxSubdivisions(
                f"tolerance not met on [{x0:.6g}, {x1:.6g}] after {depth} bisections")
        stack.append((xm, x1, ym, yr, y1, right, depth + 1))
        stack.append((x0, xm, y0, yl, ym, left, depth + 1))
    if math.isnan(total):
        raise NonFinite("quadrature produced NaN")
    return total


def integrate(f: Callable[[float], float], a: float, b: float,
              spec: QuadratureSpec | None = None) -> float:
    """Adaptive Simpson integral of f over the finite interval [a, b]."""
    spec = spec or QuadratureSpec()
    if b == a:
        return 0.0

    def g(x):
        v = float(f(x))
        if math.isnan(v):
            raise NonFinite(f"integrand is NaN at {x!r}")
        return v

    return _simpson_adaptive(g, a, b, spec)


def integrate_semi_infinite(f: Callable[[float], float], spec: QuadratureSpec | None = None,
                            start: float = 0.0, scale: float = 1.0) -> float:
    """Integral of f over (start, inf) via t = start + scale*u/(1-u) and adaptive Simpson.

    The integrand is taken to vanish at t = inf; a non-finite value at t = start
    is read as 0 (densities like t^{-3/2} e^{-a^2/2t} are 0*inf there).
    """
    spec = spec or QuadratureSpec()

    def g(u):
        if u >= 1.0:
            return 0.0
        t = start + scale * u / (1.0 - u)
        v = float(f(t))
        if u == 0.0 and not math.isfinite(v):
            return 0.0
        if math.isnan(v):
            raise NonFinite(f"integrand is NaN at t={t!r}")
        if math.isinf(v):
            raise NonFinite(f"integrand is infinite at t={t!r}")
        return v * scale / (1.0 - u) ** 2

    return _simpson_adaptive(g, 0.0, 1.0, spec)


def semi_infinite_nodes(breakpoints=(), scale: float = 1.0, panels: int = 96,
                        order: int = 16) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes and weights for integrals over (0, inf).

    Uses u = t/(t+scale) on (0, 1); panel edges include every breakpoint so that
    integrands with jumps or kinks there are integrated at full order.
    """
    x, w = np.polynomial.legendre.leggauss(order)
    cuts = sorted({0.0, 1.0} | {b / (b + scale) for b in breakpoints if 0.0 < b < math.inf})
    edges = []
    for lo_u, hi_u in zip(cuts[:-1], cuts[1:]):
        n = max(2, int(round(panels * (hi_u - lo_u))))
        edges.append(np.linspace(lo_u, hi_u, n + 1)[:-1])
    edges = np.concatenate(edges + [np.array([1.0])])
    lo_e, hi_e = edges[:-1], edges[1:]
    half = 0.5 * (hi_e - lo_e)
    mid = 0.5 * (hi_e + lo_e)
    u = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    wu = (half[:, None] * w[None, :]).ravel()
    t = scale * u / (1.0 - u)
    wt = wu * scale / (1.0 - u) ** 2
    return t, wt


def gauss_legendre_nodes(a: float, b: float, order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


@lru_cache(maxsize=32)
def _hermgauss(order: int):
    z, w = np.polynomial.hermite.hermgauss(order)
    z.flags.writeable = False
    w.flags.writeable = False
    return z, w


def _hermite_grid(mean, cov, order):
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    d = mean.shape[0]
    if cov.shape != (d, d) or not np.allclose(cov, cov.T, rtol=1e-12, atol=1e-14):
        raise NotSPD("covariance must be a symmetric d x d matrix")
    try:
        L = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise NotSPD("covariance is not positive-definite") from exc
    z, w = _hermgauss(order)
    grids = np.meshgrid(*([z] * d), indexing="ij")
    Z = np.stack([g.ravel() for g in grids], axis=1)
    wgrids = np.meshgrid(*([w] * d), indexing="ij")
    W = np.prod(np.stack([g.ravel() for g in wgrids], axis=1), axis=1) / math.pi ** (d / 2)
    X = mean[None, :] + math.sqrt(2.0) * Z @ L.T
    return X, W


def gauss_hermite_nd(g: Callable[[np.ndarray], np.ndarray], mean, cov, order: int = 40) -> float:
    """E[g(X)] for X ~ N(mean, cov) by tensor-product Gauss-Hermite.

    ``g`` receives an (n, d) array of points and returns n values. Exact for
    polynomials of degree < 2*order in each coordinate.
    """
    X, W = _hermite_grid(mean, cov, order)
    vals = np.asarray(g(X), dtype=float)
    out = float(np.dot(W, vals))
    if math.isnan(out):
        raise NonFinite("Gauss-Hermite sum is NaN")
    return out


def log_gauss_hermite_nd(logg: Callable[[np.ndarray], np.ndarray], mean, cov,
                         order: int = 40) -> float:
    """log E[exp(logg(X))] for X ~ N(mean, cov), summed in log space."""
    X, W = _hermite_grid(mean, cov, order)
    out = float(logsumexp(np.asarray(logg(X), dtype=float), b=W))
    if math.isnan(out):
        raise NonFinite("Gauss-Hermite log-sum is NaN")
    return out
