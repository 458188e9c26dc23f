"""Information-inequality bounds on expectations under perturbed models.

Every bound here is an infimum over a scalar tilt parameter of a quantity built
from a cumulant generating function and a relative-entropy budget. Results are
reported in the units of the expectation being bounded: an upper result bounds
E[F] from above, a lower result bounds it from below (so it is the negated
infimum).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.special import logsumexp

from .errors import EmptyDomain, Infinite, NonIntegrable
from .numerics import BOUNDARY, INTERIOR, ScalarObjective, minimize_scalar, semi_infinite_nodes

INF = math.inf
SIDES = ("upper", "lower")


@dataclass(frozen=True)
class CgfHandle:
    """c -> Lambda(c) = log E_P[exp(c F)].

    ``c_max`` bounds the positive domain and ``c_min`` the negative one
    (Lambda is +inf for c >= c_max or c <= -c_min).
    """

    eval: Callable[[float], float]
    c_max: float = INF
    centered: bool = False
    c_min: float = INF

    def __call__(self, c: float) -> float:
        if c >= self.c_max or c <= -self.c_min:
            return INF
        return float(self.eval(c))

    def signed(self, side: str) -> tuple[Callable[[float], float], float]:
        """(c -> Lambda(+-c), domain end) for the given side."""
        _check_side(side)
        if side == "upper":
            return (lambda c: self(c)), self.c_max
        return (lambda c: self(-c)), self.c_min


@dataclass(frozen=True)
class RelEntBudget:
    eta0: float
    K: float = 0.0
    kind: str = "affine_in_stopped_time"

    def __post_init__(self):
        if not (math.isfinite(self.eta0) and math.isfinite(self.K)):
            raise ValueError("budget terms must be finite")
        if self.eta0 < 0 or self.K < 0:
            raise ValueError("budget terms must be nonnegative")
        if self.kind not in ("scalar", "affine_in_stopped_time"):
            raise ValueError(f"unknown budget kind {self.kind!r}")


@dataclass(frozen=True)
class BoundResult:
    value: float
    optimizer: float
    side: str
    status: str


@dataclass(frozen=True)
class TiltedExpectation:
    """Discretized baseline law: probability weights with payoff F and penalty G per node.

    Weights are renormalized to total mass 1; ``mass_defect`` keeps the removed amount.
    """

    weights: np.ndarray
    payoff: np.ndarray
    penalty: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        f = np.broadcast_to(np.asarray(self.payoff, dtype=float), w.shape)
        g = np.broadcast_to(np.asarray(self.penalty, dtype=float), w.shape)
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        keep = w > 0
        total = float(w[keep].sum())
        if not (math.isfinite(total) and total > 0):
            raise ValueError("weights must have finite positive mass")
        # a probability law: the quadrature mass defect is removed exactly
        object.__setattr__(self, "weights", w[keep] / total)
        object.__setattr__(self, "payoff", np.array(f[keep]))
        object.__setattr__(self, "penalty", np.array(g[keep]))
        object.__setattr__(self, "mass_defect", 1.0 - total)
        with np.errstate(over="ignore"):
            if np.all(np.abs(self.penalty) < 0.5):
                log_z = math.log1p(float(np.dot(self.weights, np.expm1(self.penalty))))
            else:
                log_z = float(logsumexp(self.penalty, b=self.weights))
        if not math.isfinite(log_z):
            raise Infinite("E_P[exp(G)] is not finite")
        # weights of the G-tilted law and its payoff mean, for a centered evaluation
        wt = self.weights * np.exp(self.penalty - log_z)
        fin = np.isfinite(self.payoff)
        fbar = float(np.dot(wt[fin], self.payoff[fin])) if fin.all() else 0.0
        object.__setattr__(self, "_log_z", log_z)
        object.__setattr__(self, "_wt", wt)
        object.__setattr__(self, "_fbar", fbar)

    def log_mgf(self, c: float) -> float:
        """log E_P[exp(c F + G)].

        Written as log Z + c Fbar + log E_G[exp(c (F - Fbar))]; for small tilts
        the last term goes through expm1/log1p so (1/c) log_mgf stays accurate
        as c -> 0.
        """
        if c == 0.0:
            return self._log_z
        with np.errstate(over="ignore", invalid="ignore"):
            x = c * (self.payoff - self._fbar)
            if np.all(np.abs(x) < 0.5):
                rest = math.log1p(float(np.dot(self._wt, np.expm1(x))))
            else:
                rest = float(logsumexp(x, b=self._wt))
        return self._log_z + c * self._fbar + rest

    @classmethod
    def from_law(cls, law, payoff: Callable, penalty: Callable,
                 breakpoints: Sequence[float] = (), scale: float | None = None,
                 panels: int = 160, order: int = 16) -> "TiltedExpectation":
        """Discretize a hitting-time law (density plus atom at inf) on Gauss-Legendre nodes."""
        t, w = law.nodes(breakpoints, scale=scale, panels=panels, order=order)
        return cls(w, payoff(t), penalty(t))


def _check_side(side):
    if side not in SIDES:
        raise ValueError(f"side must be 'upper' or 'lower', got {side!r}")


def _sign(side):
    return 1.0 if side == "upper" else -1.0


def _finish(res, side, transform=lambda x: x):
    if math.isinf(res.fun):
        raise Infinite("bound is +inf on the whole domain")
    return BoundResult(_sign(side) * res.fun, transform(res.x), side, res.status)


def info_objective(cgf: CgfHandle, eta: float, side: str) -> ScalarObjective:
    """c -> Lambda(+-c)/c + eta/c on (0, c_max)."""
    lam, hi = cgf.signed(side)

    def f(c):
        v = lam(c)
        return INF if math.isinf(v) else (v + eta) / c

    return ScalarObjective(f, hi)


def info_bound(cgf: CgfHandle, eta: float, side: str = "upper", form: str = "eta",
               tol: float = 1e-8) -> BoundResult:
    """inf_c {Lambda(+-c)/c + eta/c}, signed for the side.

    form="eta" minimizes the convex function e -> e*Lambda(+-1/e) + e*eta over
    e = 1/c; form="c" minimizes the quasiconvex c-form directly.
    """
    _check_side(side)
    if not (math.isfinite(eta) and eta >= 0):
        raise ValueError("eta must be finite and nonnegative")
    obj = info_objective(cgf, eta, side)
    try:
        if form == "c":
            return _finish(minimize_scalar(obj, tol), side)
        if form != "eta":
            raise ValueError(f"unknown form {form!r}")
        lo = 0.0 if math.isinf(obj.domain_hi) else 1.0 / obj.domain_hi
        res = minimize_scalar(lambda e: obj(1.0 / e), tol, lo=lo, hi=INF,
                              x0=max(1.0, 2.0 * lo))
    except EmptyDomain as exc:
        raise Infinite(str(exc)) from exc
    return _finish(res, side, lambda e: 1.0 / e)


def tilted_bound(t: TiltedExpectation, side: str = "upper", form: str = "eta",
                 tol: float = 1e-8) -> BoundResult:
    """inf_{c>0} (1/c) log E_P[exp(+-c F + G)], signed for the side."""
    _check_side(side)
    s = _sign(side)

    def f(c):
        return t.log_mgf(s * c) / c

    try:
        if form == "c":
            return _finish(minimize_scalar(f, tol), side)
        res = minimize_scalar(lambda e: f(1.0 / e), tol)
    except EmptyDomain as exc:
        raise Infinite(str(exc)) from exc
    return _finish(res, side, lambda e: 1.0 / e)


def bernoulli_cgf(p: float) -> CgfHandle:
    """Centered CGF of an indicator with P(A) = p."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")

    def lam(c):
        terms, coefs = [], []
        if p > 0:
            terms.append(c * (1.0 - p))
            coefs.append(p)
        if p < 1:
            terms.append(-c * p)
            coefs.append(1.0 - p)
        return float(logsumexp(terms, b=coefs))

    return CgfHandle(lam, centered=True)


def event_prob_bound(p: float, eta: float) -> tuple[float, float]:
    """Interval for P~(A) over all P~ within relative entropy eta of P."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    if eta < 0:
        raise ValueError("eta must be nonnegative")
    if eta == 0 or p in (0.0, 1.0):
        return p, p
    if math.isinf(eta):
        return 0.0, 1.0
    cgf = bernoulli_cgf(p)
    up = p + info_bound(cgf, eta, "upper").value
    lo = p + info_bound(cgf, eta, "lower").value
    return min(max(lo, 0.0), 1.0), min(max(up, 0.0), 1.0)


def rel_ent_bootstrap(cgf_G: CgfHandle, tol: float = 1e-8) -> float:
    """inf_{lam>1} Lambda_G(lam)/(lam - 1): a relative-entropy bound when R <= E~[G].

    The infimum is often approached as lam -> 1, so the handle should keep
    Lambda_G(1 + x) accurate relative to x for small x.
    """
    if cgf_G.c_max <= 1.0:
        raise Infinite("Lambda_G is infinite for every lam > 1")

    def f(x):
        v = cgf_G(1.0 + x)
        return INF if math.isinf(v) else v / x

    try:
        res = minimize_scalar(f, tol, lo=0.0, hi=cgf_G.c_max - 1.0)
    except EmptyDomain as exc:
        raise Infinite(str(exc)) from exc
    if math.isinf(res.fun):
        raise Infinite("Lambda_G is infinite for every lam > 1")
    return max(res.fun, 0.0)


def stopping_time_mean_bound(cgf_tau: CgfHandle, budget: RelEntBudget,
                             tol: float = 1e-8) -> tuple[BoundResult, BoundResult]:
    """Bounds on E~[tau] when R(P~||P) <= eta0 + K E~[tau]."""
    if budget.kind != "affine_in_stopped_time":
        raise ValueError("stopping-time bounds need an affine budget")
    eta0, K = budget.eta0, budget.K
    if cgf_tau.c_max <= K:
        raise Infinite("no lam in (K, c_max): the budget slope is too large for the baseline")

    def upper(x):
        v = cgf_tau(K + x)
        return INF if math.isinf(v) else (v + eta0) / x

    def lower(c):
        v = cgf_tau(-c)
        return INF if math.isinf(v) else (v + eta0) / (c + K)

    try:
        ru = minimize_scalar(upper, tol, lo=0.0, hi=cgf_tau.c_max - K)
        rl = minimize_scalar(lower, tol, lo=0.0, hi=cgf_tau.c_min)
    except EmptyDomain as exc:
        raise Infinite(str(exc)) from exc
    if math.isinf(ru.fun):
        raise Infinite("upper bound is infinite")
    return (BoundResult(-rl.fun, rl.x, "lower", rl.status),
            BoundResult(ru.fun, K + ru.x, "upper", ru.status))


@dataclass(frozen=True)
class DiscountMeasure:
    """Finite measure on (0, inf): exponential rate*e^{-rate s} ds or a tabulated density."""

    rate: float | None = None
    grid: np.ndarray | None = None
    density: np.ndarray | None = None

    @classmethod
    def exponential(cls, rate: float) -> "DiscountMeasure":
        if not rate > 0:
            raise ValueError("discount rate must be positive")
        return cls(rate=rate)

    @classmethod
    def tabulated(cls, grid, density) -> "DiscountMeasure":
        g = np.asarray(grid, dtype=float)
        d = np.asarray(density, dtype=float)
        if g.ndim != 1 or g.shape != d.shape or g.size < 2 or np.any(np.diff(g) <= 0):
            raise ValueError("tabulated density needs an increasing grid of matching length")
        if np.any(d < 0) or not np.all(np.isfinite(d)):
            raise NonIntegrable("density must be finite and nonnegative")
        return cls(grid=g, density=d)

    def nodes(self, panels: int = 48, order: int = 8) -> tuple[np.ndarray, np.ndarray]:
        """Quadrature nodes s_i and weights w_i with sum w_i h(s_i) ~ int h dpi."""
        if self.rate is not None:
            s, w = semi_infinite_nodes((), scale=1.0 / self.rate, panels=panels, order=order)
            w = w * self.rate * np.exp(-self.rate * s)
            keep = w > 1e-300
            return s[keep], w[keep]
        g, d = self.grid, self.density
        w = np.zeros_like(g)
        h = np.diff(g)
        w[:-1] += 0.5 * h * d[:-1]
        w[1:] += 0.5 * h * d[1:]
        keep = w > 0
        return g[keep], w[keep]


def discounted_bound(cgf_family: Callable[[float], CgfHandle], eta_family: Callable[[float], float],
                     weight: DiscountMeasure, side: str = "upper", mode: str = "inside",
                     nodes: tuple[np.ndarray, np.ndarray] | None = None) -> BoundResult:
    """Bound on the discounted expectation int E~[F_s] pi(ds).

    mode="inside" integrates the per-s optimal bound; mode="outside" optimizes a
    single c against the integrated CGF and the discounted budget. Inside is
    never looser than outside.
    """
    _check_side(side)
    s, w = weight.nodes() if nodes is None else nodes
    if not np.isfinite(w.sum()):
        raise NonIntegrable("discount weight has infinite mass")
    cgfs = [cgf_family(float(si)) for si in s]
    etas = np.array([float(eta_family(float(si))) for si in s])
    if mode == "inside":
        vals = np.array([info_bound(cg, et, side).value for cg, et in zip(cgfs, etas)])
        if not np.all(np.isfinite(vals)):
            raise Infinite("per-s bound is infinite")
        return BoundResult(float(np.dot(w, vals)), math.nan, side, INTERIOR)
    if mode != "outside":
        raise ValueError(f"unknown mode {mode!r}")
    D = float(np.dot(w, etas))
    c_max = min(cg.c_max for cg in cgfs)
    c_min = min(cg.c_min for cg in cgfs)

    def avg(c):
        total = 0.0
        for cg, wi in zip(cgfs, w):
            v = cg(c)
            if math.isinf(v):
                return INF
            total += wi * v
        return total

    return info_bound(CgfHandle(avg, c_max, all(cg.centered for cg in cgfs), c_min), D, side)


__all__ = [
    "BOUNDARY", "INTERIOR", "BoundResult", "CgfHandle", "DiscountMeasure", "RelEntBudget",
    "TiltedExpectation", "bernoulli_cgf", "discounted_bound", "event_prob_bound",
    "info_bound", "info_objective", "rel_ent_bootstrap", "stopping_time_mean_bound",
    "tilted_bound",
]
