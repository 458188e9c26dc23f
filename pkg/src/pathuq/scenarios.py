"""End-to-end examples: each function returns a CurveTable over a sweep grid."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.special import logsumexp, ndtr

from .bounds import (CgfHandle, TiltedExpectation, event_prob_bound, info_bound,
                     rel_ent_bootstrap, stopping_time_mean_bound, tilted_bound)
from .cgf import (DriftedBMHittingLaw, OUSquaredIntegral, QueueCgfLimit, hitting_cgf,
                  integrated_ou_variance, log_ou_squared_cgf, queue_cgf_limit)
from .errors import (AssumptionViolated, BranchExceeded, ConfigError, Infinite, SignMismatch)
from .linear_gaussian import LqProblem, control_cost_bound
from .numerics import gauss_hermite_nd, minimize_scalar
from .relent import SemiMarkovEnvelope, convolution_envelope_rate, girsanov_sde_budget, relative_error_bounds
from .tables import CurveTable

INF = math.inf

# default sweep grids (the figures do not tabulate their grids)
FIG1_T_GRID = tuple(np.linspace(0.2, 10.0, 50))
FIG2_C_GRID = tuple(np.linspace(0.0, 2.0, 21))
FIG3_KAPPA_GRID = tuple(np.linspace(1.0, 6.0, 11))
FIG4_EPS_GRID = tuple(np.linspace(0.01, 0.5, 50))
FIG5_LEFT_GRID = tuple(np.linspace(1e-3, 3.0, 16))
FIG5_RIGHT_GRID = tuple(np.linspace(3.5, 8.0, 10))
APPI_TF_GRID = tuple(np.linspace(0.0, 3.0, 31))


def _pmap(fn: Callable, items, threads: int = 1) -> list:
    items = list(items)
    if threads <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _clamp01(x: float) -> float:
    return min(max(x, 0.0), 1.0)


# ------------------------------------------------------- hitting-time CDF

def bm_cdf_bounds(mu: float, a: float, alpha: float, T_grid=FIG1_T_GRID) -> CurveTable:
    """Goal-oriented bounds on P~(tau <= T) with non-goal references.

    Goal: penalty alpha^2 (tau ^ T)/2 inside the tilted expectation.
    Non-goal: scalar budget alpha^2 T/2 with the plain indicator CGF.
    Both use the same quadrature nodes so their comparison is exact node by node.
    """
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    law = DriftedBMHittingLaw(a, mu)
    if mu == 0 or math.copysign(1.0, a) != math.copysign(1.0, mu):
        raise SignMismatch("bm_cdf_bounds needs sign(a) = sign(mu)")
    T_grid = np.asarray(T_grid, dtype=float)
    t, w = law.nodes(T_grid)
    table = CurveTable("bm-cdf", "T", meta={"mu": mu, "a": a, "alpha": alpha})
    for T in T_grid:
        ind = (t <= T).astype(float)
        goal = TiltedExpectation(w, ind, 0.5 * alpha ** 2 * np.minimum(t, T))
        plain = TiltedExpectation(w, ind, 0.0)
        cgf = CgfHandle(plain.log_mgf)
        eta = 0.5 * alpha ** 2 * T
        ng_up = info_bound(cgf, eta, "upper")
        ng_lo = info_bound(cgf, eta, "lower")
        up = tilted_bound(goal, "upper").value
        lo = tilted_bound(goal, "lower").value
        # the non-goal optimizers are admissible tilts for the goal objective too
        if ng_up.optimizer > 0 and math.isfinite(ng_up.optimizer):
            up = min(up, goal.log_mgf(ng_up.optimizer) / ng_up.optimizer)
        if ng_lo.optimizer > 0 and math.isfinite(ng_lo.optimizer):
            lo = max(lo, -goal.log_mgf(-ng_lo.optimizer) / ng_lo.optimizer)
        table.append(float(T), float(law.cdf(T)), _clamp01(lo), _clamp01(up),
                     _clamp01(ng_lo.value), _clamp01(ng_up.value))
    return table


# ------------------------------------------------------ hitting-time mean

def bm_mean_bounds(mu: float, a: float, alpha: float) -> CurveTable:
    """Bounds on E~[tau] for drift perturbations |beta| <= alpha, with a/(mu -+ alpha) references."""
    if mu == 0 or math.copysign(1.0, a) != math.copysign(1.0, mu):
        raise SignMismatch("bm_mean_bounds needs sign(a) = sign(mu)")
    if not 0 <= alpha < abs(mu):
        raise ValueError("need 0 <= alpha < |mu|")
    law = DriftedBMHittingLaw(a, mu)
    cgf = CgfHandle(lambda c: hitting_cgf(law, c), c_max=0.5 * mu * mu)
    lo, up = stopping_time_mean_bound(cgf, girsanov_sde_budget(alpha))
    A, M = abs(a), abs(mu)
    table = CurveTable("bm-mean", None, meta={"mu": mu, "a": a, "alpha": alpha,
                                               "c_star": lo.optimizer, "lambda_star": up.optimizer})
    table.append(None, A / M, lo.value, up.value, A / (M + alpha), A / (M - alpha))
    return table


# ------------------------------------------------- non-reversible SDE

# Gauss-Hermite resolves cos(2x) under N(0, var) only while var is moderate;
# the tilt domain is cut at var = 8, which can only loosen the upper bound
NONREV_C_MAX = 1.0 - 0.5 / 8.0


def _hermite_order(var: float) -> int:
    # fixed order: the 1-D sums are cheap and stable up to 300 nodes
    return 300


def nonrev_log_mgf(C: float, c: float) -> float:
    """log int exp(c |x|^2 + |b(x)|^2/4) dN(0, I/2) for b = C(-sin x2, cos x1).

    exp(c |x|^2) is absorbed into the Gaussian (variance 1/(2(1-c)) per axis,
    factor 1/(1-c) in d=2). The remaining integrand separates across axes, so
    each axis is one Gauss-Hermite sum.
    """
    if c >= NONREV_C_MAX:
        return INF
    var = 0.5 / (1.0 - c)
    k = 0.25 * C * C
    n = _hermite_order(var)
    # normalized by the rule's total weight so that k = 0 gives exactly 0
    one = gauss_hermite_nd(lambda x: np.ones(len(x)), [0.0], [[var]], n)
    e1 = gauss_hermite_nd(lambda x: np.exp(k * np.cos(x[:, 0]) ** 2), [0.0], [[var]], n)
    e2 = gauss_hermite_nd(lambda x: np.exp(k * np.sin(x[:, 0]) ** 2), [0.0], [[var]], n)
    return -math.log1p(-c) + math.log(e1 / one) + math.log(e2 / one)


def nonrev_bounds(C_grid=FIG2_C_GRID, beta_ls: float = 1.0) -> CurveTable:
    """Bounds on the invariant mean of |x|^2 under the non-reversible perturbation.

    References use the rate bound sup|b|^2/4 = C^2/2 with the log-Sobolev CGF
    bound, whose Gaussian integral is -log(1 -+ c).
    """
    if beta_ls != 1.0:
        raise ValueError("only the unit log-Sobolev constant of the N(0, I/2) baseline is supported")
    table = CurveTable("nonrev", "C", meta={"beta_ls": beta_ls})
    for C in C_grid:
        if C < 0:
            raise ValueError("C must be nonnegative")
        new = CgfHandle(lambda c, C=C: nonrev_log_mgf(C, c), c_max=NONREV_C_MAX)
        ref = CgfHandle(lambda c: -math.log1p(-c), c_max=1.0)
        H = 0.5 * C * C
        up = info_bound(new, 0.0, "upper").value
        lo = info_bound(new, 0.0, "lower").value
        table.append(float(C), 1.0, lo, up, info_bound(ref, H, "lower").value,
                     info_bound(ref, H, "upper").value)
    return table


# -------------------------------------------------------------- control

def lq_bounds(kappa_grid=FIG3_KAPPA_GRID, alpha: float = 0.5, threads: int = 1) -> CurveTable:
    def one(k):
        return control_cost_bound(LqProblem.example(float(k)), alpha)

    table = CurveTable("lq-control", "kappa", meta={"alpha": alpha, "riccati_residual": []})
    for k, res in zip(kappa_grid, _pmap(one, kappa_grid, threads)):
        table.append(float(k), res.baseline_exact, res.lower, res.upper)
        table.meta["riccati_residual"].append(res.riccati.residual)
    return table


# ---------------------------------------------------------------- queue

def queue_relative_error(alpha: float, rho: float, H: float) -> tuple[float, float]:
    """Numeric optimization of the long-time bound, as relative error of the mean alpha/rho."""
    cgf = CgfHandle(lambda c: queue_cgf_limit(QueueCgfLimit(alpha, rho), c), c_max=rho)
    base = alpha / rho
    return (max(info_bound(cgf, H, "lower").value / base, -1.0),
            info_bound(cgf, H, "upper").value / base)


def queue_bounds(alpha: float, rho: float, delta_grid, epsilon_grid) -> CurveTable:
    """Relative-error interval for the long-run mean queue length, swept over epsilon.

    ``delta_grid`` is a scalar or a sequence paired with ``epsilon_grid``.
    Lower/upper come from the numeric optimization; the references are the
    closed forms in r = H/alpha.
    """
    eps = np.atleast_1d(np.asarray(epsilon_grid, dtype=float))
    dels = np.broadcast_to(np.atleast_1d(np.asarray(delta_grid, dtype=float)), eps.shape)
    table = CurveTable("queue", "epsilon", meta={"alpha": alpha, "rho": rho, "delta": dels.tolist(),
                                                 "rate": []})
    for d, e in zip(dels, eps):
        r = convolution_envelope_rate(SemiMarkovEnvelope(float(d), float(e), alpha, rho))
        lo, up = queue_relative_error(alpha, rho, alpha * r)
        ref_lo, ref_up = relative_error_bounds(r)
        table.append(float(e), 0.0, lo, up, ref_lo, ref_up)
        table.meta["rate"].append(r)
    return table


# -------------------------------------------------------------- Vasicek

@dataclass(frozen=True)
class VasicekPoint:
    lower: float
    upper: float
    baseline: float
    D: float
    p0: float
    K_minus: float
    K_plus: float


def _option_law(r, sigma, X0, L):
    a = -math.log(X0 / L) / sigma
    mu = r / sigma - sigma / 2
    if mu == 0 or math.copysign(1.0, a) != math.copysign(1.0, mu):
        raise SignMismatch("the hitting time of L must be a.s. finite: need r < sigma^2/2")
    return DriftedBMHittingLaw(a, mu)


def option_baseline(r: float, sigma: float, K: float, L: float, X0: float) -> float:
    return (K - L) * (L / X0) ** (2 * r / sigma ** 2)


def vasicek_point(r: float, sigma: float, gamma: float, sigma_tilde: float, K: float, L: float,
                  X0: float, strict: bool = True, panels: int = 160, order: int = 16,
                  inner: int = 200) -> VasicekPoint:
    """Bounds on the conditional option value under an OU rate perturbation."""
    if not 0 < L < min(K, X0):
        raise ValueError("need 0 < L < min(K, X0)")
    if strict and not r > sigma_tilde ** 2 / (2 * gamma ** 2):
        raise AssumptionViolated(f"r={r} <= sigma_tilde^2/(2 gamma^2)={sigma_tilde ** 2 / (2 * gamma ** 2)}")
    law = _option_law(r, sigma, X0, L)
    ou = OUSquaredIntegral(gamma, sigma_tilde, sigma)
    if ou.lam_branch <= 1.0:
        raise BranchExceeded(f"branch point sigma^2 gamma^2/sigma_tilde^2={ou.lam_branch} <= 1")
    # sign(a) = sign(mu) here, so the law has no atom
    t, w = law.nodes(panels=panels, order=order)
    logw = np.log(w)
    mu2 = law.mu ** 2

    def lam_G(lam):
        if lam >= ou.lam_branch:
            return INF
        # the integrand grows like exp(gamma t (1 - sqrt w)/2) against exp(-mu^2 t/2)
        if gamma * (1 - math.sqrt(1 - lam / ou.lam_branch)) >= mu2:
            return INF
        return float(logsumexp(logw + log_ou_squared_cgf(ou, t, lam)))

    D = rel_ent_bootstrap(CgfHandle(lam_G, c_max=ou.lam_branch))

    sd = np.sqrt(integrated_ou_variance(ou, t))
    m = r * t
    p0 = float(np.dot(w, ndtr(m / sd)))
    # inner z-integral over z >= 0 by Gauss-Legendre around the Gaussian bulk
    x, gw = np.polynomial.legendre.leggauss(inner)
    zlo = np.maximum(0.0, m - 12 * sd)
    zhi = np.maximum(m + 12 * sd, zlo + 1e-300)
    half = 0.5 * (zhi - zlo)
    z = zlo[:, None] + half[:, None] * (x[None, :] + 1.0)
    logphi = -0.5 * ((z - m[:, None]) / sd[:, None]) ** 2 - np.log(sd[:, None] * math.sqrt(2 * math.pi))
    log_zw = logw[:, None] + np.log(half[:, None] * gw[None, :]) + logphi
    pay = (K - L) * np.exp(-z)
    log_neg = logw + np.log(np.maximum(ndtr(-m / sd), 1e-300))
    log_neg = np.where(ndtr(-m / sd) > 0, log_neg, -INF)

    def lam_F(c):
        return float(logsumexp(np.concatenate([(log_zw + c * pay).ravel(), log_neg,
                                               ])))

    cgf = CgfHandle(lam_F)
    U = info_bound(cgf, D, "upper").value
    Lb = info_bound(cgf, D, "lower").value
    Km, Kp = event_prob_bound(min(p0, 1.0), D)
    upper = U / Km if Km > 0 else INF
    lower = max(Lb, 0.0) / Kp
    return VasicekPoint(lower, upper, option_baseline(r, sigma, K, L, X0), D, p0, Km, Kp)


def vasicek_bounds(r: float = 1.25, sigma: float | Sequence[float] = 4.0, gamma: float = 2.0,
                   sigma_tilde: float | Sequence[float] = FIG5_LEFT_GRID, K: float = 1.0,
                   L: float = 0.5, X0: float = 2.0, strict: bool = True,
                   threads: int = 1) -> CurveTable:
    """Sweep either sigma_tilde (sigma scalar) or sigma (sigma_tilde scalar)."""
    s_arr, st_arr = np.atleast_1d(sigma), np.atleast_1d(sigma_tilde)
    if s_arr.size > 1 and st_arr.size > 1:
        raise ConfigError("sweep either sigma or sigma_tilde, not both")
    name = "sigma" if s_arr.size > 1 else "sigma_tilde"
    grid = s_arr if name == "sigma" else st_arr
    pairs = [(float(g), float(st_arr[0])) if name == "sigma" else (float(s_arr[0]), float(g)) for g in grid]
    pts = _pmap(lambda p: vasicek_point(r, p[0], gamma, p[1], K, L, X0, strict), pairs, threads)
    table = CurveTable("vasicek", name, meta={"r": r, "gamma": gamma, "K": K, "L": L, "X0": X0,
                                              "strict": strict, "D": [p.D for p in pts],
                                              "p0": [p.p0 for p in pts]})
    for g, (_, st), p in zip(grid, pairs, pts):
        status = "ok" if r > st ** 2 / (2 * gamma ** 2) else "assumption-violated"
        table.append(float(g), p.baseline, p.lower, p.upper, status=status)
    return table


# ------------------------------------------------------------ rate drop

def _rate_drop_tilted(r, sigma, K, L, X0, dr_plus, tf, kappa, panels=200, order=16):
    """(upper, lower) tilted expectations with baseline rate kappa, or None if divergent."""
    law = _option_law(kappa, sigma, X0, L)
    h1 = max(r - kappa + dr_plus, kappa - r, 0.0)
    h2 = abs(r - kappa)
    decay = law.mu ** 2 - h2 ** 2 / sigma ** 2
    if decay <= 0:
        return None
    scale = max(abs(law.a / law.mu), 2.0 / decay)
    if law.atom > 0 and h2 > 0:
        return None
    t, w = law.nodes((tf,) if tf > 0 else (), scale=scale, panels=panels, order=order)
    fin = np.isfinite(t)
    tt = np.where(fin, t, 0.0)
    if h2 > 0:
        # node-set check against the closed form E[exp(h2^2 tau/(2 sigma^2))]
        g = h2 ** 2 / (2 * sigma ** 2)
        exact = math.exp(law.a * law.mu - abs(law.a) * math.sqrt(law.mu ** 2 - 2 * g))
        approx = float(np.dot(w[fin], np.exp(g * tt[fin])))
        if abs(approx / exact - 1.0) > 1e-8:
            return None
    pen = (h1 ** 2 * np.minimum(t, tf) + h2 ** 2 * np.where(fin, np.maximum(tt - tf, 0.0), 0.0)) / (2 * sigma ** 2)
    f_up = np.where(fin, (K - L) * np.exp(-r * tt), 0.0)
    f_lo = np.where(fin, (K - L) * np.exp(-r * tt - dr_plus * np.minimum(tt, tf)), 0.0)
    return TiltedExpectation(w, f_up, pen), TiltedExpectation(w, f_lo, pen)


def rate_drop_point(r, sigma, K, L, X0, dr_plus, tf, kappa_optimize=False) -> tuple[float, float]:
    def side(kappa, which):
        te = _rate_drop_tilted(r, sigma, K, L, X0, dr_plus, tf, kappa)
        if te is None:
            return INF if which == "upper" else -INF
        try:
            return tilted_bound(te[0] if which == "upper" else te[1], which).value
        except Infinite:
            return INF if which == "upper" else -INF

    up, lo = side(r, "upper"), side(r, "lower")
    if kappa_optimize:
        k_lo, k_hi = 0.2 * r, 2.0 * r
        best_up = minimize_scalar(lambda k: side(k, "upper"), 1e-6, lo=k_lo, hi=k_hi, x0=r)
        best_lo = minimize_scalar(lambda k: -side(k, "lower"), 1e-6, lo=k_lo, hi=k_hi, x0=r)
        up = min(up, best_up.fun)
        lo = max(lo, -best_lo.fun)
    return lo, up


def rate_drop_bounds(r: float = 2.0, sigma: float = 3.0, K: float = 1.0, L: float = 0.5,
                     X0: float = 2.0, dr_plus: float = 0.3, tf_grid=APPI_TF_GRID,
                     kappa_optimize: bool = False, threads: int = 1) -> CurveTable:
    """Goal-oriented bounds for a rate that drops from r + dr_plus to r by time t_f.

    References are the comparison-principle bounds for 0 <= Delta r <= dr_plus.
    """
    if not r > 0:
        raise ValueError("need r + Delta r_- > 0 with Delta r_- = 0")
    if dr_plus < 0:
        raise ValueError("dr_plus must be nonnegative")
    base = option_baseline(r, sigma, K, L, X0)
    ref_lo = option_baseline(r + dr_plus, sigma, K, L, X0)
    pts = _pmap(lambda tf: rate_drop_point(r, sigma, K, L, X0, dr_plus, float(tf), kappa_optimize),
                tf_grid, threads)
    table = CurveTable("rate-drop", "t_f", meta={"r": r, "sigma": sigma, "K": K, "L": L, "X0": X0,
                                                 "dr_plus": dr_plus, "kappa_optimize": kappa_optimize})
    for tf, (lo, up) in zip(tf_grid, pts):
        table.append(float(tf), base, lo, up, ref_lo, base)
    return table
