"""Monte Carlo simulators for alternative models, used to check bound containment.

Paths are simulated in fixed-size blocks. Block ``b`` draws from
``Philox(SeedSequence(seed, spawn_key=(b,)))``, so results depend only on the
seed and config, never on how many threads ran the blocks.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

BLOCK = 8192


@dataclass(frozen=True)
class SimConfig:
    n_paths: int = 100_000
    dt: float = 1e-3
    t_max: float = 50.0
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if self.n_paths < 1 or not self.dt > 0 or not self.t_max > 0:
            raise ValueError("need n_paths >= 1, dt > 0, t_max > 0")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be an unsigned 64-bit integer")


@dataclass(frozen=True)
class McEstimate:
    mean: float
    stderr: float
    n_effective: int
    capped_fraction: float = 0.0


def block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(block,))))


def run_blocks(cfg: SimConfig, kernel: Callable[[np.random.Generator, int], np.ndarray]) -> np.ndarray:
    """Concatenate kernel(rng_b, size_b) over blocks in block order."""
    sizes = [BLOCK] * (cfg.n_paths // BLOCK)
    if cfg.n_paths % BLOCK:
        sizes.append(cfg.n_paths % BLOCK)
    jobs = [(block_rng(cfg.seed, b), n) for b, n in enumerate(sizes)]
    threads = max(1, int(cfg.threads))
    if threads == 1 or len(jobs) == 1:
        parts = [kernel(rng, n) for rng, n in jobs]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda job: kernel(*job), jobs))
    return np.concatenate(parts, axis=0)


def estimate(values: np.ndarray, capped: np.ndarray | None = None) -> McEstimate:
    values = np.asarray(values, dtype=float)
    n = values.size
    sd = float(values.std(ddof=1)) if n > 1 else math.inf
    cf = float(np.mean(capped)) if capped is not None and capped.size else 0.0
    return McEstimate(float(values.mean()), sd / math.sqrt(n), n, cf)


def ratio_estimate(num: np.ndarray, den: np.ndarray) -> McEstimate:
    """E[num]/E[den] with a delta-method standard error."""
    n = num.size
    mn, md = num.mean(), den.mean()
    if md == 0:
        return McEstimate(math.nan, math.inf, n)
    q = mn / md
    resid = (num - q * den) / md
    return McEstimate(float(q), float(resid.std(ddof=1) / math.sqrt(n)), n)


# ------------------------------------------------------------------- SDEs

def simulate_sde(drift: Callable, diffusion: Callable, x0, cfg: SimConfig,
                 stop: Callable | None = None, running: Callable | None = None,
                 terminal: Callable | None = None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Euler-Maruyama for dX = drift(t, X) dt + diffusion(t, X) dW.

    ``drift`` maps (t, X[n, d]) to [n, d]; ``diffusion`` returns [n, d, d] or a
    constant [d, d]. A path stops the first time ``stop(t, X)`` is true on the
    time grid (no bridge correction) or at t_max. ``running(t, X)`` is
    integrated by the left-point rule. Returns per-path (value, tau, capped)
    where value = integral of running + terminal(tau, X_tau).
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    d = x0.size
    n_steps = int(math.ceil(cfg.t_max / cfg.dt))

    def kernel(rng, n):
        X = np.tile(x0, (n, 1))
        acc = np.zeros(n)
        tau = np.full(n, cfg.t_max)
        alive = np.ones(n, dtype=bool)
        idx = np.arange(n)
        sq = math.sqrt(cfg.dt)
        t = 0.0
        if stop is not None:
            hit = stop(t, X)
            tau[hit] = 0.0
            alive &= ~hit
        for _ in range(n_steps):
            live = idx[alive]
            if live.size == 0:
                break
            Xl = X[live]
            if running is not None:
                acc[live] += running(t, Xl) * cfg.dt
            dW = rng.standard_normal((live.size, d)) * sq
            S = diffusion(t, Xl)
            noise = dW @ S.T if np.ndim(S) == 2 else np.einsum("nij,nj->ni", S, dW)
            Xl = Xl + drift(t, Xl) * cfg.dt + noise
            X[live] = Xl
            t += cfg.dt
            if stop is not None:
                hit = stop(t, Xl)
                tau[live[hit]] = t
                alive[live[hit]] = False
        value = acc
        if terminal is not None:
            value = acc + terminal(tau, X)
        return np.column_stack([value, tau, alive.astype(float)])

    out = run_blocks(cfg, kernel)
    return out[:, 0], out[:, 1], out[:, 2].astype(bool)


def bm_hitting_times(mu: float, a: float, beta: float, cfg: SimConfig) -> tuple[np.ndarray, np.ndarray]:
    """Hitting times of level a by (mu + beta) t + W_t; capped paths get t_max."""
    sgn = 1.0 if a > 0 else -1.0
    drift = lambda t, X: np.full_like(X, mu + beta)
    _, tau, capped = simulate_sde(drift, lambda t, X: np.eye(1), [0.0], cfg,
                                  stop=lambda t, X: sgn * X[:, 0] >= sgn * a)
    return tau, capped


def hitting_cdf_estimates(tau: np.ndarray, T_grid) -> list[McEstimate]:
    out = []
    for T in np.atleast_1d(T_grid):
        out.append(estimate((tau <= T).astype(float)))
    return out


def lq_cost(A_cl: np.ndarray, C: np.ndarray, sigma: np.ndarray, lam: float,
            beta: Callable[[float, np.ndarray], np.ndarray], cfg: SimConfig,
            Sigma0: np.ndarray | None = None) -> McEstimate:
    """Discounted cost int 1/2 x^T C x lam e^{-lam s} ds for dX = (A X + sigma beta) dt + sigma dW."""
    n = A_cl.shape[0]
    if Sigma0 is not None and np.any(Sigma0):
        raise NotImplementedError("only Sigma0 = 0 is simulated")
    drift = lambda t, X: X @ A_cl.T + beta(t, X) @ sigma.T
    running = lambda t, X: 0.5 * np.einsum("ni,ij,nj->n", X, C, X) * lam * math.exp(-lam * t)
    value, _, capped = simulate_sde(drift, lambda t, X: sigma, np.zeros(n), cfg, running=running)
    return estimate(value)


def vasicek_conditional(r: float, sigma: float, gamma: float, sigma_tilde: float, K: float,
                        L: float, X0: float, cfg: SimConfig) -> McEstimate:
    """E[(K-L) e^{-I_tau} 1{I_tau >= 0}] / P(I_tau >= 0), I_t = int_0^t r + Delta r.

    log X is advanced exactly given Delta r on each step; Delta r uses the exact
    OU transition; tau is the first grid time with X <= L.
    """
    n_steps = int(math.ceil(cfg.t_max / cfg.dt))
    dt = cfg.dt
    ed = math.exp(-gamma * dt)
    sd_ou = sigma_tilde * math.sqrt((1 - ed * ed) / (2 * gamma))
    log_L = math.log(L)

    def kernel(rng, n):
        lx = np.full(n, math.log(X0))
        dr = np.zeros(n)
        integ = np.zeros(n)
        alive = np.ones(n, dtype=bool)
        capped = np.zeros(n, dtype=bool)
        idx = np.arange(n)
        for _ in range(n_steps):
            live = idx[alive]
            if live.size == 0:
                break
            z = rng.standard_normal((2, live.size))
            d = dr[live]
            integ[live] += (r + d) * dt
            lx[live] += (r + d - 0.5 * sigma ** 2) * dt + sigma * math.sqrt(dt) * z[0]
            dr[live] = d * ed + sd_ou * z[1]
            hit = lx[live] <= log_L
            alive[live[hit]] = False
        capped[alive] = True
        ok = (~capped) & (integ >= 0)
        num = np.where(ok, (K - L) * np.exp(-integ), 0.0)
        den = ((integ >= 0) & ~capped).astype(float)
        return np.column_stack([num, den, capped.astype(float)])

    out = run_blocks(cfg, kernel)
    est = ratio_estimate(out[:, 0], out[:, 1])
    return McEstimate(est.mean, est.stderr, est.n_effective, float(out[:, 2].mean()))


def rate_drop_value(r: float, sigma: float, K: float, L: float, X0: float, dr: Callable[[float], float],
                    cfg: SimConfig) -> McEstimate:
    """E[(K-L) e^{-int_0^tau r + dr(s) ds} 1{tau < inf}] for a deterministic rate profile dr(t)."""
    n_steps = int(math.ceil(cfg.t_max / cfg.dt))
    dt = cfg.dt
    log_L = math.log(L)

    def kernel(rng, n):
        lx = np.full(n, math.log(X0))
        integ = np.zeros(n)
        alive = np.ones(n, dtype=bool)
        idx = np.arange(n)
        t = 0.0
        for _ in range(n_steps):
            live = idx[alive]
            if live.size == 0:
                break
            rate = r + dr(t)
            integ[live] += rate * dt
            lx[live] += (rate - 0.5 * sigma ** 2) * dt + sigma * math.sqrt(dt) * rng.standard_normal(live.size)
            t += dt
            hit = lx[live] <= log_L
            alive[live[hit]] = False
        val = np.where(alive, 0.0, (K - L) * np.exp(-integ))
        return np.column_stack([val, alive.astype(float)])

    out = run_blocks(cfg, kernel)
    est = estimate(out[:, 0])
    return McEstimate(est.mean, est.stderr, est.n_effective, float(out[:, 1].mean()))


def nonrev_invariant_mean(C: float, cfg: SimConfig, burn_in: float = 5.0) -> McEstimate:
    """Long-run mean of |X|^2 for dX = (-2X + b(X)) dt + sqrt(2) dW, b = C(-sin x2, cos x1).

    Paths start from N(0, I/2); each path contributes its time average over
    [burn_in, t_max].
    """
    if not 0 <= burn_in < cfg.t_max:
        raise ValueError("need 0 <= burn_in < t_max")
    n_steps = int(math.ceil(cfg.t_max / cfg.dt))
    n_burn = int(round(burn_in / cfg.dt))
    dt = cfg.dt
    sq = math.sqrt(2 * dt)

    def kernel(rng, n):
        x = rng.standard_normal((n, 2)) * math.sqrt(0.5)
        acc = np.zeros(n)
        for k in range(n_steps):
            b = C * np.column_stack([-np.sin(x[:, 1]), np.cos(x[:, 0])])
            x = x + (-2.0 * x + b) * dt + sq * rng.standard_normal((n, 2))
            if k >= n_burn:
                acc += np.einsum("ij,ij->i", x, x)
        return acc / (n_steps - n_burn)

    return estimate(run_blocks(cfg, kernel))


# ---------------------------------------------------- jump processes

def sample_phase_type(pt, cfg: SimConfig) -> np.ndarray:
    """Absorption times of the CTMC behind PH(nu, T)."""
    k = pt.nu.size
    rates = -np.diag(pt.T)
    # per-state jump law over [phase 0..k-1, absorbed]
    P = np.zeros((k, k + 1))
    P[:, :k] = pt.T / rates[:, None]
    P[np.arange(k), np.arange(k)] = 0.0
    P[:, k] = pt.exit / rates
    cum = np.cumsum(P, axis=1)
    cum[:, -1] = 1.0

    def kernel(rng, n):
        state = rng.choice(k, size=n, p=pt.nu)
        t = np.zeros(n)
        alive = np.ones(n, dtype=bool)
        while alive.any():
            live = np.nonzero(alive)[0]
            s = state[live]
            t[live] += rng.exponential(1.0 / rates[s])
            u = rng.random(live.size)
            nxt = (u[:, None] > cum[s]).sum(axis=1)
            done = nxt == k
            alive[live[done]] = False
            state[live[~done]] = nxt[~done]
        return t

    return run_blocks(cfg, kernel)


def simulate_queue(alpha: float, rho: float, waiting: Callable[[np.ndarray, np.random.Generator], np.ndarray],
                   cfg: SimConfig, x0_poisson: bool = True) -> McEstimate:
    """Time-average queue length on [0, t_max] for a semi-Markov M/M/inf-type queue.

    ``waiting(x, rng)`` draws one sojourn time per entry of the state array x;
    the jump chain moves up with probability alpha/(alpha + rho x).
    """
    def kernel(rng, n):
        x = rng.poisson(alpha / rho, size=n) if x0_poisson else np.zeros(n, dtype=int)
        x = x.astype(np.int64)
        t = np.zeros(n)
        area = np.zeros(n)
        alive = np.ones(n, dtype=bool)
        while alive.any():
            live = np.nonzero(alive)[0]
            xs = x[live]
            lam = alpha + rho * xs
            stuck = lam == 0
            w = np.full(live.size, np.inf)
            if (~stuck).any():
                w[~stuck] = waiting(xs[~stuck], rng)
            step = np.minimum(w, cfg.t_max - t[live])
            area[live] += xs * step
            t[live] += step
            finished = t[live] >= cfg.t_max
            alive[live[finished]] = False
            mv = live[~finished]
            if mv.size:
                xm = x[mv]
                up = rng.random(mv.size) < alpha / (alpha + rho * xm)
                x[mv] = np.where(up, xm + 1, xm - 1)
        return area / cfg.t_max

    return estimate(run_blocks(cfg, kernel))


def exponential_waiting(alpha: float, rho: float):
    return lambda x, rng: rng.exponential(1.0 / (alpha + rho * x))


def convolution_waiting(alpha: float, rho: float, eps: float):
    """Exp(lambda(x)) + Exp(lambda(x)/eps)."""
    def draw(x, rng):
        lam = alpha + rho * x
        return rng.exponential(1.0 / lam) + rng.exponential(eps / lam)
    return draw


# ------------------------------------------------------------- verdicts

@dataclass(frozen=True)
class Validation:
    status: str
    lower: float
    upper: float
    mean: float
    stderr: float
    capped_fraction: float
    note: str = ""


def mc_validate(interval: tuple[float, float], est: McEstimate, allowance: float = 0.0) -> Validation:
    """PASS when the estimate is inside, PASS-boundary when only its 3-sigma band overlaps.

    ``allowance`` widens the band by a known discretization bias bound
    (e.g. grid-crossing delay of hitting times); it is reported in the note.
    """
    lo, hi = interval
    if not math.isfinite(est.stderr):
        raise ValueError("stderr must be finite")
    if allowance < 0:
        raise ValueError("allowance must be nonnegative")
    a = est.mean - 3 * est.stderr - allowance
    b = est.mean + 3 * est.stderr + allowance
    if lo <= est.mean <= hi:
        status, note = "PASS", "interior"
    elif b >= lo and a <= hi:
        status = "PASS-boundary"
        note = "above upper within 3 sigma" if est.mean > hi else "below lower within 3 sigma"
    else:
        status = "FAIL"
        note = "above upper" if est.mean > hi else "below lower"
    if allowance > 0:
        note += f"; discretization allowance {allowance:.3e}"
    if est.capped_fraction > 1e-3:
        note += f"; capped fraction {est.capped_fraction:.2e}"
    return Validation(status, lo, hi, est.mean, est.stderr, est.capped_fraction, note)


def default_threads() -> int:
    env = os.environ.get("PATHUQ_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1
