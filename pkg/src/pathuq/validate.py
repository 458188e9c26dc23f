"""Monte Carlo containment checks: simulate an admissible alternative model and test
that its QoI falls inside the computed interval."""
from __future__ import annotations

import math
from dataclasses import asdict, replace

import numpy as np

from . import mc, scenarios
from .cgf import DriftedBMHittingLaw
from .linear_gaussian import LqProblem, control_cost_bound, solve_riccati

# first-passage delay of a grid-monitored Brownian path, in units of sqrt(dt):
# E[overshoot] of a Gaussian random walk, -zeta(1/2)/sqrt(2 pi)
GRID_SHIFT = 0.5826

DEFAULTS = {
    "bm-cdf": mc.SimConfig(n_paths=100_000, dt=1e-3, t_max=10.0),
    "bm-mean": mc.SimConfig(n_paths=100_000, dt=1e-3, t_max=60.0),
    "nonrev": mc.SimConfig(n_paths=20_000, dt=5e-3, t_max=10.0),
    "lq-control": mc.SimConfig(n_paths=20_000, dt=5e-3, t_max=30.0),
    "queue": mc.SimConfig(n_paths=4_000, dt=1.0, t_max=200.0),
    "vasicek": mc.SimConfig(n_paths=100_000, dt=5e-4, t_max=30.0),
    "rate-drop": mc.SimConfig(n_paths=100_000, dt=5e-4, t_max=30.0),
}


def _check(name: str, interval, est: mc.McEstimate, allowance: float = 0.0, **extra) -> dict:
    v = mc.mc_validate(interval, est, allowance)
    out = {"check": name, **asdict(v), "allowance": allowance}
    out.update(extra)
    return out


def _cfg(scenario: str, cfg: mc.SimConfig | None, **over) -> mc.SimConfig:
    base = cfg if cfg is not None else DEFAULTS[scenario]
    return replace(base, **over) if over else base


def bm_cdf(mu=1.0, a=2.0, alpha=0.2, T_grid=scenarios.FIG1_T_GRID, cfg=None, table=None) -> list[dict]:
    """Constant drifts mu +- alpha against the goal-oriented interval at every T."""
    T_grid = np.asarray(T_grid, dtype=float)
    cfg = _cfg("bm-cdf", cfg, t_max=float(T_grid.max()))
    table = table or scenarios.bm_cdf_bounds(mu, a, alpha, T_grid)
    shift = GRID_SHIFT * math.sqrt(cfg.dt) * math.copysign(1.0, a)
    checks = []
    for beta in (alpha, -alpha):
        tau, _ = mc.bm_hitting_times(mu, a, beta, cfg)
        exact, delayed = DriftedBMHittingLaw(a, mu + beta), DriftedBMHittingLaw(a + shift, mu + beta)
        for row, T in zip(table.rows, T_grid):
            est = mc.estimate((tau <= T).astype(float))
            allow = abs(float(exact.cdf(T)) - float(delayed.cdf(T)))
            checks.append(_check(f"beta={beta:+g} T={T:.6g}", (row.lower, row.upper), est, allow))
    return checks


def bm_mean(mu=1.0, a=2.0, alpha=0.2, cfg=None, corrupt_eta: float = 1.0) -> list[dict]:
    """Constant drifts +-alpha (the extremal models) and zero drift.

    ``corrupt_eta`` < 1 computes the bounds with a shrunken budget while still
    simulating the full perturbation: a negative control that must FAIL.
    """
    cfg = _cfg("bm-mean", cfg)
    row = scenarios.bm_mean_bounds(mu, a, alpha * math.sqrt(corrupt_eta)).rows[0]
    checks = []
    sgn = math.copysign(1.0, mu)
    for beta in (alpha, -alpha, 0.0):
        tau, capped = mc.bm_hitting_times(mu, a, sgn * beta, cfg)
        est = mc.estimate(tau, capped)
        allow = GRID_SHIFT * math.sqrt(cfg.dt) / abs(mu + sgn * beta)
        checks.append(_check(f"beta={beta:+g}", (row.lower, row.upper), est, allow))
    return checks


def nonrev(C=1.0, cfg=None) -> list[dict]:
    cfg = _cfg("nonrev", cfg)
    row = scenarios.nonrev_bounds([C]).rows[0]
    est = mc.nonrev_invariant_mean(C, cfg)
    return [_check(f"C={C:g}", (row.lower, row.upper), est)]


def lq_control(kappa=2.0, alpha=0.5, cfg=None, corrupt_eta: float = 1.0) -> list[dict]:
    """Sinusoidal drift alpha sin(x1) e1; ``corrupt_eta`` < 1 shrinks the budget (negative control)."""
    cfg = _cfg("lq-control", cfg)
    prob = LqProblem.example(kappa)
    sol = solve_riccati(prob)
    res = control_cost_bound(prob, alpha * math.sqrt(corrupt_eta))
    C = prob.Q + sol.K_gain.T @ prob.R @ sol.K_gain
    pert = lambda t, X: np.column_stack([alpha * np.sin(X[:, 0]), np.zeros(len(X))])
    est = mc.lq_cost(sol.A_cl, C, prob.sigma, prob.lam, pert, cfg)
    base = mc.lq_cost(sol.A_cl, C, prob.sigma, prob.lam, lambda t, X: np.zeros_like(X), cfg)
    tag = "" if corrupt_eta == 1.0 else f" (eta x{corrupt_eta:g})"
    return [_check(f"kappa={kappa:g} sinusoidal{tag}", (res.lower, res.upper), est),
            _check(f"kappa={kappa:g} baseline", (res.baseline_exact, res.baseline_exact), base)]


def queue(alpha=1.0, rho=1.0, epsilon=0.05, cfg=None) -> list[dict]:
    """Convolution waiting times (gamma = lambda/epsilon) against the relative-error interval."""
    cfg = _cfg("queue", cfg)
    row = scenarios.queue_bounds(alpha, rho, epsilon, [epsilon]).rows[0]
    mean = alpha / rho
    checks = []
    for name, wait, interval in (
        ("convolution", mc.convolution_waiting(alpha, rho, epsilon), (row.lower, row.upper)),
        ("baseline", mc.exponential_waiting(alpha, rho), (0.0, 0.0)),
    ):
        est = mc.simulate_queue(alpha, rho, wait, cfg)
        rel = mc.McEstimate(est.mean / mean - 1.0, est.stderr / mean, est.n_effective)
        checks.append(_check(f"epsilon={epsilon:g} {name}", interval, rel))
    return checks


def _grid_allowance(value: float, rate: float, sigma: float, X0: float, L: float, dt: float) -> float:
    """Value change when the barrier moves GRID_SHIFT sqrt(dt) further in Brownian units."""
    mu = rate / sigma - sigma / 2
    k = math.sqrt(mu * mu + 2 * rate) - abs(mu)
    return value * -math.expm1(-k * GRID_SHIFT * math.sqrt(dt))


def vasicek(sigma_tilde=1.0, r=1.25, sigma=4.0, gamma=2.0, K=1.0, L=0.5, X0=2.0, cfg=None) -> list[dict]:
    cfg = _cfg("vasicek", cfg)
    pt = scenarios.vasicek_point(r, sigma, gamma, sigma_tilde, K, L, X0)
    est = mc.vasicek_conditional(r, sigma, gamma, sigma_tilde, K, L, X0, cfg)
    allow = _grid_allowance(est.mean, r, sigma, X0, L, cfg.dt)
    return [_check(f"sigma_tilde={sigma_tilde:g}", (pt.lower, pt.upper), est, allow)]


def rate_drop(t_f=1.0, r=2.0, sigma=3.0, K=1.0, L=0.5, X0=2.0, dr_plus=0.3, cfg=None) -> list[dict]:
    """Rate r + dr_plus until t_f then r: an admissible profile inside the envelope."""
    cfg = _cfg("rate-drop", cfg)
    lo, up = scenarios.rate_drop_point(r, sigma, K, L, X0, dr_plus, t_f)
    est = mc.rate_drop_value(r, sigma, K, L, X0, lambda t: dr_plus if t < t_f else 0.0, cfg)
    allow = _grid_allowance(est.mean, r, sigma, X0, L, cfg.dt)
    return [_check(f"t_f={t_f:g}", (lo, up), est, allow)]


RUNNERS = {
    "bm-cdf": bm_cdf,
    "bm-mean": bm_mean,
    "nonrev": nonrev,
    "lq-control": lq_control,
    "queue": queue,
    "vasicek": vasicek,
    "rate-drop": rate_drop,
}


def any_fail(checks: list[dict]) -> bool:
    return any(c["status"] == "FAIL" for c in checks)
