"""Relative-entropy budgets and rates."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import expm
from scipy.special import gammaln, xlogy

from .bounds import RelEntBudget
from .errors import (AbsContViolation, InvalidPhaseType, NonErgodic, NonIntegrable,
                     StateSpaceTooLarge)
from .numerics import QuadratureSpec, integrate, integrate_semi_infinite

MAX_ENUM_STATES = 6
MAX_ENUM_HORIZON = 12
MAX_ENUM_PATHS = 4_000_000


def girsanov_sde_budget(beta_sup: float) -> RelEntBudget:
    """R <= (beta_sup^2/2) E~[tau ^ T] for drift perturbations bounded by beta_sup."""
    if not (math.isfinite(beta_sup) and beta_sup >= 0):
        raise ValueError("beta_sup must be finite and nonnegative")
    return RelEntBudget(0.0, 0.5 * beta_sup ** 2, "affine_in_stopped_time")


# ------------------------------------------------------------ phase-type laws

@dataclass(frozen=True)
class PhaseType:
    nu: np.ndarray
    T: np.ndarray

    def __post_init__(self):
        nu = np.atleast_1d(np.asarray(self.nu, dtype=float))
        T = np.atleast_2d(np.asarray(self.T, dtype=float))
        k = nu.shape[0]
        if T.shape != (k, k):
            raise InvalidPhaseType("T must be k x k with k = len(nu)")
        if np.any(nu < 0) or abs(nu.sum() - 1.0) > 1e-12:
            raise InvalidPhaseType("nu must be a probability vector")
        if np.any(np.diag(T) >= 0):
            raise InvalidPhaseType("diagonal of T must be negative")
        off = T - np.diag(np.diag(T))
        if np.any(off < 0):
            raise InvalidPhaseType("off-diagonal entries of T must be nonnegative")
        exit_rates = -T.sum(axis=1)
        if np.any(exit_rates < -1e-12 * np.abs(T).max()):
            raise InvalidPhaseType("-T 1 must be entrywise nonnegative")
        try:
            mean = float(-nu @ np.linalg.solve(T, np.ones(k)))
        except np.linalg.LinAlgError as exc:
            raise InvalidPhaseType("T is singular: absorption is not certain") from exc
        object.__setattr__(self, "nu", nu)
        object.__setattr__(self, "T", T)
        object.__setattr__(self, "exit", np.clip(exit_rates, 0.0, None))
        object.__setattr__(self, "mean", mean)


def phase_type_eval(pt: PhaseType, t: float) -> tuple[float, float, float]:
    """(density, cdf, mean) of PH(nu, T) at t."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    row = pt.nu @ expm(pt.T * t)
    return float(row @ pt.exit), float(1.0 - row.sum()), pt.mean


def convolution_phase_type(lam: float, gamma: float) -> PhaseType:
    """Exp(lam) followed by Exp(gamma)."""
    return PhaseType([1.0, 0.0], [[-lam, lam], [0.0, -gamma]])


# ------------------------------------------------------- semi-Markov queues

def mm_inf_jump_stationary(alpha: float, rho: float, tail: float = 1e-12) -> np.ndarray:
    """Stationary law of the M/M/inf jump chain, truncated once the mass exceeds 1 - tail."""
    if not (alpha > 0 and rho > 0):
        raise ValueError("alpha and rho must be positive")
    m = alpha / rho
    out = []
    total = 0.0
    x = 0
    while True:
        logp = math.log(alpha + rho * x) + x * math.log(m) - m - math.log(2 * alpha) - gammaln(x + 1)
        p = math.exp(logp)
        out.append(p)
        total += p
        if x > m and 1.0 - total < tail:
            break
        x += 1
        if x > 100_000:
            raise NonErgodic("stationary mass does not accumulate")
    return np.array(out)


def semi_markov_rate(pi: Sequence[float], base_rates: Sequence[float],
                     alt_density: Callable[[int, float], float],
                     alt_mean: Callable[[int], float],
                     spec: QuadratureSpec | None = None) -> float:
    """Entropy rate of a same-jump-chain semi-Markov perturbation of a CTMC.

    H = E_pi[R(H~_x || Exp(lambda(x)))] / sum_x pi(x) E[H~_x]. States are
    visited in order until the remaining stationary mass drops below 1e-14.
    """
    spec = spec or QuadratureSpec(rel_tol=1e-9)
    pi = np.asarray(pi, dtype=float)
    lam = np.asarray(base_rates, dtype=float)
    num = 0.0
    m_tilde = 0.0
    remaining = pi.sum()
    for x in range(pi.shape[0]):
        if remaining < 1e-14:
            break
        remaining -= pi[x]
        if pi[x] == 0:
            continue
        lx = lam[x]

        def integrand(t, x=x, lx=lx):
            h = alt_density(x, t)
            if h <= 0:
                return 0.0
            return h * (math.log(h) - math.log(lx) + lx * t)

        num += pi[x] * integrate_semi_infinite(integrand, spec, scale=1.0 / lx)
        mx = alt_mean(x)
        if not math.isfinite(mx):
            raise NonErgodic(f"mean sojourn time at state {x} is infinite")
        m_tilde += pi[x] * mx
    if not (math.isfinite(m_tilde) and m_tilde > 0):
        raise NonErgodic("mean sojourn time under pi is not finite and positive")
    return num / m_tilde


@dataclass(frozen=True)
class SemiMarkovEnvelope:
    """Perturbations with delta <= lambda(x)/gamma(x) <= epsilon."""

    delta: float
    epsilon: float
    alpha: float = 1.0
    rho: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.delta <= self.epsilon < 1.0:
            raise ValueError("need 0 <= delta <= epsilon < 1")


def convolution_envelope_rate(env: SemiMarkovEnvelope, spec: QuadratureSpec | None = None) -> float:
    """r(delta, epsilon): the envelope entropy rate per unit arrival rate."""
    spec = spec or QuadratureSpec(rel_tol=1e-10, max_subdivisions=50)
    d, e = env.delta, env.epsilon
    if e == 0.0:
        return 0.0
    if d == 0.0:
        # switch point at u = 0 and 1 - e^{-inf u} = 1
        return 2.0 * math.log(1.0 / (1.0 - e)) / (1.0 - e)
    kd = 1.0 / d - 1.0
    ke = 1.0 / e - 1.0
    u_star = math.log(1.0 / e) / kd

    def log_term(u):
        return math.log(-math.expm1(-kd * u)) - math.log1p(-e)

    def first(u):
        if u <= 0.0:
            return 0.0
        return math.exp(-u) * (-math.expm1(-ke * u)) / (1.0 - d) * log_term(u)

    def second(u):
        if u <= 0.0:
            return 0.0
        return math.exp(-u) * (-math.expm1(-kd * u)) / (1.0 - e) * log_term(u)

    body = integrate(first, 0.0, u_star, spec) if u_star > 0 else 0.0
    tail = integrate_semi_infinite(second, spec, start=u_star)
    return float(2.0 / (1.0 + d) * (body + tail))


def relative_error_bounds(r: float) -> tuple[float, float]:
    """(lower, upper) relative error of the long-run mean queue length given r."""
    upper = 2.0 * math.sqrt(r) + r
    lower = -(2.0 * math.sqrt(r) - r) if r < 1.0 else -1.0
    return lower, upper


# -------------------------------------------------------- discrete chains

@dataclass(frozen=True)
class DiscreteChainPair:
    p: np.ndarray
    p_alt: np.ndarray
    init: np.ndarray
    init_alt: np.ndarray

    def __post_init__(self):
        p = np.atleast_2d(np.asarray(self.p, dtype=float))
        q = np.atleast_2d(np.asarray(self.p_alt, dtype=float))
        i0 = np.asarray(self.init, dtype=float)
        j0 = np.asarray(self.init_alt, dtype=float)
        n = p.shape[0]
        if p.shape != (n, n) or q.shape != (n, n) or i0.shape != (n,) or j0.shape != (n,):
            raise ValueError("inconsistent shapes")
        for m in (p, q):
            if np.any(m < 0) or not np.allclose(m.sum(axis=1), 1.0, atol=1e-12):
                raise ValueError("transition rows must be probability vectors")
        for v in (i0, j0):
            if np.any(v < 0) or abs(v.sum() - 1.0) > 1e-12:
                raise ValueError("initial laws must be probability vectors")
        if np.any((p == 0) & (q > 0)) or np.any((i0 == 0) & (j0 > 0)):
            raise AbsContViolation("alternative chain is not absolutely continuous")
        for name, v in (("p", p), ("p_alt", q), ("init", i0), ("init_alt", j0)):
            object.__setattr__(self, name, v)


def stopped_path_laws(pair: DiscreteChainPair, stop: Sequence[int], N: int) -> tuple[np.ndarray, np.ndarray]:
    """Probabilities under base and alternative of every path stopped at tau ^ N.

    tau is the first time (including time 0) the chain is in ``stop``. Only
    paths with positive alternative probability are listed.
    """
    n = pair.p.shape[0]
    if n > MAX_ENUM_STATES or N > MAX_ENUM_HORIZON:
        raise StateSpaceTooLarge(f"enumeration capped at {MAX_ENUM_STATES} states, N <= {MAX_ENUM_HORIZON}")
    if N < 0:
        raise ValueError("horizon must be nonnegative")
    stop_mask = np.zeros(n, dtype=bool)
    stop_mask[list(stop)] = True
    support = pair.init_alt > 0
    state = np.nonzero(support)[0]
    lp = np.log(pair.init[state])
    lq = np.log(pair.init_alt[state])
    done_p, done_q = [], []
    for _ in range(N):
        halt = stop_mask[state]
        done_p.append(lp[halt])
        done_q.append(lq[halt])
        state, lp, lq = state[~halt], lp[~halt], lq[~halt]
        if state.size == 0:
            break
        if state.size * n > MAX_ENUM_PATHS:
            raise StateSpaceTooLarge("too many paths to enumerate")
        nxt = np.tile(np.arange(n), state.size)
        cur = np.repeat(state, n)
        qstep = pair.p_alt[cur, nxt]
        keep = qstep > 0
        lq = np.repeat(lq, n)[keep] + np.log(qstep[keep])
        lp = np.repeat(lp, n)[keep] + np.log(pair.p[cur, nxt][keep])
        state = nxt[keep]
    done_p.append(lp)
    done_q.append(lq)
    return np.exp(np.concatenate(done_p)), np.exp(np.concatenate(done_q))


def discrete_chain_stopped_rel_ent(pair: DiscreteChainPair, stop: Sequence[int], N: int) -> float:
    """Exact R(P~ || P) on paths stopped at tau ^ N, by enumeration."""
    p, q = stopped_path_laws(pair, stop, N)
    return float(np.sum(xlogy(q, q) - xlogy(q, p)))


def discrete_chain_stopped_rel_ent_dp(pair: DiscreteChainPair, stop: Sequence[int], N: int) -> float:
    """Same quantity by per-step additivity: sum_k E~[1_{tau>k} KL(p~(X_k,.) || p(X_k,.))]."""
    n = pair.p.shape[0]
    stop_mask = np.zeros(n, dtype=bool)
    stop_mask[list(stop)] = True
    q, p = pair.p_alt, pair.p
    step_kl = np.sum(xlogy(q, q) - xlogy(q, np.where(q > 0, p, 1.0)), axis=1)
    j0, i0 = pair.init_alt, pair.init
    total = float(np.sum(xlogy(j0, j0) - xlogy(j0, np.where(j0 > 0, i0, 1.0))))
    alive = np.where(stop_mask, 0.0, j0)
    for _ in range(N):
        total += float(alive @ step_kl)
        alive = alive @ q
        alive[stop_mask] = 0.0
    return total


# ------------------------------------------------------------------ CTMCs

@dataclass(frozen=True)
class CtmcModel:
    """Jump rates lambda(x) and jump-chain matrix a(x, y)."""

    rates: np.ndarray
    jump: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "rates", np.asarray(self.rates, dtype=float))
        object.__setattr__(self, "jump", np.atleast_2d(np.asarray(self.jump, dtype=float)))

    @property
    def generator(self) -> np.ndarray:
        G = self.rates[:, None] * self.jump
        return G - np.diag(self.rates)


def ctmc_path_loglik(states: Sequence[int], holds: Sequence[float], base: CtmcModel,
                     alt: CtmcModel) -> float:
    """log dP~/dP of a path that sits in states[i] for holds[i] (the last hold is censored)."""
    if len(states) != len(holds) or not states:
        raise ValueError("states and holds must be nonempty and of equal length")
    total = 0.0
    for i, (x, h) in enumerate(zip(states, holds)):
        total -= (alt.rates[x] - base.rates[x]) * h
        if i + 1 < len(states):
            y = states[i + 1]
            num = alt.rates[x] * alt.jump[x, y]
            den = base.rates[x] * base.jump[x, y]
            if num > 0 and den == 0:
                raise AbsContViolation(f"jump {x}->{y} impossible under the base model")
            if num == 0:
                raise AbsContViolation(f"path jump {x}->{y} has zero alternative rate")
            total += math.log(num / den)
    return total


def ctmc_rel_ent_exact(base: CtmcModel, alt: CtmcModel, init: Sequence[float], T: float,
                       order: int = 64) -> float:
    """R(P~|_[0,T] || P|_[0,T]) = int_0^T sum_x p~_t(x) h(x) dt for a common initial law."""
    q_rate = alt.rates[:, None] * alt.jump
    p_rate = base.rates[:, None] * base.jump
    if np.any((p_rate == 0) & (q_rate > 0)):
        raise AbsContViolation("alternative CTMC jumps where the base cannot")
    h = np.sum(xlogy(q_rate, q_rate) - xlogy(q_rate, np.where(q_rate > 0, p_rate, 1.0)), axis=1)
    h = h - alt.rates + base.rates
    x, w = np.polynomial.legendre.leggauss(order)
    t = 0.5 * T * (x + 1.0)
    G = alt.generator
    init = np.asarray(init, dtype=float)
    vals = np.array([init @ expm(G * ti) @ h for ti in t])
    return float(0.5 * T * np.dot(w, vals))


def discounted_rel_ent(eta_s: Callable[[float], float], lam: float,
                       spec: QuadratureSpec | None = None) -> float:
    """int_0^inf eta_s lam e^{-lam s} ds."""
    if not lam > 0:
        raise ValueError("lam must be positive")

    def f(s):
        v = float(eta_s(s))
        if v < 0:
            raise ValueError("eta_s must be nonnegative")
        return v * lam * math.exp(-lam * s)

    out = integrate_semi_infinite(f, spec, scale=1.0 / lam)
    if not math.isfinite(out):
        raise NonIntegrable("discounted budget is not finite")
    return out
