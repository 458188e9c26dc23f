"""Discounted linear-quadratic control: Riccati gain, closed-loop covariance, cost bounds."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm, solve_continuous_lyapunov

from .bounds import CgfHandle, DiscountMeasure, discounted_bound, info_bound
from .errors import NoConvergence, NonIntegrable, NotSPD, NotStabilizable


def _mat(x, shape=None):
    a = np.atleast_2d(np.asarray(x, dtype=float))
    if shape is not None and a.shape != shape:
        raise ValueError(f"expected shape {shape}, got {a.shape}")
    return a


def _check_spd(name, m, semi=False):
    if not np.allclose(m, m.T, rtol=1e-12, atol=1e-14):
        raise NotSPD(f"{name} is not symmetric")
    low = np.linalg.eigvalsh(0.5 * (m + m.T)).min()
    if (low < -1e-14 * max(1.0, np.abs(m).max())) if semi else (low <= 0):
        raise NotSPD(f"{name} is not positive-{'semi-' if semi else ''}definite")


@dataclass(frozen=True)
class LqProblem:
    B: np.ndarray
    D: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    lam: float
    Sigma0: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        B = _mat(self.B)
        n = B.shape[0]
        if B.shape != (n, n):
            raise ValueError("B must be square")
        D = np.asarray(self.D, dtype=float).reshape(n, -1)
        m = D.shape[1]
        Q = _mat(self.Q, (n, n))
        R = _mat(self.R, (m, m))
        S0 = _mat(self.Sigma0, (n, n))
        sig = _mat(self.sigma, (n, n))
        _check_spd("Q", Q, semi=True)
        _check_spd("R", R)
        if not np.allclose(S0, S0.T) or np.linalg.eigvalsh(S0).min() < -1e-12:
            raise NotSPD("Sigma0 must be positive semi-definite")
        if not self.lam > 0:
            raise ValueError("discount rate lam must be positive")
        for name, v in (("B", B), ("D", D), ("Q", Q), ("R", R), ("Sigma0", S0), ("sigma", sig)):
            object.__setattr__(self, name, v)

    @classmethod
    def example(cls, kappa: float) -> "LqProblem":
        """Two-state, one-input system with controller strength kappa."""
        return cls(B=[[2.0, 0.1], [0.1, -1.0]], D=[[kappa], [0.0]], Q=np.eye(2), R=[[1.0]],
                   lam=0.5, Sigma0=np.zeros((2, 2)), sigma=np.eye(2))

    @property
    def B_lam(self) -> np.ndarray:
        return self.B - 0.5 * self.lam * np.eye(self.B.shape[0])


@dataclass(frozen=True)
class RiccatiSolution:
    Y: np.ndarray
    K_gain: np.ndarray
    A_cl: np.ndarray
    residual: float


def riccati_residual(prob: LqProblem, Y: np.ndarray) -> float:
    Bl = prob.B_lam
    G = prob.D @ np.linalg.solve(prob.R, prob.D.T)
    res = Bl.T @ Y + Y @ Bl + prob.Q - Y @ G @ Y
    return float(np.linalg.norm(res, 2))


def _stabilizable(A, D):
    n = A.shape[0]
    for mu in np.linalg.eigvals(A):
        if mu.real >= 0:
            M = np.hstack([A - mu * np.eye(n), D.astype(complex)])
            if np.linalg.matrix_rank(M, tol=1e-10 * max(1.0, np.abs(M).max())) < n:
                return False
    return True


def _initial_gain(A, D):
    """Zero if A is already stable, else a shifted-Lyapunov (Bass) gain."""
    n = A.shape[0]
    if np.linalg.eigvals(A).real.max() < 0:
        return np.zeros((D.shape[1], n))
    beta = np.linalg.norm(A, 2) + 1.0
    Z = solve_continuous_lyapunov(A + beta * np.eye(n), 2.0 * D @ D.T)
    K = -D.T @ np.linalg.pinv(Z)
    if np.linalg.eigvals(A + D @ K).real.max() >= 0:
        raise NotStabilizable("could not construct an initial stabilizing gain")
    return K


def solve_riccati(prob: LqProblem, tol: float = 1e-14, maxiter: int = 100) -> RiccatiSolution:
    """Stabilizing solution of the discounted algebraic Riccati equation (Newton-Kleinman)."""
    Bl, D, Q, R = prob.B_lam, prob.D, prob.Q, prob.R
    if not _stabilizable(Bl, D):
        raise NotStabilizable("(B - lam/2 I, D) is not stabilizable")
    K = _initial_gain(Bl, D)
    Y = None
    for _ in range(maxiter):
        Ak = Bl + D @ K
        Yn = solve_continuous_lyapunov(Ak.T, -(Q + K.T @ R @ K))
        Yn = 0.5 * (Yn + Yn.T)
        K = -np.linalg.solve(R, D.T @ Yn)
        if Y is not None and np.linalg.norm(Yn - Y) <= tol * max(1.0, np.linalg.norm(Yn)):
            Y = Yn
            break
        Y = Yn
    else:
        raise NoConvergence("Newton-Kleinman iteration did not converge")
    A_cl = prob.B + D @ K
    if np.linalg.eigvals(A_cl - 0.5 * prob.lam * np.eye(A_cl.shape[0])).real.max() >= 0:
        raise NotStabilizable("closed loop is not stable under discounting")
    res = riccati_residual(prob, Y)
    if res > 1e-10 * max(np.linalg.norm(Q, 2), 1e-300) and res > 1e-14:
        raise NoConvergence(f"Riccati residual {res:.3e} above tolerance")
    return RiccatiSolution(Y, K, A_cl, res)


def _rk4_step(A, S, X, h):
    f = lambda Z: A @ Z + Z @ A.T + S
    k1 = f(X)
    k2 = f(X + 0.5 * h * k1)
    k3 = f(X + 0.5 * h * k2)
    k4 = f(X + h * k3)
    return X + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def covariance_path(prob: LqProblem, A_cl: np.ndarray, times, tol: float = 1e-12) -> np.ndarray:
    """Sigma_t at each requested time (any order), by step-doubling RK4."""
    times = np.asarray(times, dtype=float)
    if np.any(times < 0):
        raise ValueError("times must be nonnegative")
    order = np.argsort(times)
    S = prob.sigma @ prob.sigma.T
    X = prob.Sigma0.copy()
    t = 0.0
    h = 0.05 / max(1.0, np.linalg.norm(A_cl, 2))
    out = np.empty((times.size,) + X.shape)
    for idx in order:
        target = times[idx]
        while t < target:
            step = min(h, target - t)
            full = _rk4_step(A_cl, S, X, step)
            half = _rk4_step(A_cl, S, _rk4_step(A_cl, S, X, 0.5 * step), 0.5 * step)
            err = np.abs(half - full).max() / 15.0
            scale = max(1.0, np.abs(half).max())
            if err <= tol * scale:
                X = half + (half - full) / 15.0
                t += step
                if err < 0.1 * tol * scale:
                    h = min(2.0 * h, 1.0)
                if target - t < 1e-14 * max(1.0, target):
                    t = target
            else:
                h = 0.5 * step
        out[idx] = 0.5 * (X + X.T)
    return out


def covariance_at(prob: LqProblem, A_cl: np.ndarray, t: float) -> np.ndarray:
    return covariance_path(prob, A_cl, [t])[0]


def covariance_expm(prob: LqProblem, A_cl: np.ndarray, t: float) -> np.ndarray:
    """Sigma_t from the block matrix exponential (Van Loan); an independent check."""
    n = A_cl.shape[0]
    S = prob.sigma @ prob.sigma.T
    H = np.zeros((2 * n, 2 * n))
    H[:n, :n] = -A_cl
    H[:n, n:] = S
    H[n:, n:] = A_cl.T
    E = expm(H * t)
    Phi = E[n:, n:].T
    noise = Phi @ E[:n, n:]
    return Phi @ prob.Sigma0 @ Phi.T + 0.5 * (noise + noise.T)


@dataclass(frozen=True)
class LqBound:
    lower: float
    upper: float
    baseline: float
    baseline_exact: float
    tail: float
    riccati: RiccatiSolution


def discounted_baseline_cost(prob: LqProblem, sol: RiccatiSolution) -> float:
    """int 1/2 tr(Sigma_s C) lam e^{-lam s} ds through one Lyapunov solve."""
    n = sol.A_cl.shape[0]
    C = prob.Q + sol.K_gain.T @ prob.R @ sol.K_gain
    Al = sol.A_cl - 0.5 * prob.lam * np.eye(n)
    Sbar = solve_continuous_lyapunov(Al, -(prob.sigma @ prob.sigma.T + prob.lam * prob.Sigma0))
    return 0.5 * float(np.trace(C @ Sbar))


def _gaussian_eig_cgf(e: np.ndarray) -> CgfHandle:
    """CGF of 1/2 x^T C x for x ~ N(0, Sigma) given eigenvalues of M Sigma M^T."""
    top = float(e.max()) if e.size else 0.0

    def lam(c):
        z = 1.0 - c * e
        if np.any(z <= 0):
            return math.inf
        return -0.5 * float(np.sum(np.log(z)))

    return CgfHandle(lam, math.inf if top <= 0 else 1.0 / top)


def control_cost_bound(prob: LqProblem, alpha: float, panels: int = 40, order: int = 8) -> LqBound:
    """Interval for the discounted quadratic cost under drift perturbations with sup-norm alpha.

    Per-s budget alpha^2 s/2 and per-s Gaussian quadratic CGF, optimized
    pointwise in s and integrated against lam e^{-lam s} ds. The s-range is
    cut where the discount has decayed by e^{-30} relative to the growth of
    Sigma_s; a bound on the remainder is added to the upper side.
    """
    if not alpha >= 0:
        raise ValueError("alpha must be nonnegative")
    sol = solve_riccati(prob)
    C = prob.Q + sol.K_gain.T @ prob.R @ sol.K_gain
    try:
        M = np.linalg.cholesky(C).T
    except np.linalg.LinAlgError as exc:
        raise NotSPD("closed-loop cost Q + K^T R K must be positive-definite") from exc
    growth = 2.0 * max(float(np.linalg.eigvals(sol.A_cl).real.max()), 0.0)
    if growth >= prob.lam:
        raise NonIntegrable("closed-loop covariance grows faster than the discount")
    s_max = 30.0 / (prob.lam - growth)
    edges = s_max * (np.arange(panels + 1) / panels) ** 2
    x, w = np.polynomial.legendre.leggauss(order)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    s = (mid[:, None] + half[:, None] * x).ravel()
    ws = (half[:, None] * w).ravel() * prob.lam * np.exp(-prob.lam * s)
    sigmas = covariance_path(prob, sol.A_cl, s)
    eigs = [np.clip(np.linalg.eigvalsh(M @ Sg @ M.T), 0.0, None) for Sg in sigmas]
    handles = {float(si): _gaussian_eig_cgf(e) for si, e in zip(s, eigs)}
    eta = lambda si: 0.5 * alpha ** 2 * si
    nodes = (s, ws)
    pick = handles.__getitem__
    upper = discounted_bound(pick, eta, DiscountMeasure.exponential(prob.lam), "upper", "inside", nodes).value
    lower = discounted_bound(pick, eta, DiscountMeasure.exponential(prob.lam), "lower", "inside", nodes).value
    baseline = float(np.dot(ws, [0.5 * e.sum() for e in eigs]))
    # remainder: last-node upper value grown at the covariance rate, discounted
    S_end = covariance_at(prob, sol.A_cl, s_max)
    e_end = np.clip(np.linalg.eigvalsh(M @ S_end @ M.T), 0.0, None)
    u_end = info_bound(_gaussian_eig_cgf(e_end), eta(s_max), "upper").value
    tail = 2.0 * u_end * math.exp(-prob.lam * s_max) * prob.lam / (prob.lam - growth)
    return LqBound(lower, upper + tail, baseline, discounted_baseline_cost(prob, sol), tail, sol)
