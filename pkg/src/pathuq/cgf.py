"""Closed-form baseline laws and cumulant generating functions."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .errors import BeyondBranch, NotSPD, SignMismatch

INF = math.inf


@dataclass(frozen=True)
class DriftedBMHittingLaw:
    """First time mu*t + W_t hits level a."""

    a: float
    mu: float

    def __post_init__(self):
        if self.a == 0:
            raise ValueError("hitting level a must be nonzero")

    @property
    def atom(self) -> float:
        """P(tau = inf)."""
        return 0.0 - math.expm1(self.mu * self.a - abs(self.mu * self.a)) + 0.0

    def density(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        pos = (t > 0) & np.isfinite(t)
        tp = t[pos]
        out[pos] = (abs(self.a) / math.sqrt(2 * math.pi) * tp ** -1.5
                    * np.exp(-(self.a - self.mu * tp) ** 2 / (2 * tp)))
        return out if out.ndim else float(out)

    def cdf(self, t):
        """P(tau <= t), from the inverse-Gaussian closed form."""
        t = np.asarray(t, dtype=float)
        a, mu = abs(self.a), self.mu * math.copysign(1.0, self.a)
        out = np.zeros_like(t)
        pos = (t > 0) & np.isfinite(t)
        tp = t[pos]
        st = np.sqrt(tp)
        first = ndtr((mu * tp - a) / st)
        # exp(2 a mu) * Phi(-(a + mu t)/sqrt t) written to avoid overflow
        z = -(a + mu * tp) / st
        # np.where evaluates both branches; the asymptotic one is unused near z = 0
        with np.errstate(under="ignore", divide="ignore", invalid="ignore"):
            second = np.where(
                z < -30,
                np.exp(2 * a * mu - 0.5 * z ** 2) / (-z * math.sqrt(2 * math.pi))
                * (1 - 1 / z ** 2 + 3 / z ** 4),
                np.exp(2 * a * mu) * ndtr(z),
            )
        out[pos] = first + second
        out[np.isinf(t) & (t > 0)] = 1.0 - self.atom
        return out if out.ndim else float(out)

    def nodes(self, breakpoints=(), scale: float | None = None, panels: int = 160,
              order: int = 16) -> tuple[np.ndarray, np.ndarray]:
        """Quadrature nodes for the law: finite part rescaled to mass 1 - atom, atom at t = inf.

        The rescaling removes the O(quadrature error) mass defect, which would
        otherwise be amplified by 1/c in tilted bounds near c = 0.
        """
        from .numerics import semi_infinite_nodes

        if scale is None:
            scale = abs(self.a / self.mu) if self.mu != 0 else self.a ** 2
        t, w = semi_infinite_nodes(breakpoints, scale=scale, panels=panels, order=order)
        w = w * self.density(t)
        keep = w > 0
        t, w = t[keep], w[keep]
        w = w * ((1.0 - self.atom) / w.sum())
        if self.atom > 0:
            t, w = np.append(t, INF), np.append(w, self.atom)
        return t, w


def hitting_density_cdf(law: DriftedBMHittingLaw, t: float) -> tuple[float, float, float]:
    if not t > 0:
        raise ValueError("t must be positive")
    return float(law.density(t)), float(law.cdf(t)), law.atom


def hitting_cgf(law: DriftedBMHittingLaw, c: float) -> float:
    """log E[exp(c tau)] = a mu - a sqrt(mu^2 - 2c) for c < mu^2/2, +inf beyond."""
    if law.mu == 0 or math.copysign(1.0, law.a) != math.copysign(1.0, law.mu):
        raise SignMismatch("hitting_cgf needs a and mu of the same (nonzero) sign")
    a, mu = abs(law.a), abs(law.mu)
    disc = mu * mu - 2.0 * c
    if disc < 0:
        return INF
    # a*(mu - sqrt(disc)) rewritten to keep precision for small c
    return a * 2.0 * c / (mu + math.sqrt(disc))


def hitting_laplace(law: DriftedBMHittingLaw, lam: float) -> float:
    """E[exp(-lam tau)] for lam > 0, including the atom at infinity."""
    return math.exp(law.a * law.mu - abs(law.a) * math.sqrt(law.mu ** 2 + 2.0 * lam))


@dataclass(frozen=True)
class GaussianQuadraticForm:
    """Quadratic observable 1/2 x^T C x + d^T x of x ~ N(0, Sigma)."""

    Sigma: np.ndarray
    C: np.ndarray
    d: np.ndarray

    def __post_init__(self):
        S = np.atleast_2d(np.asarray(self.Sigma, dtype=float))
        C = np.atleast_2d(np.asarray(self.C, dtype=float))
        d = np.atleast_1d(np.asarray(self.d, dtype=float))
        n = S.shape[0]
        if S.shape != (n, n) or C.shape != (n, n) or d.shape != (n,):
            raise ValueError("Sigma, C and d have inconsistent shapes")
        for name, m in (("Sigma", S), ("C", C)):
            if not np.allclose(m, m.T, rtol=1e-10, atol=1e-12):
                raise NotSPD(f"{name} is not symmetric")
        try:
            M = np.linalg.cholesky(0.5 * (C + C.T)).T
        except np.linalg.LinAlgError as exc:
            raise NotSPD("C is not positive-definite") from exc
        A = M @ (0.5 * (S + S.T)) @ M.T
        evals = np.linalg.eigvalsh(0.5 * (A + A.T))
        if evals.min() < -1e-12 * max(1.0, evals.max()):
            raise NotSPD("Sigma is not positive semi-definite")
        evals = np.clip(evals, 0.0, None)
        object.__setattr__(self, "Sigma", S)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "_evals", evals)

    @property
    def c_max(self) -> float:
        top = float(self._evals.max()) if self._evals.size else 0.0
        return INF if top <= 0 else 1.0 / top

    @property
    def mean(self) -> float:
        return 0.5 * float(np.trace(self.C @ self.Sigma))


def gaussian_quadratic_cgf(form: GaussianQuadraticForm, c: float, side: str = "upper") -> float:
    """Lambda(+-c) = -1/2 log det(I -+ c Sigma C) + 1/2 c^2 d^T (I -+ c Sigma C)^{-1} Sigma d.

    The log-determinant comes from the eigenvalues e_i of M Sigma M^T with
    C = M^T M, which also fix the domain c < 1/max(e_i) on the upper side.
    """
    if c < 0:
        raise ValueError("c must be nonnegative; choose the side instead")
    s = 1.0 if side == "upper" else -1.0
    if side not in ("upper", "lower"):
        raise ValueError(f"unknown side {side!r}")
    if c == 0:
        return 0.0
    z = 1.0 - s * c * form._evals
    if np.any(z <= 0):
        return INF
    logdet = -0.5 * float(np.sum(np.log(z)))
    n = form.Sigma.shape[0]
    A = np.eye(n) - s * c * form.Sigma @ form.C
    lin = 0.5 * c * c * float(form.d @ np.linalg.solve(A, form.Sigma @ form.d))
    return logdet + lin


@dataclass(frozen=True)
class OUSquaredIntegral:
    """Delta r: OU with rate gamma, vol sigma_tilde, started at 0; asset vol sigma."""

    gamma: float
    sigma_tilde: float
    sigma: float

    def __post_init__(self):
        if not (self.gamma > 0 and self.sigma_tilde > 0 and self.sigma > 0):
            raise ValueError("gamma, sigma_tilde, sigma must be positive")

    @property
    def lam_branch(self) -> float:
        return self.sigma ** 2 * self.gamma ** 2 / self.sigma_tilde ** 2


def ou_squared_cgf(p: OUSquaredIntegral, t: float, lam: float) -> float:
    """E[exp(lam sigma^-2/2 int_0^t Delta r_s^2 ds)] on the real branch w > 0."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    if lam >= p.lam_branch:
        raise BeyondBranch(f"lam={lam} is at or beyond the branch point {p.lam_branch}")
    return math.exp(log_ou_squared_cgf(p, t, lam))


def log_ou_squared_cgf(p: OUSquaredIntegral, t, lam: float):
    """Log of ou_squared_cgf, vectorized in t, stable for large gamma*t."""
    w = 1.0 - lam / p.lam_branch
    if w <= 0:
        raise BeyondBranch(f"lam={lam} is at or beyond the branch point {p.lam_branch}")
    t = np.asarray(t, dtype=float)
    sw = math.sqrt(w)
    x = p.gamma * t * sw
    # sinh(x)/sw + cosh(x) = e^x/2 * [(1 + 1/sw) + (1 - 1/sw) e^{-2x}]
    e2 = np.exp(-2.0 * x)
    inner = 0.5 * ((1.0 + 1.0 / sw) + (1.0 - 1.0 / sw) * e2)
    out = 0.5 * p.gamma * t - 0.5 * (x + np.log(inner))
    return out if out.ndim else float(out)


def integrated_ou_variance(p: OUSquaredIntegral, t):
    """Variance of int_0^t Delta r_s ds."""
    t = np.asarray(t, dtype=float)
    g = p.gamma
    x = g * t
    with np.errstate(over="ignore", invalid="ignore"):
        bracket = 2 * x + 4 * np.exp(-x) - np.exp(-2 * x) - 3
    # 2x + 4e^{-x} - e^{-2x} - 3 = (2/3)x^3 - (1/2)x^4 + (7/30)x^5 - (1/12)x^6 + ...
    series = x ** 3 * (2 / 3 - x / 2 + 7 * x ** 2 / 30 - x ** 3 / 12 + 31 * x ** 4 / 1260)
    bracket = np.where(x < 2e-2, series, bracket)
    out = p.sigma_tilde ** 2 * bracket / (2 * g ** 3)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class QueueCgfLimit:
    alpha: float
    rho: float

    def __post_init__(self):
        if not (self.alpha > 0 and self.rho > 0):
            raise ValueError("alpha and rho must be positive")


def queue_cgf_limit(p: QueueCgfLimit, c: float) -> float:
    if c >= p.rho:
        return INF
    return p.alpha * c * c / (p.rho ** 2 * (1.0 - c / p.rho))
