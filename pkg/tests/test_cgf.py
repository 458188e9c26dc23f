import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from pathuq.cgf import (DriftedBMHittingLaw, GaussianQuadraticForm, OUSquaredIntegral,
                        QueueCgfLimit, gaussian_quadratic_cgf, hitting_cgf, hitting_density_cdf,
                        hitting_laplace, integrated_ou_variance, ou_squared_cgf, queue_cgf_limit)
from pathuq.errors import BeyondBranch, SignMismatch
from pathuq.numerics import gauss_hermite_nd, integrate_semi_infinite


def test_hitting_cgf_examples():
    law = DriftedBMHittingLaw(2.0, 1.0)
    assert hitting_cgf(law, 0.18) == pytest.approx(0.4, rel=1e-12)
    assert hitting_cgf(law, 0.0) == 0.0
    assert hitting_cgf(law, 0.6) == math.inf
    with pytest.raises(SignMismatch):
        hitting_cgf(DriftedBMHittingLaw(2.0, -1.0), 0.1)


def test_atom_and_density():
    assert DriftedBMHittingLaw(2.0, 1.0).atom == 0.0
    assert DriftedBMHittingLaw(2.0, -1.0).atom == pytest.approx(1 - math.exp(-4), rel=1e-14)
    d, c, atom = hitting_density_cdf(DriftedBMHittingLaw(2.0, 1.0), 2.0)
    assert d > 0 and 0 < c < 1 and atom == 0


@given(st.floats(0.2, 4.0), st.floats(0.1, 3.0), st.booleans(), st.booleans())
def test_total_mass_plus_atom_is_one(a, mu, flip_a, flip_mu):
    law = DriftedBMHittingLaw(-a if flip_a else a, -mu if flip_mu else mu)
    mass = integrate_semi_infinite(lambda t: float(law.density(t)), scale=max(a / mu, a * a))
    assert mass + law.atom == pytest.approx(1.0, abs=1e-8)
    t, w = law.nodes()
    assert w.sum() == pytest.approx(1.0, abs=1e-14)


@given(st.floats(0.2, 4.0), st.floats(0.2, 3.0), st.floats(0.05, 5.0))
def test_cdf_matches_integrated_density(a, mu, T):
    law = DriftedBMHittingLaw(a, mu)
    t, w = law.nodes((T,))
    assert float(np.dot(w, t <= T)) == pytest.approx(float(law.cdf(T)), abs=1e-9)


def test_laplace_matches_cgf():
    law = DriftedBMHittingLaw(2.0, 1.0)
    assert math.log(hitting_laplace(law, 0.3)) == pytest.approx(hitting_cgf(law, -0.3), rel=1e-12)


def test_hitting_cgf_convex_and_slope_increasing():
    law = DriftedBMHittingLaw(2.0, 1.0)
    c = np.linspace(1e-3, 0.5 - 1e-3, 200)
    v = np.array([hitting_cgf(law, x) for x in c])
    assert np.all(np.diff(v, 2) >= -1e-12)
    assert np.all(np.diff(v / c) >= -1e-12)


def test_gaussian_quadratic_examples():
    f = GaussianQuadraticForm([[1.0]], [[1.0]], [0.0])
    assert gaussian_quadratic_cgf(f, 0.0) == 0.0
    assert gaussian_quadratic_cgf(f, 0.5) == pytest.approx(-0.5 * math.log(0.5), rel=1e-12)
    assert gaussian_quadratic_cgf(f, f.c_max) == math.inf
    assert gaussian_quadratic_cgf(f, 2.0, "lower") == pytest.approx(-0.5 * math.log(3.0), rel=1e-12)


@given(st.floats(0.3, 2.0), st.floats(-0.5, 0.5), st.floats(0.5, 2.0), st.floats(-0.5, 0.5),
       st.floats(0.05, 0.85), st.sampled_from(["upper", "lower"]))
def test_gaussian_quadratic_vs_hermite(s1, rho, c1, d1, frac, side):
    S = np.array([[s1, rho * math.sqrt(s1)], [rho * math.sqrt(s1), 1.0]])
    C = np.array([[c1, 0.2], [0.2, 1.0]])
    d = np.array([d1, 0.1])
    form = GaussianQuadraticForm(S, C, d)
    c = frac * min(form.c_max, 2.0)
    sgn = 1.0 if side == "upper" else -1.0
    ref = math.log(gauss_hermite_nd(
        lambda x: np.exp(sgn * c * (0.5 * np.einsum("ni,ij,nj->n", x, C, x) + x @ d)), [0, 0], S, 80))
    assert gaussian_quadratic_cgf(form, c, side) == pytest.approx(ref, rel=1e-6, abs=1e-9)


def test_ou_squared_examples():
    p = OUSquaredIntegral(2.0, 1.0, 4.0)
    for t in (0.0, 0.5, 3.0, 40.0):
        assert ou_squared_cgf(p, t, 0.0) == pytest.approx(1.0, abs=1e-14)
    assert ou_squared_cgf(p, 0.0, 10.0) == 1.0
    with pytest.raises(BeyondBranch):
        ou_squared_cgf(p, 1.0, p.lam_branch)
    lams = np.linspace(0, 0.99 * p.lam_branch, 30)
    vals = [ou_squared_cgf(p, 1.5, l) for l in lams]
    assert np.all(np.diff(vals) >= 0)


def test_ou_squared_against_monte_carlo():
    # exp(lam sigma^-2/2 int_0^1 Delta r^2), OU from 0, exact steps
    p, lam, t = OUSquaredIntegral(2.0, 1.0, 4.0), 2.0, 1.0
    rng = np.random.default_rng(7)
    n, steps = 200_000, 400
    h = t / steps
    a = math.exp(-p.gamma * h)
    sd = p.sigma_tilde * math.sqrt((1 - a * a) / (2 * p.gamma))
    x = np.zeros(n)
    acc = np.zeros(n)
    for _ in range(steps):
        x_new = a * x + sd * rng.standard_normal(n)
        acc += 0.5 * h * (x * x + x_new * x_new)
        x = x_new
    vals = np.exp(lam / p.sigma ** 2 / 2 * acc)
    se = vals.std() / math.sqrt(n)
    assert abs(vals.mean() - ou_squared_cgf(p, t, lam)) < 4 * se + 1e-4


def test_integrated_ou_variance():
    p = OUSquaredIntegral(2.0, 1.0, 4.0)
    assert integrated_ou_variance(p, 0.0) == 0.0
    assert integrated_ou_variance(p, 1e-3) == pytest.approx(1e-9 / 3, rel=1e-2)
    slope = integrated_ou_variance(p, 201.0) - integrated_ou_variance(p, 200.0)
    assert slope == pytest.approx(1.0 / 4.0, rel=1e-10)
    # the series and closed branches agree at the switch
    x = np.array([2e-2 * (1 - 1e-9), 2e-2 * (1 + 1e-9)]) / p.gamma
    v = integrated_ou_variance(p, x)
    assert v[1] / v[0] == pytest.approx(1.0, abs=1e-8)


def test_queue_cgf_limit():
    q = QueueCgfLimit(1.0, 1.0)
    assert queue_cgf_limit(q, 0.0) == 0.0
    assert queue_cgf_limit(q, 0.5) == pytest.approx(0.5)
    assert queue_cgf_limit(q, 1.0) == math.inf
