import numpy as np
from hypothesis import given, settings, strategies as st

import invariants as inv

unit = st.lists(st.floats(0.0, 0.999), min_size=12, max_size=12).map(np.array)
kind = st.sampled_from(inv.KINDS)


@settings(max_examples=200)
@given(kind, unit, st.lists(st.floats(-0.95, 0.95), min_size=3, max_size=3).map(np.array), st.floats(0, 2))
def test_cgf_convexity_and_quasiconvex_objectives(k, u, c, eta):
    inv.check_convexity(inv.make_cgf(k, u), c, eta)


@settings(max_examples=200)
@given(kind, unit, st.floats(0, 2), st.floats(0, 2))
def test_interval_validity_and_budget_monotonicity(k, u, e1, e2):
    inv.check_interval_and_monotone(inv.make_cgf(k, u), e1, e2)


@settings(max_examples=200)
@given(kind, unit)
def test_zero_budget_collapse(k, u):
    inv.check_zero_budget(inv.make_cgf(k, u))


@settings(max_examples=200)
@given(st.integers(1, 3), unit, st.floats(0, 5))
def test_phase_type_normalization(k, u, t):
    inv.check_phase_type(inv.make_phase_type(k, u), t)


@settings(max_examples=200)
@given(st.floats(0.2, 4), st.floats(0.1, 3), st.booleans(), st.booleans())
def test_hitting_quadrature_vs_closed_form(a, mu, fa, fm):
    inv.check_hitting_quadrature(-a if fa else a, -mu if fm else mu)
