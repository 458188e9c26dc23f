import pytest

from pathuq import scenarios as sc
from pathuq.errors import AssumptionViolated, ConfigError, SignMismatch


def test_bm_cdf_zero_alpha_collapses():
    tab = sc.bm_cdf_bounds(1.0, 2.0, 0.0, [0.5, 2.0, 6.0])
    for r in tab.rows:
        for v in (r.lower, r.upper, r.ref_lower, r.ref_upper):
            assert v == pytest.approx(r.baseline, abs=1e-7)


def test_bm_cdf_probabilities_and_order():
    tab = sc.bm_cdf_bounds(1.0, 2.0, 0.2, sc.FIG1_T_GRID[::7])
    tab.check()
    for r in tab.rows:
        assert 0.0 <= r.lower <= r.upper <= 1.0
        assert 0.0 <= r.ref_lower <= r.ref_upper <= 1.0
    with pytest.raises(SignMismatch):
        sc.bm_cdf_bounds(-1.0, 2.0, 0.2, [1.0])


def test_bm_mean_examples():
    r = sc.bm_mean_bounds(1.0, 2.0, 0.0).rows[0]
    assert r.lower == pytest.approx(2.0, abs=1e-6) and r.upper == pytest.approx(2.0, abs=1e-6)
    r = sc.bm_mean_bounds(1.0, 1.0, 0.5).rows[0]
    assert (r.lower, r.upper) == (pytest.approx(2 / 3, rel=1e-6), pytest.approx(2.0, rel=1e-6))
    assert (r.ref_lower, r.ref_upper) == (pytest.approx(2 / 3), pytest.approx(2.0))
    r = sc.bm_mean_bounds(-1.0, -2.0, 0.2).rows[0]
    assert (r.lower, r.upper) == (pytest.approx(5 / 3, rel=1e-6), pytest.approx(2.5, rel=1e-6))


def test_nonrev_zero_and_inside_references():
    tab = sc.nonrev_bounds([0.0, 0.5, 1.5])
    r0 = tab.rows[0]
    assert r0.lower == pytest.approx(1.0, abs=1e-6) and r0.upper == pytest.approx(1.0, abs=1e-6)
    for r in tab.rows[1:]:
        assert r.ref_lower < r.lower <= 1.0 <= r.upper < r.ref_upper


def test_lq_zero_alpha():
    tab = sc.lq_bounds([2.0, 4.0], alpha=0.0)
    for r in tab.rows:
        assert r.lower == pytest.approx(r.baseline, rel=1e-6)
        assert r.upper == pytest.approx(r.baseline, rel=1e-6)


def test_queue_scenario():
    assert sc.queue_relative_error(1.0, 1.0, 0.25) == (pytest.approx(-0.75, abs=1e-8), pytest.approx(1.25, abs=1e-8))
    assert sc.queue_relative_error(1.0, 1.0, 1.5)[0] == -1.0
    tab = sc.queue_bounds(1.0, 1.0, [0.001, 0.01, 0.05], [0.001, 0.01, 0.05])
    ups = tab.column("upper")
    assert ups[0] < ups[1] < ups[2] and ups[0] < 0.1
    for r in tab.rows:
        assert r.lower == pytest.approx(r.ref_lower, abs=1e-8)
        assert r.upper == pytest.approx(r.ref_upper, abs=1e-8)


def test_vasicek_small_noise_and_assumption():
    p = sc.vasicek_point(1.25, 4.0, 2.0, 1e-3, 1.0, 0.5, 2.0)
    assert p.lower <= p.baseline <= p.upper
    assert (p.upper - p.lower) / p.baseline < 1e-2
    with pytest.raises(AssumptionViolated):
        sc.vasicek_point(1.25, 4.0, 2.0, 6.0, 1.0, 0.5, 2.0)
    tab = sc.vasicek_bounds(1.0, [5.0, 6.0], 2.0, 6.0, strict=False)
    assert tab.sweep_name == "sigma"
    assert set(tab.column("status")) == {"assumption-violated"}
    with pytest.raises(ConfigError):
        sc.vasicek_bounds(1.0, [5.0, 6.0], 2.0, [1.0, 2.0])


def test_rate_drop_collapse_and_references():
    base = 0.5 * 0.25 ** (4 / 9)
    assert sc.option_baseline(2.0, 3.0, 1.0, 0.5, 2.0) == pytest.approx(base, rel=1e-12)
    tab = sc.rate_drop_bounds(tf_grid=[0.0, 1.0])
    r0, r1 = tab.rows
    assert r0.lower == pytest.approx(base, abs=1e-6) and r0.upper == pytest.approx(base, abs=1e-6)
    assert r1.ref_lower == pytest.approx(0.5 * 0.25 ** (4.6 / 9), rel=1e-12)
    assert r1.lower < r1.ref_lower <= base < r1.upper
