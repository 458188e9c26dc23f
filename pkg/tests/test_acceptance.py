"""Acceptance criteria 1-9. Each test prints one PASS/FAIL line with its pinned tolerances.

Run alone with ``pytest tests/test_acceptance.py -v``; the lines are repeated in
the terminal summary.
"""
import time

import numpy as np

import invariants as inv
from pathuq import scenarios as sc
from pathuq import validate
from pathuq.bounds import CgfHandle, rel_ent_bootstrap
from pathuq.linear_gaussian import LqProblem, control_cost_bound
from pathuq.relent import (DiscreteChainPair, SemiMarkovEnvelope, convolution_envelope_rate,
                           discrete_chain_stopped_rel_ent, discrete_chain_stopped_rel_ent_dp,
                           stopped_path_laws)

RESULTS: list[str] = []


class Criterion:
    def __init__(self, number: int, title: str, limit_s: float | None):
        self.number, self.title, self.limit = number, title, limit_s
        self.failures: list[str] = []
        self.notes: list[str] = []

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def check(self, ok: bool, label: str) -> None:
        (self.notes if ok else self.failures).append(label)

    def __exit__(self, exc_type, exc, tb):
        dt = time.perf_counter() - self.t0
        if exc is not None:
            self.failures.append(f"raised {exc_type.__name__}: {exc}")
        if self.limit is not None:
            self.check(dt < self.limit, f"runtime {dt:.1f}s < {self.limit:g}s")
        status = "FAIL" if self.failures else "PASS"
        detail = "; ".join(self.failures) if self.failures else "; ".join(self.notes)
        line = f"CRITERION {self.number} {status}: {self.title} [{dt:.1f}s] {detail}"
        RESULTS.append(line)
        return False


def _finish(c: Criterion, capsys):
    with capsys.disabled():
        print("\n" + RESULTS[-1])
    assert not c.failures, RESULTS[-1]


def test_criterion_1_bm_mean_exactness(capsys):
    with Criterion(1, "hitting-time mean bounds equal a/(mu +- alpha)", 1.0) as c:
        tab = sc.bm_mean_bounds(1.0, 2.0, 0.2)
        r = tab.rows[0]
        c.check(abs(r.lower / (5 / 3) - 1) <= 1e-6, f"lower {r.lower!r} vs 5/3 rel 1e-6")
        c.check(abs(r.upper / 2.5 - 1) <= 1e-6, f"upper {r.upper!r} vs 5/2 rel 1e-6")
        c.check(abs(tab.meta["c_star"] - 0.22) <= 1e-3, f"c* {tab.meta['c_star']:.6f} vs 0.22 abs 1e-3")
        c.check(abs(tab.meta["lambda_star"] - 0.18) <= 1e-3,
                f"lambda* {tab.meta['lambda_star']:.6f} vs 0.18 abs 1e-3")
    _finish(c, capsys)


def test_criterion_2_queue_closed_form(capsys):
    with Criterion(2, "queue relative-error closed form and epsilon -> 0", 5.0) as c:
        lo, up = sc.queue_relative_error(1.0, 1.0, 0.25)
        c.check(abs(up - 1.25) <= 1e-8, f"upper {up!r} vs 1.25 abs 1e-8")
        c.check(abs(lo + 0.75) <= 1e-8, f"lower {lo!r} vs -0.75 abs 1e-8")
        eps = [0.05, 0.02, 0.01, 0.005, 0.001]
        rates = [convolution_envelope_rate(SemiMarkovEnvelope(e, e)) for e in eps]
        ups = [sc.queue_relative_error(1.0, 1.0, r)[1] for r in rates]
        c.check(rates[2] < rates[0], f"r(0.01,0.01)={rates[2]:.4g} < r(0.05,0.05)={rates[0]:.4g}")
        c.check(all(b < a for a, b in zip(rates, rates[1:])), "r decreasing along eps=delta -> 0")
        c.check(all(b < a for a, b in zip(ups, ups[1:])), "relative error decreasing along eps=delta -> 0")
        tail = [convolution_envelope_rate(SemiMarkovEnvelope(e, e)) for e in (1e-4, 1e-5)]
        ratio = max(r / e for r, e in zip(rates + tail, eps + [1e-4, 1e-5]))
        c.check(ratio <= 1.0, f"r(eps,eps) <= {ratio:.3f} eps down to eps=1e-5, so r -> 0")
    _finish(c, capsys)


def test_criterion_3_fig1_dominance_and_containment(capsys):
    with Criterion(3, "hitting CDF: goal bounds dominate non-goal, MC containment", 120.0) as c:
        tab = sc.bm_cdf_bounds(1.0, 2.0, 0.2, sc.FIG1_T_GRID)
        c.check(len(tab.rows) == 50, "50-point T grid")
        du = max(r.upper - r.ref_upper for r in tab.rows)
        dl = max(r.ref_lower - r.lower for r in tab.rows)
        c.check(du <= 1e-9, f"max(goal up - non-goal up) = {du:.2e} <= 1e-9")
        c.check(dl <= 1e-9, f"max(non-goal lo - goal lo) = {dl:.2e} <= 1e-9")
        cfg = validate.DEFAULTS["bm-cdf"]
        c.check(cfg.n_paths == 100_000 and cfg.dt == 1e-3, "MC 1e5 paths, dt 1e-3")
        checks = validate.bm_cdf(1.0, 2.0, 0.2, sc.FIG1_T_GRID, table=tab)
        bad = [k["check"] for k in checks if k["status"] == "FAIL"]
        n_pass = sum(k["status"] == "PASS" for k in checks)
        c.check(not bad, f"MC beta=+-0.2 inside at 3 sigma at all T ({n_pass}/{len(checks)} interior)"
                + (f"; outside: {bad[:3]}" if bad else ""))
    _finish(c, capsys)


def test_criterion_4_fig2_nonreversible(capsys):
    with Criterion(4, "non-reversible SDE: C=0 collapse, bounds inside references", 30.0) as c:
        tab = sc.nonrev_bounds(sc.FIG2_C_GRID)
        r0 = tab.rows[0]
        c.check(abs(r0.lower - 1) <= 1e-3 and abs(r0.upper - 1) <= 1e-3,
                f"C=0 bounds ({r0.lower:.9f}, {r0.upper:.9f}) vs 1 abs 1e-3")
        inside = all(r.ref_lower < r.lower and r.upper < r.ref_upper for r in tab.rows[1:])
        c.check(inside, f"strictly inside references at all {len(tab.rows) - 1} C > 0")
    _finish(c, capsys)


def test_criterion_5_lq_control(capsys):
    with Criterion(5, "LQ control: Riccati residual, alpha=0 collapse, MC containment", 120.0) as c:
        tab = sc.lq_bounds(sc.FIG3_KAPPA_GRID, 0.5)
        res = max(tab.meta["riccati_residual"])
        c.check(res <= 1e-10, f"max Riccati residual {res:.2e} <= 1e-10")
        b = control_cost_bound(LqProblem.example(2.0), 0.0)
        gap = max(abs(b.lower - b.baseline_exact), abs(b.upper - b.baseline_exact))
        c.check(gap <= 1e-6, f"alpha=0 gap to exact baseline {gap:.2e} <= 1e-6")
        checks = validate.lq_control(2.0, 0.5)
        sin = checks[0]
        c.check(sin["status"] != "FAIL",
                f"kappa=2 sinusoidal {sin['status']} mean {sin['mean']:.4f} in [{sin['lower']:.4f}, {sin['upper']:.4f}]")
    _finish(c, capsys)


def test_criterion_6_vasicek(capsys):
    with Criterion(6, "Vasicek: small-noise width, monotone width, MC containment", 300.0) as c:
        tab = sc.vasicek_bounds(sigma_tilde=sc.FIG5_LEFT_GRID)
        r0 = tab.rows[0]
        rel = (r0.upper - r0.lower) / r0.baseline
        c.check(rel < 1e-2, f"width/baseline at sigma_tilde=1e-3 = {rel:.2e} < 1e-2")
        w = [r.upper - r.lower for r in tab.rows]
        c.check(all(b >= a for a, b in zip(w, w[1:])), "width nondecreasing over the grid")
        cfg = validate.DEFAULTS["vasicek"]
        chk = validate.vasicek(1.0)[0]
        c.check(cfg.n_paths == 100_000 and chk["status"] != "FAIL",
                f"MC at sigma_tilde=1 (1e5 paths) {chk['status']} mean {chk['mean']:.5f} "
                f"in [{chk['lower']:.5f}, {chk['upper']:.5f}]")
    _finish(c, capsys)


def test_criterion_7_rate_drop(capsys):
    with Criterion(7, "bounded rate perturbation: references, t_f=0 collapse, kappa optimization", None) as c:
        base = 0.5 * 0.25 ** (4 / 9)
        plain = sc.rate_drop_bounds(tf_grid=sc.APPI_TF_GRID)
        opt = sc.rate_drop_bounds(tf_grid=sc.APPI_TF_GRID, kappa_optimize=True)
        r0 = plain.rows[0]
        c.check(abs(r0.baseline - base) <= 1e-10, f"baseline {r0.baseline!r} vs 0.5*0.25^(4/9) abs 1e-10")
        c.check(abs(r0.ref_lower - 0.5 * 0.25 ** (4.6 / 9)) <= 1e-10 and abs(r0.ref_upper - base) <= 1e-10,
                "comparison references abs 1e-10")
        gap = max(abs(r0.lower - base), abs(r0.upper - base), abs(opt.rows[0].lower - base),
                  abs(opt.rows[0].upper - base))
        c.check(gap <= 1e-6, f"t_f=0 collapse gap {gap:.2e} <= 1e-6")
        ok = all(o >= p for o, p in zip(opt.column("lower"), plain.column("lower")))
        c.check(ok, f"kappa-optimized lower >= plain lower at all {len(plain.rows)} t_f")
    _finish(c, capsys)


def _random_chain(rng, n):
    def stoch(k):
        m = rng.random((k, k)) + 0.05
        return m / m.sum(axis=1, keepdims=True)

    init = np.zeros(n)
    init[0] = 1.0
    return DiscreteChainPair(stoch(n), stoch(n), init, init)


def test_criterion_8_discrete_chain_oracle(capsys):
    with Criterion(8, "stopped relative entropy: enumeration = product formula, monotone, bootstrap", None) as c:
        rng = np.random.default_rng(8)
        worst, mono, boot, count = 0.0, True, True, 0
        for n in (2, 3):
            for _ in range(10):
                pair = _random_chain(rng, n)
                stop = [n - 1]
                prev = -1.0
                for N in range(0, 9):
                    exact = discrete_chain_stopped_rel_ent(pair, stop, N)
                    worst = max(worst, abs(exact - discrete_chain_stopped_rel_ent_dp(pair, stop, N)))
                    mono &= exact >= prev - 1e-15
                    prev = exact
                    p, q = stopped_path_laws(pair, stop, N)
                    q = q / q.sum()
                    G = np.log(q / p)
                    # Lambda(1 + x) = log E_q[e^{xG}]; log1p/expm1 keeps Lambda/x accurate as x -> 0
                    cgf = CgfHandle(lambda l, q=q, G=G: float(np.log1p(np.dot(q, np.expm1((l - 1) * G)))))
                    if N > 0:
                        boot &= rel_ent_bootstrap(cgf) >= exact - 1e-12
                    count += 1
        c.check(worst <= 1e-12, f"max |enumeration - product formula| = {worst:.1e} <= 1e-12 ({count} cases)")
        c.check(mono, "nondecreasing in N")
        c.check(boot, "bootstrap >= exact")
    _finish(c, capsys)


def test_criterion_9_invariant_suites(capsys):
    with Criterion(9, "invariant suites over 1000 randomized instances", 120.0) as c:
        rng = np.random.default_rng(2024)
        fails, kinds = [], {}
        for i in range(1000):
            try:
                k = inv.run_instance(i, rng)
                kinds[k] = kinds.get(k, 0) + 1
            except AssertionError as exc:
                fails.append(f"#{i}: {exc}")
        c.check(not fails, f"{1000 - len(fails)}/1000 green " + str(kinds) + (f"; {fails[:3]}" if fails else ""))
    _finish(c, capsys)
