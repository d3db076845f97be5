"""End-to-end acceptance checks, one test per criterion.

Each test records a ``PASS``/``FAIL`` line that is printed in the pytest
terminal summary, then asserts.
"""

import math
import time

import numpy as np
import pytest

from conftest import BERNOULLI_GRID, EPS_GRID
from dpevalues.batch import calibrate, calibrate_for, release
from dpevalues.distributions import GaussianDistribution, TestingPair, bernoulli
from dpevalues.dpsprt import DpSprtConfig, run_dpsprt
from dpevalues.harness import ExperimentConfig, plan, run_compare
from dpevalues.optimal import optimal_evariable, rate
from dpevalues.rng import ObservationStream, derive_seed
from dpevalues.sequential import build_schedule, optimal_eprocess, run_one_sided_test, simulate_finite_paths
from dpevalues.tslr import epsilon_star, tslr_evariable
from oracles import batch_objective_grid, bernoulli_dual_grid, kl_bernoulli, schedule_closed_form, sprt_loop

RESULTS = []

BERN_PAIRS = [(p, q) for p in BERNOULLI_GRID for q in BERNOULLI_GRID if p != q]


def criterion(k, ok, detail):
    RESULTS.append(f"{'PASS' if ok else 'FAIL'} criterion {k}: {detail}")
    assert ok, detail


def mean_se(x):
    x = np.asarray(x, dtype=float)
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(len(x)))


def test_criterion_01_duality():
    start = time.perf_counter()
    worst = 0.0
    for p, q in BERN_PAIRS:
        pair = TestingPair(bernoulli(p), bernoulli(q))
        for eps in EPS_GRID:
            worst = max(worst, abs(rate(pair, eps) - bernoulli_dual_grid(p, q, eps)))
    elapsed = time.perf_counter() - start
    criterion(1, worst <= 1e-6 and elapsed < 60,
              f"max |primal - grid dual| = {worst:.2e} (tol 1e-6) over {len(BERN_PAIRS) * 5} cases, {elapsed:.1f}s")


def test_criterion_02_calibration():
    worst_b = 0.0
    for p, q in BERN_PAIRS:
        pair = TestingPair(bernoulli(p), bernoulli(q))
        for eps in EPS_GRID:
            worst_b = max(worst_b, abs(optimal_evariable(pair, eps).null_mean() - 1.0))
    gpair = TestingPair(GaussianDistribution(0.0, 1.0), GaussianDistribution(1.0, 1.0))
    worst_g = max(abs(optimal_evariable(gpair, eps).null_mean() - 1.0) for eps in (0.5, 1.0, 2.0))
    criterion(2, worst_b <= 1e-10 and worst_g <= 1e-7,
              f"Bernoulli max |E^P[E*]-1| = {worst_b:.2e} (tol 1e-10); Gaussian {worst_g:.2e} (tol 1e-7)")


def test_criterion_03_batch_evalue():
    start = time.perf_counter()
    pair = TestingPair(bernoulli(0.3), bernoulli(0.7))
    ev = optimal_evariable(pair, 1.0)
    n, trials = 50, 10**5
    cal = calibrate_for(ev, 1.0, n)
    vals = np.empty(trials)
    for i in range(trials):
        seed = derive_seed(3, i)
        x = ObservationStream(pair.null, derive_seed(seed, 0)).take(n)
        vals[i] = release(ev, x, 1.0, derive_seed(seed, 1), calibration=cal).evalue
    mean, se = mean_se(vals)
    elapsed = time.perf_counter() - start
    criterion(3, mean <= 1 + 3 * se and elapsed < 60,
              f"null mean of exp(log e) = {mean:.4f} <= 1 + 3*{se:.4f}, {trials} trials, {elapsed:.1f}s")


def test_criterion_04_batch_power_shape():
    pair = TestingPair(bernoulli(0.3), bernoulli(0.7))
    ev = optimal_evariable(pair, 1.0)
    slack, gap = [], 0.0
    for n in (10**2, 10**3, 10**4):
        cal = calibrate(ev.c_lo, ev.c_hi, 1.0, n, ev.mu)
        nm = n * ev.mu
        slack.append(cal.objective - (nm - math.log(nm)))
        best, _ = batch_objective_grid(ev.c_lo, ev.c_hi, 1.0, n, ev.mu)
        gap = max(gap, best - cal.objective)
    ok = min(slack) >= -10 and gap <= 1e-8
    criterion(4, ok, f"objective - (n mu - log n mu) = {', '.join(f'{s:.3f}' for s in slack)} (>= -10); "
                     f"grid optimum exceeds golden section by {gap:.1e} (<= 1e-8)")


def test_criterion_05_schedule():
    worst = 0.0
    for mu in (0.01, 0.1, 0.5):
        for rho in (1.5, 3.0, 10.0):
            s = build_schedule(1.0, 1.0, mu, rho, horizon=1e300)
            for j in range(1, 21):
                ref = schedule_closed_form(1.0, mu, rho, s.lam, j)
                worst = max(worst, abs(s.t[j - 1] - ref) / ref)
    criterion(5, worst <= 1e-6, f"max relative recurrence/closed-form gap {worst:.2e} (tol 1e-6)")


def test_criterion_06_supermartingale_and_type_one():
    start = time.perf_counter()
    pair = TestingPair(bernoulli(0.3), bernoulli(0.7))
    proc = optimal_eprocess(pair, 1.0, 3.0, horizon=10**4)
    b, log_e = simulate_finite_paths(proc.schedule, proc.evar, pair.null, 10**5, 6, horizon=1000)
    vals = np.exp(log_e)
    means = vals.mean(0)
    ses = vals.std(0, ddof=1) / math.sqrt(len(vals))
    mart_ok = bool(np.all(means <= 1 + 3 * ses))

    trials = 2000
    hits = 0
    for s in range(trials):
        stream = ObservationStream(pair.null, derive_seed(66, s))
        res = run_one_sided_test(pair, 1.0, 3.0, 1 / 40, stream, max_n=10**4, seed=s, process=proc)
        hits += res.decision == "reject"
    rate_ = hits / trials
    se = math.sqrt((1 / 40) * (39 / 40) / trials)
    elapsed = time.perf_counter() - start
    criterion(6, mart_ok and rate_ <= 1 / 40 + 3 * se and elapsed < 600,
              f"max boundary mean {means.max():.4f} over {len(b)} boundaries <= 1+3SE: {mart_ok}; "
              f"type-I {rate_:.4f} <= {1 / 40 + 3 * se:.4f}; {elapsed:.1f}s")


def test_criterion_07_stopping_inequality():
    pair = TestingPair(bernoulli(0.3), bernoulli(0.7))
    rho = 3.0
    proc = optimal_eprocess(pair, 1.0, rho)
    mu, t1 = proc.evar.mu, proc.schedule.t1
    d, ns = [], []
    for s in range(500):
        res = run_one_sided_test(pair, 1.0, rho, 1 / 40, seed=derive_seed(77, s), process=proc, min_time=t1)
        assert res.decision == "reject"
        ns.append(res.stopping_time)
        d.append(res.log_e - res.stopping_time * mu / rho)
    m, se = mean_se(d)
    criterion(7, m >= -3 * se,
              f"mean log e_N - mean(N) mu/rho = {m:.3f} >= -3*{se:.3f} (mean N {np.mean(ns):.1f}, t1 {t1:.2f})")


def test_criterion_08_dominance():
    start = time.perf_counter()
    cfg = ExperimentConfig()
    result = run_compare(cfg, write=False)
    strong = [c for c in result.cells if c["epsilon"] >= 1 and abs(c["q"] - 0.3) >= 0.3 - 1e-9]
    frac = result.dominance_fraction
    strong_ok = all(c["dominates"] for c in strong)
    elapsed = time.perf_counter() - start
    criterion(8, frac >= 0.9 and strong_ok and elapsed < 900,
              f"e-process median smaller in {frac:.0%} of {len(result.cells)} cells (>= 90%), "
              f"{sum(c['dominates'] for c in strong)}/{len(strong)} strong-signal cells; {elapsed:.1f}s")


def test_criterion_09_tslr_constants():
    e_star, coef = epsilon_star()
    worst = -math.inf
    for p, q in BERN_PAIRS:
        pair = TestingPair(bernoulli(p), bernoulli(q))
        for eps in EPS_GRID:
            worst = max(worst, tslr_evariable(pair, eps).null_mean(), tslr_evariable(pair, eps, extended=False).null_mean())
    ok = abs(e_star - 2.334) <= 1e-3 and abs(coef - 0.221) <= 1e-3 and worst <= 1 + 1e-12
    criterion(9, ok, f"eps* = {e_star:.6f}, coefficient = {coef:.6f}, max E^P[tsLR] = {worst:.12f}")


def test_criterion_10_baseline_fidelity():
    pair = TestingPair(bernoulli(0.3), bernoulli(0.7))
    cfg = DpSprtConfig(1.0, 1 / 40, 1 / 40, subsample_rate=1.0, noise=False)
    mismatches = 0
    for s in range(1000):
        x = ObservationStream(pair.alt if s % 2 else pair.null, derive_seed(10, s)).take(2000)
        res = run_dpsprt(pair, cfg, x, max_n=2000, seed=s)
        mismatches += (res.decision, res.stopping_time) != sprt_loop(pair.log_lr(x), cfg.upper, cfg.lower)
    criterion(10, mismatches == 0, f"{mismatches} mismatches against the SPRT oracle on 1000 streams")


def test_criterion_11_planner():
    pair = TestingPair(bernoulli(0.3), bernoulli(0.7))
    rep = plan(1 / 40, 1 / 40, pair, 1.0)
    numerator = rep.bound * rep.rate
    err = abs(numerator - float(kl_bernoulli(39 / 40, 1 / 40)))
    criterion(11, err <= 1e-12, f"|numerator - KL(Bern(39/40)||Bern(1/40))| = {err:.1e} (tol 1e-12)")
