"""Acceptance criteria, one test per criterion; each prints a pass/fail line."""

import math
import time

import numpy as np
import pytest

from flir.dgp import DecayFamily, RecordStream, from_decay, make_slope, simulate_sample
from flir.estimator import estimate_beta, run_pipeline
from flir.experiments import ExperimentConfig, mc_risk
from flir.spectral import (FourierSeq, SobolevParams, analyze, sobolev_norm_sq, synthesize,
                           uniform_grid)
from flir.theory import IndexFunction, balance, check_link
from naive import naive_estimate, records_of

RATE_TOL = 0.15
BALANCE_TOL = 0.05
N_GRID = (500, 1000, 2000, 4000, 8000)


def rate_config(**kw):
    base = dict(case="polynomial", a=1.0, p=2.0, nu=0.0, rho=1.0, sigma=0.5, endo=0.5,
                n_grid=N_GRID, reps=200)
    return ExperimentConfig(**(base | kw))


@pytest.fixture(scope="module")
def poly_nu0():
    return mc_risk(rate_config())


def test_criterion_1_naive_oracle(record_criterion):
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    worst = 0.0
    for i in range(50):
        K = int(rng.integers(1, 4))
        n = int(rng.integers(2, 17))
        nu = float(rng.choice([0.0, 0.5, 1.0]))
        alpha = float(rng.uniform(1e-3, 0.5))
        spec = from_decay(DecayFamily(str(rng.choice(["polynomial", "exponential"])), 1.0), K)
        beta = make_slope(SobolevParams(0.0, 2.0, 1.0), K)
        s = simulate_sample(spec, beta, 0.5, n, float(rng.uniform(0, 0.9)), rng=RecordStream(i))
        est = estimate_beta(s, alpha, nu)
        ref = naive_estimate(records_of(s), alpha, nu)
        worst = max(worst, max(abs(est.coeff(k) - v) for k, v in ref.items()))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-10 and elapsed < 5.0
    record_criterion(1, ok, f"max |diff| {worst:.2e} (tol 1e-10), {elapsed:.2f}s (< 5s)")
    assert ok


def test_criterion_2_noiseless_recovery(record_criterion):
    t0 = time.perf_counter()
    K = 8
    spec = from_decay(DecayFamily("polynomial", 1.0), K).perfectly_correlated()
    beta = make_slope(SobolevParams(0.0, 2.0, 1.0), K)
    s = simulate_sample(spec, beta, 1e-12, 5000, endo=0.0, rng=RecordStream(7))
    alpha = 0.5 * float(np.min(spec.lam))
    err = sobolev_norm_sq(estimate_beta(s, alpha) - beta, 0.0)
    elapsed = time.perf_counter() - t0
    ok = err < 1e-6 and elapsed < 10.0
    record_criterion(2, ok, f"||beta_hat - beta||^2 = {err:.3e} (tol 1e-6), {elapsed:.2f}s")
    assert ok


def test_criterion_3_polynomial_rate(record_criterion, poly_nu0):
    target = -4 / 7
    ok = abs(poly_nu0.slope - target) <= RATE_TOL
    record_criterion(3, ok, f"slope {poly_nu0.slope:.4f}, CI [{poly_nu0.ci[0]:.3f}, "
                            f"{poly_nu0.ci[1]:.3f}], target {target:.4f} +- {RATE_TOL}")
    assert ok


def test_criterion_4_derivative_rate(record_criterion, poly_nu0):
    rep = mc_risk(rate_config(nu=1.0))
    target = -2 / 7
    slope_ok = abs(rep.slope - target) <= RATE_TOL
    slack = 3 * np.sqrt(rep.ses ** 2 + poly_nu0.ses ** 2)
    harder = bool(np.all(rep.mean_risks > poly_nu0.mean_risks - slack))
    ok = slope_ok and harder
    record_criterion(4, ok, f"slope {rep.slope:.4f}, target {target:.4f} +- {RATE_TOL}; "
                            f"risk(nu=1) > risk(nu=0) at every n: {harder}")
    assert ok


def test_criterion_5_exponential_regime(record_criterion):
    rep = mc_risk(rate_config(case="exponential", K=12))
    r = rep.mean_risks
    decreasing = bool(np.all(np.diff(r) < 0))
    # largest pair (n, 8n) on the grid
    n_big = rep.ns[-1]
    n_small = n_big // 8
    i_small = rep.ns.index(n_small)
    ratio = r[i_small] / r[-1]
    target = (math.log(n_big) / math.log(n_small)) ** 2
    ratio_ok = target / 2 <= ratio <= target * 2
    ok = decreasing and ratio_ok
    record_criterion(5, ok, f"risks {np.array2string(r, precision=4)}, strictly decreasing: "
                            f"{decreasing}; risk({n_small})/risk({n_big}) = {ratio:.3f}, "
                            f"target {target:.3f} within factor 2")
    assert ok


def test_criterion_6_consistency(record_criterion):
    rep = mc_risk(rate_config(threshold="generic", threshold_const=1.0))
    lo, hi = rep.points[0], rep.points[-1]
    margin = 3 * math.hypot(lo.se, hi.se)
    ok = hi.mean_risk + margin < lo.mean_risk
    record_criterion(6, ok, f"risk(8000) = {hi.mean_risk:.4f}, risk(500) = {lo.mean_risk:.4f}, "
                            f"3 SE margin {margin:.4f}")
    assert ok


def test_criterion_7_balancing(record_criterion):
    ns = np.array([1e3, 1e4, 1e5, 1e6])
    poly = IndexFunction("polynomial", 1.0, 2.0, 0.0)
    rates = [balance(n, poly).rate for n in ns]
    slope = float(np.polyfit(np.log(ns), np.log(rates), 1)[0])
    slope_ok = abs(slope + 4 / 7) <= BALANCE_TOL
    logk = IndexFunction("logarithmic", 1.0, 2.0, 0.0)
    got = balance(1e6, logk).rate
    want = math.log(1e6) ** -2
    log_ok = want / 2 <= got <= want * 2
    ok = slope_ok and log_ok
    record_criterion(7, ok, f"polynomial slope {slope:.4f} (target -0.5714 +- {BALANCE_TOL}); "
                            f"log kappa(delta*) {got:.3e} vs (log n)^-2 {want:.3e} (factor 2)")
    assert ok


def test_criterion_8_link_checker(record_criterion):
    poly = IndexFunction("polynomial", 1.0, 2.0, 0.0)
    reps = {K: check_link(from_decay(DecayFamily("polynomial", 1.0), K).lam, poly, d=1e3)
            for K in (50, 100)}
    d50, d100 = reps[50].minimal_d, reps[100].minimal_d
    stable = math.isfinite(d50) and abs(d100 / d50 - 1) <= 0.10
    lam = from_decay(DecayFamily("polynomial", 1.0), 50).lam.copy()
    lam[50 + 7] = 0.0
    zeroed = check_link(lam, poly, d=1e3)
    ok = reps[50].passed and reps[100].passed and stable and zeroed.failing == [7]
    record_criterion(8, ok, f"minimal d {d50:.3f} (K=50), {d100:.3f} (K=100); "
                            f"zeroed k=7 fails at {zeroed.failing}")
    assert ok


def test_criterion_9_invariant_suites(record_criterion):
    rng = np.random.default_rng(99)
    checks = {}

    # Parseval / synthesis round trips and hermitian reality
    rt, herm = 0.0, 0.0
    for _ in range(20):
        K = int(rng.integers(0, 16))
        pos = rng.standard_normal(K) + 1j * rng.standard_normal(K)
        f = FourierSeq(K, np.concatenate([np.conj(pos[::-1]), [rng.standard_normal()], pos]), True)
        vals = synthesize(f, uniform_grid(2 * K + 5))
        rt = max(rt, float(np.max(np.abs(analyze(vals, K).coeffs - f.coeffs))))
        parseval = abs(np.mean(np.abs(vals) ** 2) - sobolev_norm_sq(f, 0.0))
        rt = max(rt, parseval / max(1.0, sobolev_norm_sq(f, 0.0)))
        herm = max(herm, float(np.max(np.abs(vals.imag))))
    checks["round trip"] = rt <= 1e-10
    checks["hermitian"] = herm <= 1e-10

    # DGP moments at n = 1e5 within 5 SE
    spec = from_decay(DecayFamily("polynomial", 1.0), 3)
    beta = make_slope(SobolevParams(0.0, 2.0, 1.0), 3)
    s = simulate_sample(spec, beta, 0.5, 100_000, endo=0.5, rng=RecordStream(3))
    u = (s.y - (s.x.conj() @ beta.coeffs).real) / 0.5
    moments = [(np.abs(s.x) ** 2, spec.x), (np.abs(s.w) ** 2, spec.w),
               ((np.conj(s.x) * s.w).real, spec.c), ((u[:, None] * s.w).real, 0.0)]
    lln = all(np.all(np.abs(v.mean(0) - t) <= 5 * v.std(0, ddof=1) / np.sqrt(v.shape[0]))
              for v, t in moments)
    checks["LLN"] = bool(lln)

    # thresholding monotonicity: larger alpha never adds frequencies
    mono = True
    prev = None
    for alpha in np.geomspace(1e-4, 1.0, 30):
        active = run_pipeline(s, alpha, 0.0).active
        mono &= prev is None or bool(np.all(active <= prev))
        prev = active
    checks["monotone"] = mono

    # determinism under thread-count variation
    cfg = ExperimentConfig(K=8, n_grid=(100, 200, 400), reps=16)
    checks["threads"] = mc_risk(cfg, threads=1).summary() == mc_risk(cfg, threads=7).summary()

    ok = all(checks.values())
    record_criterion(9, ok, ", ".join(f"{k} {'ok' if v else 'FAILED'}" for k, v in checks.items())
                     + f" (round trip {rt:.1e}, imag {herm:.1e})")
    assert ok
