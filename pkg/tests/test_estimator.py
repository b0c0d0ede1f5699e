import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flir.dgp import DecayFamily, Sample, SpectrumSpec, from_decay, make_slope, simulate_sample
from flir.errors import ConsistencyWarning, ParameterError
from flir.estimator import (estimate_beta, estimate_cw, estimate_instrument, estimate_lambda_g,
                            lambda_identity_residual, oracle_beta_reg, population_pipeline,
                            run_pipeline, threshold_exponent, threshold_rule)
from flir.spectral import FourierSeq, SobolevParams, gamma
from naive import naive_estimate, records_of


def make(K=3, n=200, endo=0.3, seed=0, case="polynomial"):
    spec = from_decay(DecayFamily(case, 1.0), K)
    beta = make_slope(SobolevParams(0.0, 2.0, 1.0), K)
    return spec, beta, simulate_sample(spec, beta, 0.5, n, endo, rng=seed)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 3), st.integers(2, 16), st.integers(0, 2 ** 32 - 1),
       st.floats(1e-3, 0.6), st.sampled_from([0.0, 0.5, 1.0]))
def test_matches_naive_transcription(K, n, seed, alpha, nu):
    _, _, s = make(K, n, seed=seed)
    est = estimate_beta(s, alpha, nu)
    ref = naive_estimate(records_of(s), alpha, nu)
    for k, v in ref.items():
        assert abs(est.coeff(k) - v) <= 1e-10


def test_stage_functions_compose():
    _, _, s = make()
    chat, what = estimate_cw(s)
    inst = estimate_instrument(s, chat, what, 0.1)
    lamhat, ghat = estimate_lambda_g(s, inst)
    fit = run_pipeline(s, 0.1)
    np.testing.assert_array_equal(lamhat, fit.lamhat)
    np.testing.assert_array_equal(ghat, fit.ghat)
    assert lambda_identity_residual(lamhat, chat, what, 0.1) < 1e-12
    with pytest.raises(ParameterError):
        estimate_lambda_g(s, inst[:, :3])


def test_identity_violation_detected():
    _, _, s = make()
    chat, what = estimate_cw(s)
    lamhat, _ = estimate_lambda_g(s, estimate_instrument(s, chat, what, 0.1))
    assert lambda_identity_residual(lamhat * 1.01, chat, what, 0.1) > 1e-4


def test_huge_alpha_gives_zero():
    _, _, s = make()
    est = estimate_beta(s, 1e9)
    assert np.all(est.coeffs == 0)
    with pytest.raises(ParameterError):
        estimate_beta(s, 0.0)


def test_estimate_is_real_function():
    _, _, s = make(K=5, n=300)
    assert estimate_beta(s, 0.05).hermitian


def test_linear_in_response():
    _, _, s = make()
    a = estimate_beta(s, 0.05).coeffs
    b = estimate_beta(s.scaled(-3.0), 0.05).coeffs
    np.testing.assert_allclose(b, -3.0 * a, atol=1e-12)


def test_active_set_shrinks_with_alpha():
    _, _, s = make(K=6, n=400)
    prev = None
    for alpha in np.geomspace(1e-4, 2.0, 25):
        active = run_pipeline(s, alpha, 1.0).active
        if prev is not None:
            assert np.all(active <= prev)
        prev = active


def test_active_set_shrinks_with_nu():
    _, _, s = make(K=6, n=400)
    a0 = run_pipeline(s, 0.01, 0.0).active
    a1 = run_pipeline(s, 0.01, 1.0).active
    assert np.all(a1 <= a0)


def test_population_pipeline_is_oracle():
    spec = from_decay(DecayFamily("polynomial", 1.0), 6)
    beta = make_slope(SobolevParams(0.0, 2.0, 1.0), 6)
    for alpha in (0.01, 0.05, 0.2):
        pop = population_pipeline(spec, beta, alpha)
        assert pop.beta.allclose(oracle_beta_reg(spec, beta, alpha), atol=1e-14)


def test_population_pipeline_first_stage_cut():
    # lambda_1 = 1 > w_1 = 1/2: a threshold between them drops k=1 in stage one only
    spec = from_decay(DecayFamily("polynomial", 1.0), 2)
    beta = make_slope(SobolevParams(0.0, 2.0, 1.0), 2)
    pop = population_pipeline(spec, beta, 0.6)
    assert pop.beta.coeff(1) == 0
    assert oracle_beta_reg(spec, beta, 0.6).coeff(1) != 0


def test_oracle_beta_reg():
    spec = from_decay(DecayFamily("polynomial", 1.0), 4)
    beta = make_slope(SobolevParams(0.0, 2.0, 1.0), 4)
    reg = oracle_beta_reg(spec, beta, 0.2)
    assert [k for k, v in reg.to_dict().items() if v != 0] == [-2, -1, 0, 1, 2]
    reg1 = oracle_beta_reg(spec, beta, 0.2, nu=1.0)
    kept = spec.lam / gamma(spec.freqs) >= 0.2
    assert [k for k, v in reg1.to_dict().items() if v != 0] == list(spec.freqs[kept])


def test_threshold_rule_values():
    assert threshold_exponent("polynomial", 1.0, 2.0, 0.0) == pytest.approx(2 / 7)
    assert threshold_exponent("exponential") == 0.25
    assert threshold_exponent(None) == pytest.approx(1 / 3)
    assert threshold_rule("polynomial", 1000, 1.0, 2.0) == pytest.approx(1000 ** (-2 / 7))
    assert threshold_rule(None, 8000, c=2.0) == pytest.approx(2.0 / 20.0)
    with pytest.raises(ParameterError):
        threshold_rule("polynomial", 1000)
    with pytest.raises(ParameterError):
        threshold_rule(None, 1)


def test_threshold_consistency_warning():
    with pytest.warns(ConsistencyWarning):
        threshold_rule("polynomial", 1000, 1.0, 2.0, nu=1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        threshold_rule("polynomial", 1000, 1.0, 2.0, nu=0.0)


def test_single_frequency_noiseless_exact():
    # with K = 0 there are no cross-frequency sample terms
    spec = from_decay(DecayFamily("polynomial", 1.0), 1)
    spec0 = SpectrumSpec(0, spec.x[1:2], spec.w[1:2], spec.c[1:2])
    beta = FourierSeq(0, [0.7], True)
    s = simulate_sample(spec0, beta, 1e-12, 500, rng=3)
    assert abs(estimate_beta(s, 1e-3).coeff(0) - 0.7) < 1e-9


def test_sample_without_spec():
    _, _, s = make()
    bare = Sample(s.y, s.x, s.w)
    np.testing.assert_array_equal(estimate_beta(bare, 0.1).coeffs, estimate_beta(s, 0.1).coeffs)
