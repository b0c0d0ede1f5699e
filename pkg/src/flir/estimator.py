"""Two-stage spectral cut-off estimator of the slope function.

Stage one estimates the optimal linear instrument frequency by frequency,
keeping only frequencies with ``w^_k >= alpha``. Stage two regresses ``Y`` on
the estimated instrument and keeps frequencies with
``lambda^_k / gamma_k^nu >= alpha``. The same ``alpha`` is used in both stages.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .dgp import DecayFamily, Sample, SpectrumSpec
from .errors import ConsistencyWarning, InvariantError, ParameterError
from .spectral import FourierSeq, freqs, gamma, is_hermitian

IDENTITY_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class EstimatorIntermediates:
    alpha: float
    nu: float
    chat: np.ndarray
    what: np.ndarray
    lamhat: np.ndarray
    ghat: np.ndarray
    first_stage: np.ndarray
    active: np.ndarray
    beta: FourierSeq
    identity_residual: float = 0.0

    @property
    def K(self) -> int:
        return self.beta.K

    @property
    def active_frequencies(self) -> list[int]:
        return [int(k) for k in freqs(self.K)[self.active]]

    def diagnostics(self) -> dict:
        ks = freqs(self.K)
        return {
            "alpha": float(self.alpha),
            "nu": float(self.nu),
            "active_frequencies": self.active_frequencies,
            "lamhat": [[int(k), float(v)] for k, v in zip(ks, self.lamhat)],
            "ghat": [[int(k), float(v.real), float(v.imag)] for k, v in zip(ks, self.ghat)],
            "identity_residual": float(self.identity_residual),
        }


def _check_alpha(alpha):
    if not alpha > 0:
        raise ParameterError(f"threshold alpha must be positive, got {alpha}")


def estimate_cw(sample: Sample) -> tuple[np.ndarray, np.ndarray]:
    """``c^_k = mean_i conj(X_ik) W_ik`` and ``w^_k = mean_i |W_ik|^2``."""
    if sample.n < 1:
        raise ParameterError("cannot estimate moments from an empty sample")
    chat = np.mean(np.conj(sample.x) * sample.w, axis=0)
    what = np.mean(np.abs(sample.w) ** 2, axis=0)
    return chat, what


def _instrument_weights(chat, what, alpha):
    keep = what >= alpha
    ratio = np.zeros_like(chat, dtype=complex)
    ratio[keep] = np.conj(chat[keep]) / what[keep]
    return ratio, keep


def estimate_instrument(sample: Sample, chat, what, alpha: float) -> np.ndarray:
    """Rows ``<W^_i, phi_k> = conj(c^_k)/w^_k 1{w^_k >= alpha} W_ik``."""
    _check_alpha(alpha)
    ratio, _ = _instrument_weights(np.asarray(chat), np.asarray(what), alpha)
    return sample.w * ratio


def estimate_lambda_g(sample: Sample, instrument) -> tuple[np.ndarray, np.ndarray]:
    """``lambda^_k = mean_i |W^_ik|^2`` and ``g^_k = mean_i Y_i W^_ik``."""
    instrument = np.asarray(instrument)
    if instrument.shape != sample.x.shape:
        raise ParameterError(
            f"instrument shape {instrument.shape} does not match sample {sample.x.shape}")
    lamhat = np.mean(np.abs(instrument) ** 2, axis=0)
    ghat = np.mean(sample.y[:, None] * instrument, axis=0)
    return lamhat, ghat


def lambda_identity_residual(lamhat, chat, what, alpha) -> float:
    """Scaled deviation from ``lambda^_k = |c^_k|^2 / w^_k 1{w^_k >= alpha}``."""
    keep = what >= alpha
    expected = np.zeros_like(lamhat)
    expected[keep] = np.abs(chat[keep]) ** 2 / what[keep]
    scale = max(1.0, float(np.max(np.abs(expected), initial=0.0)))
    return float(np.max(np.abs(lamhat - expected), initial=0.0)) / scale


def _cut_off(lamhat, ghat, alpha, nu, K) -> tuple[FourierSeq, np.ndarray]:
    active = lamhat / gamma(freqs(K)) ** nu >= alpha
    coef = np.zeros(2 * K + 1, dtype=complex)
    coef[active] = ghat[active] / lamhat[active]
    return FourierSeq(K, coef, hermitian=is_hermitian(coef)), active


def run_pipeline(sample: Sample, alpha: float, nu: float = 0.0) -> EstimatorIntermediates:
    """Full two-stage estimate together with its per-frequency intermediates."""
    _check_alpha(alpha)
    if nu < 0:
        raise ParameterError("nu must be nonnegative")
    chat, what = estimate_cw(sample)
    ratio, first = _instrument_weights(chat, what, alpha)
    instrument = sample.w * ratio
    lamhat, ghat = estimate_lambda_g(sample, instrument)
    resid = lambda_identity_residual(lamhat, chat, what, alpha)
    if resid > IDENTITY_TOL:
        raise InvariantError(f"lambda^ identity violated by {resid:.3e}")
    beta, active = _cut_off(lamhat, ghat, alpha, nu, sample.K)
    return EstimatorIntermediates(alpha, nu, chat, what, lamhat, ghat, first, active, beta, resid)


def estimate_beta(sample: Sample, alpha: float, nu: float = 0.0) -> FourierSeq:
    return run_pipeline(sample, alpha, nu).beta


def population_pipeline(spec: SpectrumSpec, beta: FourierSeq, alpha: float,
                        nu: float = 0.0) -> EstimatorIntermediates:
    """The pipeline with every sample mean replaced by its population value."""
    _check_alpha(alpha)
    b = _on_support(spec, beta)
    chat = spec.c.astype(complex)
    what = spec.w.copy()
    ratio, first = _instrument_weights(chat, what, alpha)
    lamhat = np.abs(ratio) ** 2 * what
    # E[Y W_k] = beta_k c_k since E[U W_k] = 0 and coefficients are uncorrelated across k
    ghat = ratio * b * chat
    est, active = _cut_off(lamhat, ghat, alpha, nu, spec.K)
    return EstimatorIntermediates(alpha, nu, chat, what, lamhat, ghat, first, active, est)


def _on_support(spec: SpectrumSpec, beta: FourierSeq) -> np.ndarray:
    if beta.K > spec.K:
        raise ParameterError("slope support exceeds the spectrum support")
    return beta.padded(spec.K).coeffs


def oracle_beta_reg(spec: SpectrumSpec, beta: FourierSeq, alpha: float,
                    nu: float = 0.0) -> FourierSeq:
    """Regularized solution for known spectra: ``beta_k 1{lambda_k / gamma_k^nu >= alpha}``.

    With ``g_k = beta_k lambda_k`` the ratio ``g_k / lambda_k`` is ``beta_k``
    exactly, so it is used directly.
    """
    _check_alpha(alpha)
    b = _on_support(spec, beta)
    keep = spec.lam / gamma(spec.freqs) ** nu >= alpha
    return FourierSeq(spec.K, np.where(keep, b, 0.0), beta.hermitian)


# ---------------------------------------------------------------------------
# threshold choice


def threshold_exponent(case, a: float | None = None, p: float | None = None,
                       nu: float = 0.0) -> float:
    """Exponent ``e`` in ``alpha = c n^{-e}`` for the given decay case."""
    variant = case.variant if isinstance(case, DecayFamily) else case
    if variant is None or variant == "generic":
        return 1.0 / 3.0
    if variant == "exponential":
        return 0.25
    if variant == "polynomial":
        if isinstance(case, DecayFamily) and a is None:
            a = case.a
        if a is None or p is None:
            raise ParameterError("polynomial threshold needs a and p")
        return 2.0 * (a + nu) / (2.0 * (p + a) + 1.0)
    raise ParameterError(f"unknown decay case {case!r}")


def threshold_rule(case, n: int, a: float | None = None, p: float | None = None,
                   nu: float = 0.0, c: float = 1.0) -> float:
    """Threshold ``alpha = c n^{-e}``.

    ``e`` is ``2(a+nu)/(2(p+a)+1)`` for polynomial decay, ``1/4`` for
    exponential decay and ``1/3`` when the case is unknown (``None``).
    A :class:`ConsistencyWarning` is issued when ``e >= 1/2``, since then
    ``alpha^2 n`` no longer diverges.
    """
    if n < 2:
        raise ParameterError("n must be >= 2")
    if not c > 0:
        raise ParameterError("threshold constant must be positive")
    e = threshold_exponent(case, a, p, nu)
    if e >= 0.5:
        warnings.warn(
            f"threshold exponent {e:.4f} >= 1/2: (alpha^2 n)^-1 does not vanish",
            ConsistencyWarning, stacklevel=2)
    return float(c * n ** (-e))
