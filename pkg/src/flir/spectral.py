"""Fourier-coefficient representation of periodic functions on [0, 1].

A function ``f`` in L2[0, 1] is stored through its coefficients
``f_k = <f, phi_k>`` with respect to ``phi_k(t) = exp(2 pi i k t)``, for
``k = -K, ..., K``. Coefficients are kept two-sided; real-valued functions
carry the ``hermitian`` flag, which is checked on construction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import AliasingError, DomainError, InvariantError, ParameterError

HERMITIAN_RTOL = 1e-12


def gamma(k):
    """Sobolev weight ``1 + (2 pi k)^2``; accepts scalars or arrays."""
    k = np.asarray(k, dtype=float)
    out = 1.0 + (2.0 * np.pi * k) ** 2
    return float(out) if out.ndim == 0 else out


def freqs(K: int) -> np.ndarray:
    """Integer frequencies ``-K..K`` in storage order."""
    return np.arange(-K, K + 1)


@dataclass(frozen=True, eq=False)
class SobolevParams:
    nu: float
    p: float
    rho: float

    def __post_init__(self):
        if not (0 <= self.nu < self.p):
            raise ParameterError(f"need 0 <= nu < p, got nu={self.nu}, p={self.p}")
        if self.rho <= 0:
            raise ParameterError(f"rho must be positive, got {self.rho}")


@dataclass(frozen=True, eq=False)
class FourierSeq:
    """Finitely supported coefficient sequence ``k -> f_k`` for ``|k| <= K``.

    ``coeffs[j]`` holds the coefficient of frequency ``j - K``.
    """

    K: int
    coeffs: np.ndarray
    hermitian: bool = False

    def __post_init__(self):
        if self.K < 0:
            raise ValueError("support bound K must be nonnegative")
        c = np.array(self.coeffs, dtype=complex)
        if c.shape != (2 * self.K + 1,):
            raise ValueError(f"expected {2 * self.K + 1} coefficients, got shape {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        if self.hermitian and not is_hermitian(c):
            raise InvariantError("coefficients are not conjugate-symmetric")

    # construction -----------------------------------------------------

    @classmethod
    def zeros(cls, K: int, hermitian: bool = True) -> "FourierSeq":
        return cls(K, np.zeros(2 * K + 1, dtype=complex), hermitian)

    @classmethod
    def from_dict(cls, mapping: Mapping[int, complex], K: int | None = None,
                  hermitian: bool | None = None) -> "FourierSeq":
        if K is None:
            K = max((abs(int(k)) for k in mapping), default=0)
        c = np.zeros(2 * K + 1, dtype=complex)
        for k, v in mapping.items():
            if abs(k) > K:
                raise ValueError(f"frequency {k} outside support bound {K}")
            c[int(k) + K] = v
        if hermitian is None:
            hermitian = is_hermitian(c)
        return cls(K, c, hermitian)

    # access -----------------------------------------------------------

    @property
    def freqs(self) -> np.ndarray:
        return freqs(self.K)

    def coeff(self, k: int) -> complex:
        if abs(k) > self.K:
            return 0j
        return complex(self.coeffs[k + self.K])

    def to_dict(self) -> dict[int, complex]:
        return {int(k): complex(v) for k, v in zip(self.freqs, self.coeffs)}

    def padded(self, K: int) -> "FourierSeq":
        """Same function with support bound ``K >= self.K``."""
        if K < self.K:
            raise ValueError("cannot pad to a smaller support bound")
        c = np.zeros(2 * K + 1, dtype=complex)
        c[K - self.K:K + self.K + 1] = self.coeffs
        return FourierSeq(K, c, self.hermitian)

    def conj(self) -> "FourierSeq":
        """Coefficients of the complex-conjugate function."""
        return FourierSeq(self.K, np.conj(self.coeffs[::-1]), self.hermitian)

    # arithmetic -------------------------------------------------------

    def _aligned(self, other: "FourierSeq"):
        K = max(self.K, other.K)
        return K, self.padded(K).coeffs, other.padded(K).coeffs

    def __add__(self, other: "FourierSeq") -> "FourierSeq":
        K, a, b = self._aligned(other)
        return FourierSeq(K, a + b, self.hermitian and other.hermitian)

    def __sub__(self, other: "FourierSeq") -> "FourierSeq":
        K, a, b = self._aligned(other)
        return FourierSeq(K, a - b, self.hermitian and other.hermitian)

    def __mul__(self, scalar) -> "FourierSeq":
        herm = self.hermitian and np.isreal(scalar)
        return FourierSeq(self.K, self.coeffs * scalar, bool(herm))

    __rmul__ = __mul__

    def allclose(self, other: "FourierSeq", atol: float = 1e-12) -> bool:
        _, a, b = self._aligned(other)
        return bool(np.allclose(a, b, rtol=0.0, atol=atol))

    # serialization ----------------------------------------------------

    def to_json_obj(self) -> dict:
        return {
            "K": int(self.K),
            "hermitian": bool(self.hermitian),
            "coeffs": [[int(k), float(v.real), float(v.imag)]
                       for k, v in zip(self.freqs, self.coeffs)],
        }

    @classmethod
    def from_json_obj(cls, obj: Mapping) -> "FourierSeq":
        K = int(obj["K"])
        c = np.zeros(2 * K + 1, dtype=complex)
        for k, re, im in obj["coeffs"]:
            if abs(k) > K:
                raise ValueError(f"frequency {k} outside support bound {K}")
            c[int(k) + K] = complex(re, im)
        return cls(K, c, bool(obj.get("hermitian", False)))

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj())

    @classmethod
    def from_json(cls, text: str) -> "FourierSeq":
        return cls.from_json_obj(json.loads(text))

    def __repr__(self):
        nz = {k: v for k, v in self.to_dict().items() if v != 0}
        return f"FourierSeq(K={self.K}, hermitian={self.hermitian}, nonzero={nz})"


def is_hermitian(c: np.ndarray) -> bool:
    scale = max(1.0, float(np.max(np.abs(c)))) if c.size else 1.0
    return bool(np.max(np.abs(c - np.conj(c[::-1])), initial=0.0) <= HERMITIAN_RTOL * scale)


def sobolev_norm_sq(f: FourierSeq, nu: float) -> float:
    """``sum_k gamma_k^nu |f_k|^2``; ``nu`` may be any real number."""
    return float(np.sum(gamma(f.freqs) ** nu * np.abs(f.coeffs) ** 2))


def inner(f: FourierSeq, g: FourierSeq) -> complex:
    """L2 inner product ``<f, g> = sum_k f_k conj(g_k)`` (Parseval)."""
    _, a, b = f._aligned(g)
    return complex(np.sum(a * np.conj(b)))


def synthesize(f: FourierSeq, grid) -> np.ndarray:
    """Evaluate ``sum_k f_k exp(2 pi i k t)`` at each grid point."""
    t = np.atleast_1d(np.asarray(grid, dtype=float))
    if np.any((t < 0.0) | (t > 1.0)) or not np.all(np.isfinite(t)):
        raise DomainError("grid points must lie in [0, 1]")
    phase = np.exp(2j * np.pi * np.outer(t, f.freqs))
    return phase @ f.coeffs


def uniform_grid(M: int) -> np.ndarray:
    """Periodic grid ``t_j = j / M``, ``j = 0..M-1``."""
    return np.arange(M) / M


def analyze(values, K: int) -> FourierSeq:
    """Approximate ``<f, phi_k>`` for ``|k| <= K`` from samples on ``uniform_grid(M)``.

    Uses the DFT scaled by ``1/M`` (the periodic trapezoid rule), which is
    exact for band-limited inputs with ``M >= 2K + 1``.
    """
    v = np.asarray(values)
    M = v.shape[-1]
    if M < 2 * K + 1:
        raise AliasingError(f"grid of size {M} cannot resolve support bound {K} (need {2 * K + 1})")
    spec = np.fft.fft(v) / M
    c = spec[np.mod(freqs(K), M)]
    real_input = np.isrealobj(v) or np.allclose(np.imag(v), 0.0)
    if real_input:
        # enforce exact conjugate symmetry lost to rounding in the FFT
        c = 0.5 * (c + np.conj(c[::-1]))
    return FourierSeq(K, c, hermitian=bool(real_input))
