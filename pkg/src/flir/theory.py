"""Index functions, link-condition checks, the balancing solver and minimax rates."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy.special import logsumexp

from .dgp import DecayFamily
from .errors import InfeasibleBalanceError, InvariantError, ParameterError
from .spectral import freqs, gamma

LOG_CLAMP = 1.0 - 1e-9


@dataclass(frozen=True)
class IndexFunction:
    """Link between eigenvalue decay and Sobolev scale.

    ``polynomial``: ``kappa(t) = t^{(p-nu)/(a+nu)}``.
    ``logarithmic``: ``kappa(t) = |log t|^{-(p-nu)/a}``, evaluated with ``t``
    clamped to ``1 - 1e-9`` so that ``|log t| > 0``.
    """

    variant: Literal["polynomial", "logarithmic"]
    a: float
    p: float
    nu: float = 0.0

    def __post_init__(self):
        if self.variant not in ("polynomial", "logarithmic"):
            raise ParameterError(f"unknown index function {self.variant!r}")
        if not self.a > 0:
            raise ParameterError("a must be positive")
        if not 0 <= self.nu < self.p:
            raise ParameterError(f"need 0 <= nu < p, got nu={self.nu}, p={self.p}")

    @classmethod
    def for_decay(cls, family: DecayFamily, p: float, nu: float = 0.0) -> "IndexFunction":
        variant = "polynomial" if family.variant == "polynomial" else "logarithmic"
        return cls(variant, family.a, p, nu)

    def kappa(self, t):
        t = np.asarray(t, dtype=float)
        if self.variant == "polynomial":
            out = t ** ((self.p - self.nu) / (self.a + self.nu))
        else:
            t = np.minimum(t, LOG_CLAMP)
            out = np.abs(np.log(t)) ** (-(self.p - self.nu) / self.a)
        return float(out) if out.ndim == 0 else out

    def phi(self, s):
        """Inverse of ``kappa``."""
        s = np.asarray(s, dtype=float)
        if self.variant == "polynomial":
            out = s ** ((self.a + self.nu) / (self.p - self.nu))
        else:
            out = np.exp(-s ** (-self.a / (self.p - self.nu)))
        return float(out) if out.ndim == 0 else out

    def log_phi(self, s):
        """``log phi(s)``, finite even where ``phi`` underflows."""
        s = np.asarray(s, dtype=float)
        if self.variant == "polynomial":
            out = (self.a + self.nu) / (self.p - self.nu) * np.log(s)
        else:
            out = -s ** (-self.a / (self.p - self.nu))
        return float(out) if out.ndim == 0 else out

    def to_json_obj(self) -> dict:
        return {"variant": self.variant, "a": self.a, "p": self.p, "nu": self.nu}


# ---------------------------------------------------------------------------
# link condition


@dataclass(frozen=True, eq=False)
class LinkReport:
    kappa: IndexFunction
    d: float
    lambda_plus: float
    ks: np.ndarray
    ratio: np.ndarray
    passed_k: np.ndarray
    minimal_d: float

    @property
    def passed(self) -> bool:
        return bool(np.all(self.passed_k))

    @property
    def failing(self) -> list[int]:
        return [int(k) for k in self.ks[~self.passed_k]]

    def to_json_obj(self) -> dict:
        return {
            "kappa": self.kappa.to_json_obj(),
            "d": self.d,
            "lambda_plus": self.lambda_plus,
            "K": int(np.max(np.abs(self.ks))),
            "passed": self.passed,
            "failing": self.failing,
            "minimal_d": None if math.isinf(self.minimal_d) else self.minimal_d,
            "ratio": [[int(k), float(r)] for k, r in zip(self.ks, self.ratio)],
        }


def check_link(lam, kappa: IndexFunction, d: float = 1.0, lambda_plus: float | None = None,
               K: int | None = None) -> LinkReport:
    """Check ``kappa(lam_k/(d g lam+)) <= gamma_k^{nu-p} <= kappa(d lam_k/(g lam+))``.

    ``lam`` is indexed ``-K'..K'`` and ``g = gamma_k^nu``. Because ``kappa`` is
    increasing this is the same as ``1/d <= r_k <= d`` with
    ``r_k = lam_k / (gamma_k^nu lam+ phi(gamma_k^{nu-p}))``, so the smallest
    admissible ``d`` is ``max_k max(r_k, 1/r_k)``. A zero ``lam_k`` makes
    ``r_k = 0`` and fails at that ``k`` for every ``d``.
    """
    lam = np.asarray(lam, dtype=float)
    Kfull = (lam.shape[0] - 1) // 2
    if lam.shape != (2 * Kfull + 1,):
        raise ParameterError("lambda must be indexed -K..K")
    if K is None:
        K = Kfull
    if K > Kfull:
        raise ParameterError(f"requested K={K} exceeds available support {Kfull}")
    lam = lam[Kfull - K:Kfull + K + 1]
    if np.any(lam < 0) or not np.all(np.isfinite(lam)):
        raise InvariantError("eigenvalues must be finite and nonnegative")
    if d < 1:
        raise ParameterError("d must be >= 1")
    if lambda_plus is None:
        lambda_plus = max(1.0, float(np.max(lam)))
    ks = freqs(K)
    g = gamma(ks)
    nu, p = kappa.nu, kappa.p
    log_r = np.full(lam.shape, -np.inf)
    pos = lam > 0
    log_r[pos] = (np.log(lam[pos]) - nu * np.log(g[pos]) - math.log(lambda_plus)
                  - kappa.log_phi(g[pos] ** (nu - p)))
    with np.errstate(over="ignore"):
        ratio = np.exp(log_r)
    log_d = math.log(d)
    passed = pos & (np.abs(log_r) <= log_d + 1e-12)
    log_min = float(np.max(np.abs(log_r)))
    minimal_d = math.exp(log_min) if log_min < 700 else math.inf
    return LinkReport(kappa, float(d), float(lambda_plus), ks, ratio, passed, minimal_d)


# ---------------------------------------------------------------------------
# balancing


@dataclass(frozen=True)
class BalanceResult:
    n: float
    kappa: IndexFunction
    kstar: int
    deltastar: float
    rate: float
    triangle: float
    balance_sum: float
    scanned: list = field(default_factory=list, repr=False)

    def to_json_obj(self) -> dict:
        return {
            "n": self.n,
            "kappa": self.kappa.to_json_obj(),
            "kstar": self.kstar,
            "deltastar": self.deltastar,
            "rate": self.rate,
            "triangle": self.triangle,
            "balance_sum": self.balance_sum,
        }


def log_balance_sum(n: float, kstar: int, kappa: IndexFunction) -> float:
    """``log sum_{|k|<=k*} gamma_{k*}^{p-nu} / (n phi(gamma_k^{nu-p}))``."""
    ks = freqs(kstar)
    e = kappa.nu - kappa.p
    terms = -kappa.log_phi(gamma(ks) ** e)
    return float(-e * math.log(gamma(kstar)) - math.log(n) + logsumexp(terms))


def balance(n: float, kappa: IndexFunction, triangle_max: float = math.inf,
            kmax: int = 100_000) -> BalanceResult:
    """Pick the cut-off ``k* >= 1`` whose balancing sum is closest to one (log scale).

    The sum is strictly increasing in ``k*``, so the scan stops at the first
    ``k*`` with sum ``>= 1``. The achieved bracket factor ``max(S, 1/S)`` is
    returned as ``triangle``; if it exceeds ``triangle_max`` an
    :class:`InfeasibleBalanceError` is raised.
    """
    if n < 2:
        raise ParameterError("n must be >= 2")
    if triangle_max < 1:
        raise ParameterError("triangle_max must be >= 1")
    scanned = []
    best_k, best_log = None, math.inf
    for k in range(1, kmax + 1):
        ls = log_balance_sum(n, k, kappa)
        scanned.append((k, ls))
        if abs(ls) < abs(best_log):
            best_k, best_log = k, ls
        if ls >= 0:
            break
    triangle = math.exp(abs(best_log))
    if abs(best_log) > math.log(triangle_max):
        raise InfeasibleBalanceError(
            f"no k* brackets the balancing sum within {triangle_max}; "
            f"best k*={best_k} with sum {math.exp(best_log):.4g}",
            best_sum=math.exp(best_log), best_kstar=best_k)
    s = gamma(best_k) ** (kappa.nu - kappa.p)
    deltastar = kappa.phi(s)
    # kappa(phi(s)) = s; evaluating kappa directly would lose it to underflow
    rate = float(s)
    return BalanceResult(float(n), kappa, best_k, float(deltastar), rate, triangle,
                         math.exp(best_log), scanned)


# ---------------------------------------------------------------------------
# rates


def rate_exponent(a: float, p: float, nu: float = 0.0) -> float:
    """Exponent ``-2(p-nu)/(2(p+a)+1)`` of the polynomial-decay minimax rate."""
    return -2.0 * (p - nu) / (2.0 * (p + a) + 1.0)


def minimax_rate(case, n: float, a: float, p: float, nu: float = 0.0) -> float:
    """``n^{-2(p-nu)/(2(p+a)+1)}`` (polynomial) or ``(log n)^{-(p-nu)/a}`` (exponential)."""
    if not 0 <= nu < p:
        raise ParameterError(f"need 0 <= nu < p, got nu={nu}, p={p}")
    if not a > 0:
        raise ParameterError("a must be positive")
    if n < 2:
        raise ParameterError("n must be >= 2")
    variant = case.variant if isinstance(case, DecayFamily) else case
    if variant == "polynomial":
        return float(n ** rate_exponent(a, p, nu))
    if variant in ("exponential", "logarithmic"):
        return float(math.log(n) ** (-(p - nu) / a))
    raise ParameterError(f"unknown decay case {case!r}")
