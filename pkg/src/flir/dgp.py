"""Sampling ``(Y, X, W)`` from a jointly stationary Gaussian FLIR model.

Regressor and instrument are represented by their Fourier coefficients
``X_k = <X, phi_k>``, ``W_k = <W, phi_k>`` for ``|k| <= K``. Stationarity
makes coefficients at distinct ``k >= 0`` independent; for ``k > 0`` they are
circular complex Gaussians and the ``-k`` coefficient is the conjugate.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Literal

import numpy as np
from scipy.special import ndtri

from .errors import (
    DegenerateEndogeneityError,
    FlirError,
    InvariantError,
    ParameterError,
)
from .spectral import FourierSeq, SobolevParams, freqs, gamma

CS_RTOL = 1e-12


class SampleFormatError(FlirError, ValueError):
    def __init__(self, message, lineno=None, path=None):
        where = ""
        if path is not None:
            where += f"{path}"
        if lineno is not None:
            where += f":{lineno}"
        super().__init__(f"{where}: {message}" if where else message)
        self.lineno = lineno
        self.path = path


# ---------------------------------------------------------------------------
# spectra


@dataclass(frozen=True, eq=False)
class SpectrumSpec:
    """Per-frequency second moments of ``(X, W)``.

    ``x[j]``, ``w[j]`` are ``Var X_k`` and ``Var W_k`` and ``c[j]`` is
    ``E[conj(X_k) W_k]`` for ``k = j - K``.
    """

    K: int
    x: np.ndarray
    w: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        arrs = {}
        for name in ("x", "w", "c"):
            a = np.array(getattr(self, name), dtype=float)
            if a.shape != (2 * self.K + 1,):
                raise InvariantError(f"{name} must have length {2 * self.K + 1}, got {a.shape}")
            a.setflags(write=False)
            arrs[name] = a
            object.__setattr__(self, name, a)
        x, w, c = arrs["x"], arrs["w"], arrs["c"]
        if np.any(x <= 0) or np.any(w <= 0):
            raise InvariantError("variances x_k and w_k must be positive")
        for name, a in arrs.items():
            if not np.array_equal(a, a[::-1]):
                raise InvariantError(f"{name} must be even in k (real-valued processes)")
        excess = c ** 2 - x * w
        bad = np.flatnonzero(excess > CS_RTOL * x * w)
        if bad.size:
            k = int(bad[0]) - self.K
            raise InvariantError(f"Cauchy-Schwarz violated at k={k}: c_k^2 > x_k w_k")

    @property
    def freqs(self) -> np.ndarray:
        return freqs(self.K)

    @property
    def lam(self) -> np.ndarray:
        """Eigenvalues ``lambda_k = c_k^2 / w_k`` of the optimal-instrument covariance."""
        return self.c ** 2 / self.w

    @property
    def lambda_plus(self) -> float:
        return max(1.0, float(np.max(self.lam)))

    @property
    def tau(self) -> float:
        """``1 v sup_k lambda_k / w_k``."""
        return max(1.0, float(np.max(self.lam / self.w)))

    def correlation(self) -> np.ndarray:
        return self.c / np.sqrt(self.x * self.w)

    def to_json_obj(self) -> dict:
        return {"K": int(self.K), "x": self.x.tolist(), "w": self.w.tolist(), "c": self.c.tolist()}

    @classmethod
    def from_json_obj(cls, obj) -> "SpectrumSpec":
        return cls(int(obj["K"]), obj["x"], obj["w"], obj["c"])

    def perfectly_correlated(self) -> "SpectrumSpec":
        """Same marginal variances with ``c_k = sqrt(x_k w_k)``."""
        return SpectrumSpec(self.K, self.x, self.w, np.sqrt(self.x * self.w))


@dataclass(frozen=True)
class DecayFamily:
    """Eigenvalue decay profile: ``polynomial`` gives ``(1 v |k|)^(-2a)``,
    ``exponential`` gives ``exp(-|k|^(2a))``.

    ``x_factor`` sets ``x_k = x_factor * lambda_k`` and ``w_exponent`` sets
    ``w_k = (1 + |k|)^(-w_exponent)``.
    """

    variant: Literal["polynomial", "exponential"]
    a: float
    x_factor: float = 2.0
    w_exponent: float = 1.0

    def __post_init__(self):
        if self.variant not in ("polynomial", "exponential"):
            raise ParameterError(f"unknown decay variant {self.variant!r}")
        if not self.a > 0:
            raise ParameterError(f"decay exponent a must be positive, got {self.a}")
        if self.x_factor < 1:
            raise ParameterError("x_factor must be >= 1 so that lambda_k <= x_k")
        if self.w_exponent <= 0:
            raise ParameterError("w_exponent must be positive")

    def lam(self, k) -> np.ndarray:
        k = np.abs(np.asarray(k, dtype=float))
        if self.variant == "polynomial":
            return np.maximum(1.0, k) ** (-2.0 * self.a)
        return np.exp(-k ** (2.0 * self.a))


def from_decay(family: DecayFamily, K: int) -> SpectrumSpec:
    if K < 1:
        raise ParameterError("support bound K must be >= 1")
    k = freqs(K)
    lam = family.lam(k)
    w = (1.0 + np.abs(k)) ** (-family.w_exponent)
    c = np.sqrt(lam * w)
    x = family.x_factor * lam
    return SpectrumSpec(K, x, w, c)


# ---------------------------------------------------------------------------
# moment classes


@dataclass(frozen=True)
class MomentClassSpec:
    m: int
    eta: float
    tau: float
    Lambda: float
    d: float = 1.0

    def __post_init__(self):
        for name in ("m", "eta", "tau", "Lambda", "d"):
            if getattr(self, name) < 1:
                raise ParameterError(f"{name} must be >= 1")


def gaussian_abs_moment(m: float) -> float:
    """``E|Z|^m`` for a standard real normal ``Z``."""
    return 2.0 ** (m / 2) * math.gamma((m + 1) / 2) / math.sqrt(math.pi)


def complex_gaussian_abs_moment(m: float) -> float:
    """``E|Z|^m`` for a standard circular complex normal (``E|Z|^2 = 1``)."""
    return math.gamma(1 + m / 2)


def gaussian_eta(m: int) -> float:
    # k = 0 coefficients are real normal, k != 0 circular complex
    return max(1.0, gaussian_abs_moment(m), complex_gaussian_abs_moment(m))


def gaussian_moment_class(spec: SpectrumSpec, m: int, d: float = 1.0) -> MomentClassSpec:
    """Tightest moment-class constants satisfied by the Gaussian law of ``spec``."""
    Lambda = max(1.0, float(np.sum(spec.x)), float(np.sum(spec.w)))
    return MomentClassSpec(m=m, eta=gaussian_eta(m), tau=spec.tau, Lambda=Lambda, d=d)


def in_moment_class(spec: SpectrumSpec, mc: MomentClassSpec) -> bool:
    return (
        mc.eta >= gaussian_eta(mc.m)
        and mc.tau >= spec.tau
        and mc.Lambda >= max(float(np.sum(spec.x)), float(np.sum(spec.w)))
    )


# ---------------------------------------------------------------------------
# slope


def make_slope(params: SobolevParams, K: int, fill: float = 1.0) -> FourierSeq:
    """Slope with ``beta_k = b gamma_k^{-(p+1)/2}`` scaled to ``||beta||_p^2 = fill * rho``."""
    if K < 0:
        raise ParameterError("support bound K must be nonnegative")
    if not 0 < fill <= 1:
        raise ParameterError("fill must lie in (0, 1]")
    g = gamma(freqs(K))
    profile = g ** (-(params.p + 1) / 2)
    b = math.sqrt(fill * params.rho / float(np.sum(g ** params.p * profile ** 2)))
    return FourierSeq(K, b * profile.astype(complex), hermitian=True)


# ---------------------------------------------------------------------------
# random streams


class RecordStream:
    """Counter-based normal stream: record ``i`` is a pure function of ``(seed, key, i)``.

    Backed by Philox; each record consumes a fixed block of 64-bit words, so
    any range of records can be generated independently and in any order.
    """

    def __init__(self, seed: int, *key: int):
        self.seed = int(seed)
        self.key = tuple(int(k) for k in key)
        ss = np.random.SeedSequence([self.seed, *self.key])
        self._philox_key = ss.generate_state(2, np.uint64)

    def normals(self, start: int, stop: int, width: int) -> np.ndarray:
        block = -(-width // 4) * 4  # Philox emits 4 words per counter step
        bg = np.random.Philox(key=self._philox_key)
        bg.advance(start * block // 4)
        raw = bg.random_raw((stop - start) * block)
        u = ((raw >> np.uint64(11)).astype(float) + 0.5) * 2.0 ** -53
        return ndtri(u).reshape(stop - start, block)[:, :width]

    def __repr__(self):
        return f"RecordStream(seed={self.seed}, key={self.key})"


def _normals(rng, n: int, width: int) -> np.ndarray:
    if isinstance(rng, RecordStream):
        return rng.normals(0, n, width)
    if rng is None or isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(rng)
    return rng.standard_normal((n, width))


def _record_width(K: int) -> int:
    # X_0, W_0 innovations, 4 reals per positive frequency, one model error
    return 2 + 4 * K + 1


def _pairs_from_normals(spec: SpectrumSpec, z: np.ndarray):
    K = spec.K
    n = z.shape[0]
    pos = slice(K, 2 * K + 1)
    x, w = spec.x[pos], spec.w[pos]
    r = spec.correlation()[pos]
    s2 = 1.0 - r ** 2
    # snap numerically perfect correlation to exact
    perfect = s2 <= 64 * np.finfo(float).eps
    s = np.where(perfect, 0.0, np.sqrt(np.clip(s2, 0.0, None)))
    r = np.where(perfect, np.sign(r), r)

    z1 = np.empty((n, K + 1), dtype=complex)
    z2 = np.empty((n, K + 1), dtype=complex)
    z1[:, 0] = z[:, 0]
    z2[:, 0] = z[:, 1]
    if K:
        q = z[:, 2:2 + 4 * K].reshape(n, K, 4) / math.sqrt(2.0)
        z1[:, 1:] = q[..., 0] + 1j * q[..., 1]
        z2[:, 1:] = q[..., 2] + 1j * q[..., 3]

    xp = np.sqrt(x) * z1
    wp = np.sqrt(w) * (r * z1 + s * z2)
    X = np.empty((n, 2 * K + 1), dtype=complex)
    W = np.empty_like(X)
    X[:, pos] = xp
    W[:, pos] = wp
    X[:, :K] = np.conj(xp[:, :0:-1])
    W[:, :K] = np.conj(wp[:, :0:-1])
    return X, W


def sample_pair(spec: SpectrumSpec, rng=None) -> tuple[FourierSeq, FourierSeq]:
    """Draw one ``(X, W)`` coefficient pair."""
    z = _normals(rng, 1, _record_width(spec.K))
    X, W = _pairs_from_normals(spec, z)
    return FourierSeq(spec.K, X[0], True), FourierSeq(spec.K, W[0], True)


# ---------------------------------------------------------------------------
# samples


@dataclass(frozen=True, eq=False)
class Sample:
    """``n`` records ``(Y_i, X_i, W_i)``; ``x[i]``/``w[i]`` are coefficient rows over ``-K..K``."""

    y: np.ndarray
    x: np.ndarray
    w: np.ndarray
    sigma: float | None = None
    spec: SpectrumSpec | None = None

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        x = np.asarray(self.x, dtype=complex)
        w = np.asarray(self.w, dtype=complex)
        if y.ndim != 1 or x.ndim != 2 or x.shape != w.shape or x.shape[0] != y.shape[0]:
            raise InvariantError(
                f"inconsistent sample shapes y={y.shape}, x={x.shape}, w={w.shape}")
        if x.shape[1] % 2 != 1:
            raise InvariantError("coefficient rows must have odd length 2K+1")
        for a in (x, w):
            scale = max(1.0, float(np.max(np.abs(a), initial=0.0)))
            if np.max(np.abs(a - np.conj(a[:, ::-1])), initial=0.0) > 1e-12 * scale:
                raise InvariantError("sample coefficients are not conjugate-symmetric")
        if self.spec is not None and self.spec.K != (x.shape[1] - 1) // 2:
            raise InvariantError("sample support bound differs from its spectrum")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "w", w)

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def K(self) -> int:
        return (self.x.shape[1] - 1) // 2

    def record(self, i: int) -> tuple[float, FourierSeq, FourierSeq]:
        return (float(self.y[i]), FourierSeq(self.K, self.x[i], True),
                FourierSeq(self.K, self.w[i], True))

    def records(self) -> Iterator[tuple[float, FourierSeq, FourierSeq]]:
        for i in range(self.n):
            yield self.record(i)

    def scaled(self, factor: float) -> "Sample":
        """Same regressors with every response multiplied by ``factor``."""
        return Sample(self.y * factor, self.x, self.w, self.sigma, self.spec)


def endogenous_component(spec: SpectrumSpec, slope: FourierSeq, X: np.ndarray,
                         W: np.ndarray) -> tuple[np.ndarray, float]:
    """``<beta, X_i - W~_i>`` per record and its population variance.

    ``W~`` is the optimal linear instrument with weights ``conj(c_k) / w_k``.
    """
    if slope.K > spec.K:
        raise ParameterError("slope support exceeds the spectrum support")
    beta = slope.padded(spec.K).coeffs
    resid = X - (np.conj(spec.c) / spec.w) * W
    z = (resid.conj() @ beta).real
    var = float(np.sum(np.abs(beta) ** 2 * (spec.x - spec.lam)))
    return z, var


def simulate_sample(spec: SpectrumSpec, slope: FourierSeq, sigma: float, n: int,
                    endo: float = 0.0, rng=None) -> Sample:
    """Draw ``n`` records with ``Y = <beta, X> + sigma U``.

    ``U = sqrt(1 - endo) eps + sqrt(endo) Z`` where ``Z`` is the standardized
    projection of ``beta`` on ``X - W~``; ``U`` is uncorrelated with every
    ``W_k`` but correlated with ``X`` whenever ``endo > 0``.
    """
    if slope.K > spec.K:
        raise ParameterError("slope support exceeds the spectrum support")
    if not sigma > 0:
        raise ParameterError("sigma must be positive")
    if not 0 <= endo < 1:
        raise ParameterError("endo must lie in [0, 1)")
    if n < 1:
        raise ParameterError("n must be >= 1")
    width = _record_width(spec.K)
    z = _normals(rng, n, width)
    X, W = _pairs_from_normals(spec, z)
    eps = z[:, width - 1]
    beta = slope.padded(spec.K).coeffs
    u = math.sqrt(1.0 - endo) * eps
    if endo > 0:
        zproj, var = endogenous_component(spec, slope, X, W)
        if not var > 1e-300:
            raise DegenerateEndogeneityError(
                "<beta, X - W~> has zero variance; cannot inject endogeneity")
        u = u + math.sqrt(endo) * zproj / math.sqrt(var)
    y = (X.conj() @ beta).real + sigma * u
    return Sample(y, X, W, float(sigma), spec)


# ---------------------------------------------------------------------------
# serialization


def _header_path(path: Path) -> Path:
    return path.with_name(path.name + ".spec.json")


def write_sample(sample: Sample, path, extra: dict | None = None) -> Path:
    """Write one JSON object per record; the spectrum goes to ``<path>.spec.json``."""
    path = Path(path)
    K = sample.K
    with path.open("w") as fh:
        for yi, xi, wi in zip(sample.y, sample.x, sample.w):
            rec = {"y": float(yi),
                   "x": FourierSeq(K, xi, True).to_json_obj(),
                   "w": FourierSeq(K, wi, True).to_json_obj()}
            fh.write(json.dumps(rec) + "\n")
    header = {"n": sample.n, "K": K, "sigma": sample.sigma,
              "spec": sample.spec.to_json_obj() if sample.spec is not None else None}
    if extra:
        header.update(extra)
    _header_path(path).write_text(json.dumps(header, indent=2) + "\n")
    return path


def read_sample(path) -> Sample:
    path = Path(path)
    ys, xs, ws = [], [], []
    K = None
    with path.open() as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                xi = FourierSeq.from_json_obj(rec["x"])
                wi = FourierSeq.from_json_obj(rec["w"])
                yi = float(rec["y"])
            except (ValueError, KeyError, TypeError) as exc:
                raise SampleFormatError(f"malformed record: {exc}", lineno, path) from exc
            if K is None:
                K = xi.K
            if xi.K != K or wi.K != K:
                raise SampleFormatError("support bound differs from first record", lineno, path)
            ys.append(yi)
            xs.append(xi.coeffs)
            ws.append(wi.coeffs)
    if not ys:
        raise SampleFormatError("no records", path=path)
    sigma = spec = None
    hp = _header_path(path)
    if hp.exists():
        header = json.loads(hp.read_text())
        sigma = header.get("sigma")
        if header.get("spec") is not None:
            spec = SpectrumSpec.from_json_obj(header["spec"])
    try:
        return Sample(np.array(ys), np.array(xs), np.array(ws), sigma, spec)
    except InvariantError as exc:
        raise SampleFormatError(str(exc), path=path) from exc
