"""Monte Carlo risk evaluation and empirical rate fitting."""

from __future__ import annotations

import csv
import dataclasses
import json
import logging
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from .dgp import DecayFamily, RecordStream, from_decay, make_slope, simulate_sample
from .errors import ConfigError, ConsistencyWarning, FlirError, ParameterError
from .estimator import oracle_beta_reg, run_pipeline, threshold_exponent
from .spectral import FourierSeq, SobolevParams, gamma, sobolev_norm_sq
from .theory import minimax_rate

log = logging.getLogger(__name__)

# Frequency the pilot threshold isolates at the smallest sample size.
PILOT_K0 = {"polynomial": 8, "exponential": 1}
TRUNCATION_SHARE = 0.1
CSV_COLUMNS = ("n", "rep", "risk", "alpha", "active_count")


@dataclass(frozen=True)
class ExperimentConfig:
    """Monte Carlo design for one decay case.

    ``threshold`` selects the exponent of ``alpha = c n^{-e}``: ``"case"``
    uses the rule matched to ``case``, ``"generic"`` uses ``e = 1/3``.
    When ``threshold_const`` is ``None`` the constant is calibrated so that
    at the smallest ``n`` the threshold falls between the eigenvalue ratios
    ``lambda_k / gamma_k^nu`` of frequencies ``pilot_k0`` and ``pilot_k0 + 1``.
    """

    case: str = "polynomial"
    a: float = 1.0
    p: float = 2.0
    nu: float = 0.0
    rho: float = 1.0
    sigma: float = 0.5
    endo: float = 0.5
    K: int = 32
    n_grid: tuple = (500, 1000, 2000, 4000, 8000)
    reps: int = 200
    threshold: str = "case"
    threshold_const: float | None = None
    pilot_k0: int | None = None
    master_seed: int = 0
    slope_tol: float = 0.15

    def __post_init__(self):
        object.__setattr__(self, "n_grid", tuple(int(n) for n in self.n_grid))
        try:
            self.family
            SobolevParams(self.nu, self.p, self.rho)
        except ParameterError as exc:
            raise ConfigError(str(exc)) from exc
        if not self.n_grid:
            raise ConfigError("n_grid must not be empty")
        if any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
            raise ConfigError("n_grid must be strictly increasing")
        if self.n_grid[0] < 2:
            raise ConfigError("sample sizes must be >= 2")
        if self.reps < 2:
            raise ConfigError("reps must be >= 2")
        if not self.sigma > 0:
            raise ConfigError("sigma must be positive")
        if not 0 <= self.endo < 1:
            raise ConfigError("endo must lie in [0, 1)")
        if self.K < 1:
            raise ConfigError("K must be >= 1")
        if self.threshold not in ("case", "generic"):
            raise ConfigError(f"threshold must be 'case' or 'generic', got {self.threshold!r}")
        if self.threshold_const is not None and not self.threshold_const > 0:
            raise ConfigError("threshold_const must be positive")
        if self.pilot_k0 is not None and not 0 <= self.pilot_k0 < self.K:
            raise ConfigError("pilot_k0 must lie in [0, K)")
        if not self.slope_tol > 0:
            raise ConfigError("slope_tol must be positive")
        tail = self.truncation_tail()
        budget = TRUNCATION_SHARE * minimax_rate(self.case, self.n_grid[-1], self.a, self.p, self.nu)
        if tail > budget:
            raise ConfigError(
                f"K={self.K} too small: truncated tail {tail:.3g} exceeds "
                f"{TRUNCATION_SHARE:g} x predicted risk {budget / TRUNCATION_SHARE:.3g}")

    @property
    def family(self) -> DecayFamily:
        return DecayFamily(self.case, self.a)

    def spectrum(self):
        return from_decay(self.family, self.K)

    def slope(self) -> FourierSeq:
        return make_slope(SobolevParams(self.nu, self.p, self.rho), self.K)

    def truncation_tail(self, kmax: int = 1 << 17) -> float:
        """``W_nu`` norm of the slope profile beyond ``|k| = K``, same normalisation."""
        b = self.slope().coeffs[self.K].real  # gamma_0 = 1
        k = np.arange(self.K + 1, kmax + 1)
        return float(2.0 * b * b * np.sum(gamma(k) ** (self.nu - self.p - 1)))

    @property
    def threshold_exponent(self) -> float:
        case = None if self.threshold == "generic" else self.case
        return threshold_exponent(case, self.a, self.p, self.nu)

    def resolved_const(self) -> float:
        if self.threshold_const is not None:
            return float(self.threshold_const)
        k0 = self.pilot_k0 if self.pilot_k0 is not None else PILOT_K0[self.case]
        k0 = min(k0, self.K - 1)
        r = lambda k: float(self.family.lam(k)) / gamma(k) ** self.nu  # noqa: E731
        return math.sqrt(r(k0) * r(k0 + 1)) * self.n_grid[0] ** self.threshold_exponent

    def alpha(self, n: int) -> float:
        # same formula as estimator.threshold_rule, without its warning per call
        return self.resolved_const() * n ** (-self.threshold_exponent)

    def theoretical_slope(self) -> float:
        """OLS slope of ``log minimax_rate`` against ``log n`` over the grid."""
        ns = np.array(self.n_grid, dtype=float)
        if ns.size < 2:
            return float("nan")
        rates = [minimax_rate(self.case, n, self.a, self.p, self.nu) for n in ns]
        return float(np.polyfit(np.log(ns), np.log(rates), 1)[0])

    def to_json_obj(self) -> dict:
        obj = dataclasses.asdict(self)
        obj["n_grid"] = list(self.n_grid)
        return obj

    @classmethod
    def from_json_obj(cls, obj: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(obj) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**obj)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc


# ---------------------------------------------------------------------------
# aggregation


def _mean_se(values) -> tuple[float, float]:
    v = sorted(float(x) for x in values)
    m = len(v)
    mean = math.fsum(v) / m
    var = math.fsum((x - mean) ** 2 for x in v) / (m - 1) if m > 1 else 0.0
    return mean, math.sqrt(var / m)


def fit_rate(ns, risks, level: float = 0.95) -> tuple[float, tuple[float, float]]:
    """OLS slope of ``log risk`` on ``log n`` with a ``level`` t-interval.

    Nonpositive risks are dropped with a warning; fewer than three remaining
    points raise :class:`ParameterError`.
    """
    ns = np.asarray(ns, dtype=float)
    risks = np.asarray(risks, dtype=float)
    keep = risks > 0
    if not np.all(keep):
        warnings.warn(f"dropping {int(np.sum(~keep))} nonpositive risk value(s) from the fit",
                      RuntimeWarning, stacklevel=2)
    ns, risks = ns[keep], risks[keep]
    if ns.size < 3:
        raise ParameterError("need at least 3 positive risk values to fit a rate")
    res = stats.linregress(np.log(ns), np.log(risks))
    half = stats.t.ppf(0.5 + level / 2, ns.size - 2) * res.stderr
    return float(res.slope), (float(res.slope - half), float(res.slope + half))


@dataclass(frozen=True)
class GridPoint:
    n: int
    alpha: float
    mean_risk: float
    se: float
    active_mean: float
    active_min: int
    active_max: int
    oracle_bias: float
    minimax: float

    def to_json_obj(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True, eq=False)
class RiskReport:
    config: ExperimentConfig
    threshold_const: float
    points: list[GridPoint]
    slope: float | None
    ci: tuple[float, float] | None
    theoretical_slope: float
    rows: list[tuple] = field(default_factory=list, repr=False)

    @property
    def ns(self) -> list[int]:
        return [pt.n for pt in self.points]

    @property
    def mean_risks(self) -> np.ndarray:
        return np.array([pt.mean_risk for pt in self.points])

    @property
    def ses(self) -> np.ndarray:
        return np.array([pt.se for pt in self.points])

    @property
    def passed(self) -> bool | None:
        if self.slope is None:
            return None
        return abs(self.slope - self.theoretical_slope) <= self.config.slope_tol

    def summary(self) -> dict:
        return {
            "config": self.config.to_json_obj(),
            "threshold_const": self.threshold_const,
            "threshold_exponent": self.config.threshold_exponent,
            "points": [pt.to_json_obj() for pt in self.points],
            "slope": self.slope,
            "ci": list(self.ci) if self.ci is not None else None,
            "theoretical_slope": self.theoretical_slope,
            "slope_tol": self.config.slope_tol,
            "passed": self.passed,
        }


def summarize(config: ExperimentConfig, rows) -> RiskReport:
    """Build a report from per-replication rows ``(n, rep, risk, alpha, active_count)``."""
    spec = config.spectrum()
    beta = config.slope()
    by_n: dict[int, list[tuple]] = {}
    for row in rows:
        by_n.setdefault(int(row[0]), []).append(row)
    points = []
    for n in config.n_grid:
        group = by_n.get(n)
        if not group:
            raise ConfigError(f"no replications recorded for n={n}")
        mean, se = _mean_se(r[2] for r in group)
        active = [int(r[4]) for r in group]
        alpha = float(group[0][3])
        bias = sobolev_norm_sq(oracle_beta_reg(spec, beta, alpha, config.nu) - beta, config.nu)
        points.append(GridPoint(
            n=n, alpha=alpha, mean_risk=mean, se=se,
            active_mean=math.fsum(active) / len(active),
            active_min=min(active), active_max=max(active),
            oracle_bias=bias,
            minimax=minimax_rate(config.case, n, config.a, config.p, config.nu)))
    slope = ci = None
    if len(points) >= 3:
        slope, ci = fit_rate([pt.n for pt in points], [pt.mean_risk for pt in points])
    rows = sorted((int(r[0]), int(r[1]), float(r[2]), float(r[3]), int(r[4])) for r in rows)
    return RiskReport(config, config.resolved_const(), points, slope, ci,
                      config.theoretical_slope(), rows)


# ---------------------------------------------------------------------------
# simulation


def _replicate(config: ExperimentConfig, spec, beta, n: int, rep: int) -> tuple:
    alpha = config.alpha(n)
    stream = RecordStream(config.master_seed, n, rep)
    sample = simulate_sample(spec, beta, config.sigma, n, config.endo, rng=stream)
    fit = run_pipeline(sample, alpha, config.nu)
    risk = sobolev_norm_sq(fit.beta - beta, config.nu)
    return (n, rep, risk, alpha, int(np.sum(fit.active)))


def default_threads() -> int:
    return os.cpu_count() or 1


def mc_risk(config: ExperimentConfig, threads: int | None = None) -> RiskReport:
    """Run ``reps`` replications at every grid size and aggregate the ``W_nu`` risk.

    Replication ``(n, rep)`` draws from ``RecordStream(master_seed, n, rep)``,
    so results do not depend on ``threads`` or scheduling order.
    """
    threads = default_threads() if threads is None else int(threads)
    if threads < 1:
        raise ConfigError("threads must be >= 1")
    if config.threshold_exponent >= 0.5:
        warnings.warn(
            f"threshold exponent {config.threshold_exponent:.4f} >= 1/2: "
            "(alpha^2 n)^-1 does not vanish", ConsistencyWarning, stacklevel=2)
    spec = config.spectrum()
    beta = config.slope()
    jobs = [(n, r) for n in config.n_grid for r in range(config.reps)]
    log.info("running %d replications on %d thread(s)", len(jobs), threads)
    if threads == 1:
        rows = [_replicate(config, spec, beta, n, r) for n, r in jobs]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(lambda job: _replicate(config, spec, beta, *job), jobs))
    return summarize(config, rows)


# ---------------------------------------------------------------------------
# reports


def write_rows_csv(report: RiskReport, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for n, rep, risk, alpha, active in report.rows:
            writer.writerow([n, rep, repr(risk), repr(alpha), active])
    return path


def read_rows_csv(path) -> list[tuple]:
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise ConfigError(f"{path}: expected columns {','.join(CSV_COLUMNS)}")
        return [(int(r["n"]), int(r["rep"]), float(r["risk"]), float(r["alpha"]),
                 int(r["active_count"])) for r in reader]


def summary_from_csv(config: ExperimentConfig, path) -> dict:
    """Recompute the JSON summary from a per-replication CSV."""
    return summarize(config, read_rows_csv(path)).summary()


def run_report(config: ExperimentConfig, outdir, threads: int | None = None,
               stem: str = "risk") -> RiskReport:
    """Run :func:`mc_risk` and write ``<stem>.csv`` and ``<stem>.json`` to ``outdir``."""
    outdir = Path(outdir)
    report = mc_risk(config, threads)
    try:
        outdir.mkdir(parents=True, exist_ok=True)
        write_rows_csv(report, outdir / f"{stem}.csv")
        (outdir / f"{stem}.json").write_text(json.dumps(report.summary(), indent=2) + "\n")
    except OSError as exc:
        raise FlirError(f"cannot write report to {outdir}: {exc}") from exc
    return report
