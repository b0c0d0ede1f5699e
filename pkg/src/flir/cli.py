"""Command-line entry point.

Every subcommand that reads a config takes a JSON object whose keys match the
fields of the matching config dataclass; missing keys take their defaults,
which ``--print-defaults`` shows. Tables go to stdout, errors to stderr.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from .dgp import (DecayFamily, SpectrumSpec, from_decay, make_slope, read_sample,
                  simulate_sample, write_sample)
from .errors import ConfigError, FlirError
from .estimator import run_pipeline
from .experiments import ExperimentConfig, run_report
from .spectral import FourierSeq, SobolevParams
from .theory import IndexFunction, balance, check_link

log = logging.getLogger("flir")

EXIT_ERROR = 1
EXIT_MISSING = 2
SEED_ENV = "FLIR_SEED"


class _JsonConfig:
    """Mixin: build a frozen dataclass from a JSON object, rejecting unknown keys."""

    @classmethod
    def from_json_obj(cls, obj):
        if not isinstance(obj, dict):
            raise ConfigError("config must be a JSON object")
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(obj) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**obj)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def to_json_obj(self):
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class SimulateConfig(_JsonConfig):
    """Sample design. ``spectrum`` and ``slope`` (JSON objects) override the decay-based defaults."""

    case: str = "polynomial"
    a: float = 1.0
    p: float = 2.0
    nu: float = 0.0
    rho: float = 1.0
    fill: float = 1.0
    sigma: float = 0.5
    endo: float = 0.0
    K: int = 8
    n: int = 1000
    seed: int = 0
    spectrum: dict | None = None
    slope: dict | None = None

    def build(self):
        spec = (SpectrumSpec.from_json_obj(self.spectrum) if self.spectrum is not None
                else from_decay(DecayFamily(self.case, self.a), self.K))
        beta = (FourierSeq.from_json_obj(self.slope) if self.slope is not None
                else make_slope(SobolevParams(self.nu, self.p, self.rho), spec.K, self.fill))
        return spec, beta


@dataclass(frozen=True)
class LinkConfig(_JsonConfig):
    case: str = "polynomial"
    a: float = 1.0
    p: float = 2.0
    nu: float = 0.0
    K: int = 50
    d: float = 50.0
    spectrum: dict | None = None


@dataclass(frozen=True)
class BalanceConfig(_JsonConfig):
    case: str = "polynomial"
    a: float = 1.0
    p: float = 2.0
    nu: float = 0.0
    n: tuple = (1000, 10000, 100000, 1000000)
    triangle_max: float | None = None

    def __post_init__(self):
        n = (self.n,) if isinstance(self.n, (int, float)) else tuple(self.n)
        object.__setattr__(self, "n", n)


CONFIG_TYPES = {
    "simulate": SimulateConfig,
    "rates": ExperimentConfig,
    "link-check": LinkConfig,
    "balance": BalanceConfig,
}


def _index_function(case, a, p, nu):
    return IndexFunction.for_decay(DecayFamily(case, a), p, nu)


def _load_config(args):
    cls = CONFIG_TYPES[args.command]
    obj = {}
    if args.config is not None:
        try:
            obj = json.loads(Path(args.config).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config}: invalid JSON: {exc}") from exc
    seed_key = {"simulate": "seed", "rates": "master_seed"}.get(args.command)
    if seed_key is not None:
        seed = getattr(args, "seed", None)
        if seed is None and os.environ.get(SEED_ENV):
            try:
                seed = int(os.environ[SEED_ENV])
            except ValueError as exc:
                raise ConfigError(f"{SEED_ENV} must be an integer") from exc
        if seed is not None:
            obj[seed_key] = seed
    return cls.from_json_obj(obj)


def _print_table(header, rows):
    widths = [max(len(str(h)), *(len(str(r[i])) for r in rows)) if rows else len(str(h))
              for i, h in enumerate(header)]
    line = "  ".join(str(h).rjust(w) for h, w in zip(header, widths))
    print(line)
    print("-" * len(line))
    for r in rows:
        print("  ".join(str(v).rjust(w) for v, w in zip(r, widths)))


def _g(x, digits=5):
    return f"{x:.{digits}g}"


# ---------------------------------------------------------------------------
# subcommands


def cmd_simulate(args) -> int:
    cfg = _load_config(args)
    spec, beta = cfg.build()
    sample = simulate_sample(spec, beta, cfg.sigma, cfg.n, cfg.endo, rng=cfg.seed)
    out = Path(args.out)
    write_sample(sample, out, extra={"seed": cfg.seed, "endo": cfg.endo,
                                     "slope": beta.to_json_obj()})
    _print_table(["file", "n", "K", "sigma", "endo", "seed"],
                 [[str(out), sample.n, sample.K, cfg.sigma, cfg.endo, cfg.seed]])
    return 0


def cmd_estimate(args) -> int:
    sample = read_sample(args.sample)
    fit = run_pipeline(sample, args.alpha, args.nu)
    outdir = Path(args.out_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "beta.json").write_text(fit.beta.to_json() + "\n")
    (outdir / "diagnostics.json").write_text(json.dumps(fit.diagnostics(), indent=2) + "\n")
    rows = [[int(k), _g(fit.lamhat[k + fit.K]), _g(v.real), _g(v.imag)]
            for k, v in fit.beta.to_dict().items() if fit.active[k + fit.K]]
    _print_table(["k", "lambda_hat", "re beta_k", "im beta_k"], rows)
    print(f"active frequencies: {len(rows)} of {2 * fit.K + 1}")
    return 0


def cmd_rates(args) -> int:
    cfg = _load_config(args)
    report = run_report(cfg, args.out_dir, threads=args.threads)
    rows = [[pt.n, _g(pt.alpha), _g(pt.mean_risk), _g(pt.se, 3), _g(pt.active_mean, 4),
             _g(pt.minimax)] for pt in report.points]
    _print_table(["n", "alpha", "mean risk", "se", "active", "minimax rate"], rows)
    fitted = "n/a" if report.slope is None else _g(report.slope, 4)
    ci = "n/a" if report.ci is None else f"[{report.ci[0]:.4f}, {report.ci[1]:.4f}]"
    print()
    _print_table(["", "slope", "95% CI"],
                 [["fitted", fitted, ci], ["theoretical", f"{report.theoretical_slope:.4f}", ""]])
    return 0


def cmd_link_check(args) -> int:
    cfg = _load_config(args)
    spec = (SpectrumSpec.from_json_obj(cfg.spectrum) if cfg.spectrum is not None
            else from_decay(DecayFamily(cfg.case, cfg.a), cfg.K))
    kappa = _index_function(cfg.case, cfg.a, cfg.p, cfg.nu)
    report = check_link(spec.lam, kappa, d=cfg.d, lambda_plus=spec.lambda_plus)
    if args.json:
        Path(args.json).write_text(json.dumps(report.to_json_obj(), indent=2) + "\n")
    min_d = "inf" if math.isinf(report.minimal_d) else _g(report.minimal_d)
    failing = ",".join(map(str, report.failing)) or "-"
    _print_table(["kappa", "K", "d", "minimal d", "passed", "failing k"],
                 [[kappa.variant, spec.K, _g(cfg.d), min_d, report.passed, failing]])
    return 0


def cmd_balance(args) -> int:
    cfg = _load_config(args)
    kappa = _index_function(cfg.case, cfg.a, cfg.p, cfg.nu)
    tmax = math.inf if cfg.triangle_max is None else cfg.triangle_max
    results = [balance(n, kappa, triangle_max=tmax) for n in cfg.n]
    if args.json:
        Path(args.json).write_text(
            json.dumps([r.to_json_obj() for r in results], indent=2) + "\n")
    _print_table(["n", "k*", "delta*", "kappa(delta*)", "sum", "Delta"],
                 [[_g(r.n), r.kstar, _g(r.deltastar), _g(r.rate), _g(r.balance_sum),
                   _g(r.triangle)] for r in results])
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "estimate": cmd_estimate,
    "rates": cmd_rates,
    "link-check": cmd_link_check,
    "balance": cmd_balance,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flir", description="Spectral cut-off estimation for functional linear IV regression.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def with_config(p):
        p.add_argument("--config", help="JSON config file (defaults for missing keys)")
        p.add_argument("--print-defaults", action="store_true",
                       help="print the default config as JSON and exit")
        return p

    p = with_config(sub.add_parser("simulate", help="draw a sample and write it as JSON lines"))
    p.add_argument("--out", default="sample.jsonl", help="output sample file")
    p.add_argument("--seed", type=int, help=f"override the config seed (also {SEED_ENV})")

    p = sub.add_parser("estimate", help="estimate the slope from a sample file")
    p.add_argument("sample", help="JSON-lines sample file")
    p.add_argument("--alpha", type=float, required=True, help="threshold")
    p.add_argument("--nu", type=float, default=0.0, help="Sobolev index of the second-stage cut-off")
    p.add_argument("--out-dir", default=".", help="directory for beta.json and diagnostics.json")

    p = with_config(sub.add_parser("rates", help="Monte Carlo risk and fitted rate"))
    p.add_argument("--out-dir", default="flir-report", help="directory for risk.csv and risk.json")
    p.add_argument("--seed", type=int, help=f"override master_seed (also {SEED_ENV})")
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads (default: available CPUs)")

    p = with_config(sub.add_parser("link-check", help="check the link condition for a spectrum"))
    p.add_argument("--json", help="also write the full report here")

    p = with_config(sub.add_parser("balance", help="solve the balancing equation"))
    p.add_argument("--json", help="also write the results here")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    if getattr(args, "print_defaults", False):
        print(json.dumps(CONFIG_TYPES[args.command]().to_json_obj(), indent=2))
        return 0
    try:
        return COMMANDS[args.command](args)
    except FileNotFoundError as exc:
        print(f"flir {args.command}: file not found: {exc.filename}", file=sys.stderr)
        return EXIT_MISSING
    except (FlirError, OSError) as exc:
        where = getattr(exc, "lineno", None)
        ctx = f" (line {where})" if where else ""
        print(f"flir {args.command}: {type(exc).__name__}{ctx}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
