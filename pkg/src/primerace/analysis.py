"""Race orchestration: exact logarithmic density, Skewes-number search, and
the full diagnostic pipeline with deterministic, atomic output files.

The density integral is computed on sign-constant intervals between
consecutive primes, so it carries no quadrature error: between jumps the
sign of E equals the sign of the weighted count, and tie intervals count as
outside the lead set (strict inequality).
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
import shutil
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from .errors import ConfigError, OutOfRangeError
from .explicit import build_model
from .limiting import build_random_model, eli_threshold, bias_summary, invert_density
from .primes import PrimeTable, WeightedCounter, sieve, trajectory
from .residues import RaceWeight, race_weight_qr_nr, race_weight_two_class, weight_stats
from .wasserstein import EmpiricalMeasure, w1_line
from .zeros import ZeroStore, ensure_coverage, ingest_zeros

SUMMARY_HEADER = "# primerace-summary v1"


@dataclass(frozen=True)
class DensityEstimate:
    weight: RaceWeight
    X: float
    estimate: float
    sign_changes: Tuple[int, ...]  # primes where the lead indicator flips
    skewes_hit: Optional[int]  # least x with pi(x; t) > 0 within range


def log_density(table: PrimeTable, t: RaceWeight, X: float) -> DensityEstimate:
    """(1/(X - log 2)) * Lebesgue measure of {y <= X : pi(e^y; t) > 0}."""
    y0 = math.log(2.0)
    if X <= y0:
        raise OutOfRangeError("X must exceed log 2")
    if math.exp(X) > table.limit * (1 + 1e-12):
        raise OutOfRangeError(f"e^X beyond sieve limit {table.limit}")
    counter = WeightedCounter(table, t)
    jumps = counter.jump_logs
    inside = jumps[(jumps > y0) & (jumps < X)]
    nodes = np.concatenate(([y0], inside, [X]))
    counts = counter.weighted_count_at(nodes[:-1])
    lengths = np.diff(nodes)
    positive = counts > 0
    measure = float(np.sum(lengths[positive]))
    flips = np.flatnonzero(positive[1:] != positive[:-1])
    changes = []
    for i in flips:
        y = nodes[i + 1]
        j = int(np.searchsorted(counter.jump_logs, y))
        changes.append(int(counter.jump_primes[j]))
    hit = None
    hit_idx = np.flatnonzero(counter.cumulative > 0)
    if hit_idx.size and counter.jump_logs[hit_idx[0]] <= X:
        hit = int(counter.jump_primes[hit_idx[0]])
    return DensityEstimate(
        weight=t,
        X=X,
        estimate=measure / (X - y0),
        sign_changes=tuple(changes),
        skewes_hit=hit,
    )


@dataclass(frozen=True)
class SkewesResult:
    hit: Optional[int]  # least prime x with pi(x; t) > 0
    lower_bound: Optional[float]  # verified x(t) > lower_bound when no hit

    @property
    def found(self) -> bool:
        return self.hit is not None


def skewes_search(table: PrimeTable, t: RaceWeight, ceiling: float) -> SkewesResult:
    """Least x <= ceiling with pi(x; t) > 0, else a verified lower bound."""
    if ceiling > table.limit:
        raise OutOfRangeError(f"ceiling {ceiling} beyond sieve limit {table.limit}")
    counter = WeightedCounter(table, t)
    in_range = counter.jump_primes <= ceiling
    cums = counter.cumulative[in_range]
    idx = np.flatnonzero(cums > 0)
    if idx.size:
        return SkewesResult(hit=int(counter.jump_primes[idx[0]]), lower_bound=None)
    return SkewesResult(hit=None, lower_bound=float(ceiling))


@dataclass
class RunConfig:
    race: str = "two_class"  # "two_class" | "qr_nr"
    q: int = 4
    a: int = 3
    b: int = 1
    sieve_limit: int = 10**6
    zero_source: str = "compute"  # "compute" | "ingest"
    zero_T: float = 200.0
    zero_path: Optional[str] = None
    grid_step: float = 1e-3
    eli_A: float = 2.0
    eli_L: float = 1.0
    seed: int = 12345
    mc_samples: int = 2_000_000
    w1_truncations: Optional[Tuple[float, ...]] = None  # default: zero_T/4, /2, /1
    output_dir: str = "primerace-out"

    @classmethod
    def from_file(cls, path, base: "RunConfig" | None = None) -> "RunConfig":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        cfg = dataclasses.replace(base) if base is not None else cls()
        for key, value in data.items():
            if not hasattr(cfg, key):
                raise ConfigError(f"unknown config key {key!r}")
            if key == "w1_truncations":
                value = tuple(float(v) for v in value)
            setattr(cfg, key, value)
        return cfg

    def validate(self):
        if self.race not in ("two_class", "qr_nr"):
            raise ConfigError(f"unknown race kind {self.race!r}")
        if self.zero_source not in ("compute", "ingest"):
            raise ConfigError(f"unknown zero source {self.zero_source!r}")
        if self.zero_source == "ingest" and not self.zero_path:
            raise ConfigError("ingest zero source needs zero_path")
        if self.sieve_limit < 10 or self.sieve_limit > 10**10:
            raise ConfigError("sieve limit outside supported range")
        if self.zero_T < 100:
            raise ConfigError("zero_T must be at least 100 (limiting-law minimum)")

    def build_weight(self) -> RaceWeight:
        if self.race == "two_class":
            return race_weight_two_class(self.q, self.a, self.b)
        return race_weight_qr_nr(self.q)


@dataclass
class PipelineResult:
    summary: Dict[str, str]
    invariant_failures: List[str]
    output_dir: Path

    @property
    def passed(self) -> bool:
        return not self.invariant_failures


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def _model_surrogate(model, y0: float, X: float, step: float) -> EmpiricalMeasure:
    ys = np.arange(y0, X, step)
    return EmpiricalMeasure.from_samples(model.evaluate(ys))


def run_pipeline(config: RunConfig) -> PipelineResult:
    """Run the full diagnostic pipeline and write the report bundle.

    Files are staged in a scratch directory and moved into place at the end;
    nothing is left behind on failure.
    """
    config.validate()
    t = config.build_weight()
    table = sieve(config.sieve_limit)
    X = math.log(config.sieve_limit)
    y0 = math.log(2.0)

    store = ZeroStore()
    if config.zero_source == "compute":
        ensure_coverage(store, t, config.zero_T)
        zero_T = config.zero_T
    else:
        ingest_zeros(config.zero_path, into=store)
        # ingested coverage is the height of the file, clamp the working range
        from .zeros import support_terms

        covs = [store.coverage(p.q, p.label) for p, _ in support_terms(t)]
        zero_T = min([config.zero_T] + covs)
        if zero_T < 100:
            raise ConfigError(
                f"ingested zeros cover only up to {zero_T}; need at least 100"
            )

    density = log_density(table, t, X)
    skewes = skewes_search(table, t, config.sieve_limit)
    dist = invert_density(t, store, zero_T, tail="rvm")
    dist_neg = invert_density(t.negate(), store, zero_T, tail="rvm")
    model_mc = build_random_model(t, store, zero_T, tail="rvm")
    mc_delta, mc_se = model_mc.sample_delta(config.mc_samples, seed=config.seed)
    stats = weight_stats(t)
    bias = bias_summary(t, store, zero_T)
    threshold, envelope = eli_threshold(t, config.eli_A, config.eli_L)

    # W1 diagnostics: truncated-model surrogates against the race surrogate
    traj = trajectory(table, t, X, grid_step=config.grid_step)
    ys = np.arange(y0, X, config.grid_step)
    counter = WeightedCounter(table, t)
    mu_x = EmpiricalMeasure.from_samples(counter.E_at(ys))
    truncations = config.w1_truncations or (
        zero_T / 4.0,
        zero_T / 2.0,
        zero_T,
    )
    w1_lines: List[str] = []
    surrogates = {}
    for T in truncations:
        if T > zero_T:
            raise ConfigError("w1 truncation exceeds zero coverage")
        model = build_model(t, store, T)
        surr = _model_surrogate(model, y0, X, config.grid_step)
        surrogates[T] = surr
        value = w1_line(surr, mu_x)
        env = stats.C * (math.log(T) / math.sqrt(T) + 1.0 / math.sqrt(X))
        w1_lines.append(
            f"truncation T={_fmt(T)}: w1(model, race)={_fmt(value)} envelope={_fmt(env)} "
            f"fitted={_fmt(value / env)}"
        )
    pairs = list(zip(truncations, truncations[1:]))
    cauchy_values = {}
    for T1, T2 in pairs:
        value = w1_line(surrogates[T1], surrogates[T2])
        env = stats.C * (
            math.log(T1) / math.sqrt(T1) + math.log(T2) / math.sqrt(T2)
        )
        cauchy_values[(T1, T2)] = value
        w1_lines.append(
            f"cauchy pair T1={_fmt(T1)} T2={_fmt(T2)}: w1={_fmt(value)} "
            f"envelope={_fmt(env)} fitted={_fmt(value / env)}"
        )

    # invariant suite
    failures: List[str] = []

    def check(name: str, ok: bool):
        if not ok:
            failures.append(name)

    integral = float(np.trapezoid(dist.density, dist.x))
    check("delta-in-unit-interval", 0.0 < dist.delta < 1.0)
    check("density-normalized", abs(integral - 1.0) <= 1e-4)
    check(
        "mean-consistency",
        abs(dist.mean_quadrature - dist.mean_closed)
        <= 1e-3 * max(1.0, abs(dist.mean_closed)),
    )
    check(
        "variance-consistency",
        abs(dist.variance_quadrature - dist.variance_closed)
        <= 1e-3 * max(1.0, dist.variance_closed),
    )
    check("estimate-in-unit-interval", 0.0 <= density.estimate <= 1.0)
    check(
        "skewes-density-consistency",
        (density.estimate == 0.0) == (density.skewes_hit is None),
    )
    check("sign-flip-delta", abs(dist.delta + dist_neg.delta - 1.0) <= 1e-6)
    check("mc-delta-agreement", abs(dist.delta - mc_delta) <= max(5 * mc_se, 5e-3))

    summary: Dict[str, str] = {
        "race": config.race,
        "q": config.q,
        "a": config.a if config.race == "two_class" else "",
        "b": config.b if config.race == "two_class" else "",
        "sieve_limit": config.sieve_limit,
        "X": _fmt(X),
        "zero_T": _fmt(zero_T),
        "support_size": len(t.support),
        "lambda": _fmt(stats.lam),
        "C": _fmt(stats.C),
        "log_k": _fmt(stats.log_k),
        "mean": _fmt(bias.mean),
        "variance": _fmt(bias.variance),
        "bias_factor_B": _fmt(bias.B),
        "skewes_envelope": _fmt(bias.skewes_envelope),
        "density_estimate": _fmt(density.estimate),
        "delta": _fmt(dist.delta),
        "delta_mc": _fmt(mc_delta),
        "delta_mc_stderr": _fmt(mc_se),
        "density_delta_gap": _fmt(abs(density.estimate - dist.delta)),
        "rate_envelope_at_X": _fmt(envelope(math.exp(X))),
        "eli_X0_log": _fmt(threshold.log_X0),
        "skewes_hit": density.skewes_hit if density.skewes_hit is not None else "none",
        "sign_changes": ";".join(map(str, density.sign_changes)) or "none",
        "mc_samples": config.mc_samples,
        "seed": config.seed,
        "invariants_passed": "",  # filled below
    }
    summary["invariants_passed"] = "yes" if not failures else "no:" + ",".join(failures)

    out_dir = Path(config.output_dir)
    out_dir.parent.mkdir(parents=True, exist_ok=True)
    staging = Path(tempfile.mkdtemp(prefix=".primerace-staging-", dir=out_dir.parent))
    try:
        with open(staging / "summary.txt", "w", encoding="utf-8") as fh:
            fh.write(SUMMARY_HEADER + "\n")
            for key in sorted(summary):
                fh.write(f"{key}={summary[key]}\n")
        dist.export(staging / "density.csv")
        traj.export(staging / "trajectory.csv")
        with open(staging / "w1_diagnostics.txt", "w", encoding="utf-8") as fh:
            fh.write("\n".join(w1_lines) + "\n")
        with open(staging / "eli.txt", "w", encoding="utf-8") as fh:
            fh.write(f"support_size={len(t.support)}\n")
            fh.write(f"log_k={_fmt(stats.log_k)}\n")
            fh.write(f"A={_fmt(config.eli_A)}\nL={_fmt(config.eli_L)}\n")
            fh.write(f"log_X0={_fmt(threshold.log_X0)}\n")
            for Xe in (1e4, 1e6, 1e9):
                fh.write(f"envelope_at_{Xe:.0e}={_fmt(envelope(Xe))}\n")
        out_dir.mkdir(parents=True, exist_ok=True)
        for item in sorted(staging.iterdir()):
            os.replace(item, out_dir / item.name)
    finally:
        shutil.rmtree(staging, ignore_errors=True)
    return PipelineResult(summary=summary, invariant_failures=failures, output_dir=out_dir)
