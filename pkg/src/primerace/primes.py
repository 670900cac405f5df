"""Sieve-backed weighted prime counting and the normalized race error E(y).

The sieve is segmented (2^20-element segments) so desk-scale limits stay
cheap on memory.  Weighted counts reduce to residue-class lookups against a
per-modulus value table, which keeps integer-valued race weights exact in
float64 arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np

from .errors import OutOfRangeError, ResourceError
from .residues import RaceWeight, ResidueFunction, star

SEGMENT = 1 << 20
DEFAULT_MAX_LIMIT = 10**10


def _simple_sieve(limit: int) -> np.ndarray:
    flags = np.ones(limit + 1, dtype=bool)
    flags[:2] = False
    for p in range(2, math.isqrt(limit) + 1):
        if flags[p]:
            flags[p * p :: p] = False
    return np.flatnonzero(flags).astype(np.int64)


def sieve(limit: int, max_limit: int = DEFAULT_MAX_LIMIT) -> "PrimeTable":
    """All primes <= limit as a PrimeTable."""
    if limit < 2:
        raise OutOfRangeError(f"sieve limit must be >= 2, got {limit}")
    if limit > max_limit:
        raise ResourceError(f"sieve limit {limit} exceeds budget {max_limit}")
    if limit <= SEGMENT:
        return PrimeTable(limit=limit, primes=_simple_sieve(limit))
    base = _simple_sieve(math.isqrt(limit))
    collected = [_simple_sieve(SEGMENT - 1)]
    lo = SEGMENT
    while lo <= limit:
        hi = min(lo + SEGMENT, limit + 1)
        flags = np.ones(hi - lo, dtype=bool)
        for p in base:
            p = int(p)
            if p * p >= hi:
                break
            start = max(p * p, ((lo + p - 1) // p) * p)
            flags[start - lo :: p] = False
        collected.append((np.flatnonzero(flags) + lo).astype(np.int64))
        lo = hi
    return PrimeTable(limit=limit, primes=np.concatenate(collected))


@dataclass
class PrimeTable:
    """Sorted primes up to ``limit`` plus cached per-modulus weight machinery."""

    limit: int
    primes: np.ndarray

    def __post_init__(self):
        self._log_primes: np.ndarray | None = None
        self._residue_cache: Dict[int, np.ndarray] = {}

    @property
    def log_primes(self) -> np.ndarray:
        if self._log_primes is None:
            self._log_primes = np.log(self.primes.astype(np.float64))
        return self._log_primes

    def residues_mod(self, q: int) -> np.ndarray:
        if q not in self._residue_cache:
            self._residue_cache[q] = (self.primes % q).astype(np.int64)
        return self._residue_cache[q]

    def count_class(self, x: float, q: int, a: int) -> int:
        """pi(x; q, a): number of primes p <= x with p = a mod q."""
        self._check_range(x)
        idx = int(np.searchsorted(self.primes, math.floor(x), side="right"))
        res = self.residues_mod(q)[:idx]
        return int(np.count_nonzero(res == a % q))

    def count(self, x: float) -> int:
        self._check_range(x)
        return int(np.searchsorted(self.primes, math.floor(x), side="right"))

    def _check_range(self, x: float):
        if x > self.limit:
            raise OutOfRangeError(f"x={x} beyond sieve limit {self.limit}")

    def weight_vector(self, t: RaceWeight | ResidueFunction) -> np.ndarray:
        """t(p mod q) per prime; zero on primes dividing q."""
        lut = np.zeros(t.q, dtype=np.float64)
        for a, v in t.values.items():
            lut[a % t.q] = v
        return lut[self.residues_mod(t.q)]


def pi_weighted(table: PrimeTable, x: float, t: RaceWeight | ResidueFunction) -> float:
    """pi(x; t) = sum_{p <= x, p coprime to q} t(p)."""
    table._check_range(x)
    idx = int(np.searchsorted(table.primes, math.floor(x), side="right"))
    return float(np.sum(table.weight_vector(t)[:idx]))


def theta_weighted(table: PrimeTable, x: float, t: RaceWeight | ResidueFunction) -> float:
    """theta(x; t) = sum_{p <= x} t(p) log p."""
    table._check_range(x)
    idx = int(np.searchsorted(table.primes, math.floor(x), side="right"))
    w = table.weight_vector(t)[:idx]
    return float(np.sum(w * table.log_primes[:idx]))


def psi_weighted(table: PrimeTable, x: float, t: RaceWeight | ResidueFunction) -> float:
    """psi(x; t) = sum_{p^k <= x, p coprime to q} t(p^k) log p."""
    table._check_range(x)
    total = theta_weighted(table, x, t)
    k = 2
    while 2**k <= x:
        bound = math.floor(x ** (1.0 / k))
        # guard against floating roots landing one off
        while (bound + 1) ** k <= x:
            bound += 1
        while bound**k > x:
            bound -= 1
        idx = int(np.searchsorted(table.primes, bound, side="right"))
        if idx > 0:
            ps = table.primes[:idx]
            logs = table.log_primes[:idx]
            pk = np.array([pow(int(p), k, t.q) for p in ps], dtype=np.int64)
            lut = np.zeros(t.q, dtype=np.float64)
            for a, v in t.values.items():
                lut[a % t.q] = v
            total += float(np.sum(lut[pk] * logs))
        k += 1
    return total


def prime_power_decomposition_gap(
    table: PrimeTable, x: float, t: RaceWeight
) -> Tuple[float, float]:
    """|psi - theta - theta(sqrt(x); t*)| and its cube-and-higher envelope."""
    ts = star(t)
    gap = abs(
        psi_weighted(table, x, t)
        - theta_weighted(table, x, t)
        - theta_weighted(table, math.sqrt(x), ts)
    )
    envelope = t.sup_norm * (x ** (1.0 / 3.0)) * math.log(x) / math.log(2)
    return gap, envelope


@dataclass
class RaceTrajectory:
    """E(y) = (y / e^{y/2}) pi(e^y; t) sampled on a jump-aware grid."""

    weight: RaceWeight
    grid: np.ndarray
    E_values: np.ndarray

    def export(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            for y, e in zip(self.grid, self.E_values):
                fh.write(f"{y:.12g},{e:.12g}\n")


class WeightedCounter:
    """Running weighted prime count with O(log n) evaluation at any x=e^y."""

    def __init__(self, table: PrimeTable, t: RaceWeight | ResidueFunction):
        w = table.weight_vector(t)
        nz = w != 0.0
        self.jump_logs = table.log_primes[nz]
        self.jump_weights = w[nz]
        self.jump_primes = table.primes[nz]
        self.cumulative = np.cumsum(self.jump_weights)
        self.limit_y = math.log(table.limit)

    def weighted_count_at(self, y):
        """pi(e^y; t) for scalar or array y (right-continuous in y)."""
        idx = np.searchsorted(self.jump_logs, y, side="right")
        cums = np.concatenate(([0.0], self.cumulative))
        return cums[idx]

    def E_at(self, y):
        y = np.asarray(y, dtype=np.float64)
        return y * np.exp(-y / 2.0) * self.weighted_count_at(y)


def trajectory(
    table: PrimeTable, t: RaceWeight, X: float, grid_step: float = 1e-2
) -> RaceTrajectory:
    """Sample E on a uniform grid over [log 2, X] merged with all jump points."""
    if X <= math.log(2):
        raise OutOfRangeError("X must exceed log 2")
    if math.exp(X) > table.limit * (1 + 1e-12):
        raise OutOfRangeError(f"e^X={math.exp(X):.6g} beyond sieve limit {table.limit}")
    counter = WeightedCounter(table, t)
    uniform = np.arange(math.log(2), X, grid_step)
    jumps = counter.jump_logs[counter.jump_logs <= X]
    grid = np.unique(np.concatenate([uniform, jumps, [X]]))
    grid = grid[(grid >= math.log(2)) & (grid <= X)]
    return RaceTrajectory(weight=t, grid=grid, E_values=counter.E_at(grid))
