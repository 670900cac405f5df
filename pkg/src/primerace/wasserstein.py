"""Wasserstein-1 machinery on the line and on tori.

Exact 1-D W1 via CDF differences, exact circular W1 via the optimal
additive shift of the periodic CDF difference, the quantitative
equidistribution upper bound with torus Fourier coefficients, and
1-Lipschitz duality lower bounds.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from .errors import BudgetError, InvalidMeasureError

TWO_PI = 2.0 * math.pi
ENUMERATION_BUDGET = 10**7


@dataclass(frozen=True)
class EmpiricalMeasure:
    """Probability measure on the line as a right-continuous step CDF."""

    knots: np.ndarray
    cdf: np.ndarray

    @classmethod
    def from_samples(cls, xs) -> "EmpiricalMeasure":
        xs = np.asarray(xs, dtype=np.float64)
        if xs.size == 0:
            raise InvalidMeasureError("empirical measure needs at least one sample")
        xs = np.sort(xs)
        knots, counts = np.unique(xs, return_counts=True)
        return cls(knots=knots, cdf=np.cumsum(counts) / xs.size)

    @classmethod
    def from_cdf(cls, knots, cdf) -> "EmpiricalMeasure":
        knots = np.asarray(knots, dtype=np.float64)
        cdf = np.asarray(cdf, dtype=np.float64)
        if knots.size == 0:
            raise InvalidMeasureError("empty CDF representation")
        if np.any(np.diff(knots) <= 0) or np.any(np.diff(cdf) < -1e-12):
            raise InvalidMeasureError("knots must increase and cdf must be nondecreasing")
        if abs(cdf[-1] - 1.0) > 1e-9:
            raise InvalidMeasureError("cdf must end at 1")
        return cls(knots=knots, cdf=cdf)

    def cdf_at(self, x) -> np.ndarray:
        idx = np.searchsorted(self.knots, x, side="right")
        vals = np.concatenate(([0.0], self.cdf))
        return vals[idx]

    def mean(self) -> float:
        masses = np.diff(np.concatenate(([0.0], self.cdf)))
        return float(np.sum(masses * self.knots))

    def pushforward(self, f) -> "EmpiricalMeasure":
        masses = np.diff(np.concatenate(([0.0], self.cdf)))
        ys = np.asarray([f(x) for x in self.knots], dtype=np.float64)
        order = np.argsort(ys, kind="stable")
        ys = ys[order]
        ms = masses[order]
        knots, inverse = np.unique(ys, return_inverse=True)
        agg = np.zeros(knots.shape)
        np.add.at(agg, inverse, ms)
        return EmpiricalMeasure(knots=knots, cdf=np.cumsum(agg))

    def mass_of_interval(self, lo: float, hi: float) -> float:
        """Mass of (lo, hi]."""
        return float(self.cdf_at(hi) - self.cdf_at(lo))

    def mass_above(self, x: float) -> float:
        """Mass of (x, infinity)."""
        return float(1.0 - self.cdf_at(x))


def w1_line(a: EmpiricalMeasure, b: EmpiricalMeasure) -> float:
    """Exact W1 on the line: integral of |F_a - F_b|."""
    knots = np.union1d(a.knots, b.knots)
    if knots.size < 2:
        return 0.0
    diff = np.abs(a.cdf_at(knots[:-1]) - b.cdf_at(knots[:-1]))
    return float(np.sum(diff * np.diff(knots)))


def _circle_angles(xs) -> np.ndarray:
    xs = np.asarray(xs, dtype=np.float64) % TWO_PI
    if xs.size == 0:
        raise InvalidMeasureError("empty circular measure")
    return np.sort(xs)


def arc_distance(alpha, beta) -> np.ndarray:
    """Arc-length metric on the circle for angle arrays."""
    d = np.abs(np.asarray(alpha) - np.asarray(beta)) % TWO_PI
    return np.minimum(d, TWO_PI - d)


def w1_circle(a_angles, b_angles) -> float:
    """Exact circular W1 between equal-weight angle samples.

    Minimizes integral of |F_a - F_b - c| over the additive constant c; the
    objective is convex piecewise-linear, so a ternary search over the sorted
    knot values lands on the exact optimum.
    """
    a = _circle_angles(a_angles)
    b = _circle_angles(b_angles)
    knots = np.union1d(a, b)
    # piecewise-constant difference of CDFs on [0, 2pi)
    fa = np.searchsorted(a, knots, side="right") / a.size
    fb = np.searchsorted(b, knots, side="right") / b.size
    diff = fa - fb
    widths = np.diff(np.concatenate([knots, [knots[0] + TWO_PI]]))

    def objective(c: float) -> float:
        return float(np.sum(np.abs(diff - c) * widths))

    candidates = np.unique(diff)
    lo, hi = 0, len(candidates) - 1
    while hi - lo > 2:
        m1 = lo + (hi - lo) // 3
        m2 = hi - (hi - lo) // 3
        if objective(candidates[m1]) <= objective(candidates[m2]):
            hi = m2
        else:
            lo = m1
    best = min(objective(candidates[i]) for i in range(lo, hi + 1))
    return best


def haar_angles(n: int = 10**4) -> np.ndarray:
    """Equispaced discretization of the Haar measure on one circle factor."""
    return (np.arange(n) + 0.5) * TWO_PI / n


def haar_samples(N: int, n: int = 10**4) -> np.ndarray:
    """Low-discrepancy surrogate for Haar on (S^1)^N, shape (n, N)."""
    if N == 1:
        return haar_angles(n)[:, None]
    # rank-1 lattice with golden-ratio style irrational shifts per coordinate
    alphas = np.array([math.sqrt(p) % 1.0 for p in [2, 3, 5, 7, 11, 13][:N]])
    k = np.arange(n)[:, None]
    return (k * alphas[None, :] % 1.0) * TWO_PI


@dataclass(frozen=True)
class TorusOrbitSpec:
    """Frequencies and observation window of a torus orbit x -> (e^{i x gamma_j})_j."""

    gammas: np.ndarray
    x0: float
    X: float
    relations: Tuple[Tuple[int, ...], ...] = ()

    def __post_init__(self):
        gam = np.asarray(self.gammas, dtype=np.float64)
        if gam.size < 1:
            raise InvalidMeasureError("need at least one frequency")
        if np.any(gam <= 0):
            raise InvalidMeasureError("frequencies must be positive")
        if not self.X > self.x0:
            raise InvalidMeasureError("window must satisfy X > x0")
        object.__setattr__(self, "gammas", gam)
        for m in self.relations:
            if not self.is_relation(np.asarray(m)):
                raise InvalidMeasureError(f"listed relation {m} fails the tolerance test")

    @property
    def N(self) -> int:
        return int(self.gammas.size)

    @property
    def window(self) -> float:
        return self.X - self.x0

    def relation_tolerance(self, m) -> float:
        m = np.asarray(m, dtype=np.float64)
        return 1e-9 * float(np.sum(np.abs(m))) * float(np.max(self.gammas))

    def is_relation(self, m) -> bool:
        m = np.asarray(m, dtype=np.float64)
        return abs(float(m @ self.gammas)) < self.relation_tolerance(m)

    def orbit_samples(self, n: int = 4096) -> np.ndarray:
        """Midpoint discretization of the orbit measure nu_X, shape (n, N)."""
        xs = self.x0 + (np.arange(n) + 0.5) * self.window / n
        return (xs[:, None] * self.gammas[None, :]) % TWO_PI


def detect_relations(spec: TorusOrbitSpec, H: int) -> List[Tuple[int, ...]]:
    """Integer vectors with sup-norm <= H annihilating the frequencies."""
    found = []
    for m in _box_vectors(spec.N, H):
        if spec.is_relation(np.array(m)):
            found.append(m)
    return found


def _box_vectors(N: int, H: int) -> Iterable[Tuple[int, ...]]:
    vals = [-H] * N
    while True:
        tup = tuple(vals)
        if any(tup):
            yield tup
        i = 0
        while i < N:
            vals[i] += 1
            if vals[i] <= H:
                break
            vals[i] = -H
            i += 1
        else:
            break


@dataclass(frozen=True)
class KWBound:
    H: int
    leading: float  # 4 sqrt(3) sqrt(N) / H
    tail: float  # (2/(X-x0)) sqrt(sum 1/(||m||^2 <m,gamma>^2))
    relations_seen: Tuple[Tuple[int, ...], ...]
    mc_standard_error: float | None = None

    @property
    def total(self) -> float:
        return self.leading + self.tail


def kw_bound(
    spec: TorusOrbitSpec,
    H: int,
    *,
    allow_sampling: bool = False,
    n_samples: int = 200_000,
    seed: int = 7,
) -> KWBound:
    """Equidistribution upper bound for W1(nu_X, Haar of the orbit closure)."""
    if H < 1:
        raise InvalidMeasureError("H must be >= 1")
    N = spec.N
    count = (2 * H + 1) ** N - 1
    leading = 4.0 * math.sqrt(3.0) * math.sqrt(N) / H
    relations: List[Tuple[int, ...]] = []
    if count <= ENUMERATION_BUDGET:
        acc = 0.0
        for m in _box_vectors(N, H):
            mv = np.array(m, dtype=np.float64)
            dot = float(mv @ spec.gammas)
            if abs(dot) < spec.relation_tolerance(mv):
                relations.append(m)
                continue
            acc += 1.0 / (float(mv @ mv) * dot * dot)
        tail = 2.0 / spec.window * math.sqrt(acc)
        return KWBound(H=H, leading=leading, tail=tail, relations_seen=tuple(relations))
    if not allow_sampling:
        raise BudgetError(
            f"enumeration of {count} vectors exceeds budget {ENUMERATION_BUDGET}; "
            "enable sampling"
        )
    rng = np.random.default_rng(seed)
    draws = rng.integers(-H, H + 1, size=(n_samples, N))
    nonzero = np.any(draws != 0, axis=1)
    draws = draws[nonzero]
    dots = draws.astype(np.float64) @ spec.gammas
    tol = 1e-9 * np.sum(np.abs(draws), axis=1) * float(np.max(spec.gammas))
    ok = np.abs(dots) >= tol
    terms = np.zeros(draws.shape[0])
    norms = np.sum(draws.astype(np.float64) ** 2, axis=1)
    terms[ok] = 1.0 / (norms[ok] * dots[ok] ** 2)
    mean = float(np.mean(terms))
    total_sum = mean * count
    stderr_sum = float(np.std(terms) / math.sqrt(terms.size)) * count
    tail = 2.0 / spec.window * math.sqrt(total_sum)
    # delta-method standard error of the tail term
    tail_se = 0.0 if total_sum == 0 else tail * 0.5 * stderr_sum / total_sum
    return KWBound(
        H=H, leading=leading, tail=tail, relations_seen=(), mc_standard_error=tail_se
    )


def kw_bound_table(spec: TorusOrbitSpec, hs: Sequence[int]) -> str:
    """Text table 'H, leading, tail, total' for a list of H values."""
    lines = ["H, leading, tail, total"]
    for H in hs:
        b = kw_bound(spec, H)
        lines.append(f"{H}, {b.leading:.12g}, {b.tail:.12g}, {b.total:.12g}")
    return "\n".join(lines) + "\n"


def orbit_fourier(spec: TorusOrbitSpec, m) -> complex:
    """Fourier coefficient of nu_X at the integer vector m."""
    mv = np.asarray(m, dtype=np.float64)
    dot = float(mv @ spec.gammas)
    if not np.any(mv) or abs(dot) < spec.relation_tolerance(mv):
        return 1.0 + 0.0j
    return (cmath.exp(1j * dot * spec.X) - cmath.exp(1j * dot * spec.x0)) / (
        1j * dot * spec.window
    )


def w1_duality_lower_bound(
    samples: np.ndarray,
    reference: np.ndarray | str,
    trials: int = 64,
    seed: int = 11,
) -> float:
    """Kantorovich-Rubinstein lower bound on the torus.

    Maximizes |mean_mu u - mean_nu u| over 1-Lipschitz test functions built
    from coordinate arc-distances to centers and clipped linear combinations
    renormalized by their Lipschitz constant; always a valid lower bound.
    """
    if trials < 1:
        raise InvalidMeasureError("trials must be >= 1")
    mu = np.atleast_2d(np.asarray(samples, dtype=np.float64)) % TWO_PI
    if mu.ndim == 2 and mu.shape[1] == 0:
        raise InvalidMeasureError("samples must have at least one coordinate")
    N = mu.shape[1]
    if isinstance(reference, str):
        if reference != "haar":
            raise InvalidMeasureError(f"unknown reference {reference!r}")
        nu = haar_samples(N)
    else:
        nu = np.atleast_2d(np.asarray(reference, dtype=np.float64)) % TWO_PI
    rng = np.random.default_rng(seed)
    best = 0.0

    def gap(u_mu: np.ndarray, u_nu: np.ndarray) -> float:
        return abs(float(np.mean(u_mu)) - float(np.mean(u_nu)))

    # coordinate distances to deterministic centers: sample points themselves
    # and their antipodes, capped for large sample sets
    centers = []
    for arr in (mu, nu):
        take = arr if arr.shape[0] <= 128 else arr[:: max(1, arr.shape[0] // 128)]
        centers.append(take)
        centers.append((take + math.pi) % TWO_PI)
    centers = np.concatenate(centers, axis=0)
    for j in range(N):
        for c in np.unique(np.round(centers[:, j], 12)):
            best = max(best, gap(arc_distance(mu[:, j], c), arc_distance(nu[:, j], c)))
    # random clipped combinations
    for _ in range(trials):
        c = rng.uniform(0, TWO_PI, size=N)
        alpha = rng.normal(size=N)
        norm = float(np.linalg.norm(alpha))
        if norm == 0:
            continue
        lo = rng.uniform(0.0, math.pi) * np.sum(np.abs(alpha)) / norm
        u_mu = np.clip(
            (arc_distance(mu, c[None, :]) @ alpha) / norm, -lo, lo
        )
        u_nu = np.clip((arc_distance(nu, c[None, :]) @ alpha) / norm, -lo, lo)
        best = max(best, gap(u_mu, u_nu))
    return best


def bracket_functions(L: float):
    """(h_L^-, h_L^+): 1 on the positive axis up to a 1/L transition strip."""

    def h_minus(x):
        x = np.asarray(x, dtype=np.float64)
        return np.clip(L * x, 0.0, 1.0)

    def h_plus(x):
        x = np.asarray(x, dtype=np.float64)
        return np.clip(L * x + 1.0, 0.0, 1.0)

    return h_minus, h_plus


def lipschitz_bracket(nu: EmpiricalMeasure, L: float) -> Tuple[float, float]:
    """(integral of h_L^- d nu, integral of h_L^+ d nu); brackets nu(0, inf)."""
    if L <= 0:
        raise InvalidMeasureError("L must be positive")
    h_minus, h_plus = bracket_functions(L)
    masses = np.diff(np.concatenate(([0.0], nu.cdf)))
    lo = float(np.sum(masses * h_minus(nu.knots)))
    hi = float(np.sum(masses * h_plus(nu.knots)))
    return lo, hi
