"""The limiting distribution of the race error: Fourier transform as a
Bessel product, density by inversion, delta = mu(0, inf), moments, the
bias factor, the random phase model, and the threshold/rate formulas.

mu^(xi) = exp(-i <t,r> xi) * prod over support zeros of
J0(2 |<t,chi>| xi / sqrt(1/4 + gamma^2)), optionally times a Gaussian tail
compensation exp(-xi^2 V_tail / 2) replacing the zeros above the cutoff.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, List, Tuple

import numpy as np
from scipy.integrate import quad
from scipy.special import j0

from .errors import (
    GridError,
    InsufficientCoverageError,
    InvalidExponentError,
)
from .residues import RaceWeight, mean_shift, weight_stats
from .zeros import ZeroStore, rvm_density, support_terms

XI_DECAY = 1e-12


def _zero_terms(t: RaceWeight, store: ZeroStore, T_max: float) -> Tuple[np.ndarray, np.ndarray]:
    """(gammas, <t,chi> per zero) over support zeros up to T_max, ascending."""
    gam: List[float] = []
    coef: List[complex] = []
    for prim_coeff in support_terms(t):
        prim, coeff = prim_coeff
        g = store.ordinates(prim.q, prim.label)
        g = g[g <= T_max]
        gam.extend(g.tolist())
        coef.extend([coeff] * len(g))
    order = np.argsort(gam, kind="stable")
    return np.array(gam)[order], np.array(coef, dtype=complex)[order]


def tail_variance(t: RaceWeight, store: ZeroStore, T_max: float) -> float:
    """2 sum_{gamma > T_max} |<t,chi>|^2/(1/4+gamma^2), via the R-vM density."""
    total = 0.0
    for prim, coeff in support_terms(t):
        integral = quad(
            lambda u, f=prim.q: rvm_density(f, u) / (0.25 + u * u),
            T_max,
            np.inf,
            limit=200,
        )[0]
        total += 2.0 * abs(coeff) ** 2 * integral
    return total


class MuHat:
    """Fourier transform of the limiting law, evaluable on arbitrary xi."""

    def __init__(
        self,
        t: RaceWeight,
        store: ZeroStore,
        T_max: float,
        tail: str = "rvm",
        min_coverage: float = 100.0,
    ):
        covs = [store.coverage(p.q, p.label) for p, _ in support_terms(t)]
        if T_max < min_coverage:
            raise InsufficientCoverageError(
                f"cutoff T_max={T_max} below the required minimum {min_coverage}"
            )
        if min(covs) < T_max:
            raise InsufficientCoverageError(
                f"coverage {min(covs)} below the cutoff {T_max}"
            )
        if tail not in ("rvm", "none"):
            raise ValueError(f"unknown tail mode {tail!r}")
        self.weight = t
        self.T_max = T_max
        self.gammas, coeffs = _zero_terms(t, store, T_max)
        self.amplitudes = np.abs(coeffs)
        self.mean = -mean_shift(t)
        self.scales = 2.0 * self.amplitudes / np.sqrt(0.25 + self.gammas**2)
        self.tail_var = tail_variance(t, store, T_max) if tail == "rvm" else 0.0
        self.variance = float(np.sum(self.scales**2)) / 2.0 + self.tail_var

    def __call__(self, xi) -> np.ndarray:
        """mu^(xi); phase factor times the J0 product times tail compensation."""
        xi = np.atleast_1d(np.asarray(xi, dtype=np.float64))
        prod = np.prod(j0(np.multiply.outer(xi, self.scales)), axis=-1)
        out = np.exp(1j * self.mean * xi) * prod
        if self.tail_var > 0:
            out = out * np.exp(-0.5 * self.tail_var * xi**2)
        return out

    def modulus(self, xi) -> np.ndarray:
        return np.abs(self(xi))


def mu_hat(
    t: RaceWeight, store: ZeroStore, T_max: float, xi, tail: str = "rvm"
) -> np.ndarray:
    """Convenience evaluation of the transform at xi (scalar or array)."""
    return MuHat(t, store, T_max, tail=tail)(xi)


def _xi_grid(mh: MuHat, dxi: float, max_xi: float) -> np.ndarray:
    """Extend the xi grid in blocks until |mu^| stays below the decay threshold."""
    block = 256
    xs = [np.array([0.0])]
    k = 1
    while True:
        xi = (np.arange(k, k + block)) * dxi
        vals = mh.modulus(xi)
        xs.append(xi)
        if np.all(vals[-block // 4 :] < XI_DECAY) and float(np.max(vals)) < 1.0:
            if np.all(mh.modulus(xi[-1] + dxi * np.arange(1, 9)) < XI_DECAY):
                break
        k += block
        if k * dxi > max_xi:
            raise GridError(
                f"|mu^| = {float(vals.min()):.3e} at xi = {xi[-1]:.3g} "
                f"has not decayed below {XI_DECAY} within max_xi = {max_xi}"
            )
    return np.concatenate(xs)


@dataclass
class LimitingDistribution:
    """Density of the limiting law on a grid, with delta and moment data."""

    weight: RaceWeight
    x: np.ndarray
    density: np.ndarray
    delta: float
    mean_closed: float
    variance_closed: float
    mean_quadrature: float
    variance_quadrature: float
    T_max: float
    tail_variance: float
    xi: np.ndarray
    mu_hat_values: np.ndarray

    @property
    def B(self) -> float:
        return self.mean_closed / math.sqrt(self.variance_closed)

    def density_at(self, x) -> np.ndarray:
        return np.interp(x, self.x, self.density)

    def integral_of(self, h: Callable) -> float:
        """Trapezoid quadrature of h against the density grid."""
        return float(np.trapezoid(h(self.x) * self.density, self.x))

    def export(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("# x,f(x)\n")
            for xx, ff in zip(self.x, self.density):
                fh.write(f"{xx:.12g},{ff:.12g}\n")


def invert_density(
    t: RaceWeight,
    store: ZeroStore,
    T_max: float,
    *,
    n_x: int = 4001,
    half_width_sigmas: float = 14.0,
    tail: str = "rvm",
    max_xi: float = 4000.0,
    min_coverage: float = 100.0,
) -> LimitingDistribution:
    """Density, delta and moments by discrete Fourier inversion.

    The xi step is tied to the x-range (2 pi / range) so discretization only
    folds in images of the density a full window away; the grid is extended
    until |mu^| < 1e-12 and always contains x = 0 as a node.
    """
    mh = MuHat(t, store, T_max, tail=tail, min_coverage=min_coverage)
    sigma = math.sqrt(mh.variance)
    half = max(half_width_sigmas * sigma, 0.5)
    dx = 2.0 * half / (n_x - 1)
    k_lo = min(math.floor((mh.mean - half) / dx), -1)
    k_hi = max(math.ceil((mh.mean + half) / dx), 1)
    x = np.arange(k_lo, k_hi + 1) * dx  # contains 0 exactly
    x_range = float(x[-1] - x[0])
    dxi = 2.0 * math.pi / x_range
    xi = _xi_grid(mh, dxi, max_xi)
    vals = mh(xi)
    # f(x) = (dxi/2pi) [mu^(0) + 2 Re sum_{k>=1} mu^(xi_k) e^{-i xi_k x}]
    phases = np.exp(-1j * np.multiply.outer(x, xi[1:]))
    f = (dxi / (2.0 * math.pi)) * (
        vals[0].real + 2.0 * (phases @ vals[1:]).real
    )
    zero_idx = int(np.searchsorted(x, 0.0))
    assert abs(x[zero_idx]) < 1e-9 * max(1.0, dx)
    delta = float(np.trapezoid(f[zero_idx:], x[zero_idx:]))
    # Gaussian estimates for the mass beyond the grid
    delta += _gaussian_tail((x[-1] - mh.mean) / sigma)
    mean_quad = float(np.trapezoid(x * f, x))
    var_quad = float(np.trapezoid((x - mean_quad) ** 2 * f, x))
    return LimitingDistribution(
        weight=t,
        x=x,
        density=f,
        delta=min(max(delta, 0.0), 1.0),
        mean_closed=mh.mean,
        variance_closed=mh.variance,
        mean_quadrature=mean_quad,
        variance_quadrature=var_quad,
        T_max=T_max,
        tail_variance=mh.tail_var,
        xi=xi,
        mu_hat_values=vals,
    )


def _gaussian_tail(z: float) -> float:
    return 0.5 * math.erfc(z / math.sqrt(2.0))


@dataclass(frozen=True)
class MuHatL1:
    l1: float
    grid_part: float
    tail_part: float
    sup_density_bound: float  # ||f||_inf <= ||mu^||_1 / (2 pi)


def mu_hat_l1(
    t: RaceWeight,
    store: ZeroStore,
    T_max: float,
    *,
    dxi: float = 0.02,
    tail: str = "rvm",
    max_xi: float = 4000.0,
    min_coverage: float = 100.0,
) -> MuHatL1:
    """Quadrature of |mu^| plus an exponential tail estimate."""
    mh = MuHat(t, store, T_max, tail=tail, min_coverage=min_coverage)
    xi = _xi_grid(mh, dxi, max_xi)
    mod = mh.modulus(xi)
    grid_part = 2.0 * float(np.trapezoid(mod, xi))  # symmetric in xi
    # fit an exponential decay rate on the last stretch that is still positive
    tail_part = 0.0
    positive = mod > 0
    if np.any(positive):
        last = np.flatnonzero(positive)[-1]
        start = max(0, last - 32)
        seg = mod[start : last + 1]
        seg_xi = xi[start : last + 1]
        if len(seg) > 4 and seg[-1] > 0:
            slope = np.polyfit(seg_xi, np.log(seg), 1)[0]
            if slope < 0:
                tail_part = 2.0 * seg[-1] / (-slope)
    l1 = grid_part + tail_part
    return MuHatL1(
        l1=l1,
        grid_part=grid_part,
        tail_part=tail_part,
        sup_density_bound=l1 / (2.0 * math.pi),
    )


@dataclass(frozen=True)
class LipschitzReport:
    truncated: float  # D at height T
    tail_sum: float  # estimated contribution of zeros above T
    total: float


def lipschitz_constant_D(t: RaceWeight, store: ZeroStore, T: float) -> LipschitzReport:
    """D = 2 sqrt(sum |<t,chi>|^2/(1/4+gamma^2)), truncated plus tail."""
    gam, coeffs = _zero_terms(t, store, T)
    ssum = float(np.sum(np.abs(coeffs) ** 2 / (0.25 + gam**2)))
    tail = tail_variance(t, store, T) / 2.0
    return LipschitzReport(
        truncated=2.0 * math.sqrt(ssum),
        tail_sum=tail,
        total=2.0 * math.sqrt(ssum + tail),
    )


@dataclass
class RandomModel:
    """The random phase model: constant - 2 Re sum b_n z_n on uniform phases."""

    constant: float
    coefficients: np.ndarray  # b_n
    tail_sigma: float = 0.0

    @property
    def dimension(self) -> int:
        return int(self.coefficients.size)

    def evaluate(self, phases: np.ndarray) -> np.ndarray:
        """Value at phase matrix (n_samples, N) of angles."""
        z = np.exp(1j * np.atleast_2d(phases))
        return self.constant - 2.0 * (z @ self.coefficients).real

    def sample_delta(
        self, n_samples: int, seed: int = 12345, chunk: int = 1 << 16
    ) -> Tuple[float, float]:
        """(Monte-Carlo estimate of P(value > 0), standard error).

        Phase-invariance reduces 2 Re(b e^{i theta}) to 2|b| cos(theta); chunk
        seeds derive deterministically from the master seed.  Phases run in
        float32: the rounding error (~1e-6) is orders below the Monte-Carlo
        resolution of the positive-mass estimate.
        """
        amps = (2.0 * np.abs(self.coefficients)).astype(np.float32)
        seq = np.random.SeedSequence(seed)
        states = [np.random.default_rng(s) for s in seq.spawn(max(1, math.ceil(n_samples / chunk)))]
        hits = 0
        done = 0
        for rng in states:
            m = min(chunk, n_samples - done)
            if m <= 0:
                break
            if amps.size:
                theta = rng.random((m, amps.size), dtype=np.float32)
                theta *= np.float32(2.0 * math.pi)
                np.cos(theta, out=theta)
                vals = np.float32(self.constant) - theta @ amps
            else:
                vals = np.full(m, self.constant, dtype=np.float32)
            if self.tail_sigma > 0:
                vals = vals + self.tail_sigma * rng.standard_normal(m)
            hits += int(np.count_nonzero(vals > 0))
            done += m
        p = hits / n_samples
        return p, math.sqrt(max(p * (1 - p), 1e-12) / n_samples)


def build_random_model(
    t: RaceWeight, store: ZeroStore, T: float, tail: str = "none"
) -> RandomModel:
    """Random model over the support zeros up to T; optional Gaussian tail."""
    gam, coeffs = _zero_terms(t, store, T)
    b = coeffs / (0.5 + 1j * gam)
    sigma = math.sqrt(tail_variance(t, store, T)) if tail == "rvm" else 0.0
    return RandomModel(constant=-mean_shift(t), coefficients=b, tail_sigma=sigma)


def rate_envelope(C: float, A: float, log_X: float) -> float:
    """C^{3/4} (log C)^{1/4A} (log log X) (log X)^{-1/4A}, in log-X form.

    Taking log X directly keeps the formula evaluable in the regime where it
    is actually decreasing (log log X > 4A), far beyond float range for X.
    """
    return (
        C**0.75
        * max(math.log(C), 1e-12) ** (1.0 / (4.0 * A))
        * math.log(log_X)
        * log_X ** (-1.0 / (4.0 * A))
    )


@dataclass(frozen=True)
class EliThreshold:
    X0: float
    log_X0: float
    support_size: int
    log_k: float

    def envelope(self, C: float, A: float) -> Callable[[float], float]:
        def env(X: float) -> float:
            return rate_envelope(C, A, math.log(X))

        return env


def eli_threshold(t: RaceWeight, A: float, L_const: float) -> Tuple[EliThreshold, Callable[[float], float]]:
    """X0 = (S log k)^{(L S log k)^A} plus the convergence-rate envelope."""
    if A <= 1:
        raise InvalidExponentError(f"threshold exponent must exceed 1, got A={A}")
    if L_const <= 0:
        raise InvalidExponentError("L constant must be positive")
    stats = weight_stats(t)
    S = len(t.support)
    base = S * stats.log_k
    log_X0 = (L_const * base) ** A * math.log(base)
    X0 = math.exp(log_X0) if log_X0 < 700 else math.inf
    thr = EliThreshold(X0=X0, log_X0=log_X0, support_size=S, log_k=stats.log_k)
    return thr, thr.envelope(stats.C, A)


@dataclass(frozen=True)
class BiasSummary:
    mean: float  # E(t) = -<t, r_q>
    variance: float  # V(t), truncated sum plus R-vM tail
    B: float
    skewes_envelope: float  # user_const * (B^2 + log C)
    delta_lower_bound: float | None  # exp(-c1 B^2) when the mean is <= 0


def bias_summary(
    t: RaceWeight,
    store: ZeroStore,
    T_max: float | None = None,
    *,
    envelope_const: float = 1.0,
    c1: float = 1.0,
) -> BiasSummary:
    """Mean, variance, bias factor and the triple-log Skewes envelope."""
    covs = [store.coverage(p.q, p.label) for p, _ in support_terms(t)]
    if T_max is None:
        T_max = min(covs)
    gam, coeffs = _zero_terms(t, store, T_max)
    var = 2.0 * float(np.sum(np.abs(coeffs) ** 2 / (0.25 + gam**2))) + tail_variance(
        t, store, T_max
    )
    mean = -mean_shift(t)
    B = mean / math.sqrt(var)
    stats = weight_stats(t)
    envelope = envelope_const * (B * B + math.log(stats.C))
    lower = math.exp(-c1 * B * B) if mean <= 0 else None
    return BiasSummary(
        mean=mean,
        variance=var,
        B=B,
        skewes_envelope=envelope,
        delta_lower_bound=lower,
    )
