"""Truncated explicit-formula models: E^(T), the psi-level formula, the
pi-psi bridge, and the almost-periodicity diagnostic.

E^(T)(y) = -<t, r_q> - 2 Re sum_n b_n e^{i gamma_n y} with b_n =
<t, chi_n> / (1/2 + i gamma_n), summed over positive ordinates in
ascending order (the negative ordinates are folded in by the real part).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .errors import OutOfRangeError
from .primes import PrimeTable, WeightedCounter, pi_weighted, psi_weighted
from .residues import RaceWeight, mean_shift, weight_stats
from .zeros import ZeroStore, _check_coverage, support_terms


@dataclass
class TruncatedModel:
    """Trigonometric-polynomial model of the race error, truncated at height T."""

    weight: RaceWeight
    T: float
    gammas: np.ndarray  # ascending
    coefficients: np.ndarray  # b_n, aligned with gammas
    labels: Tuple[int, ...]
    constant: float  # -<t, r_q>

    def evaluate(self, y) -> np.ndarray:
        """E^(T)(y) for scalar or array y."""
        y = np.atleast_1d(np.asarray(y, dtype=np.float64))
        if len(self.gammas) == 0:
            return np.full(y.shape, self.constant)
        phases = np.exp(1j * np.multiply.outer(y, self.gammas))
        return self.constant - 2.0 * (phases @ self.coefficients).real

    def amplitude_bound(self) -> float:
        """Sup-norm bound |constant| + 2 sum |b_n| (attained only in the limit)."""
        return abs(self.constant) + 2.0 * float(np.sum(np.abs(self.coefficients)))

    def truncated_variance(self) -> float:
        """2 sum |b_n|^2, the variance of the limiting law truncated at T."""
        return 2.0 * float(np.sum(np.abs(self.coefficients) ** 2))

    def mean_over(self, y0: float, y1: float) -> float:
        """Exact average of E^(T) over [y0, y1]."""
        if len(self.gammas) == 0:
            return self.constant
        g = self.gammas
        osc = (np.exp(1j * g * y1) - np.exp(1j * g * y0)) / (1j * g)
        return self.constant - 2.0 * float((osc @ self.coefficients).real) / (y1 - y0)

    def dump(self, path):
        """Model file: header with T and constant, then gamma,Re(b),Im(b),label."""
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"# truncated race model: T={self.T:.6f} constant={self.constant:.12g}\n")
            for g, b, lab in zip(self.gammas, self.coefficients, self.labels):
                fh.write(f"{g:.10f},{b.real:.12g},{b.imag:.12g},{lab}\n")


def build_model(t: RaceWeight, store: ZeroStore, T: float) -> TruncatedModel:
    """Assemble E^(T) from the store; requires coverage of supp(t^) up to T."""
    _check_coverage(store, t, T)
    gammas = []
    coeffs = []
    labels = []
    for prim, coeff in support_terms(t):
        for gamma in store.ordinates(prim.q, prim.label):
            if gamma <= T:
                gammas.append(float(gamma))
                coeffs.append(coeff / (0.5 + 1j * gamma))
                labels.append(prim.label)
    order = np.argsort(gammas, kind="stable")
    gam = np.array(gammas, dtype=np.float64)[order] if gammas else np.array([])
    cf = np.array(coeffs, dtype=complex)[order] if coeffs else np.array([], dtype=complex)
    labs = tuple(np.array(labels)[order].tolist()) if labels else ()
    return TruncatedModel(
        weight=t,
        T=T,
        gammas=gam,
        coefficients=cf,
        labels=labs,
        constant=-mean_shift(t),
    )


@dataclass(frozen=True)
class PsiTruncation:
    main_term: float
    envelope: float  # paper remainder shape evaluated with constant 1


def psi_truncated(x: float, t: RaceWeight, store: ZeroStore, T: float) -> PsiTruncation:
    """Main term -sqrt(x) * 2 Re sum b_n x^{i gamma_n} of the explicit formula,
    with the remainder envelope lam(t) (log q)^2 (log x + (x/T)(log xT)^2)."""
    if x < 2:
        raise OutOfRangeError("explicit formula is stated for x >= 2")
    model = build_model(t, store, T)
    logx = math.log(x)
    if len(model.gammas):
        osc = np.exp(1j * model.gammas * logx) @ model.coefficients
        main = -math.sqrt(x) * 2.0 * float(osc.real)
    else:
        main = 0.0
    stats = weight_stats(t)
    envelope = (
        stats.lam
        * math.log(t.q) ** 2
        * (logx + (x / T) * math.log(x * T) ** 2)
    )
    return PsiTruncation(main_term=main, envelope=envelope)


@dataclass(frozen=True)
class BridgeReport:
    constant_term: float  # -(sqrt(x)/log x) <t, r_q>
    psi_term: float  # psi(x; t) / log x, psi from the sieve
    residual: float  # pi(x; t) - (constant_term + psi_term)
    envelope: float  # C(t) sqrt(x) / (log x)^2


def pi_psi_bridge(table: PrimeTable, x: float, t: RaceWeight) -> BridgeReport:
    """pi(x;t) against its psi-based main terms, with the C(t) envelope.

    Both pi and psi come from the sieve; the explicit-formula route to psi is
    checked separately by psi_truncated.
    """
    if x < 2:
        raise OutOfRangeError("bridge is stated for x >= 2")
    logx = math.log(x)
    const = -math.sqrt(x) / logx * mean_shift(t)
    psi_term = psi_weighted(table, x, t) / logx
    pi_val = pi_weighted(table, x, t)
    stats = weight_stats(t)
    envelope = stats.C * math.sqrt(x) / logx**2
    return BridgeReport(
        constant_term=const,
        psi_term=psi_term,
        residual=pi_val - const - psi_term,
        envelope=envelope,
    )


@dataclass(frozen=True)
class AlmostPeriodicityGap:
    gap: float  # (1/Y) integral of |E - E^(T)| over [log 2, Y]
    envelope: float  # C(t) (log T / sqrt T + 1 / sqrt Y), the corrected form
    envelope_uncorrected: float  # C(t) (log T / sqrt T + log T / sqrt(T Y))


def almost_periodicity_gap(
    table: PrimeTable,
    t: RaceWeight,
    store: ZeroStore,
    T: float,
    Y: float,
    grid_step: float = 5e-3,
) -> AlmostPeriodicityGap:
    """Average gap between the race error and its truncated model.

    Quadrature is trapezoidal on the jump-aware grid: each inter-prime
    interval is integrated with one-sided values at its endpoints, so the
    jumps of E never smear across nodes.
    """
    if Y < math.log(max(T, 2.0)):
        raise OutOfRangeError("almost-periodicity needs Y >= log T")
    if math.exp(Y) > table.limit * (1 + 1e-12):
        raise OutOfRangeError(f"e^Y beyond sieve limit {table.limit}")
    model = build_model(t, store, T) if T > 0 else None
    counter = WeightedCounter(table, t)
    y0 = math.log(2.0)
    uniform = np.arange(y0, Y, grid_step)
    jumps = counter.jump_logs[(counter.jump_logs > y0) & (counter.jump_logs < Y)]
    nodes = np.unique(np.concatenate([uniform, jumps, [Y]]))
    # values of the smooth factor and the model on all nodes
    smooth = nodes * np.exp(-nodes / 2.0)
    model_vals = model.evaluate(nodes) if model is not None else np.full(nodes.shape, -mean_shift(t))
    counts_right = counter.weighted_count_at(nodes)
    # left limits: at a jump node the count excludes the prime
    idx_left = np.searchsorted(counter.jump_logs, nodes, side="left")
    cums = np.concatenate(([0.0], counter.cumulative))
    counts_left = cums[idx_left]
    diff_right = np.abs(smooth * counts_right - model_vals)
    diff_left = np.abs(smooth * counts_left - model_vals)
    widths = np.diff(nodes)
    total = float(np.sum(0.5 * (diff_right[:-1] + diff_left[1:]) * widths))
    gap = total / Y
    stats = weight_stats(t)
    lt = math.log(max(T, 2.0))
    envelope = stats.C * (lt / math.sqrt(max(T, 2.0)) + 1.0 / math.sqrt(Y))
    envelope_rs = stats.C * (
        lt / math.sqrt(max(T, 2.0)) + lt / math.sqrt(max(T, 2.0) * Y)
    )
    return AlmostPeriodicityGap(gap=gap, envelope=envelope, envelope_uncorrected=envelope_rs)
