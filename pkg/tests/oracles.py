"""Independent oracles used by the tests.

These deliberately avoid the production code paths: mpmath for L-values and
Bessel functions (production uses a hand-rolled Euler-Maclaurin evaluator and
scipy), a bytearray sieve (production is a segmented numpy sieve), direct
enumeration and hand summation elsewhere.
"""

from __future__ import annotations

import math
from fractions import Fraction

import mpmath as mp
import numpy as np


def oracle_primes(limit: int) -> list:
    """Plain bytearray sieve of Eratosthenes."""
    flags = bytearray([1]) * (limit + 1)
    flags[0:2] = b"\x00\x00"
    for p in range(2, math.isqrt(limit) + 1):
        if flags[p]:
            flags[p * p :: p] = b"\x00" * len(range(p * p, limit + 1, p))
    return [i for i, f in enumerate(flags) if f]


def oracle_prime_count(limit: int) -> int:
    return len(oracle_primes(limit))


def _chi_value_mp(chi, a: int):
    frac: Fraction = chi.value_fraction(a)
    return mp.e ** (2j * mp.pi * mp.mpf(frac.numerator) / frac.denominator)


def oracle_l_value(chi, t: float, dps: int = 25):
    """L(1/2 + i t, chi) through mpmath's Hurwitz zeta."""
    with mp.workdps(dps):
        q = chi.q
        s = mp.mpf("0.5") + 1j * mp.mpf(t)
        total = mp.mpc(0)
        for a in range(1, q):
            if math.gcd(a, q) != 1:
                continue
            total += _chi_value_mp(chi, a) * mp.zeta(s, mp.mpf(a) / q)
        return mp.power(q, -s) * total


def oracle_rotated_l(chi, t: float, dps: int = 25):
    """The same rotated completed L-function as production, via mpmath."""
    with mp.workdps(dps):
        q = chi.q
        parity = chi.parity
        tau = mp.mpc(0)
        for a in range(1, q):
            if math.gcd(a, q) != 1:
                continue
            tau += _chi_value_mp(chi, a) * mp.e ** (2j * mp.pi * a / q)
        eps = tau / (1j**parity * mp.sqrt(q))
        omega = (
            -mp.arg(eps) / 2
            + mp.mpf(t) / 2 * mp.log(q / mp.pi)
            + mp.im(mp.loggamma((mp.mpf("0.5") + parity) / 2 + 1j * mp.mpf(t) / 2))
        )
        val = mp.e ** (1j * omega) * oracle_l_value(chi, t, dps=dps)
        return val


def oracle_zeros(chi, T: float, step: float = 0.2, dps: int = 22) -> list:
    """Ordinates in (0, T] by scan + bisection on the mpmath rotated L."""

    def z(t):
        return float(mp.re(oracle_rotated_l(chi, t, dps=dps)))

    ts = [0.05 + k * step for k in range(int((T - 0.05) / step) + 1)]
    ts = [t for t in ts if t <= T] + [T]
    vals = [z(t) for t in ts]
    roots = []
    for i in range(len(ts) - 1):
        if vals[i] * vals[i + 1] < 0:
            lo, hi = ts[i], ts[i + 1]
            flo = vals[i]
            for _ in range(40):
                mid = 0.5 * (lo + hi)
                fm = z(mid)
                if flo * fm > 0:
                    lo, flo = mid, fm
                else:
                    hi = mid
            roots.append(0.5 * (lo + hi))
    return roots


def oracle_j0_series(x: float, terms: int = 60) -> float:
    """Power series of the order-zero Bessel function (usable for |x| <~ 15)."""
    acc = 0.0
    term = 1.0
    z = -0.25 * x * x
    for k in range(terms):
        acc += term
        term *= z / ((k + 1) * (k + 1))
    return acc


def oracle_j0(x: float) -> float:
    return float(mp.besselj(0, x))


def oracle_w1_sorted(xs, ys) -> float:
    """Equal-size sample W1: mean absolute difference of sorted matches."""
    xs = np.sort(np.asarray(xs, dtype=float))
    ys = np.sort(np.asarray(ys, dtype=float))
    assert xs.size == ys.size
    return float(np.mean(np.abs(xs - ys)))


def oracle_kw_tail(gammas, H: int, window: float) -> float:
    """Direct double-loop enumeration of the equidistribution tail term."""
    gammas = list(gammas)
    N = len(gammas)
    import itertools

    acc = 0.0
    for m in itertools.product(range(-H, H + 1), repeat=N):
        if not any(m):
            continue
        dot = sum(mi * gi for mi, gi in zip(m, gammas))
        if abs(dot) < 1e-9 * sum(abs(v) for v in m) * max(gammas):
            continue
        acc += 1.0 / (sum(v * v for v in m) * dot * dot)
    return 2.0 / window * math.sqrt(acc)


def oracle_quadratic_residues(q: int) -> set:
    """Squares of units mod q by direct enumeration."""
    return {a * a % q for a in range(1, q) if math.gcd(a, q) == 1}
