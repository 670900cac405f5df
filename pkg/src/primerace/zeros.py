"""Critical-line zeros of Dirichlet L-functions and zero-sum diagnostics.

L(s, chi) is evaluated through Hurwitz zeta values, L(s,chi) =
q^{-s} sum_a chi(a) zeta(s, a/q), with an Euler-Maclaurin evaluation of
zeta(s, a) that is vectorized over s.  Zeros are located as sign changes of
the rotated completed L-function along the critical line (real-valued once
the root-number phase is removed) and refined by batched bisection.  All
zeros are taken on the critical line; only primitive nontrivial characters
are evaluated, induced characters inherit their inducer's zeros.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Dict, Iterable, List, Tuple

import numpy as np
from scipy.integrate import quad
from scipy.special import loggamma

from .errors import (
    CoverageError,
    InsufficientCoverageError,
    OutOfRangeError,
    PrecisionError,
    PrimitivityError,
    ValidationError,
    ZeroFileError,
)
from .residues import DirichletCharacter, RaceWeight, primitive_inducer, weight_stats

DEFAULT_CEILING = 500.0
DEDUP_TOL = 1e-7
TARGET_PRECISION = 1e-8


def _bernoulli_over_factorial(m_max: int) -> List[float]:
    """B_{2m}/(2m)! for m = 1..m_max, computed exactly then floated."""
    n_max = 2 * m_max
    B = [Fraction(0)] * (n_max + 1)
    B[0] = Fraction(1)
    for n in range(1, n_max + 1):
        acc = Fraction(0)
        for k in range(n):
            acc += Fraction(math.comb(n + 1, k)) * B[k]
        B[n] = -acc / (n + 1)
    return [float(B[2 * m] / Fraction(math.factorial(2 * m))) for m in range(1, m_max + 1)]


_M_BERNOULLI = 14
_B2M_OVER_FACT = _bernoulli_over_factorial(_M_BERNOULLI)


def hurwitz_zeta(s, a: float) -> np.ndarray:
    """zeta(s, a) for complex s (scalar or array), 0 < a <= 1, |Im s| <= ~600.

    Euler-Maclaurin with the truncation point scaled to the largest imaginary
    part in the batch; absolute accuracy around 1e-12 in the range used here.
    """
    s = np.atleast_1d(np.asarray(s, dtype=complex))
    tmax = float(np.max(np.abs(s.imag)))
    N = max(16, int(0.55 * tmax) + 16)
    js = np.arange(N, dtype=np.float64) + a
    out = np.exp(-np.multiply.outer(s, np.log(js))).sum(axis=-1)
    Na = N + a
    em = np.exp(-s * math.log(Na))  # (N+a)^{-s}
    out += em * Na / (s - 1.0) + 0.5 * em
    rising = s.copy()  # (s)(s+1)...(s+2m-2), starting at m=1
    factor = em / Na  # (N+a)^{-s-2m+1}, starting at m=1
    for m in range(1, _M_BERNOULLI + 1):
        out += _B2M_OVER_FACT[m - 1] * rising * factor
        rising = rising * (s + (2 * m - 1)) * (s + 2 * m)
        factor = factor / (Na * Na)
    return out


def gauss_sum(chi: DirichletCharacter) -> complex:
    q = chi.q
    return sum(chi(a) * cmath.exp(2j * math.pi * a / q) for a in range(1, q))


class RotatedLFunction:
    """Real-valued rotation of the completed L-function on the critical line.

    Z(t) = exp(i Omega(t)) L(1/2 + it, chi) with Omega collecting the
    root-number half-phase, the conductor power phase and arg Gamma; Z is
    real for every primitive nontrivial chi, which makes sign-change zero
    detection sound.
    """

    def __init__(self, chi: DirichletCharacter):
        if chi.is_principal:
            raise PrimitivityError("principal character has no critical zeros here")
        if chi.conductor != chi.q:
            raise PrimitivityError(
                f"character mod {chi.q} label {chi.label} is not primitive "
                f"(conductor {chi.conductor}); evaluate its inducer instead"
            )
        self.chi = chi
        self.q = chi.q
        self.parity = chi.parity
        self._units = [a for a in range(1, chi.q) if math.gcd(a, chi.q) == 1]
        self._values = np.array([chi(a) for a in self._units], dtype=complex)
        eps = gauss_sum(chi) / (1j**self.parity * math.sqrt(chi.q))
        if abs(abs(eps) - 1.0) > 1e-8:
            raise PrecisionError(f"root number modulus {abs(eps)} != 1")
        self.root_number = eps
        self._half_theta = cmath.phase(eps) / 2.0

    def l_values(self, ts) -> np.ndarray:
        """L(1/2 + i t, chi) for an array of real t."""
        ts = np.atleast_1d(np.asarray(ts, dtype=np.float64))
        s = 0.5 + 1j * ts
        acc = np.zeros(ts.shape, dtype=complex)
        for a, val in zip(self._units, self._values):
            acc += val * hurwitz_zeta(s, a / self.q)
        return np.exp(-s * math.log(self.q)) * acc

    def rotated_values(self, ts) -> Tuple[np.ndarray, np.ndarray]:
        """(Re Z(t), Im Z(t)); the imaginary part is a numerical diagnostic."""
        ts = np.atleast_1d(np.asarray(ts, dtype=np.float64))
        lv = self.l_values(ts)
        half = (0.5 + self.parity) / 2.0
        omega = (
            -self._half_theta
            + 0.5 * ts * math.log(self.q / math.pi)
            + loggamma(half + 0.5j * ts).imag
        )
        z = np.exp(1j * omega) * lv
        return z.real, z.imag

    def z(self, ts) -> np.ndarray:
        return self.rotated_values(ts)[0]


def rvm_main_term(conductor: int, T: float) -> float:
    """Riemann-von Mangoldt main term (T/2pi) log(q T / 2 pi e)."""
    if T <= 0:
        return 0.0
    return (T / (2 * math.pi)) * math.log(conductor * T / (2 * math.pi * math.e))


def rvm_density(conductor: int, u: float) -> float:
    """d/dT of the main term: (1/2pi) log(q u / 2pi)."""
    return math.log(conductor * u / (2 * math.pi)) / (2 * math.pi)


@dataclass(frozen=True)
class ZeroCountReport:
    T: float
    observed: int
    main_term: float

    @property
    def residual(self) -> float:
        return self.observed - self.main_term


@dataclass
class ZeroComputation:
    q: int
    label: int
    T: float
    ordinates: np.ndarray
    precision: float
    report: ZeroCountReport
    rvm_flagged: bool


def _scan_and_bisect(
    zf: RotatedLFunction, T: float, step_scale: float, chunk: int = 4096
) -> np.ndarray:
    q = zf.q
    mean_gap = 2 * math.pi / max(1.0, math.log(q * (T + 3.0) / (2 * math.pi)))
    h = min(0.35, mean_gap / 6.0) * step_scale
    prefix_end = min(4.0, T)
    grid = np.concatenate(
        [
            np.arange(0.01, prefix_end, min(h, 0.02)),
            np.arange(prefix_end, T, h),
            [T],
        ]
    )
    grid = np.unique(grid[(grid > 0) & (grid <= T)])
    vals = np.empty_like(grid)
    for i in range(0, len(grid), chunk):
        vals[i : i + chunk] = zf.z(grid[i : i + chunk])
    sign = np.sign(vals)
    # grid points landing exactly on a zero are perturbed into their own bracket
    exact = np.flatnonzero(np.abs(vals) < 1e-13)
    for i in exact:
        sign[i] = -sign[i - 1] if i > 0 else 1.0
    idx = np.flatnonzero(sign[:-1] * sign[1:] < 0)
    if len(idx) == 0:
        return np.array([], dtype=np.float64)
    lo = grid[idx].copy()
    hi = grid[idx + 1].copy()
    flo = vals[idx].copy()
    width = float(np.max(hi - lo))
    n_iter = max(30, int(math.ceil(math.log2(width / (TARGET_PRECISION / 20.0)))))
    for _ in range(n_iter):
        mid = 0.5 * (lo + hi)
        fmid = np.empty_like(mid)
        for i in range(0, len(mid), chunk):
            fmid[i : i + chunk] = zf.z(mid[i : i + chunk])
        same = np.sign(flo) * np.sign(fmid) > 0
        lo = np.where(same, mid, lo)
        flo = np.where(same, fmid, flo)
        hi = np.where(same, hi, mid)
    roots = 0.5 * (lo + hi)
    if float(np.max(hi - lo)) > TARGET_PRECISION:
        bad = int(np.argmax(hi - lo))
        raise PrecisionError(
            f"bisection failed to reach {TARGET_PRECISION} on [{lo[bad]}, {hi[bad]}]"
        )
    return roots


def compute_zeros(
    chi: DirichletCharacter,
    T: float,
    *,
    ceiling: float = DEFAULT_CEILING,
    rescan_on_mismatch: bool = True,
) -> ZeroComputation:
    """All ordinates of L(s, chi) in (0, T], located to ~1e-8.

    The count is cross-checked against the Riemann-von Mangoldt main term;
    a large residual triggers one finer rescan and is flagged if it persists.
    """
    if T > ceiling:
        raise OutOfRangeError(f"T={T} exceeds configured ceiling {ceiling}")
    zf = RotatedLFunction(chi)
    if T <= 0:
        report = ZeroCountReport(T=T, observed=0, main_term=0.0)
        return ZeroComputation(
            q=chi.q,
            label=chi.label,
            T=T,
            ordinates=np.array([]),
            precision=TARGET_PRECISION,
            report=report,
            rvm_flagged=False,
        )
    roots = _scan_and_bisect(zf, T, step_scale=1.0)
    main = rvm_main_term(chi.conductor, T)
    tolerance = 3.0 * math.log(chi.conductor * (T + 2.0))
    flagged = abs(len(roots) - main) > tolerance
    if flagged and rescan_on_mismatch:
        roots = _scan_and_bisect(zf, T, step_scale=0.25)
        flagged = abs(len(roots) - main) > tolerance
    report = ZeroCountReport(T=T, observed=len(roots), main_term=main)
    return ZeroComputation(
        q=chi.q,
        label=chi.label,
        T=T,
        ordinates=roots,
        precision=TARGET_PRECISION,
        report=report,
        rvm_flagged=flagged,
    )


@dataclass(frozen=True)
class ZeroEntry:
    q: int
    label: int
    gamma: float
    precision: float
    source: str  # "computed" | "ingested"


class ZeroStore:
    """Ordered multiset of positive zero ordinates keyed by (q, label).

    Append-only under a single-writer contract; reads return sorted copies.
    Coverage records the height up to which a character's list is complete.
    """

    def __init__(self):
        self._entries: Dict[Tuple[int, int], List[ZeroEntry]] = {}
        self._coverage: Dict[Tuple[int, int], float] = {}
        self._sorted_cache: Dict[Tuple[int, int], np.ndarray] = {}

    def keys(self) -> List[Tuple[int, int]]:
        return sorted(self._entries)

    def add(
        self,
        q: int,
        label: int,
        gamma: float,
        precision: float = TARGET_PRECISION,
        source: str = "computed",
    ):
        if gamma <= 0:
            raise ValidationError(f"ordinate must be positive, got {gamma}")
        key = (q, label)
        bucket = self._entries.setdefault(key, [])
        for i, entry in enumerate(bucket):
            if abs(entry.gamma - gamma) < DEDUP_TOL:
                if source == "ingested" and entry.source != "ingested":
                    bucket[i] = ZeroEntry(q, label, gamma, precision, source)
                    self._sorted_cache.pop(key, None)
                return
        bucket.append(ZeroEntry(q, label, gamma, precision, source))
        self._sorted_cache.pop(key, None)

    def add_computation(self, comp: ZeroComputation):
        for gamma in comp.ordinates:
            self.add(comp.q, comp.label, float(gamma), comp.precision, "computed")
        self.declare_coverage(comp.q, comp.label, comp.T)

    def declare_coverage(self, q: int, label: int, T: float):
        key = (q, label)
        self._entries.setdefault(key, [])
        self._coverage[key] = max(self._coverage.get(key, 0.0), T)

    def coverage(self, q: int, label: int) -> float:
        return self._coverage.get((q, label), 0.0)

    def ordinates(self, q: int, label: int) -> np.ndarray:
        key = (q, label)
        if key not in self._sorted_cache:
            gams = np.array(sorted(e.gamma for e in self._entries.get(key, [])))
            self._sorted_cache[key] = gams
        return self._sorted_cache[key]

    def merged(self, keys: Iterable[Tuple[int, int]], T: float | None = None) -> np.ndarray:
        """Multiset union of per-character ordinates, sorted ascending."""
        parts = []
        for q, label in keys:
            gams = self.ordinates(q, label)
            if T is not None:
                gams = gams[gams <= T]
            parts.append(gams)
        if not parts:
            return np.array([])
        return np.sort(np.concatenate(parts))

    def near_coincidences(self, tol: float = 1e-6) -> List[Tuple[int, int, float, float]]:
        """Pairs of same-character ordinates closer than tol (flag, not error)."""
        out = []
        for (q, label), _ in self._entries.items():
            gams = self.ordinates(q, label)
            close = np.flatnonzero(np.diff(gams) < tol)
            for i in close:
                out.append((q, label, float(gams[i]), float(gams[i + 1])))
        return out

    def save_cache(self, directory):
        """One zero file per (q, label) in the standard line format."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        for q, label in self.keys():
            path = directory / f"q{q}_chi{label}.zeros"
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(f"# zeros of L(s, chi) for modulus {q}, label {label}\n")
                fh.write(f"# coverage {self.coverage(q, label):.6f}\n")
                for gamma in self.ordinates(q, label):
                    fh.write(f"{q},{label},{gamma:.10f}\n")

    @classmethod
    def load_cache(cls, directory) -> "ZeroStore":
        store = cls()
        for path in sorted(Path(directory).glob("*.zeros")):
            ingest_zeros(path, into=store)
        return store


def ingest_zeros(path, into: ZeroStore | None = None) -> ZeroStore:
    """Parse a zero file ("q,label,ordinate" lines, '#' comments) into a store."""
    store = into if into is not None else ZeroStore()
    path = Path(path)
    per_key_max: Dict[Tuple[int, int], float] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise ZeroFileError(
                    f"{path}:{lineno}: expected 'q,label,ordinate', got {line!r}",
                    line_number=lineno,
                )
            try:
                q = int(parts[0])
                label = int(parts[1])
                gamma = float(parts[2])
            except ValueError as exc:
                raise ZeroFileError(
                    f"{path}:{lineno}: unparseable field ({exc})", line_number=lineno
                ) from None
            if gamma <= 0:
                raise ValidationError(f"{path}:{lineno}: ordinate must be positive")
            store.add(q, label, gamma, precision=1e-8, source="ingested")
            key = (q, label)
            per_key_max[key] = max(per_key_max.get(key, 0.0), gamma)
    for (q, label), mx in per_key_max.items():
        store.declare_coverage(q, label, mx)
    return store


def support_terms(t: RaceWeight) -> List[Tuple[DirichletCharacter, complex]]:
    """(primitive inducer, <t, chi>) for every support character of t."""
    out = []
    for label in t.support:
        prim = primitive_inducer(t.q, label)
        out.append((prim, t.coefficient(label)))
    return out


def ensure_coverage(store: ZeroStore, t: RaceWeight, T: float, **kwargs) -> ZeroStore:
    """Compute and register zeros for every support character lacking coverage."""
    for prim, _ in support_terms(t):
        if store.coverage(prim.q, prim.label) < T:
            store.add_computation(compute_zeros(prim, T, **kwargs))
    return store


def _check_coverage(store: ZeroStore, t: RaceWeight, T: float):
    for prim, _ in support_terms(t):
        if store.coverage(prim.q, prim.label) < T:
            raise CoverageError(
                f"character mod {prim.q} label {prim.label} covered to "
                f"{store.coverage(prim.q, prim.label)}, need {T}"
            )


@dataclass(frozen=True)
class WeightCountReport:
    T: float
    observed: int
    main_term: float

    @property
    def residual(self) -> float:
        return self.observed - self.main_term


def count_zeros(store: ZeroStore, t: RaceWeight, T: float) -> Tuple[int, WeightCountReport]:
    """N(T, t) = sum over support characters of N(T, chi), plus the main term."""
    _check_coverage(store, t, T)
    total = 0
    for prim, _ in support_terms(t):
        gams = store.ordinates(prim.q, prim.label)
        total += int(np.searchsorted(gams, T, side="right"))
    stats = weight_stats(t)
    S = len(t.support)
    main = (S * T / (2 * math.pi)) * math.log(
        max(stats.k * T / (2 * math.pi * math.e), 1e-300)
    )
    return total, WeightCountReport(T=T, observed=total, main_term=main)


@dataclass(frozen=True)
class ZeroSums:
    s1: float
    s2: float
    tail_bound_s1: float
    tail_bound_s2: float
    fitted_constant_s1: float
    fitted_constant_s2: float
    T_max: float


def zero_sums(
    store: ZeroStore,
    t: RaceWeight,
    T_max: float | None = None,
    min_coverage: float = 100.0,
) -> ZeroSums:
    """S1, S2 of the zero-sum corollary with R-vM density tail bounds."""
    terms = support_terms(t)
    covs = [store.coverage(p.q, p.label) for p, _ in terms]
    if min(covs) < min_coverage:
        raise InsufficientCoverageError(
            f"minimum coverage {min(covs)} below required {min_coverage}"
        )
    if T_max is None:
        T_max = min(covs)
    acc1 = 0.0 + 0.0j
    acc2 = 0.0 + 0.0j
    tail1 = 0.0
    tail2 = 0.0
    for prim, coeff in terms:
        gams = store.ordinates(prim.q, prim.label)
        gams = gams[gams <= T_max]
        acc1 += coeff * np.sum(1.0 / ((0.5 + 1j * gams) * (1.5 + 1j * gams)))
        acc2 += coeff * np.sum(1.0 / (0.25 + gams**2))
        f = prim.q

        def dens1(u, f=f):
            return rvm_density(f, u) / math.sqrt((0.25 + u * u) * (2.25 + u * u))

        def dens2(u, f=f):
            return rvm_density(f, u) / (0.25 + u * u)

        tail1 += abs(coeff) * quad(dens1, T_max, np.inf, limit=200)[0]
        tail2 += abs(coeff) * quad(dens2, T_max, np.inf, limit=200)[0]
    stats = weight_stats(t)
    scale = stats.lam * math.log(t.q)
    s1 = abs(acc1)
    s2 = abs(acc2)
    return ZeroSums(
        s1=s1,
        s2=s2,
        tail_bound_s1=tail1,
        tail_bound_s2=tail2,
        fitted_constant_s1=s1 / scale,
        fitted_constant_s2=s2 / scale,
        T_max=T_max,
    )


@dataclass(frozen=True)
class PairSum:
    value: float
    paper_bound: float


def zero_pair_sum(
    store: ZeroStore,
    key_chi: Tuple[int, int],
    key_psi: Tuple[int, int],
    T: float,
    Y: float,
) -> PairSum:
    """sum over stored gamma_chi >= T, |gamma_psi| >= T of
    1/(|gamma_chi gamma_psi| (1 + Y |gamma_chi - gamma_psi|)), psi symmetrized
    in sign, next to the paper's (log q)^2((log T)^2/T + (log T)^3/(Y T))."""
    g_chi = store.ordinates(*key_chi)
    g_chi = g_chi[g_chi >= T]
    g_psi_pos = store.ordinates(*key_psi)
    g_psi_pos = g_psi_pos[g_psi_pos >= T]
    g_psi = np.concatenate([g_psi_pos, -g_psi_pos])
    value = 0.0
    if len(g_chi) and len(g_psi):
        gc = g_chi[:, None]
        gp = g_psi[None, :]
        value = float(
            np.sum(1.0 / (np.abs(gc * gp) * (1.0 + Y * np.abs(gc - gp))))
        )
    q = max(key_chi[0], key_psi[0], 3)
    lt = math.log(max(T, 3.0))
    bound = (math.log(q) ** 2) * (lt**2 / T + lt**3 / (Y * T))
    return PairSum(value=value, paper_bound=bound)
