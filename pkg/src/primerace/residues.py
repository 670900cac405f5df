"""Arithmetic of (Z/qZ)^x, Dirichlet characters, and race weight vectors.

Characters are labeled by units n mod q through the bilinear pairing on a
fixed generator decomposition (Conrey-style), so label arithmetic mirrors
character arithmetic: chi_m * chi_n = chi_{m n mod q}.  Values are stored as
exact roots of unity (numerator over the group exponent) and rendered to
complex on demand, which makes support detection and quadratic-character
identification exact.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Dict, Iterable, List, Mapping, Tuple

import numpy as np

from .errors import DegenerateRaceError, InvalidClassError, InvalidModulusError

# Relative tolerance below which a Fourier coefficient counts as zero.
FOURIER_TOL = 1e-9


def _factorize(n: int) -> List[Tuple[int, int]]:
    """Prime factorization by trial division; moduli here are small."""
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            e = 0
            while n % d == 0:
                n //= d
                e += 1
            out.append((d, e))
        d += 1 if d == 2 else 2
    if n > 1:
        out.append((n, 1))
    return out


def _multiplicative_order(a: int, m: int, phi: int) -> int:
    order = phi
    for p, _ in _factorize(phi):
        while order % p == 0 and pow(a, order // p, m) == 1:
            order //= p
    return order


def _least_primitive_root(pk: int, p: int) -> int:
    """Least primitive root mod p^k for odd p, stable across powers of p."""
    phi_p = p - 1
    g = 2
    while _multiplicative_order(g % p, p, phi_p) != phi_p:
        g += 1
    if pk > p and pow(g, p - 1, p * p) == 1:
        # g generates mod p but not mod p^2; g + p always does.
        g += p
    return g


def _crt_pair(a1: int, m1: int, a2: int, m2: int) -> int:
    """x with x = a1 mod m1, x = a2 mod m2 for coprime m1, m2."""
    inv = pow(m1, -1, m2)
    return (a1 + ((a2 - a1) * inv % m2) * m1) % (m1 * m2)


def crt(residues: Iterable[int], moduli: Iterable[int]) -> int:
    """Chinese remainder lift over pairwise coprime moduli."""
    x, m = 0, 1
    for r, mi in zip(residues, moduli):
        x = _crt_pair(x, m, r % mi, mi)
        m *= mi
    return x


@dataclass(frozen=True)
class UnitGroup:
    """(Z/qZ)^x with a generator decomposition enabling character enumeration."""

    q: int
    units: Tuple[int, ...]
    generators: Tuple[Tuple[int, int], ...]  # (global generator, order)
    dlog: Mapping[int, Tuple[int, ...]] = field(repr=False)

    @property
    def phi(self) -> int:
        return len(self.units)

    @property
    def exponent(self) -> int:
        return math.lcm(*(order for _, order in self.generators)) if self.generators else 1


@lru_cache(maxsize=None)
def build_unit_group(q: int) -> UnitGroup:
    """Build (Z/qZ)^x with generators lifted through CRT from prime powers."""
    if q < 3:
        raise InvalidModulusError(f"modulus must be >= 3, got {q}")
    factors = _factorize(q)
    gens: List[Tuple[int, int]] = []
    local_tables: List[Dict[int, Tuple[int, ...]]] = []
    local_moduli: List[int] = []
    for p, e in factors:
        pk = p**e
        cof = q // pk
        if p == 2:
            if e == 1:
                local_gens: List[Tuple[int, int]] = []
            elif e == 2:
                local_gens = [(3, 2)]
            else:
                local_gens = [(pk - 1, 2), (5, 2 ** (e - 2))]
        else:
            g = _least_primitive_root(pk, p)
            local_gens = [(g, (p - 1) * p ** (e - 1))]
        # dlog table mod pk by direct enumeration of the generator lattice
        table: Dict[int, Tuple[int, ...]] = {1 % pk: tuple(0 for _ in local_gens)}
        if local_gens:
            exps = [0] * len(local_gens)
            orders = [d for _, d in local_gens]
            while True:
                i = 0
                while i < len(exps):
                    exps[i] += 1
                    if exps[i] < orders[i]:
                        break
                    exps[i] = 0
                    i += 1
                else:
                    break
                val = 1
                for (g, _), ei in zip(local_gens, exps):
                    val = val * pow(g, ei, pk) % pk
                table[val] = tuple(exps)
        local_tables.append(table)
        local_moduli.append(pk)
        for g, order in local_gens:
            if cof == 1:
                gens.append((g % q, order))
            else:
                gens.append((_crt_pair(g, pk, 1, cof), order))
    units = tuple(a for a in range(1, q) if math.gcd(a, q) == 1)
    dlog: Dict[int, Tuple[int, ...]] = {}
    for a in units:
        vec: List[int] = []
        for pk, table in zip(local_moduli, local_tables):
            vec.extend(table[a % pk])
        dlog[a] = tuple(vec)
    return UnitGroup(q=q, units=units, generators=tuple(gens), dlog=dlog)


@dataclass(frozen=True)
class DirichletCharacter:
    """Dirichlet character mod q with exact root-of-unity values.

    ``nums[a]`` holds the numerator of the value exponent: chi(a) =
    exp(2*pi*i*nums[a]/exponent).
    """

    q: int
    label: int
    exponent: int
    nums: Mapping[int, int] = field(repr=False)
    conductor: int
    is_principal: bool
    is_real: bool

    def __call__(self, n: int) -> complex:
        n %= self.q
        if math.gcd(n, self.q) != 1:
            return 0.0
        return cmath.exp(2j * math.pi * self.nums[n] / self.exponent)

    def value_fraction(self, n: int) -> Fraction:
        """Exponent of chi(n) as an exact fraction of a full turn in [0, 1)."""
        n %= self.q
        if math.gcd(n, self.q) != 1:
            raise InvalidClassError(f"{n} is not a unit mod {self.q}")
        return Fraction(self.nums[n], self.exponent)

    @property
    def parity(self) -> int:
        """0 for even characters (chi(-1)=1), 1 for odd."""
        return 0 if self.nums[self.q - 1] == 0 else 1

    @property
    def is_quadratic(self) -> bool:
        """Nontrivial character with chi^2 = chi_0."""
        return not self.is_principal and (self.label * self.label) % self.q == 1

    def values_on(self, residues: Iterable[int]) -> np.ndarray:
        return np.array([self(a) for a in residues], dtype=complex)


def _conductor(group: UnitGroup, nums: Mapping[int, int]) -> int:
    """Minimal induction check over divisors of q."""
    q = group.q
    divisors = sorted(d for d in range(1, q + 1) if q % d == 0)
    for d in divisors:
        if all(nums[a] == 0 for a in group.units if a % d == 1 % d):
            return d
    return q


@lru_cache(maxsize=None)
def characters(q: int) -> Tuple[DirichletCharacter, ...]:
    """All phi(q) Dirichlet characters mod q, sorted by label."""
    group = build_unit_group(q)
    D = group.exponent
    orders = [order for _, order in group.generators]
    chars = []
    for label in group.units:
        lvec = group.dlog[label]
        nums = {}
        for a in group.units:
            avec = group.dlog[a]
            num = 0
            for li, ai, d in zip(lvec, avec, orders):
                num += li * ai * (D // d)
            nums[a] = num % D
        conductor = _conductor(group, nums)
        is_principal = label == 1
        is_real = (label * label) % q == 1
        chars.append(
            DirichletCharacter(
                q=q,
                label=label,
                exponent=D,
                nums=nums,
                conductor=conductor,
                is_principal=is_principal,
                is_real=is_real,
            )
        )
    return tuple(chars)


def character_by_label(q: int, label: int) -> DirichletCharacter:
    for chi in characters(q):
        if chi.label == label % q:
            return chi
    raise InvalidClassError(f"no character mod {q} with label {label}")


@lru_cache(maxsize=None)
def primitive_inducer(q: int, label: int) -> DirichletCharacter:
    """The primitive character inducing chi; equals chi when chi is primitive."""
    chi = character_by_label(q, label)
    f = chi.conductor
    if f == q:
        return chi
    if f == 1:
        raise InvalidClassError("principal characters have no primitive inducer here")
    for psi in characters(f):
        if all(
            psi.value_fraction(a % f) == chi.value_fraction(a)
            for a in build_unit_group(q).units
        ):
            return psi
    raise RuntimeError(f"no inducer found for chi mod {q}, label {label}")


def inner_product(q: int, f: Mapping[int, float], g_values: Mapping[int, complex]) -> complex:
    """<f, g> = (1/phi(q)) * sum_a f(a) * conj(g(a)) over units."""
    units = build_unit_group(q).units
    total = sum(f[a] * complex(g_values[a]).conjugate() for a in units)
    return total / len(units)


@dataclass(frozen=True)
class ResidueFunction:
    """A plain real-valued map on (Z/qZ)^x, with no orthogonality constraint."""

    q: int
    values: Mapping[int, float]

    def __call__(self, a: int) -> float:
        a %= self.q
        if math.gcd(a, self.q) != 1:
            return 0.0
        return self.values[a]

    @property
    def sup_norm(self) -> float:
        return max(abs(v) for v in self.values.values())


@dataclass(frozen=True)
class RaceWeight:
    """Race weight t on (Z/qZ)^x, orthogonal to chi_0, with Fourier data."""

    q: int
    values: Mapping[int, float]
    fourier: Mapping[int, complex]  # character label -> <t, chi>
    support: Tuple[int, ...]  # labels with nonzero coefficient, chi_0 excluded

    def __call__(self, a: int) -> float:
        a %= self.q
        if math.gcd(a, self.q) != 1:
            return 0.0
        return self.values[a]

    @property
    def sup_norm(self) -> float:
        return max(abs(v) for v in self.values.values())

    def negate(self) -> "RaceWeight":
        return RaceWeight(
            q=self.q,
            values={a: -v for a, v in self.values.items()},
            fourier={lab: -c for lab, c in self.fourier.items()},
            support=self.support,
        )

    def support_characters(self) -> Tuple[DirichletCharacter, ...]:
        return tuple(character_by_label(self.q, lab) for lab in self.support)

    def coefficient(self, label: int) -> complex:
        return self.fourier.get(label % self.q, 0.0 + 0.0j)


def race_weight_from_values(q: int, values: Mapping[int, float]) -> RaceWeight:
    """Generic constructor: Fourier coefficients by inner products."""
    group = build_unit_group(q)
    vals = {a: float(values[a]) for a in group.units}
    sup = max(abs(v) for v in vals.values())
    if sup == 0.0:
        raise InvalidClassError("race weight must be nonzero")
    fourier: Dict[int, complex] = {}
    support = []
    for chi in characters(q):
        coeff = inner_product(q, vals, {a: chi(a) for a in group.units})
        if abs(coeff) < FOURIER_TOL * sup:
            coeff = 0.0 + 0.0j
        fourier[chi.label] = coeff
        if coeff != 0 and not chi.is_principal:
            support.append(chi.label)
    if abs(fourier[1]) > FOURIER_TOL * sup:
        raise InvalidClassError("weight is not orthogonal to the principal character")
    return RaceWeight(q=q, values=vals, fourier=fourier, support=tuple(support))


def race_weight_two_class(q: int, a: int, b: int) -> RaceWeight:
    """t = phi(q) * (1_{a} - 1_{b}); coefficients conj(chi(a)) - conj(chi(b))."""
    group = build_unit_group(q)
    a %= q
    b %= q
    if math.gcd(a, q) != 1 or math.gcd(b, q) != 1:
        raise InvalidClassError(f"classes must be units mod {q}: got {a}, {b}")
    if a == b:
        raise InvalidClassError("race classes must be distinct")
    phi = group.phi
    values = {u: 0.0 for u in group.units}
    values[a] = float(phi)
    values[b] = float(-phi)
    fourier: Dict[int, complex] = {}
    support = []
    for chi in characters(q):
        if chi.value_fraction(a) == chi.value_fraction(b):
            fourier[chi.label] = 0.0 + 0.0j
            continue
        coeff = complex(chi(a)).conjugate() - complex(chi(b)).conjugate()
        fourier[chi.label] = coeff
        support.append(chi.label)
    return RaceWeight(q=q, values=values, fourier=fourier, support=tuple(support))


def residue_split(q: int) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
    """(R_q, NR_q): image of squaring on units and its complement."""
    group = build_unit_group(q)
    squares = sorted({a * a % q for a in group.units})
    nonsquares = tuple(a for a in group.units if a not in set(squares))
    return tuple(squares), nonsquares


def rho(q: int) -> int:
    """Number of square roots of 1 in (Z/qZ)^x."""
    group = build_unit_group(q)
    return sum(1 for a in group.units if a * a % q == 1)


def rad(q: int) -> int:
    """Product of the distinct primes dividing q."""
    out = 1
    for p, _ in _factorize(q):
        out *= p
    return out


def r_map(q: int) -> Dict[int, int]:
    """a -> #{x : x^2 = a} on units; values are 0 or rho(q)."""
    group = build_unit_group(q)
    counts = {a: 0 for a in group.units}
    for x in group.units:
        counts[x * x % q] += 1
    return counts


def quadratic_reduction_modulus(q: int) -> int:
    """Modulus d_q whose quadratic characters induce all real characters mod q."""
    r = rad(q)
    if q % 8 == 0:
        return 4 * r
    if q % 4 == 0:
        return 2 * r
    return r


def race_weight_qr_nr(q: int) -> RaceWeight:
    """l_q = (rho(q)-1) 1_{R_q} - 1_{NR_q}; Fourier support is exactly the
    nontrivial quadratic characters, each with coefficient 1."""
    squares, nonsquares = residue_split(q)
    if not nonsquares:
        raise DegenerateRaceError(f"NR_{q} is empty; the residue race is degenerate")
    rh = rho(q)
    values: Dict[int, float] = {}
    for a in squares:
        values[a] = float(rh - 1)
    for a in nonsquares:
        values[a] = -1.0
    fourier: Dict[int, complex] = {}
    support = []
    for chi in characters(q):
        if chi.is_quadratic:
            fourier[chi.label] = 1.0 + 0.0j
            support.append(chi.label)
        else:
            fourier[chi.label] = 0.0 + 0.0j
    return RaceWeight(q=q, values=values, fourier=fourier, support=tuple(support))


def star(t: RaceWeight | ResidueFunction) -> ResidueFunction:
    """t*(a) = t(a^2)."""
    group = build_unit_group(t.q)
    return ResidueFunction(q=t.q, values={a: t(a * a % t.q) for a in group.units})


def mean_shift(t: RaceWeight) -> float:
    """<t, r_q>, the constant whose negative is the mean of the limiting law."""
    rm = r_map(t.q)
    group = build_unit_group(t.q)
    return sum(t.values[a] * rm[a] for a in group.units) / group.phi


@dataclass(frozen=True)
class WeightStats:
    """Scalar statistics attached to a race weight."""

    lam: float  # L1 norm of the Fourier transform of t
    lam_star: float  # same for t*
    C: float  # max(lam (log q)^2, lam_star log q)
    log_k: float  # average log-conductor over the support
    mean_shift: float  # <t, r_q>

    @property
    def k(self) -> float:
        return math.exp(self.log_k)


def weight_stats(t: RaceWeight) -> WeightStats:
    group = build_unit_group(t.q)
    lam = sum(abs(c) for c in t.fourier.values())
    tstar = star(t)
    lam_star = 0.0
    for chi in characters(t.q):
        coeff = inner_product(t.q, tstar.values, {a: chi(a) for a in group.units})
        lam_star += abs(coeff)
    logq = math.log(t.q)
    C = max(lam * logq**2, lam_star * logq)
    sup_chars = t.support_characters()
    log_k = sum(math.log(chi.conductor) for chi in sup_chars) / len(sup_chars)
    return WeightStats(
        lam=lam, lam_star=lam_star, C=C, log_k=log_k, mean_shift=mean_shift(t)
    )
