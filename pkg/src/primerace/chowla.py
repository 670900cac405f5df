"""Construction of square-free moduli with forced-large least quadratic
residue/nonresidue primes, with verifiable certificates.

The base data are the first n odd primes p_1..p_n and Q_n = 8 p_1...p_n.
Factors of q_n are primes in progressions a mod Q_n with a = 1 (mod 8) and a
a quadratic residue mod every p_i, so reciprocity forces 2 and every p_i to
be squares mod q_n; the companion modulus q_n' appends one prime = 5 (mod 8)
that is a nonresidue mod every p_i, flipping every symbol to -1.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import (
    InfeasibleConstructionError,
    LinnikSearchError,
    UnsupportedModulusError,
    ValidationError,
)
from .residues import crt

_SMALL_PRIMES = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67,
    71, 73, 79, 83, 89, 97, 101, 103, 107, 109, 113, 127, 131, 137, 139, 149,
]

# Below this bound the fixed Miller-Rabin base set is deterministic.
_MR_DETERMINISTIC_BOUND = 3_317_044_064_679_887_385_961_981
_MR_BASES = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37]
_EXTRA_RANDOM_ROUNDS = 64  # error < 4^-64 < 2^-128 on top of BPSW


def jacobi(a: int, n: int) -> int:
    """Jacobi symbol (a|n) for odd positive n."""
    if n <= 0 or n % 2 == 0:
        raise ValueError("Jacobi symbol needs odd positive n")
    a %= n
    result = 1
    while a != 0:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                result = -result
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            result = -result
        a %= n
    return result if n == 1 else 0


def _miller_rabin(n: int, base: int) -> bool:
    if base % n == 0:
        return True
    d = n - 1
    r = 0
    while d % 2 == 0:
        d //= 2
        r += 1
    x = pow(base, d, n)
    if x in (1, n - 1):
        return True
    for _ in range(r - 1):
        x = x * x % n
        if x == n - 1:
            return True
    return False


def _strong_lucas(n: int) -> bool:
    """Strong Lucas test with Selfridge parameters (the BPSW companion)."""
    if n % 2 == 0 or n < 3:
        return n == 2
    # Selfridge: first D in 5, -7, 9, -11, ... with (D|n) = -1
    D = 5
    while True:
        j = jacobi(D % n, n)
        if j == -1:
            break
        if j == 0 and abs(D) != n:
            return False
        D = -(D + 2) if D > 0 else -(D - 2)
        if abs(D) > 1_000_000:
            raise ValidationError("Lucas parameter search runaway; n is likely a square")
    P, Q = 1, (1 - D) // 4
    d = n + 1
    s = 0
    while d % 2 == 0:
        d //= 2
        s += 1
    # Lucas sequences by binary ladder
    U, V, Qk = 0, 2, 1
    for bit in bin(d)[2:]:
        U, V = U * V % n, (V * V - 2 * Qk) % n
        Qk = Qk * Qk % n
        if bit == "1":
            U, V = (P * U + V) * pow(2, -1, n) % n, (D * U + P * V) * pow(2, -1, n) % n
            Qk = Qk * Q % n
    if U == 0 or V == 0:
        return True
    for _ in range(s - 1):
        V = (V * V - 2 * Qk) % n
        if V == 0:
            return True
        Qk = Qk * Qk % n
    return False


def _is_perfect_square(n: int) -> bool:
    r = math.isqrt(n)
    return r * r == n


def is_probable_prime(n: int, rng: Optional[random.Random] = None) -> bool:
    """Baillie-PSW style primality: deterministic MR bases below 3.3e24,
    BPSW plus extra random Miller-Rabin rounds above (error < 2^-128)."""
    if n < 2:
        return False
    for p in _SMALL_PRIMES:
        if n % p == 0:
            return n == p
    if n < _MR_DETERMINISTIC_BOUND:
        return all(_miller_rabin(n, b) for b in _MR_BASES)
    if _is_perfect_square(n):
        return False
    if not _miller_rabin(n, 2) or not _strong_lucas(n):
        return False
    rng = rng or random.Random(181)  # fixed seed keeps verdicts deterministic
    return all(
        _miller_rabin(n, rng.randrange(2, n - 1)) for _ in range(_EXTRA_RANDOM_ROUNDS)
    )


def first_odd_primes(n: int) -> List[int]:
    out = []
    candidate = 3
    while len(out) < n:
        if is_probable_prime(candidate):
            out.append(candidate)
        candidate += 2
    return out


def quadratic_residues(p: int) -> List[int]:
    """Nonzero squares mod an odd prime p."""
    return sorted({x * x % p for x in range(1, p)})


def least_nonresidue(p: int) -> int:
    for y in range(2, p):
        if jacobi(y, p) == -1:
            return y
    raise ValidationError(f"no nonresidue mod {p}")


def _search_progression(
    a: int, modulus: int, ceiling: int, lower_bound: int = 0
) -> Tuple[int, int, bool]:
    """Least probable prime = a (mod modulus) exceeding lower_bound.

    Returns (prime, steps, filter_relaxed).  The size filter is dropped (with
    a flag) only if nothing above it exists within the ceiling.
    """
    fallback = None
    candidate = a % modulus
    if candidate == 0:
        candidate = modulus
    for step in range(ceiling):
        value = candidate + step * modulus
        if value > 1 and is_probable_prime(value):
            if value > lower_bound:
                return value, step, False
            if fallback is None:
                fallback = (value, step)
    if fallback is not None:
        return fallback[0], fallback[1], True
    raise LinnikSearchError(
        f"no prime = {a} (mod {modulus}) within {ceiling} progression steps",
        steps_tried=ceiling,
    )


@dataclass(frozen=True)
class FactorWitness:
    xi: Tuple[int, ...]  # residue tuple, one entry per base prime
    a_xi: int  # CRT lift mod Q_n
    prime: int
    jacobi_checks: Tuple[Tuple[int, int], ...]  # (base, symbol) incl. base 2
    size_filter_relaxed: bool = False


@dataclass(frozen=True)
class ConstructionCertificate:
    kind: str  # "q" or "q_prime"
    n: int
    f_value: float
    base_primes: Tuple[int, ...]
    Q_n: int
    r_n: int
    x_n: float
    seed: int
    factors: Tuple[FactorWitness, ...]
    q: int
    extra_prime: Optional[FactorWitness] = None  # the 5 mod 8 prime of q'

    @property
    def expected_symbol(self) -> int:
        return -1 if self.kind == "q_prime" else 1

    @property
    def all_primes(self) -> Tuple[int, ...]:
        ps = tuple(f.prime for f in self.factors)
        if self.extra_prime is not None:
            ps = ps + (self.extra_prime.prime,)
        return ps


def solve_tuple_count(n: int, f_value: float) -> Tuple[int, float]:
    """r_n = floor(x_n) from 2^x / x = n log(n) f; bisection on x > 2.

    The target degenerates below the infimum 2 for very small n (log 1 = 0);
    a single factor is emitted in that case.
    """
    target = n * math.log(n) * f_value if n > 1 else 0.0
    if target <= 2.0:
        return 1, 2.0
    lo, hi = 2.0, 3.0
    while 2.0**hi / hi < target:
        hi += 1.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if 2.0**mid / mid < target:
            lo = mid
        else:
            hi = mid
    x = 0.5 * (lo + hi)
    return max(1, math.floor(x)), x


def construct_q(
    n: int,
    f_value: float = 1.0,
    r_override: Optional[int] = None,
    seed: int = 0,
    ceiling: int = 10**6,
) -> ConstructionCertificate:
    """Build q_n as a product of r_n progression primes with all residue
    symbols forced to +1."""
    if n < 1:
        raise InfeasibleConstructionError("n must be >= 1")
    base_primes = first_odd_primes(n)
    Q_n = 8 * math.prod(base_primes)
    r_n, x_n = solve_tuple_count(n, f_value)
    if r_override is not None:
        r_n = r_override
    # all residue tuples with each coordinate a QR mod its base prime
    residue_sets = [quadratic_residues(p) for p in base_primes]
    tuples: List[Tuple[int, ...]] = [()]
    for rs in residue_sets:
        tuples = [t + (x,) for t in tuples for x in rs]
    tuples.sort()
    if r_n > len(tuples):
        raise InfeasibleConstructionError(
            f"r_n = {r_n} exceeds the {len(tuples)} available residue tuples"
        )
    rng = random.Random(seed)
    rng.shuffle(tuples)
    chosen = sorted(tuples[:r_n])
    sqrt_Q = math.isqrt(Q_n)
    factors = []
    q = 1
    for xi in chosen:
        a_xi = crt((1,) + xi, (8,) + tuple(base_primes))
        prime, _, relaxed = _search_progression(a_xi, Q_n, ceiling, lower_bound=sqrt_Q)
        checks = [(2, jacobi(2, prime))]
        for p in base_primes:
            checks.append((p, jacobi(p, prime)))
        if any(sym != 1 for _, sym in checks):
            raise ValidationError(
                f"reciprocity failure at factor {prime}: symbols {checks}"
            )
        factors.append(
            FactorWitness(
                xi=xi,
                a_xi=a_xi,
                prime=prime,
                jacobi_checks=tuple(checks),
                size_filter_relaxed=relaxed,
            )
        )
        q *= prime
    return ConstructionCertificate(
        kind="q",
        n=n,
        f_value=f_value,
        base_primes=tuple(base_primes),
        Q_n=Q_n,
        r_n=r_n,
        x_n=x_n,
        seed=seed,
        factors=tuple(factors),
        q=q,
    )


def construct_q_prime(
    cert: ConstructionCertificate, ceiling: int = 10**6
) -> ConstructionCertificate:
    """Append one prime = 5 (mod 8), nonresidue mod every base prime, to flip
    every symbol of the certificate to -1."""
    if cert.kind != "q":
        raise ValidationError("construct_q_prime expects a q_n certificate")
    ys = tuple(least_nonresidue(p) for p in cert.base_primes)
    b = crt((5,) + ys, (8,) + tuple(cert.base_primes))
    prime, _, relaxed = _search_progression(b, cert.Q_n, ceiling)
    if prime in set(cert.all_primes):
        raise ValidationError("extra prime collides with an existing factor")
    q_prime = cert.q * prime
    checks = [(2, jacobi(2, q_prime))]
    for p in cert.base_primes:
        checks.append((p, jacobi(p, q_prime)))
    if any(sym != -1 for _, sym in checks):
        raise ValidationError(f"expected all symbols -1 mod q', got {checks}")
    extra = FactorWitness(
        xi=ys,
        a_xi=b,
        prime=prime,
        jacobi_checks=tuple(checks),
        size_filter_relaxed=relaxed,
    )
    return ConstructionCertificate(
        kind="q_prime",
        n=cert.n,
        f_value=cert.f_value,
        base_primes=cert.base_primes,
        Q_n=cert.Q_n,
        r_n=cert.r_n,
        x_n=cert.x_n,
        seed=cert.seed,
        factors=cert.factors,
        q=q_prime,
        extra_prime=extra,
    )


def verify_certificate(cert: ConstructionCertificate) -> List[str]:
    """Re-derive every claim in a certificate; returns the list of failures."""
    problems: List[str] = []
    if tuple(first_odd_primes(cert.n)) != cert.base_primes:
        problems.append("base primes are not the first n odd primes")
    if 8 * math.prod(cert.base_primes) != cert.Q_n:
        problems.append("Q_n mismatch")
    primes_seen = set()
    product = 1
    for i, fw in enumerate(cert.factors):
        tag = f"factor {i} ({fw.prime})"
        if not is_probable_prime(fw.prime):
            problems.append(f"{tag}: not prime")
        if fw.prime in primes_seen:
            problems.append(f"{tag}: repeated prime, q not squarefree")
        primes_seen.add(fw.prime)
        if fw.a_xi % 8 != 1:
            problems.append(f"{tag}: a_xi not 1 mod 8")
        if fw.prime % cert.Q_n != fw.a_xi % cert.Q_n:
            problems.append(f"{tag}: prime not congruent to a_xi mod Q_n")
        for p, x in zip(cert.base_primes, fw.xi):
            if x % p != fw.a_xi % p:
                problems.append(f"{tag}: a_xi mismatch mod {p}")
            if jacobi(x, p) != 1:
                problems.append(f"{tag}: residue {x} is not a QR mod {p}")
        for base, sym in fw.jacobi_checks:
            if jacobi(base, fw.prime) != sym or sym != 1:
                problems.append(f"{tag}: Jacobi({base}|{fw.prime}) != +1")
        product *= fw.prime
    if cert.extra_prime is not None:
        fw = cert.extra_prime
        if not is_probable_prime(fw.prime):
            problems.append("extra prime: not prime")
        if fw.prime in primes_seen:
            problems.append("extra prime repeats a factor")
        if fw.a_xi % 8 != 5:
            problems.append("extra prime residue not 5 mod 8")
        if fw.prime % cert.Q_n != fw.a_xi % cert.Q_n:
            problems.append("extra prime not in its progression")
        for p, y in zip(cert.base_primes, fw.xi):
            if jacobi(y, p) != -1:
                problems.append(f"extra prime residue {y} is not a NR mod {p}")
        product *= fw.prime
    if product != cert.q:
        problems.append("q is not the product of the listed primes")
    expected = cert.expected_symbol
    for base in (2,) + cert.base_primes:
        if jacobi(base, cert.q) != expected:
            problems.append(f"Jacobi({base}|q) != {expected:+d}")
    return problems


@dataclass(frozen=True)
class LeastPrimeReport:
    q: int
    phi_prime: Optional[int]  # least prime QR mod q, None if not found
    psi_prime: Optional[int]  # least prime NR mod q
    ceiling: int


def least_qr_nr(
    q: int, factorization: Sequence[int], ceiling: int = 10**4
) -> LeastPrimeReport:
    """Scan primes in order for the least QR and least NR mod q.

    q must be odd and square-free with the given prime factorization; a prime
    is a QR iff its Legendre symbol is +1 at every factor.  Primes dividing q
    are skipped (they are not units mod q).
    """
    factors = sorted(int(p) for p in factorization)
    if q % 2 == 0:
        raise UnsupportedModulusError("only odd moduli are supported")
    if math.prod(factors) != q:
        raise UnsupportedModulusError("factorization does not multiply to q")
    if len(set(factors)) != len(factors):
        raise UnsupportedModulusError("q must be square-free")
    for p in factors:
        if not is_probable_prime(p):
            raise UnsupportedModulusError(f"claimed factor {p} is not prime")
    phi_prime = None
    psi_prime = None
    candidate = 2
    while candidate <= ceiling and (phi_prime is None or psi_prime is None):
        if is_probable_prime(candidate) and q % candidate != 0:
            symbols = [jacobi(candidate, p) for p in factors]
            if all(s == 1 for s in symbols):
                if phi_prime is None:
                    phi_prime = candidate
            elif psi_prime is None:
                psi_prime = candidate
        candidate += 1 if candidate == 2 else 2
    return LeastPrimeReport(q=q, phi_prime=phi_prime, psi_prime=psi_prime, ceiling=ceiling)


@dataclass(frozen=True)
class ConjectureDiagnostic:
    rho: int
    log_rad: float
    ratio: float  # rho / log rad
    envelope: float  # rho / log rad + log rho


def conjecture_diagnostic(q: int, factorization: Sequence[Tuple[int, int]]) -> ConjectureDiagnostic:
    """rho(q)/log rad(q) and the triple-log envelope rho/log rad + log rho."""
    rho = 1
    rad = 1
    check = 1
    for p, e in factorization:
        check *= p**e
        rad *= p
        if p == 2:
            rho *= 1 if e <= 1 else (2 if e == 2 else 4)
        else:
            rho *= 2
    if check != q:
        raise UnsupportedModulusError("factorization does not multiply to q")
    log_rad = math.log(rad)
    ratio = rho / log_rad
    return ConjectureDiagnostic(
        rho=rho, log_rad=log_rad, ratio=ratio, envelope=ratio + math.log(rho)
    )


# ---------------------------------------------------------------------------
# certificate files


def certificate_to_text(cert: ConstructionCertificate) -> str:
    lines = [
        "primerace-certificate v1",
        f"kind: {cert.kind}",
        f"n: {cert.n}",
        f"f_value: {cert.f_value!r}",
        f"r_n: {cert.r_n}",
        f"x_n: {cert.x_n!r}",
        f"seed: {cert.seed}",
        f"base_primes: {','.join(map(str, cert.base_primes))}",
        f"Q_n: {cert.Q_n}",
        f"q: {cert.q}",
    ]
    def emit(fw: FactorWitness, header: str):
        lines.append(header)
        lines.append(f"xi: {','.join(map(str, fw.xi))}")
        lines.append(f"a_xi: {fw.a_xi}")
        lines.append(f"prime: {fw.prime}")
        checks = ";".join(f"{b}:{s:+d}" for b, s in fw.jacobi_checks)
        lines.append(f"jacobi: {checks}")
        lines.append(f"size_filter_relaxed: {fw.size_filter_relaxed}")

    for i, fw in enumerate(cert.factors):
        emit(fw, f"[factor {i + 1}]")
    if cert.extra_prime is not None:
        emit(cert.extra_prime, "[extra-prime]")
    return "\n".join(lines) + "\n"


def save_certificate(cert: ConstructionCertificate, path):
    Path(path).write_text(certificate_to_text(cert), encoding="utf-8")


def _parse_witness(block: Dict[str, str]) -> FactorWitness:
    checks = tuple(
        (int(part.split(":")[0]), int(part.split(":")[1]))
        for part in block["jacobi"].split(";")
    )
    return FactorWitness(
        xi=tuple(int(v) for v in block["xi"].split(",")),
        a_xi=int(block["a_xi"]),
        prime=int(block["prime"]),
        jacobi_checks=checks,
        size_filter_relaxed=block.get("size_filter_relaxed", "False") == "True",
    )


def load_certificate(path) -> ConstructionCertificate:
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln.rstrip("\n") for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != "primerace-certificate v1":
        raise ValidationError("not a primerace certificate file")
    header: Dict[str, str] = {}
    blocks: List[Dict[str, str]] = []
    labels: List[str] = []
    current = header
    for ln in lines[1:]:
        if ln.startswith("["):
            current = {}
            blocks.append(current)
            labels.append(ln.strip("[]"))
            continue
        key, _, value = ln.partition(":")
        current[key.strip()] = value.strip()
    factors = []
    extra = None
    for label, block in zip(labels, blocks):
        fw = _parse_witness(block)
        if label == "extra-prime":
            extra = fw
        else:
            factors.append(fw)
    return ConstructionCertificate(
        kind=header["kind"],
        n=int(header["n"]),
        f_value=float(header["f_value"]),
        base_primes=tuple(int(v) for v in header["base_primes"].split(",")),
        Q_n=int(header["Q_n"]),
        r_n=int(header["r_n"]),
        x_n=float(header["x_n"]),
        seed=int(header["seed"]),
        factors=tuple(factors),
        q=int(header["q"]),
        extra_prime=extra,
    )
