"""Acceptance criteria, one test per criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines; every tolerance is fixed here, nothing is calibrated at runtime.
"""

import math
import time

import numpy as np
import pytest

from primerace.analysis import RunConfig, run_pipeline, skewes_search
from primerace.chowla import (
    construct_q,
    construct_q_prime,
    jacobi,
    least_qr_nr,
    load_certificate,
    save_certificate,
    verify_certificate,
)
from primerace.explicit import build_model, psi_truncated
from primerace.limiting import build_random_model, invert_density, mu_hat_l1
from primerace.primes import psi_weighted, sieve
from primerace.residues import (
    build_unit_group,
    characters,
    inner_product,
    race_weight_two_class,
    weight_stats,
)
from primerace.wasserstein import (
    EmpiricalMeasure,
    TorusOrbitSpec,
    haar_angles,
    kw_bound,
    w1_circle,
    w1_duality_lower_bound,
    w1_line,
)
from primerace.zeros import ZeroStore, compute_zeros, ensure_coverage, rvm_main_term


def report(n, detail):
    print(f"\nACCEPTANCE {n} PASS: {detail}")


def test_criterion_1_skewes_mod4():
    start = time.time()
    table = sieve(10**5)
    t = race_weight_two_class(4, 1, 3)
    result = skewes_search(table, t, 10**5)
    elapsed = time.time() - start
    assert result.hit == 26861
    assert elapsed < 30.0
    report(1, f"skewes_search(4; 1, 3) = 26861 in {elapsed:.2f}s")


def test_criterion_2_delta_two_pipelines():
    start = time.time()
    t = race_weight_two_class(4, 3, 1)
    store = ZeroStore()
    ensure_coverage(store, t, 500.0)  # zeros computed in-repo, inside the budget
    dist = invert_density(t, store, 500.0, tail="rvm")
    model = build_random_model(t, store, 500.0, tail="rvm")
    mc, se = model.sample_delta(10**7, seed=20240501)
    elapsed = time.time() - start
    assert abs(dist.delta - mc) <= 5e-3
    assert 0.99 < dist.delta < 1.0
    assert 0.99 < mc < 1.0
    assert elapsed < 300.0
    report(
        2,
        f"delta(inversion) = {dist.delta:.6f}, delta(MC 1e7) = {mc:.6f}, "
        f"gap = {abs(dist.delta - mc):.2e} (se {se:.1e}) in {elapsed:.1f}s",
    )


def test_criterion_3_riemann_von_mangoldt_small_conductors():
    T = 100.0
    checked = 0
    worst = 0.0
    for f in range(3, 13):
        for chi in characters(f):
            if chi.is_principal or chi.conductor != chi.q:
                continue
            comp = compute_zeros(chi, T)
            residual = abs(comp.report.observed - rvm_main_term(f, T))
            bound = 3.0 * math.log(f * (T + 2.0))
            assert residual <= bound, (f, chi.label, residual, bound)
            worst = max(worst, residual)
            checked += 1
    assert checked == 26  # primitive characters of conductor 3..12
    report(3, f"{checked} characters at T=100, worst |residual| = {worst:.3f}")


def test_criterion_4_kw_sandwich():
    start = time.time()
    rng = np.random.default_rng(20240502)
    circle_checks = 0
    for k in range(20):
        N = int(rng.integers(1, 3))
        gammas = rng.uniform(0.4, 9.0, size=N)
        window = float(np.exp(rng.uniform(math.log(10.0), math.log(10**4))))
        H = int(rng.integers(1, 6))
        spec = TorusOrbitSpec(gammas=gammas, x0=0.0, X=window)
        bound = kw_bound(spec, H)
        samples = spec.orbit_samples(16384)
        lower = w1_duality_lower_bound(samples, "haar", trials=24, seed=100 + k)
        assert lower <= bound.total + 1e-8, (k, lower, bound.total)
        if N == 1:
            exact = w1_circle(samples[:, 0], haar_angles())
            assert exact <= bound.total + 1e-8, (k, exact, bound.total)
            circle_checks += 1
    elapsed = time.time() - start
    assert elapsed < 60.0
    report(
        4,
        f"20 random specs sandwiched ({circle_checks} exact 1-D checks) "
        f"in {elapsed:.1f}s",
    )


def test_criterion_5_explicit_formula_envelope(store_q4, t_q4, table_1e5):
    start = time.time()
    fitted = []
    for x in (100.0, 1000.0, 10**4):
        pt = psi_truncated(x, t_q4, store_q4, 200.0)
        actual = psi_weighted(table_1e5, x, t_q4)
        gap = abs(actual - pt.main_term)
        assert gap <= 10.0 * pt.envelope, (x, gap, pt.envelope)
        fitted.append(gap / pt.envelope)
    elapsed = time.time() - start
    assert elapsed < 60.0
    report(
        5,
        "psi envelope holds at x in {1e2,1e3,1e4}, fitted constants "
        + ", ".join(f"{c:.4f}" for c in fitted),
    )


def test_criterion_6_w1_chain_decay(table_1e6, t_q4, store_q4):
    X = math.log(10**6)
    ys = np.arange(math.log(2.0), X, 1e-3)
    surr = {}
    for T in (50.0, 100.0, 200.0):
        surr[T] = EmpiricalMeasure.from_samples(
            build_model(t_q4, store_q4, T).evaluate(ys)
        )
    stats = weight_stats(t_q4)
    value = w1_line(surr[50.0], surr[200.0])
    envelope = stats.C * (
        math.log(50) / math.sqrt(50) + math.log(200) / math.sqrt(200)
    )
    assert value < 10.0 * envelope
    d1 = w1_line(surr[50.0], surr[100.0])
    d2 = w1_line(surr[100.0], surr[200.0])
    assert d2 < d1
    report(
        6,
        f"w1(T=50,T=200) = {value:.4f} < 10 x envelope {envelope:.3f}; "
        f"cauchy pairs decay {d1:.4f} -> {d2:.4f}",
    )


def test_criterion_7_chowla_certificates(tmp_path):
    start = time.time()
    cert = construct_q(1)
    assert cert.q == 73
    rep = least_qr_nr(73, [73])
    assert rep.psi_prime == 5 > 3
    cert_p = construct_q_prime(cert)
    assert cert_p.q == 365
    assert jacobi(2, 365) == -1 and jacobi(3, 365) == -1
    # independent re-verification through the file round trip
    path = tmp_path / "q1.cert"
    save_certificate(cert_p, path)
    assert verify_certificate(load_certificate(path)) == []
    assert verify_certificate(cert) == []
    cert2 = construct_q(2, f_value=1.6)
    for fw in cert2.factors:
        for base in (2, 3, 5):
            assert jacobi(base, fw.prime) == 1
    assert verify_certificate(cert2) == []
    elapsed = time.time() - start
    assert elapsed < 10.0
    report(
        7,
        f"q_1 = 73 (Psi = 5), q'_1 = 365 (symbols -1), n=2 reciprocity "
        f"exhaustive in {elapsed:.2f}s",
    )


def test_criterion_8_bracketing(store_q4, t_q4):
    dist = invert_density(t_q4, store_q4, 500.0)
    l1 = mu_hat_l1(t_q4, store_q4, 500.0)
    gaps = {}
    for L in (10.0, 100.0):
        bound = l1.l1 / (4.0 * math.pi * L)

        def h_plus(x):
            return np.clip(L * np.asarray(x) + 1.0, 0.0, 1.0)

        def h_minus(x):
            return np.clip(L * np.asarray(x), 0.0, 1.0)

        for name, h in (("h+", h_plus), ("h-", h_minus)):
            gap = abs(dist.delta - dist.integral_of(h))
            assert gap <= bound, (L, name, gap, bound)
            gaps[(L, name)] = gap
    report(
        8,
        "bracket gaps " + ", ".join(
            f"L={L} {n}: {g:.2e}" for (L, n), g in sorted(gaps.items())
        ) + f" within ||mu^||_1/(4 pi L), ||mu^||_1 = {l1.l1:.4f}",
    )


def test_criterion_9_property_suites(tmp_path, store_q4, t_q4):
    rng = np.random.default_rng(20240503)
    # metric axioms on random triples
    for _ in range(25):
        a = EmpiricalMeasure.from_samples(rng.normal(size=17))
        b = EmpiricalMeasure.from_samples(rng.normal(size=23))
        c = EmpiricalMeasure.from_samples(rng.normal(size=11))
        assert w1_line(a, b) == pytest.approx(w1_line(b, a), abs=1e-10)
        assert w1_line(a, a) == 0.0
        assert w1_line(a, b) <= w1_line(a, c) + w1_line(c, b) + 1e-10
    # orthogonality and Parseval
    for q in (7, 12, 24, 45):
        units = build_unit_group(q).units
        chars = characters(q)
        for i, chi in enumerate(chars):
            for psi in chars[i + 1 :]:
                ip = inner_product(q, {a: chi(a) for a in units}, {a: psi(a) for a in units})
                assert abs(ip) < 1e-10
        values = rng.integers(-5, 6, size=len(units)).astype(float)
        values[-1] -= values.sum()
        t = {a: v for a, v in zip(units, values)}
        total = sum(
            abs(inner_product(q, t, {a: chi(a) for a in units})) ** 2 for chi in chars
        )
        assert total == pytest.approx(float(np.mean(values**2)), abs=1e-10)
    # Lipschitz pushforward
    for _ in range(10):
        xs = rng.normal(size=31)
        ys = rng.normal(size=19)
        c = float(rng.uniform(0.1, 4.0))
        knots = np.sort(rng.uniform(-5, 5, size=5))
        heights = np.concatenate(
            [[0.0], np.cumsum(rng.uniform(-c, c, size=4) * np.diff(knots))]
        )
        f = lambda x: float(np.interp(x, knots, heights))
        a = EmpiricalMeasure.from_samples(xs)
        b = EmpiricalMeasure.from_samples(ys)
        assert w1_line(a.pushforward(f), b.pushforward(f)) <= c * w1_line(a, b) + 1e-10
    # sign-flip delta symmetry
    d = invert_density(t_q4, store_q4, 300.0)
    dn = invert_density(t_q4.negate(), store_q4, 300.0)
    assert abs(d.delta + dn.delta - 1.0) <= 1e-6
    # determinism of run_pipeline
    cfg1 = RunConfig(
        output_dir=str(tmp_path / "a"), sieve_limit=10**5, zero_T=120.0,
        mc_samples=50_000, w1_truncations=(30.0, 60.0, 120.0),
    )
    cfg2 = RunConfig(
        output_dir=str(tmp_path / "b"), sieve_limit=10**5, zero_T=120.0,
        mc_samples=50_000, w1_truncations=(30.0, 60.0, 120.0),
    )
    r1 = run_pipeline(cfg1)
    r2 = run_pipeline(cfg2)
    assert r1.passed and r2.passed
    assert (r1.output_dir / "summary.txt").read_bytes() == (
        r2.output_dir / "summary.txt"
    ).read_bytes()
    report(
        9,
        "metric axioms, orthogonality/Parseval, Lipschitz pushforward, "
        "sign-flip delta, pipeline determinism all hold",
    )
