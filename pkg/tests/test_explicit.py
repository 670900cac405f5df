import math

import numpy as np
import pytest

from primerace.errors import OutOfRangeError
from primerace.explicit import (
    almost_periodicity_gap,
    build_model,
    pi_psi_bridge,
    psi_truncated,
)
from primerace.limiting import build_random_model
from primerace.primes import WeightedCounter, pi_weighted, psi_weighted
from primerace.residues import race_weight_two_class, weight_stats
from primerace.zeros import count_zeros


class TestBuildModel:
    def test_constant_when_T_below_first_zero(self, store_q4, t_q4):
        model = build_model(t_q4, store_q4, 5.0)
        assert model.gammas.size == 0
        ys = np.linspace(1, 30, 7)
        assert np.allclose(model.evaluate(ys), 2.0)  # -<t, r> = 2

    def test_single_term_amplitude(self, store_q4, t_q4):
        model = build_model(t_q4, store_q4, 10.0)
        assert model.gammas.size == 1
        amp = 2 * abs(model.coefficients[0])
        gamma = model.gammas[0]
        assert amp == pytest.approx(2 * 2 / math.sqrt(0.25 + gamma * gamma))
        assert amp == pytest.approx(0.662, abs=5e-4)
        # oscillates about the constant 2 with that amplitude
        ys = np.linspace(0, 40, 4001)
        vals = model.evaluate(ys)
        assert np.max(vals) == pytest.approx(2 + amp, abs=1e-3)
        assert np.min(vals) == pytest.approx(2 - amp, abs=1e-3)

    def test_term_count_matches_zero_count(self, store_q4, t_q4):
        for T in (50.0, 200.0, 500.0):
            model = build_model(t_q4, store_q4, T)
            n, _ = count_zeros(store_q4, t_q4, T)
            assert model.gammas.size == n

    def test_b_n_bound(self, store_q4, t_q4):
        model = build_model(t_q4, store_q4, 500.0)
        mask = model.gammas >= 1.0
        coeff = 2.0  # |<t, chi>| for the mod-4 race
        assert np.all(
            np.abs(model.coefficients[mask]) <= coeff / model.gammas[mask] + 1e-15
        )

    def test_amplitude_bound_random_points(self, store_q4, t_q4):
        model = build_model(t_q4, store_q4, 200.0)
        bound = model.amplitude_bound()
        rng = np.random.default_rng(1)
        ys = rng.uniform(0, 10**4, size=1000)
        assert np.all(np.abs(model.evaluate(ys)) <= bound)

    def test_matches_random_model_on_orbit(self, store_q4, t_q4):
        # g^(T)(e^{i gamma_1 y}, ..., e^{i gamma_N y}) = E^(T)(y)
        model = build_model(t_q4, store_q4, 60.0)
        g = build_random_model(t_q4, store_q4, 60.0)
        ys = np.linspace(0.5, 200.0, 97)
        phases = np.outer(ys, model.gammas)
        assert np.allclose(g.evaluate(phases), model.evaluate(ys), atol=1e-10)

    def test_mean_over_long_window(self, store_q4, t_q4):
        model = build_model(t_q4, store_q4, 200.0)
        Y = 1e4
        tolerance = sum(
            2 * 2 * abs(b) / (g * Y)
            for g, b in zip(model.gammas, model.coefficients)
        )
        assert abs(model.mean_over(math.log(2), Y) - 2.0) <= tolerance

    def test_sample_variance_converges(self, store_q4, t_q4):
        model = build_model(t_q4, store_q4, 30.0)
        min_gap = float(np.min(np.diff(model.gammas)))
        Y = 1e5 / min_gap
        ys = np.arange(0.0, Y, 0.045)
        vals = model.evaluate(ys)
        sample_var = float(np.var(vals))
        assert sample_var == pytest.approx(model.truncated_variance(), rel=0.05)

    def test_dump_format(self, store_q4, t_q4, tmp_path):
        model = build_model(t_q4, store_q4, 50.0)
        path = tmp_path / "model.txt"
        model.dump(path)
        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines[0].startswith("#") and "T=" in lines[0]
        assert len(lines) == 1 + model.gammas.size
        gamma, re_b, im_b, label = lines[1].split(",")
        assert float(gamma) == pytest.approx(model.gammas[0])
        assert int(label) == model.labels[0]


class TestPsiTruncated:
    def test_envelope_holds_with_small_constant(self, store_q4, t_q4, table_1e5):
        for x in (100.0, 1000.0, 10**4):
            pt = psi_truncated(x, t_q4, store_q4, 200.0)
            actual = psi_weighted(table_1e5, x, t_q4)
            assert abs(actual - pt.main_term) <= pt.envelope

    def test_triangle_inequality_bound(self, store_q4, t_q4):
        pt = psi_truncated(2.0, t_q4, store_q4, 500.0)
        gams = store_q4.ordinates(4, 3)
        bound = math.sqrt(2) * 2 * 2 * np.sum(1 / np.abs(0.5 + 1j * gams))
        assert abs(pt.main_term) <= bound

    def test_jump_matches_weight(self, store_q4, t_q4, table_1e5):
        # at a prime p = 3 mod 4, psi jumps by t(3) log p = 2 log p
        p = 10007  # 3 mod 4
        below = psi_weighted(table_1e5, p - 0.5, t_q4)
        above = psi_weighted(table_1e5, p, t_q4)
        assert above - below == pytest.approx(2 * math.log(p))

    def test_x_below_two_rejected(self, store_q4, t_q4):
        with pytest.raises(OutOfRangeError):
            psi_truncated(1.5, t_q4, store_q4, 100.0)


class TestBridge:
    def test_q4_envelope(self, table_1e5, t_q4):
        br = pi_psi_bridge(table_1e5, 10**4, t_q4)
        assert abs(br.residual) <= 10 * br.envelope
        assert br.envelope == pytest.approx(
            weight_stats(t_q4).C * 100.0 / math.log(10**4) ** 2
        )

    def test_x2_all_terms_finite(self, table_1e5, t_q4):
        br = pi_psi_bridge(table_1e5, 2.0, t_q4)
        assert math.isfinite(br.residual)
        assert pi_weighted(table_1e5, 2.0, t_q4) == 0.0

    def test_antisymmetry(self, table_1e5):
        a = race_weight_two_class(4, 3, 1)
        b = race_weight_two_class(4, 1, 3)
        ra = pi_psi_bridge(table_1e5, 5000.0, a)
        rb = pi_psi_bridge(table_1e5, 5000.0, b)
        assert ra.residual == pytest.approx(-rb.residual, abs=1e-12)


class TestAlmostPeriodicity:
    def test_T_zero_is_average_distance_to_constant(self, table_1e5, t_q4, store_q4):
        Y = 9.0
        gap = almost_periodicity_gap(table_1e5, t_q4, store_q4, T=0.0, Y=Y)
        counter = WeightedCounter(table_1e5, t_q4)
        ys = np.linspace(math.log(2), Y, 200001)
        brute = float(np.mean(np.abs(counter.E_at(ys) - 2.0))) * (Y - math.log(2)) / Y
        assert gap.gap == pytest.approx(brute, rel=2e-3)

    def test_gap_within_envelope_and_shrinks_with_T(self, table_1e6, t_q4, store_q4):
        Y = math.log(4.4e5)
        g100 = almost_periodicity_gap(table_1e6, t_q4, store_q4, T=100.0, Y=Y)
        g200 = almost_periodicity_gap(table_1e6, t_q4, store_q4, T=200.0, Y=Y)
        assert g100.gap <= g100.envelope
        assert g200.gap <= g200.envelope
        assert g200.gap < g100.gap

    def test_gap_shrinks_on_most_subintervals(self, table_1e6, t_q4, store_q4):
        # compare T=100 vs T=200 on 10 random windows; expect >= 9 improvements
        rng = np.random.default_rng(3)
        counter = WeightedCounter(table_1e6, t_q4)
        from primerace.explicit import build_model

        m100 = build_model(t_q4, store_q4, 100.0)
        m200 = build_model(t_q4, store_q4, 200.0)
        wins = 0
        for _ in range(10):
            lo = rng.uniform(math.log(2), 12.0)
            ys = np.linspace(lo, lo + 1.0, 20001)
            e = counter.E_at(ys)
            d100 = float(np.mean(np.abs(e - m100.evaluate(ys))))
            d200 = float(np.mean(np.abs(e - m200.evaluate(ys))))
            if d200 <= d100:
                wins += 1
        assert wins >= 9

    def test_envelope_monotone_in_Y(self, table_1e5, t_q4, store_q4):
        g1 = almost_periodicity_gap(table_1e5, t_q4, store_q4, T=200.0, Y=8.0)
        g2 = almost_periodicity_gap(table_1e5, t_q4, store_q4, T=200.0, Y=11.0)
        assert g2.envelope <= g1.envelope

    def test_corrected_vs_uncorrected_envelopes(self, table_1e5, t_q4, store_q4):
        g = almost_periodicity_gap(table_1e5, t_q4, store_q4, T=100.0, Y=10.0)
        # corrected replaces log T/sqrt(T Y) by the larger 1/sqrt(Y) term here
        assert g.envelope != g.envelope_uncorrected
        assert g.gap <= g.envelope

    def test_requires_Y_at_least_log_T(self, table_1e5, t_q4, store_q4):
        with pytest.raises(OutOfRangeError):
            almost_periodicity_gap(table_1e5, t_q4, store_q4, T=100.0, Y=3.0)
