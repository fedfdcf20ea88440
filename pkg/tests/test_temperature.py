import math

import numpy as np
import pytest

from mimo_mcmc import model, temperature


def db(x):
    return 10 ** (x / 10)


class TestAlphaSolvers:
    def test_table_values_exact(self):
        # N = 10; exact solver at zeta in {1, 2} for 10 and 14 dB
        assert temperature.solve_alpha_exact(db(10), 10, 2).alpha_plus == pytest.approx(4.98, abs=0.01)
        assert temperature.solve_alpha_exact(db(10), 10, 1).alpha_plus == pytest.approx(3.54, abs=0.01)
        assert temperature.solve_alpha_exact(db(14), 10, 2).alpha_plus == pytest.approx(7.99, abs=0.01)
        assert temperature.solve_alpha_exact(db(14), 10, 1).alpha_plus == pytest.approx(5.76, abs=0.01)

    def test_table_values_approx(self):
        assert temperature.solve_alpha_approx(db(10), 10).alpha_plus == pytest.approx(2.74, abs=0.01)
        assert temperature.solve_alpha_approx(db(14), 10).alpha_plus == pytest.approx(4.56, abs=0.01)

    def test_feasibility_boundary_is_double_root(self):
        n = 10
        sol = temperature.solve_alpha_approx(2 * math.log(n), n)
        assert sol.feasible
        assert sol.alpha_plus == pytest.approx(sol.alpha_minus, rel=1e-12)
        assert sol.alpha_plus**2 == pytest.approx(2.0, rel=1e-12)

    def test_infeasible_is_a_value_not_an_error(self):
        sol = temperature.solve_alpha_approx(1.0, 10)  # snr < 2 ln 10
        assert not sol.feasible
        assert math.isnan(sol.alpha_plus)
        assert sol.rhs > 0
        sol2 = temperature.solve_alpha_exact(0.5, 10, 1.0)
        assert not sol2.feasible and sol2.rhs > 0

    def test_nonpositive_denominator_raises(self):
        with pytest.raises(ValueError):
            temperature.solve_alpha_exact(10.0, 10, zeta=50.0)

    @pytest.mark.parametrize("snr,n,zeta", [(db(10), 10, 1), (db(14), 10, 2), (40.0, 8, 1)])
    def test_roots_satisfy_defining_equation(self, snr, n, zeta):
        sol = temperature.solve_alpha_exact(snr, n, zeta)
        for a in (sol.alpha_plus, sol.alpha_minus):
            lhs = a**4 / (a**2 - 1)
            assert lhs == pytest.approx(sol.rhs, rel=1e-9)
            assert a > 1

    def test_beta_identity(self):
        for snr_db, zeta in ((10, 1), (10, 2), (14, 1), (14, 2)):
            sol = temperature.solve_alpha_exact(db(snr_db), 10, zeta)
            target = 2 * (math.log(10) - math.log(math.log(10)) - math.log(zeta))
            assert sol.beta == pytest.approx(target, rel=1e-9)
            # exact algebra: exp(-beta/2) = zeta ln(N) / N at that beta
            assert math.exp(-target / 2) == pytest.approx(
                zeta * math.log(10) / 10, rel=1e-12
            )

    def test_beta_alpha_relation(self):
        sol = temperature.solve_alpha_exact(db(14), 10, 1)
        a2 = sol.alpha_plus**2
        assert sol.beta == pytest.approx(4 * db(14) * (1 / a2) * (1 - 1 / a2), rel=1e-12)

    def test_default_alpha_fallback(self):
        assert temperature.default_alpha(16.0) == 2.0


class TestBinomialSum:
    def test_beta_zero_is_two_to_n_minus_one(self):
        for n in (1, 5, 10, 30, 200):
            assert temperature.binomial_sum(n, 0.0) == pytest.approx(2.0**n - 1, rel=1e-12)

    def test_single_term(self):
        for beta in (0.3, 2.0, 25.0):
            assert temperature.binomial_sum(1, beta) == pytest.approx(
                (1 + beta) ** -0.5, rel=1e-12
            )

    def test_against_high_precision_summation(self):
        mp = pytest.importorskip("mpmath")
        mp.mp.dps = 50
        n, beta = 10, 25.79
        expected = float(
            sum(
                mp.binomial(n, i) * (1 + mp.mpf(beta) * i / n) ** (-mp.mpf(n) / 2)
                for i in range(1, n + 1)
            )
        )
        assert temperature.binomial_sum(n, beta) == pytest.approx(expected, rel=1e-12)

    def test_domain(self):
        with pytest.raises(ValueError):
            temperature.binomial_sum(4, -1.0)


class TestSaddlePoint:
    def test_saddle_location_nearly_stationary(self):
        beta = 20.0
        x0 = temperature.saddle_point(beta)
        assert abs(temperature.saddle_f_prime(x0, beta)) <= 0.05

    def test_second_derivative_matches_negative_exponential(self):
        beta = 20.0
        x0 = temperature.saddle_point(beta)
        got = temperature.saddle_f_double_prime(x0, beta)
        assert got < 0
        ratio = abs(got) / math.exp(beta / 2)
        assert 1 / 1.2 <= ratio <= 1.2

    def test_derivatives_against_finite_differences(self):
        beta = 7.0
        h = 1e-6
        for x in (0.02, 0.1, 0.4):
            fd1 = (temperature.saddle_f(x + h, beta) - temperature.saddle_f(x - h, beta)) / (2 * h)
            assert temperature.saddle_f_prime(x, beta) == pytest.approx(fd1, rel=1e-6, abs=1e-5)
            fd2 = (
                temperature.saddle_f(x + h, beta)
                - 2 * temperature.saddle_f(x, beta)
                + temperature.saddle_f(x - h, beta)
            ) / h**2
            assert temperature.saddle_f_double_prime(x, beta) == pytest.approx(fd2, rel=1e-3)

    def test_calibrated_beta_makes_sum_polynomial(self):
        # the whole point of the beta calibration: at
        # beta = 2(ln N - ln ln N - ln zeta) the exact sum behaves as N^zeta
        n = 1_000_000
        beta = 2 * (math.log(n) - math.log(math.log(n)))
        assert 0.5 * n <= temperature.binomial_sum(n, beta) <= 2.0 * n
        beta2 = 2 * (math.log(n) - math.log(math.log(n)) - math.log(2.0))
        assert 0.25 * n**2 <= temperature.binomial_sum(n, beta2) <= 4.0 * n**2

    def test_dominant_term_matches_log_of_exact_sum(self):
        # the estimate's exponential term N exp(-beta/2) is the log of the
        # exact sum in the calibrated regime (the polynomial prefactor of
        # the closed form is heuristic and not asserted)
        n = 1_000_000
        beta = 2 * (math.log(n) - math.log(math.log(n)))
        dominant = n * temperature.saddle_point(beta)
        assert dominant == pytest.approx(
            math.log(temperature.binomial_sum(n, beta)), rel=0.05
        )

    def test_estimate_is_monotone_decreasing_in_beta(self):
        vals = [temperature.saddle_point_estimate(50, b) for b in (5.0, 10.0, 20.0, 40.0)]
        assert all(np.isfinite(vals))
        assert all(a > b for a, b in zip(vals, vals[1:]))


class TestUnionBound:
    def test_single_dimension_closed_form(self):
        assert temperature.ml_error_union_bound(1, 3.0) == pytest.approx(0.5, rel=1e-12)

    def test_monotone_decreasing_in_snr(self):
        vals = [temperature.ml_error_union_bound(8, s) for s in (1.0, 5.0, 20.0, 100.0, 1e4)]
        assert all(a > b for a, b in zip(vals, vals[1:]))
        assert vals[-1] < 1e-6

    def test_values_above_one_are_returned_as_is(self):
        assert temperature.ml_error_union_bound(8, 0.5) > 1.0


class TestGaussianIntegral:
    def test_trivial_parameters(self):
        assert temperature.gaussian_integral(0.0, 0.7, 6) == 1.0
        assert temperature.gaussian_integral(0.5, 0.0, 6) == 1.0

    def test_domain_violation(self):
        with pytest.raises(ValueError):
            temperature.gaussian_integral(2.0, 1.0, 4)

    def test_against_monte_carlo(self):
        a, eta, n = 0.5, -0.25, 4
        rng = np.random.default_rng(0)
        trials = 200_000
        v = rng.standard_normal((trials, n))
        x = rng.standard_normal((trials, n))
        w = v + a * x
        samples = np.exp(eta * ((w * w).sum(1) - (v * v).sum(1)))
        mc = samples.mean()
        se = samples.std() / math.sqrt(trials)
        closed = temperature.gaussian_integral(a, eta, n)
        assert abs(mc - closed) <= max(4 * se, 0.02 * closed)


class TestStationaryProbability:
    def test_uniform_limit(self):
        inst = model.generate_instance(1, 6, 10.0)
        p = temperature.stationary_prob_transmitted(inst, 1e6)
        assert p == pytest.approx(2.0**-6, abs=1e-6)

    def test_concentrates_on_truth_at_low_temperature(self):
        inst = model.zero_noise(
            model.generate_instance(2, 5, 10.0, model.ChannelKind.orthogonal_columns())
        )
        assert temperature.stationary_prob_transmitted(inst, 0.1) >= 0.999

    def test_matches_delta_form(self):
        # independent evaluation through the zero/one displacement sum:
        # with x_true = -1, y - Hx = noise - 2 H delta for delta = (1+x)/2
        for seed in (3, 4):
            inst = model.generate_instance(seed, 6, 12.0)
            alpha = 2.0
            got = temperature.stationary_prob_transmitted(inst, alpha)
            n = inst.n
            acc = 0.0
            vnorm = float(inst.noise @ inst.noise)
            for s in range(2**n):
                delta = np.array([(s >> i) & 1 for i in range(n)], dtype=float)
                dev = inst.noise - 2.0 * inst.scaled_channel @ delta
                acc += math.exp(-((dev @ dev) - vnorm) / (2 * alpha**2))
            assert got == pytest.approx(1.0 / acc, rel=1e-10)

    def test_markov_inequality_on_sample(self):
        rows = []
        for seed in range(60):
            inst = model.generate_instance(seed, 6, 30.0)
            rows.append(1.0 / temperature.stationary_prob_transmitted(inst, 2.5))
        inv = np.array(rows)
        thresh = 6.0**1.5
        freq = float((inv > thresh).mean())
        assert freq <= float(inv.mean()) / thresh + 1e-12
