# ebsum/tests/test_families.py
import math
from fractions import Fraction
from unittest import mock

import numpy as np
from django.test import SimpleTestCase
from scipy import stats

from ebsum import families
from ebsum.ebs_core import Pmf, Profile, aligned, max_relative_gap, mean, pmf_dp
from ebsum.exceptions import BudgetExceeded, ContractViolation, IllegalStep, InvalidArgument, InvalidFamily
from ebsum.modal_analysis import mode_of


class BinomialTests(SimpleTestCase):
    def test_modal_ridge_at_one_third(self):
        p = Fraction(1, 3)
        self.assertEqual(families.binomial_mode(8, p), (2, 3))
        self.assertEqual(families.binomial_mode(7, p), (2, 2))
        self.assertEqual(families.likelihood_max_n(2, p), (5, 6))
        self.assertEqual(families.likelihood_max_n(0, p), (0, 0))

    def test_float_probability_uses_tie_tolerance(self):
        self.assertEqual(families.binomial_mode(8, 1 / 3), (2, 3))
        self.assertEqual(families.binomial_mode(12, 0.385), (5, 5))
        self.assertEqual(families.binomial_mode(5, 0.0), (0, 0))
        self.assertEqual(families.binomial_mode(5, 1.0), (5, 5))

    def test_likelihood_in_p(self):
        self.assertEqual(families.likelihood_max_p(3, 8), Fraction(3, 8))
        with self.assertRaises(InvalidArgument):
            families.likelihood_max_p(9, 8)

    def test_pivots_interlace(self):
        self.assertEqual(families.binomial_p_pivots(2), [0, Fraction(1, 3), Fraction(2, 3), 1])
        for n in range(1, 15):
            self.assertTrue(families.binomial_p_interlacing(n))

    def test_bifurcation_identity(self):
        for a, b, c in ((1, 3, 2), (2, 5, 1), (3, 7, 4)):
            self.assertTrue(families.bifurcation_identity(a, b, c))
        with self.assertRaises(InvalidArgument):
            families.bifurcation_identity(3, 2, 1)

    def test_cross_modality_for_all_small_rationals(self):
        ps = sorted({Fraction(a, b) for b in range(2, 21) for a in range(1, b)})
        for p in ps:
            report = families.cross_modality_scan(families.BinomialN(p), 0, 30)
            self.assertTrue(report.all_pass, f"p={p}")
            self.assertTrue(all(e.pattern for e in report.entries if e.k >= 1), f"p={p}")

    def test_binomial_p_family_is_cross_modal(self):
        self.assertTrue(families.cross_modality_scan(families.BinomialP(9), 0, 9).all_pass)


class PoissonTests(SimpleTestCase):
    def test_modes_and_pivots(self):
        self.assertEqual(families.poisson_mode(Fraction(5, 2)), (2, 2))
        self.assertEqual(families.poisson_mode(3), (2, 3))
        self.assertEqual(families.poisson_mode(0.4), (0, 0))
        self.assertEqual(families.poisson_pivots(4), 4)

    def test_likelihood_at_the_pivot_beats_later_rates(self):
        self.assertGreater(families.poisson_pmf(1.6).at(2), families.poisson_pmf(2.5).at(2))

    def test_scan(self):
        self.assertTrue(families.cross_modality_scan(families.PoissonT(), 0, 25).all_pass)


class PowerSeriesTests(SimpleTestCase):
    def test_poisson_series_matches_scipy(self):
        spec = families.poisson_series()
        pmf = families.psd_pmf(spec, 2.5)
        np.testing.assert_allclose(pmf.mass, stats.poisson.pmf(np.arange(len(pmf)), 2.5), atol=1e-13)
        self.assertAlmostEqual(families.psd_mean(spec, 2.5), 2.5, places=12)
        self.assertAlmostEqual(families.psd_bifurcation(spec, 3), 3.0, places=12)
        self.assertAlmostEqual(families.psd_likelihood_max(spec, 3), 3.0, places=9)

    def test_binomial_series(self):
        spec = families.binomial_series(5)
        p = 0.3
        pmf = families.psd_pmf(spec, p / (1 - p))
        np.testing.assert_allclose(pmf.mass, stats.binom.pmf(np.arange(6), 5, p), atol=1e-14)
        self.assertEqual(families.psd_likelihood_max(spec, 5), math.inf)
        self.assertEqual(spec.modes_at(math.inf), (5,))
        with self.assertRaises(InvalidArgument):
            families.psd_likelihood_max(spec, 6)

    def test_invalid_coefficients(self):
        bumpy = families.PowerSeries("bumpy", lambda k: np.where(k % 2 == 0, 0.0, -5.0))
        with self.assertRaises(InvalidFamily):
            families.psd_pmf(bumpy, 1.0)

    def test_coefficient_cap(self):
        with self.assertRaises(BudgetExceeded):
            families.psd_pmf(families.poisson_series(), 5000.0, cap=256)

    def test_cosh_series_is_cross_modal(self):
        spec = families.cosh_series()
        report = families.psd_cross_modal_check(spec, 10)
        self.assertTrue(report.all_pass)
        self.assertEqual(report.conditions, {"i": True, "ii": True, "iii": True})
        for k in range(1, 11):
            t_k, t_next = families.psd_bifurcation(spec, k), families.psd_bifurcation(spec, k + 1)
            self.assertAlmostEqual(t_k, 2 * k * (2 * k - 1), places=8)
            self.assertLess(t_k, families.psd_likelihood_max(spec, k))
            self.assertLess(families.psd_likelihood_max(spec, k), t_next)

    def test_bifurcation_balances_the_evaluated_pmf(self):
        for spec in (families.cosh_series(), families.binomial_series(6), families.poisson_series()):
            for k in range(1, 6):
                with self.subTest(spec=spec.name, k=k):
                    pmf = families.psd_pmf(spec, families.psd_bifurcation(spec, k))
                    self.assertTrue(math.isclose(pmf.at(k - 1), pmf.at(k), rel_tol=1e-9))

    def test_bifurcation_rejects_an_unbalanced_pmf(self):
        skewed = Pmf([0.2, 0.5, 0.3])
        with mock.patch.object(families, "psd_pmf", return_value=skewed):
            with self.assertRaises(ContractViolation):
                families.psd_bifurcation(families.poisson_series(), 1)

    def test_cosh_series_matches_its_bernoulli_factors(self):
        t = 1.0
        profile = families.cosh_profile(t, 500)
        self.assertLess(profile.tail_mass, 1e-10)
        self.assertAlmostEqual(mean(profile), 0.5 * math.tanh(1.0), places=14)
        self.assertAlmostEqual(profile.probs[0], 4 / (4 + math.pi ** 2), places=15)
        a, b = aligned([families.psd_pmf(families.cosh_series(), t), pmf_dp(profile)])
        self.assertLess(np.max(np.abs(a - b)), 1e-8)

    def test_adversarial_series_breaks_the_mean_condition(self):
        report = families.psd_cross_modal_check(families.adversarial_series(2, 0.01), 3)
        self.assertFalse(report.conditions["ii"])
        self.assertGreater(families.psd_mean(families.adversarial_series(2, 0.01), 2.0), 2.3)

    def test_stochastic_monotonicity(self):
        spec = families.cosh_series()
        grid = [0.5, 1.0, 2.0, 4.0, 8.0, 16.0]
        tails = []
        for t in grid:
            pmf = families.psd_pmf(spec, t)
            tails.append(np.concatenate([1.0 - pmf.cdf(), np.zeros(80)])[:80])
        for before, after in zip(tails, tails[1:]):
            self.assertTrue(np.all(after >= before - 1e-12))

    def test_profile_series_maximizers_sit_between_pivots(self):
        for base in (Profile(probs=(0.3, 0.6, 0.45)), Profile(lam=0.5, probs=(0.3, 0.6))):
            spec = families.profile_power_series(base)
            for k in (1, 2):
                ell = families.psd_likelihood_max(spec, k)
                self.assertLess(families.psd_bifurcation(spec, k), ell)
                self.assertLess(ell, families.psd_bifurcation(spec, k + 1))

    def test_scaled_family_at_one_is_the_base(self):
        base = Profile(lam=0.4, probs=(0.2, 0.7))
        family = families.ScaledEBS(base)
        np.testing.assert_array_equal(family.pmf_at(1.0).mass, pmf_dp(base).mass)
        self.assertAlmostEqual(family.mean_at(2.0), mean(families.ebs_scale(base, 2.0)))
        a, b = aligned([families.psd_pmf(family.series, 1.0), pmf_dp(base)])
        self.assertLess(np.max(np.abs(a - b)), 1e-12)


class KaramataStirlingTests(SimpleTestCase):
    def test_stirling_rows(self):
        self.assertEqual(families.stirling_first_row(4), [0, 6, 11, 6, 1])

    def test_two_engines_agree(self):
        for t in (0.5, 1.0, 2.0):
            for n in (1, 2, 7, 50, 200):
                triangle = families.karamata_stirling_pmf(t, n)
                profile = pmf_dp(families.karamata_stirling_profile(t, n))
                self.assertLess(max_relative_gap(*aligned([triangle, profile])), 1e-9, f"t={t}, n={n}")

    def test_modes_stay_within_the_mean(self):
        for t in (0.5, 1.0, 2.0):
            for n in range(1, 201, 7):
                profile = families.karamata_stirling_profile(t, n)
                summary = mode_of(pmf_dp(profile))
                mu = mean(profile)
                self.assertLessEqual(math.floor(mu), summary.m_minus)
                self.assertLessEqual(summary.m_plus, math.ceil(mu))

    def test_modes_near_asymptotic_location(self):
        for t in (0.5, 1.0, 2.0):
            for n in (50, 200, 1000, 2000):
                u = families.karamata_stirling_u(n, t)
                summary = mode_of(pmf_dp(families.karamata_stirling_profile(t, n)))
                allowed = {math.floor(u) - 1, math.floor(u), math.ceil(u)}
                self.assertTrue(set(summary.modes) <= allowed, f"t={t}, n={n}, u={u}")

    def test_likelihood_maximizers(self):
        family = families.KaramataStirling(1.0)
        self.assertEqual(family.maximizers(2), (2, 3))
        self.assertTrue(families.cross_modality_scan(family, 0, 5).all_pass)
        with self.assertRaises(BudgetExceeded):
            families.KaramataStirling(1.0, n_max=10).maximizers(4)

    def test_stirling_second_kind_is_exposed(self):
        family = families.StirlingSecond(n_max=40)
        self.assertAlmostEqual(family.pmf_at(4).total, 1.0)
        report = families.cross_modality_scan(family, 1, 4)
        self.assertEqual(len(report.entries), 4)


class DirectedSequenceTests(SimpleTestCase):
    def test_legal_chain(self):
        seq = [
            Profile(probs=(0.2,)),
            Profile(probs=(0.5,)),
            Profile(probs=(0.5, 0.3)),
            Profile(lam=0.1, probs=(0.5, 0.3)),
        ]
        self.assertTrue(families.directed_sequence_check(seq))

    def test_illegal_step(self):
        with self.assertRaises(IllegalStep):
            families.directed_sequence_check([Profile(probs=(0.5,)), Profile(probs=(0.3,))])

    def test_poisson_increment_beyond_skewness(self):
        seq = [Profile(probs=(0.5, 0.3)), Profile(lam=0.9, probs=(0.5, 0.3))]
        with self.assertLogs("ebsum.families", level="WARNING"):
            self.assertFalse(families.directed_sequence_check(seq))
