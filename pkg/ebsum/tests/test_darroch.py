# ebsum/tests/test_darroch.py
from fractions import Fraction

from django.test import SimpleTestCase

from ebsum import darroch
from ebsum.darroch import Classification
from ebsum.ebs_core import Profile, mean, pmf_dp
from ebsum.exceptions import BudgetExceeded, InvalidArgument


class DarrochCheckTests(SimpleTestCase):
    def test_fractional_mean(self):
        verdict = darroch.darroch_check(Profile(probs=(0.9, 0.6, 0.3)))
        self.assertTrue(verdict.passed)
        self.assertEqual(verdict.classification, Classification.DEFINITE_SINGLE)
        self.assertEqual((verdict.m_minus, verdict.m_plus), (2, 2))
        self.assertAlmostEqual(verdict.mu, 1.8)

    def test_integer_mean_forces_the_mode(self):
        verdict = darroch.darroch_check(Profile(probs=(0.5, 0.5)))
        self.assertEqual(verdict.classification, Classification.INTEGER_MEAN_SINGLE)
        self.assertTrue(verdict.passed)
        self.assertEqual(verdict.m_plus, 1)

    def test_shifted_poisson_exception(self):
        for profile in (Profile(lam=3.0), Profile(lam=2.0, probs=(1.0, 0.0))):
            self.assertTrue(darroch.is_shifted_poisson(profile))
            verdict = darroch.darroch_check(profile)
            self.assertEqual(verdict.classification, Classification.SHIFTED_POISSON)
            self.assertTrue(verdict.passed)
            self.assertEqual(verdict.m_plus - verdict.m_minus, 1)
        self.assertFalse(darroch.is_shifted_poisson(Profile(lam=2.5)))
        self.assertFalse(darroch.is_shifted_poisson(Profile(lam=2.0, probs=(0.5,))))

    def test_twin_within_the_band(self):
        verdict = darroch.darroch_check(Profile(probs=(0.5,)))
        self.assertTrue(verdict.passed)
        self.assertEqual(verdict.classification, Classification.TWIN_LOWER)

    def test_uncertified_tail_is_refused(self):
        with self.assertRaises(BudgetExceeded):
            darroch.darroch_check(Profile(probs=(0.5,), tail_mass=1e-6))

    def test_integer_mean_helper(self):
        self.assertEqual(darroch.integer_mean(3.0 + 1e-14), 3)
        self.assertIsNone(darroch.integer_mean(3.1))


class RegionTableTests(SimpleTestCase):
    def test_definite_regions(self):
        low = darroch.region_classify(Profile(probs=(0.6, 0.6)))  # mu = 1.2 < 1 + 1/3
        self.assertEqual(low.classification, Classification.DEFINITE_SINGLE)
        self.assertTrue(low.passed)
        self.assertEqual(low.m_plus, 1)

    def test_zero_probabilities_do_not_widen_the_band(self):
        # mu = 1.6 clears 2 - 1/2 for two live terms; four terms would leave it ambiguous
        verdict = darroch.region_classify(Profile(probs=(0.8, 0.8, 0.0, 0.0)))
        self.assertEqual(verdict.classification, Classification.DEFINITE_SINGLE)
        self.assertEqual(verdict.m_plus, 2)
        self.assertTrue(verdict.passed)

    def test_boundary_is_logged(self):
        bounds = darroch.finitary_bounds(2, 4)
        with self.assertLogs("ebsum.darroch", level="WARNING"):
            verdict = darroch.region_classify(bounds.argmin)
        self.assertEqual(verdict.classification, Classification.TWIN_UPPER)
        self.assertTrue(verdict.passed)

    def test_requires_pure_bernoulli_sums(self):
        with self.assertRaises(InvalidArgument):
            darroch.region_classify(Profile(lam=1.0, probs=(0.5,)))
        with self.assertRaises(InvalidArgument):
            darroch.region_classify(Profile(probs=(0.5,), tail_mass=1e-12))


class FinitaryBoundTests(SimpleTestCase):
    def test_closed_forms(self):
        bounds = darroch.finitary_bounds(2, 4)
        self.assertAlmostEqual(bounds.min_mu, 1 + 1 / 3)
        self.assertAlmostEqual(bounds.max_mu, 2 - 1 / 4)
        self.assertAlmostEqual(mean(bounds.argmin), bounds.min_mu)
        self.assertAlmostEqual(mean(bounds.argmax), bounds.max_mu)

    def test_extremal_profiles_are_balanced(self):
        for n in range(1, 7):
            for k in range(1, n + 1):
                bounds = darroch.finitary_bounds(k, n)
                for extremal in (bounds.argmin, bounds.argmax):
                    pmf = pmf_dp(extremal)
                    lo, hi = pmf.at(k - 1), pmf.at(k)
                    self.assertLessEqual(abs(lo - hi) / max(lo, hi), 1e-10, f"k={k}, n={n}")

    def test_rejects_out_of_range(self):
        with self.assertRaises(InvalidArgument):
            darroch.finitary_bounds(0, 3)
        with self.assertRaises(InvalidArgument):
            darroch.finitary_bounds(4, 3)

    def test_extremal_simplex(self):
        vertices = darroch.me_extremal_simplex(2, 4)
        self.assertEqual(len(vertices), 5)
        self.assertIn(Profile(probs=(1.0, 1.0, 0.0, 0.0)), vertices)
        self.assertIn(Profile(probs=(1.0, 1 / 3, 1 / 3, 1 / 3)), vertices)
        for vertex in vertices:
            verdict = darroch.darroch_check(vertex)
            self.assertTrue(verdict.passed)
            self.assertEqual(verdict.m_plus, 2)
        self.assertEqual(float(Fraction(2, 3)), vertices[1].probs[0])
