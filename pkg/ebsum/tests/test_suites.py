# ebsum/tests/test_suites.py
import numpy as np
from django.test import SimpleTestCase

from ebsum import suites
from ebsum.ebs_core import pmf_dp


def failures(rows):
    return [row for row in rows if not row.passed]


class PropertySuiteTests(SimpleTestCase):
    def test_ebs_properties_suite(self):
        rows = suites.ebs_properties_suite(seed=2024, cases=500)
        self.assertEqual(len(rows), 500)
        self.assertEqual(failures(rows), [])

    def test_darroch_suite(self):
        rows = suites.darroch_suite(seed=7, cases=10_000)
        self.assertEqual(failures(rows), [])
        self.assertTrue(all(abs(r.mu - r.m_plus) <= 1 and abs(r.mu - r.m_minus) <= 1 for r in rows))

    def test_integer_mean_suite(self):
        self.assertEqual(failures(suites.integer_mean_suite(seed=7, cases=1000)), [])

    def test_finitary_suite(self):
        rows = suites.finitary_suite(seed=7, cases=10_000)
        self.assertEqual(failures(rows), [])

    def test_transport_suite(self):
        self.assertEqual(failures(suites.transport_suite(seed=11, cases=20)), [])

    def test_same_seed_same_rows(self):
        self.assertEqual(suites.darroch_suite(seed=3, cases=50), suites.darroch_suite(seed=3, cases=50))
        self.assertNotEqual(suites.darroch_suite(seed=3, cases=50), suites.darroch_suite(seed=4, cases=50))


class BifurcationSamplerTests(SimpleTestCase):
    def test_samples_are_balanced(self):
        rng = np.random.default_rng(1)
        for k, n in suites.finitary_pairs(5):
            profile = suites.sample_bifurcation_profile(rng, k, n)
            pmf = pmf_dp(profile)
            lo, hi = pmf.at(k - 1), pmf.at(k)
            self.assertLessEqual(abs(lo - hi) / max(lo, hi), 1e-10)

    def test_pairs(self):
        self.assertEqual(suites.finitary_pairs(2), [(1, 1), (1, 2), (2, 2)])
