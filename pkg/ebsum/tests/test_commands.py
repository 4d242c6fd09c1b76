# ebsum/tests/test_commands.py
import json
import tempfile
from io import StringIO
from pathlib import Path

import pandas as pd
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from ebsum.darroch import finitary_bounds

THREE_BERNOULLI = json.dumps({"lambda": 0, "probs": [0.9, 0.6, 0.3]})


def run(*args):
    out = StringIO()
    call_command("ebsum", *args, stdout=out)
    return out.getvalue()


def run_csv(*args):
    return pd.read_csv(StringIO(run(*args)))


def run_json(*args):
    return json.loads(run(*args, "--format", "json"))


class CommandTestCase(SimpleTestCase):
    def assertExitCode(self, code, *args):
        with self.assertRaises(CommandError) as ctx:
            run(*args)
        self.assertEqual(ctx.exception.returncode, code)
        return ctx.exception


class PmfCommandTests(CommandTestCase):
    def test_csv_rows(self):
        frame = run_csv("pmf", "--profile", THREE_BERNOULLI)
        self.assertEqual(list(frame.columns), ["k", "mass", "trunc_err"])
        self.assertEqual(list(frame["k"]), [0, 1, 2, 3])
        self.assertAlmostEqual(frame["mass"].sum(), 1.0, places=12)
        self.assertAlmostEqual(frame["mass"][2], 0.504, places=12)

    def test_symmetric_engine_agrees(self):
        dp = run_csv("pmf", "--profile", THREE_BERNOULLI)
        sym = run_csv("pmf", "--profile", THREE_BERNOULLI, "--engine", "symmetric")
        for a, b in zip(dp["mass"], sym["mass"]):
            self.assertAlmostEqual(a, b, places=12)

    def test_json_document(self):
        document = run_json("pmf", "--profile", "poisson:2")
        self.assertEqual(document["profile"]["lambda"], 2.0)
        self.assertEqual(document["shift"], 0)
        self.assertLess(document["trunc_err"], 1e-12)
        self.assertAlmostEqual(sum(document["mass"]), 1.0, places=10)

    def test_tail_mass_is_labelled(self):
        document = run_json("pmf", "--profile", "cosh:1:50")
        self.assertGreater(document["profile"]["tail_mass"], 0)
        self.assertEqual(document["profile"]["tail_kind"], "total-variation")
        self.assertEqual(run_json("mode", "--profile", "poisson:2")["profile"]["tail_kind"], "omitted-mass")

    def test_malformed_profile(self):
        self.assertExitCode(2, "pmf", "--profile", "{bad")
        self.assertExitCode(2, "pmf", "--profile", json.dumps({"probs": [1.5]}))
        self.assertExitCode(2, "pmf", "--profile", "@/nonexistent/profile.json")

    def test_profile_file_and_out_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            source = Path(tmp) / "profile.json"
            source.write_text(THREE_BERNOULLI)
            target = Path(tmp) / "pmf.csv"
            printed = run("pmf", "--profile", f"@{source}", "--out", str(target))
            self.assertEqual(printed, "")
            self.assertEqual(target.read_text(), run("pmf", "--profile", THREE_BERNOULLI))


class ModeCommandTests(CommandTestCase):
    def test_summary(self):
        document = run_json("mode", "--profile", THREE_BERNOULLI)
        self.assertAlmostEqual(document["mean"], 1.8)
        self.assertEqual(document["mode"]["modes"], [2])
        self.assertFalse(document["mode"]["twin"])
        self.assertAlmostEqual(document["crossing_height"], 0.204444 / 0.54, places=5)
        self.assertEqual(document["median"], {"lo": 2, "hi": 2})

    def test_twin_has_no_crossing(self):
        frame = run_csv("mode", "--profile", json.dumps({"probs": [0.5]}))
        self.assertTrue(frame["twin"][0])
        self.assertTrue(pd.isna(frame["crossing"][0]))


class RidgeCommandTests(CommandTestCase):
    def test_binomial_ridge(self):
        frame = run_csv("ridge", "--family", "binomial-n", "--p", "1/3", "--nmax", "12")
        self.assertEqual(len(frame), 13)
        row = frame[frame["parameter"] == 8].iloc[0]
        self.assertEqual((row["m_minus"], row["m_plus"]), (2, 3))
        row = frame[frame["parameter"] == 7].iloc[0]
        self.assertEqual((row["m_minus"], row["m_plus"]), (2, 2))

    def test_cosh_ridge_on_a_grid(self):
        frame = run_csv("ridge", "--family", "psd-cosh", "--tgrid", "0:20:0.5")
        self.assertEqual(len(frame), 41)
        self.assertTrue(frame["m_plus"].is_monotonic_increasing)

    def test_unsupported_families(self):
        self.assertExitCode(4, "ridge", "--family", "stirling-second")
        self.assertExitCode(4, "ridge", "--family", "binomial-p", "--n", "5")

    def test_missing_parameters(self):
        self.assertExitCode(2, "ridge", "--family", "poisson")
        self.assertExitCode(2, "ridge", "--family", "binomial-n")
        self.assertExitCode(2, "ridge", "--family", "poisson", "--tgrid", "3:1:0.5")


class ScanCommandTests(CommandTestCase):
    def test_polynomial_family_reaches_infinity(self):
        document = run_json("scan", "--family", "psd-binomial", "--n", "4", "--kmax", "4")
        self.assertEqual(document["family"]["params"], {"n": 4})
        self.assertEqual(document["entries"][-1]["ell_hi"], "inf")
        self.assertTrue(document["all_pass"])

    def test_binomial_scan(self):
        frame = run_csv("scan", "--family", "binomial-n", "--p", "2/5", "--kmax", "10")
        self.assertEqual(list(frame["k"]), list(range(11)))
        self.assertTrue(frame["pass"].all())


class CheckCommandTests(CommandTestCase):
    def test_randomized_suites_need_a_seed(self):
        for suite in ("darroch", "integer-mean", "finitary", "transport", "lemma1"):
            self.assertExitCode(2, "check", suite)

    def test_darroch_suite(self):
        frame = run_csv("check", "darroch", "--seed", "7", "--cases", "200")
        self.assertEqual(len(frame), 200)
        self.assertTrue(frame["pass"].all())
        self.assertEqual(list(frame.columns)[-1], "pass")

    def test_same_seed_same_output(self):
        first = run("check", "lemma1", "--seed", "5", "--cases", "20")
        self.assertEqual(first, run("check", "lemma1", "--seed", "5", "--cases", "20"))

    def test_crossmodal_families(self):
        run("check", "crossmodal", "--family", "binomial-n", "--p", "1/3", "--kmax", "20")
        run("check", "crossmodal", "--family", "psd-cosh", "--kmax", "10")
        run("check", "crossmodal", "--family", "poisson", "--kmax", "10")

    def test_crossmodal_rejects_second_kind(self):
        self.assertExitCode(4, "check", "crossmodal", "--family", "stirling-second")

    def test_transport_profile(self):
        report = run_json("check", "transport", "--profile", "binomial:12:0.385")
        self.assertEqual(report["mode"], 5)
        self.assertLess(report["A"], 0)
        self.assertLess(report["two_bernoulli_cost"], report["gamma_star"])
        self.assertEqual(report["two_point_s"], 2)
        self.assertTrue(report["pass"])


class TransportCommandTests(CommandTestCase):
    def test_poisson_rate(self):
        frame = run_csv("transport", "--t", "1.6")
        self.assertEqual(list(frame["kind"]), ["two-point", "one-bernoulli", "poisson"])
        self.assertAlmostEqual(frame["cost"][1], 0.64 / 1.84, places=12)
        self.assertAlmostEqual(frame["rate"][2], 0.4)

    def test_profile_plans(self):
        plans = run_json("transport", "--profile", "binomial:12:0.385")
        self.assertEqual([p["kind"] for p in plans], ["two-point", "one-bernoulli", "two-bernoulli"])
        self.assertEqual(len(plans[2]["alphas"]), 2)

    def test_needs_a_source(self):
        self.assertExitCode(2, "transport")


class BoundsCommandTests(CommandTestCase):
    def test_closed_forms(self):
        frame = run_csv("bounds", "--nmax", "3")
        self.assertEqual(len(frame), 6)
        for row in frame.itertuples():
            bounds = finitary_bounds(row.k, row.n)
            self.assertAlmostEqual(row.min_mu, bounds.min_mu, places=14)
            self.assertAlmostEqual(row.max_mu, bounds.max_mu, places=14)

    def test_random_search(self):
        frame = run_csv("bounds", "--nmax", "3", "--seed", "5", "--cases", "60")
        self.assertEqual(frame["samples"].sum(), 60)
        self.assertTrue(frame["pass"].all())
        self.assertTrue((frame["observed_min"] >= frame["min_mu"] - 1e-9).all())
        self.assertTrue((frame["observed_max"] <= frame["max_mu"] + 1e-9).all())

    def test_cases_without_seed(self):
        self.assertExitCode(2, "bounds", "--cases", "10")
