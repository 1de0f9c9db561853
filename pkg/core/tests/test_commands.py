import csv
import json
import math
import os
import tempfile
from io import StringIO

from django.conf import settings
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase


def run(*args):
    out = StringIO()
    call_command("ivlab", *args, stdout=out)
    return out.getvalue()


def run_json(*args):
    return json.loads(run(*args, "--json"))


class ExactCommandTests(SimpleTestCase):
    def test_exact_box(self):
        data = run_json("exact", "box:1,2,3")
        self.assertEqual(data["sequence"], [1.0, 6.0, 11.0, 6.0])
        self.assertEqual(data["wills"], 24.0)
        self.assertEqual(
            set(data),
            {"body", "sequence", "wills", "delta", "variance", "entropy", "estimates", "checks", "extras"},
        )

    def test_human_output(self):
        output = run("exact", "box:1,2,3")
        self.assertIn("[1, 6, 11, 6]", output)
        self.assertIn("W = 24", output)

    def test_stats_cube(self):
        data = run_json("stats", "cube:4")
        self.assertAlmostEqual(data["delta"], 2.0, places=12)
        self.assertAlmostEqual(data["variance"], 1.0, places=12)
        self.assertAlmostEqual(data["wills"], 16.0, places=12)
        self.assertEqual(data["extras"]["ulc_failing"], [])
        self.assertTrue(all(check["pass"] for check in data["checks"]))

    def test_check_schema(self):
        check = run_json("stats", "ball:3,1")["checks"][0]
        self.assertEqual(set(check), {"id", "pass", "lhs", "rhs", "advisory"})

    def test_bounds_ratio_and_csv(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "mgf.csv")
            data = run_json("bounds", "cube:4", "--csv", path, "--grid=-1,0,1")
            self.assertAlmostEqual(data["extras"]["variance_ratio"], 12.0, places=12)
            with open(path, newline="", encoding="utf-8") as handle:
                rows = list(csv.reader(handle))
        self.assertEqual(rows[0], ["theta", "log_mgf", "log_mgf_bound"])
        self.assertEqual(len(rows), 4)

    def test_tails_grid(self):
        data = run_json("tails", "cube:10", "--grid", "3")
        row = data["extras"]["tails"][0]
        self.assertAlmostEqual(row["two_sided_mass"], 2 * 56 / 1024, places=12)
        self.assertTrue(row["in_headline_range"])

    def test_maxent(self):
        data = run_json("maxent", "ball:3,1")
        self.assertGreater(data["extras"]["matched_gap"], 0.0)


class LargeBodyCommandTests(SimpleTestCase):
    def test_stats_on_bodies_with_large_first_volume(self):
        for body in ("box:710", "box:1000", "ball:3,300"):
            data = run_json("stats", body)
            failed = [check["id"] for check in data["checks"] if not check["pass"]]
            self.assertEqual(failed, [], body)

    def test_stats_on_overflowing_box(self):
        data = run_json("stats", "box:1e200,1e200")
        self.assertIsNone(data["wills"])
        self.assertAlmostEqual(data["extras"]["log_wills"], 400 * math.log(10), places=9)
        self.assertAlmostEqual(data["delta"], 2.0, places=12)
        self.assertTrue(all(check["pass"] for check in data["checks"]))

    def test_maxent_when_delta_rounds_to_n(self):
        data = run_json("maxent", "cube:6,1e17")
        self.assertAlmostEqual(data["extras"]["cube_scale"] / 1e17, 1.0, places=6)
        self.assertTrue(all(check["pass"] for check in data["checks"]))
        stats = run_json("stats", "cube:6,1e17")
        self.assertTrue(all(check["pass"] for check in stats["checks"]))


class MonteCarloCommandTests(SimpleTestCase):
    def test_mc_wills(self):
        data = run_json("mc-wills", "box:1,1", "--samples", "100000", "--seed", "7")
        estimate = data["estimates"][0]
        self.assertEqual(estimate["id"], "wills")
        self.assertEqual(estimate["seed"], 7)
        self.assertEqual(estimate["samples"], 100000)
        self.assertLessEqual(abs(estimate["value"] - 4.0), 4 * estimate["se"])

    def test_output_is_identical_across_thread_counts(self):
        args = ("mc-kubota", "box:1,2,3", "-j", "2", "--samples", "20000", "--seed", "3", "--chunk", "4000")
        self.assertEqual(run(*args, "--threads", "1"), run(*args, "--threads", "4"))

    def test_mc_subcommands_run(self):
        for args in (
            ("mc-steiner", "box:1,1", "--lam", "0.5"),
            ("mc-gf", "box:1,1", "--lam", "2"),
            ("mc-beta", "box:1,1", "--lam", "2"),
            ("mc-hmoments", "box:1,2,3"),
            ("mc-mu", "box:1,2,3"),
        ):
            data = run_json(*args, "--samples", "20000", "--seed", "1")
            self.assertTrue(data["estimates"], args)

    def test_capability_error_exit_code(self):
        with self.assertRaises(CommandError) as ctx:
            run("mc-kubota", "product(box:1;ball:2,1)", "--samples", "10")
        self.assertEqual(ctx.exception.returncode, 3)

    def test_parse_error_exit_code(self):
        with self.assertRaises(CommandError) as ctx:
            run("exact", "box:1,,2")
        self.assertEqual(ctx.exception.returncode, 2)

    def test_estimator_input_error_exit_code(self):
        with self.assertRaises(CommandError) as ctx:
            run("mc-kubota", "box:1,1", "-j", "5", "--samples", "10")
        self.assertEqual(ctx.exception.returncode, 2)


class CorpusCommandTests(SimpleTestCase):
    def test_exact_suite_passes(self):
        data = run_json("corpus-verify", "--skip-mc")
        self.assertEqual(data["extras"]["failures"], 0)
        self.assertEqual(data["estimates"], [])
        self.assertGreater(data["extras"]["checks"], 1000)


class SettingsTests(SimpleTestCase):
    def test_no_persistence_or_auth_apps(self):
        self.assertEqual(settings.INSTALLED_APPS, ["rest_framework", "core"])
        self.assertFalse(settings.is_overridden("DEFAULT_AUTO_FIELD"))
        self.assertIsNone(settings.REST_FRAMEWORK["UNAUTHENTICATED_USER"])
