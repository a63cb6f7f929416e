# mmopt/tests/test_cli.py

import os
import tempfile
import unittest
from contextlib import redirect_stderr, redirect_stdout
from io import StringIO

from mmopt.cli import EXIT_OK, EXIT_VALIDATION, main
from mmopt.core.mechanism import Menu, read_menu, write_menu


def run(*argv):
    """Run the CLI and return (exit code, stdout, stderr)."""
    out, err = StringIO(), StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        code = main(list(argv))
    return code, out.getvalue(), err.getvalue()


class CliTestCase(unittest.TestCase):
    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = self._tmp.name

    def tearDown(self):
        self._tmp.cleanup()

    def path(self, name):
        return os.path.join(self.tmp, name)


class TestClosedFormCommand(CliTestCase):
    """closed-form prints or writes menus of the known families."""

    def test_symmetric_to_stdout(self):
        code, out, _ = run("closed-form", "symmetric2d", "--lambda", "1")
        self.assertEqual(code, EXIT_OK)
        self.assertIn("profit: 0.274601", out)
        self.assertIn("# a_1 a_2 price", out)

    def test_bid_ask_to_file(self):
        target = self.path("bidask.menu")
        code, out, _ = run("closed-form", "bidask1d", "--c", "0.5", "--lambda", "1", "--out", target)
        self.assertEqual(code, EXIT_OK)
        self.assertIn("profit: 0.125000", out)
        self.assertEqual(len(read_menu(target)), 3)

    def test_offcenter_to_file(self):
        target = self.path("offcenter.menu")
        code, out, _ = run("closed-form", "offcenter", "--out", target)
        self.assertEqual(code, EXIT_OK)
        self.assertIn("quadrature", out)
        self.assertEqual(len(read_menu(target)), 7)

    def test_config_file_and_flag_precedence(self):
        cfg = self.path("run.cfg")
        with open(cfg, "w", encoding="utf-8") as fh:
            fh.write("lambda=0.5\n")
        _, out, _ = run("--config", cfg, "closed-form", "symmetric2d")
        self.assertIn("profit: 0.092856", out)
        _, out, _ = run("--config", cfg, "closed-form", "symmetric2d", "--lambda", "1")
        self.assertIn("profit: 0.274601", out)

    def test_unknown_family_is_a_usage_error(self):
        with redirect_stderr(StringIO()):
            with self.assertRaises(SystemExit) as ctx:
                main(["closed-form", "triangle"])
        self.assertEqual(ctx.exception.code, 2)

    def test_offcenter_rejects_other_lambda(self):
        code, _, err = run("closed-form", "offcenter", "--lambda", "0.5")
        self.assertEqual(code, EXIT_VALIDATION)
        self.assertIn("error:", err)


class TestEvalCommand(CliTestCase):
    """eval estimates profit and reports feasibility."""

    def test_no_trade_menu(self):
        target = self.path("empty.menu")
        write_menu(target, Menu.no_trade_only(2))
        code, out, _ = run("eval", target, "--n", "20000")
        self.assertEqual(code, EXIT_OK)
        self.assertIn("profit: 0.000000 +- 0.000000", out)
        self.assertIn("separate pricing baseline: 0.250000", out)
        self.assertIn("feasibility: ok", out)

    def test_missing_menu_file(self):
        code, _, err = run("eval", self.path("missing.menu"))
        self.assertEqual(code, EXIT_VALIDATION)
        self.assertIn("error:", err)

    def test_malformed_menu_file(self):
        target = self.path("bad.menu")
        with open(target, "w", encoding="utf-8") as fh:
            fh.write("1 0.5\n")
        code, _, _ = run("eval", target)
        self.assertEqual(code, EXIT_VALIDATION)


class TestHeatmapCommand(CliTestCase):
    """heatmap exports the allocation and payment rule as CSV."""

    def setUp(self):
        super().setUp()
        self.menu = self.path("table.menu")
        run("closed-form", "symmetric2d", "--lambda", "1", "--out", self.menu)

    def test_small_grid(self):
        code, out, _ = run("heatmap", self.menu, "--grid", "3")
        self.assertEqual(code, EXIT_OK)
        lines = out.strip().splitlines()
        self.assertEqual(lines[0], "x1,x2,item,alloc1,alloc2,payment,utility")
        self.assertEqual(len(lines), 10)
        center = lines[1 + 4].split(",")
        self.assertEqual(center[:3], ["0.5", "0.5", "0"])

    def test_fine_grid_cell(self):
        target = self.path("grid.csv")
        code, out, _ = run("heatmap", self.menu, "--grid", "101", "--out", target)
        self.assertEqual(code, EXIT_OK)
        self.assertIn("wrote 10201 rows", out)
        with open(target, encoding="utf-8") as fh:
            rows = fh.read().splitlines()
        fields = rows[1 + 90 * 101 + 50].split(",")
        self.assertEqual(fields[0], "0.9")
        self.assertEqual(fields[1], "0.5")
        self.assertEqual(fields[3:6], ["1", "0", "0.833333333"])

    def test_output_is_byte_identical(self):
        _, first, _ = run("heatmap", self.menu, "--grid", "11")
        _, second, _ = run("heatmap", self.menu, "--grid", "11")
        self.assertEqual(first, second)

    def test_bad_slice(self):
        code, _, _ = run("heatmap", self.menu, "--slice", "oops")
        self.assertEqual(code, EXIT_VALIDATION)


class TestOtherCommands(CliTestCase):
    """measure, compare, certify and train."""

    def test_measure(self):
        code, out, _ = run("measure", "--d", "2", "--lambda", "1")
        self.assertEqual(code, EXIT_OK)
        self.assertIn("interior", out)
        self.assertIn("-3.000000000", out)
        self.assertIn("x1=1", out)

    def test_compare(self):
        code, out, _ = run("compare", "--lambdas", "1")
        self.assertEqual(code, EXIT_OK)
        self.assertIn("9.840%", out)
        self.assertIn("peak relative gap 11.4", out)

    def test_certify_family(self):
        code, out, _ = run("certify", "--family", "symmetric2d", "--lambda", "1", "--n", "100000")
        self.assertEqual(code, EXIT_OK)
        self.assertIn("verdict: certified", out)

    def test_certify_menu_file(self):
        target = self.path("empty.menu")
        write_menu(target, Menu.no_trade_only(2))
        code, out, _ = run("certify", target, "--n", "10000")
        self.assertEqual(code, EXIT_OK)
        self.assertIn("verdict: weak duality holds", out)

    def test_certify_needs_exactly_one_source(self):
        code, _, _ = run("certify")
        self.assertEqual(code, EXIT_VALIDATION)

    def test_certify_offcenter_has_no_certificate(self):
        code, _, err = run("certify", "--family", "offcenter")
        self.assertEqual(code, EXIT_VALIDATION)
        self.assertIn("no transport certificate is known for offcenter", err)

    def test_train_writes_outputs(self):
        prefix = self.path("tiny")
        code, out, _ = run(
            "--threads", "1", "train", "--d", "1", "--menu-size", "8", "--batch", "256",
            "--steps", "20", "--log-every", "10", "--n", "1000", "--out", prefix,
        )
        self.assertEqual(code, EXIT_OK)
        for suffix in (".checkpoint", ".checkpoint.params", ".menu", ".log.csv"):
            self.assertTrue(os.path.exists(prefix + suffix), suffix)
        with open(prefix + ".log.csv", encoding="utf-8") as fh:
            self.assertEqual(len(fh.read().splitlines()), 3)
        self.assertIn("extracted menu", out)

    def test_train_unwritable_log(self):
        prefix = self.path("blocked")
        os.mkdir(prefix + ".log.csv")
        code, _, err = run(
            "--threads", "1", "train", "--d", "1", "--menu-size", "4", "--batch", "64",
            "--steps", "2", "--log-every", "1", "--n", "100", "--out", prefix,
        )
        self.assertEqual(code, EXIT_VALIDATION)
        self.assertIn("error: cannot write", err)

    def test_version(self):
        with redirect_stdout(StringIO()):
            with self.assertRaises(SystemExit) as ctx:
                main(["--version"])
        self.assertEqual(ctx.exception.code, 0)


if __name__ == "__main__":
    unittest.main()
