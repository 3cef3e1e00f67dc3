"""CLI surface: record schema, formats, determinism, exit codes."""

import contextlib
import io
import json
import subprocess
import sys

from rangechain.cli import main


def run_cli(argv):
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        try:
            code = main(argv)
        except SystemExit as e:  # argparse usage errors
            code = e.code
    return code, out.getvalue(), err.getvalue()


class TestExactCommand:
    def test_n2_rational_pmf(self):
        code, out, _ = run_cli(["exact", "--n", "2"])
        assert code == 0
        rec = json.loads(out)
        assert rec["schema_version"] == "1"
        assert rec["command"] == "exact"
        assert rec["config"]["n"] == 2
        assert rec["payload"]["mode"] == "exact"
        pmf = rec["payload"]["pmf"]
        assert pmf[0] == [1, "1/2"]
        assert pmf[1] == [2, "1/4"]
        assert rec["payload"]["expected_visited_count"] == "1/2"

    def test_n1_single_row(self):
        code, out, _ = run_cli(["exact", "--n", "1"])
        rec = json.loads(out)
        assert code == 0
        assert rec["payload"]["pmf"] == [[1, "1/1"]]

    def test_n3_json_serializes_ninth(self):
        code, out, _ = run_cli(["exact", "--n", "3", "--format", "json"])
        rec = json.loads(out)
        assert rec["payload"]["pmf"][0] == [1, "1/9"]

    def test_csv_format(self):
        code, out, _ = run_cli(["exact", "--n", "2", "--format", "csv"])
        assert code == 0
        lines = out.splitlines()
        assert "# schema_version=1" in lines
        assert "# command=exact" in lines
        assert "t,probability" in lines
        assert "1,1/2" in lines

    def test_ceiling_exit_code(self):
        code, out, err = run_cli(["exact", "--n", "401"])
        assert code == 3
        assert json.loads(err)["error"]["exit_code"] == 3
        assert out == ""


class TestSimulateCommand:
    def test_byte_identical_reruns(self):
        argv = ["simulate", "--n", "2", "--samples", "2000", "--seed", "42"]
        a = run_cli(argv)
        b = run_cli(argv)
        assert a == b and a[0] == 0

    def test_byte_identical_across_worker_counts(self):
        outs = set()
        for w in ("1", "4", "8"):
            code, out, _ = run_cli(
                ["simulate", "--n", "50", "--samples", "500", "--seed", "9",
                 "--workers", w]
            )
            assert code == 0
            outs.add(out)
        assert len(outs) == 1

    def test_record_embeds_config(self):
        code, out, _ = run_cli(
            ["simulate", "--n", "30", "--samples", "100", "--seed", "4",
             "--sampler", "direct", "--xi", "3"]
        )
        rec = json.loads(out)
        assert rec["config"] == {
            "n": 30, "samples": 100, "seed": 4, "sampler": "direct",
            "xi": 3, "xi_source": "override",
        }
        assert rec["payload"]["samples"] == 100
        assert len(rec["payload"]["t_over_n"]) == 100

    def test_emit_samples(self, tmp_path):
        path = tmp_path / "samples.txt"
        code, out, _ = run_cli(
            ["simulate", "--n", "10", "--samples", "250", "--seed", "1",
             "--emit-samples", str(path)]
        )
        assert code == 0
        lines = path.read_text().splitlines()
        assert len(lines) == 250
        vals = [float(v) for v in lines]
        assert vals == sorted(vals)
        rec = json.loads(out)
        assert vals == rec["payload"]["t_over_n"]

    def test_direct_ceiling_exit_3(self):
        code, _, err = run_cli(
            ["simulate", "--n", "100001", "--samples", "10", "--seed", "1",
             "--sampler", "direct"]
        )
        assert code == 3
        assert "ceiling" in json.loads(err)["error"]["message"]

    def test_bad_config_exit_2(self):
        code, _, err = run_cli(["simulate", "--n", "5", "--samples", "10",
                                "--seed", "1", "--xi", "9"])
        assert code == 2

    def test_usage_error_exit_2(self):
        code, _, _ = run_cli(["simulate", "--samples", "10"])
        assert code == 2

    def test_csv_scalars(self):
        code, out, _ = run_cli(
            ["simulate", "--n", "2", "--samples", "100", "--seed", "6",
             "--format", "csv"]
        )
        assert code == 0
        assert "t_over_n_mean," in out
        assert "visit_frequency_2," in out


class TestLimitCommand:
    def test_cdf_point(self):
        code, out, _ = run_cli(["limit", "--what", "cdf", "--x", "1.0"])
        rec = json.loads(out)
        x, value, bound = rec["payload"]["rows"][0]
        assert abs(value - 0.128350997377626) < 1e-9
        assert bound <= 1e-12

    def test_charfn_at_zero(self):
        code, out, _ = run_cli(["limit", "--what", "charfn", "--t", "0"])
        rec = json.loads(out)
        t, re, im = rec["payload"]["rows"][0]
        assert (re, im) == (1.0, 0.0)

    def test_density_below_x_min_refused(self):
        code, _, err = run_cli(["limit", "--what", "density", "--x", "0.0001"])
        assert code == 2
        assert "x_min" in json.loads(err)["error"]["message"]

    def test_grid(self):
        code, out, _ = run_cli(
            ["limit", "--what", "density", "--grid", "0.5:2.5:5", "--format", "csv"]
        )
        assert code == 0
        lines = [l for l in out.splitlines() if not l.startswith("#")]
        assert lines[0] == "x,value,error_bound"
        assert len(lines) == 6

    def test_missing_point_flag(self):
        code, _, _ = run_cli(["limit", "--what", "cdf"])
        assert code == 2


class TestCompareCommand:
    def test_small_n_fails_verdict(self):
        code, out, _ = run_cli(
            ["compare", "--n", "2", "--samples", "2000", "--seed", "1"]
        )
        assert code == 1
        rec = json.loads(out)
        ks = next(v for v in rec["payload"]["verdicts"] if v["name"] == "ks")
        assert not ks["passed"]

    def test_acceptance_scale_passes(self):
        code, out, _ = run_cli(
            ["compare", "--n", "2000", "--samples", "5000", "--seed", "7",
             "--alpha", "0.01"]
        )
        assert code == 0
        rec = json.loads(out)
        assert rec["payload"]["ks_statistic"] < 0.05

    def test_check_en_only(self):
        code, out, _ = run_cli(
            ["compare", "--n", "2000", "--samples", "1000", "--seed", "3",
             "--check", "en"]
        )
        rec = json.loads(out)
        en = next(v for v in rec["payload"]["verdicts"] if v["name"] == "en")
        assert code == (0 if en["passed"] else 1)
        assert 0.85 <= rec["payload"]["en_ratio"] <= 1.15
        assert code == 0


class TestRecordShape:
    def test_json_roundtrip(self):
        _, out, _ = run_cli(["simulate", "--n", "8", "--samples", "50", "--seed", "2"])
        rec = json.loads(out)
        assert json.loads(json.dumps(rec)) == rec
        assert set(rec) == {"schema_version", "command", "config", "payload"}

    def test_console_entry_point(self):
        proc = subprocess.run(
            [sys.executable, "-m", "rangechain", "limit", "--what", "charfn",
             "--t", "1.0"],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0
        rec = json.loads(proc.stdout)
        assert rec["command"] == "limit"
