import io
import json
import subprocess
import sys

import pytest

from hyperlyap.cli import TABLE_HEADER, RunInterrupted, build_parser, cmd_table, main, run
from hyperlyap.records import RunRecord

FAST = ["--steps", "20000", "--burn-in", "100", "--trajectories", "2"]


def invoke(*argv):
    out = io.StringIO()
    code, record = run(list(argv), stdout=out)
    return code, record, out.getvalue()


class TestSimulate:
    def test_case_record(self):
        code, record, text = invoke("simulate", "--case", "4", "--seed", "7", *FAST)
        assert code == 0
        assert json.loads(text)["results"]["estimate"]["lambda"] == list(record.results["estimate"]["lambda"])
        assert record.config["simulation"]["seed"] == 7
        assert record.config["simulation"]["dt"] == 0.1  # defaults materialised
        assert record.results["bounds"]["k2"]["bound"] == "6/5"
        assert record.results["chi_abs"] == "4/5"

    def test_deterministic_modulo_clock(self):
        _, a, _ = invoke("simulate", "--case", "4", "--seed", "7", *FAST)
        _, b, _ = invoke("simulate", "--case", "4", "--seed", "7", *FAST, "--threads", "2")
        assert a.reproducible_part() == b.reproducible_part()

    def test_alpha_beta(self):
        code, record, _ = invoke("simulate", "--alpha", "1/2,1/2", "--beta", "0,0", *FAST)
        assert code == 0
        assert record.results["rank"] == 2

    def test_csv(self):
        code, _, text = invoke("simulate", "--case", "1", "--output", "csv", *FAST)
        assert code == 0
        lines = text.splitlines()
        assert lines[0] == "index,lambda,stderr"
        assert len(lines) == 5

    def test_expanding_exit(self):
        code, _, _ = invoke("simulate", "--alpha", "0,0", "--beta", "0.5,0.5", "--inject-expanding", *FAST)
        assert code == 3

    def test_precision_alarm_exit(self):
        assert invoke("simulate", "--case", "4", "--y-guard", "0.5", *FAST)[0] == 4

    @pytest.mark.parametrize(
        "argv",
        [
            ("simulate", "--case", "15"),
            ("simulate",),
            ("simulate", "--alpha", "1/3", "--beta", "2/3"),
            ("simulate", "--alpha", "x", "--beta", "0"),
            ("simulate", "--case", "4", "--dt", "2"),
            ("simulate", "--case", "4", "--assignment", "0,inf"),
        ],
    )
    def test_invalid_exit(self, argv):
        assert invoke(*argv)[0] == 2

    def test_config_file_then_flags(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"steps": 30000, "burn_in": 100, "trajectories": 2, "seed": 4}))
        _, record, _ = invoke("simulate", "--case", "2", "--config", str(cfg), "--seed", "9")
        sim = record.config["simulation"]
        assert (sim["steps"], sim["seed"]) == (30000, 9)

    def test_checkpoint_resume(self, tmp_path):
        snap = tmp_path / "snap.json"
        _, a, _ = invoke("simulate", "--case", "3", *FAST, "--checkpoint", str(snap))
        _, b, _ = invoke("simulate", "--case", "3", *FAST, "--resume", str(snap))
        assert a.results == b.results

    def test_corrupt_resume_exit(self, tmp_path):
        snap = tmp_path / "snap.json"
        snap.write_text("{not json")
        assert invoke("simulate", "--case", "3", *FAST, "--resume", str(snap))[0] == 5

    def test_record_file(self, tmp_path):
        path = tmp_path / "rec.json"
        _, record, _ = invoke("catalog", "--record", str(path))
        assert RunRecord.from_json(path.read_text()) == RunRecord.from_json(record.to_json())


class TestRecord:
    def test_round_trip(self):
        _, record, _ = invoke("degrees", "--case", "4")
        again = RunRecord.from_json(record.to_json())
        assert again.to_json() == record.to_json()
        assert json.loads(record.to_json())["schema_version"] == 1

    def test_bad_schema(self):
        with pytest.raises(ValueError):
            RunRecord.from_json(json.dumps({"schema_version": 99}))


class TestTable:
    ARGS = ["table", "--steps", "5000", "--burn-in", "100", "--trajectories", "2"]

    def test_header_and_rows(self):
        code, record, text = invoke(*self.ARGS, "--output", "csv")
        assert code == 0
        lines = text.splitlines()
        assert tuple(lines[0].split(",")) == TABLE_HEADER
        assert len(lines) == 15
        row4 = dict(zip(TABLE_HEADER, lines[4].split(",")))
        assert (row4["model"], row4["bound"], row4["chi_abs"], row4["thin_expected"]) == ("P^4[5]", "6/5", "4/5", "True")
        assert lines[8].endswith("False")

    def test_resume_after_interruption(self, tmp_path):
        snap = tmp_path / "table.json"
        args = build_parser().parse_args([*self.ARGS, "--checkpoint", str(snap)])
        with pytest.raises(RunInterrupted):
            cmd_table(args, stop_after_chunks=1)
        assert json.loads(snap.read_text())["current"]["case"] == 1
        _, resumed, _ = invoke(*self.ARGS, "--resume", str(snap))
        _, fresh, _ = invoke(*self.ARGS)
        assert resumed.results == fresh.results

    def test_resume_config_mismatch(self, tmp_path):
        snap = tmp_path / "table.json"
        args = build_parser().parse_args([*self.ARGS, "--checkpoint", str(snap)])
        with pytest.raises(RunInterrupted):
            cmd_table(args, stop_after_chunks=1)
        assert invoke("table", "--steps", "6000", "--burn-in", "100", "--trajectories", "2", "--resume", str(snap))[0] == 5


class TestExact:
    def test_degrees_quintic(self):
        _, record, _ = invoke("degrees", "--mu1", "1/5", "--mu2", "2/5")
        r = record.results
        assert r["hodge_degrees"] == {"E30": "1/5", "E21": "2/5", "E12": "-2/5", "E03": "-1/5"}
        assert r["main_bound"]["k2"] == "6/5"
        assert r["cokernel_rederivation_agrees"] is True
        assert r["cokernel_lengths"]["1"] == [1, 0, 1]

    def test_degrees_half(self):
        _, record, _ = invoke("degrees", "--case", "7")
        assert record.results["main_bound"]["k2"] == "2"

    def test_degrees_invalid(self):
        assert invoke("degrees", "--mu1", "0", "--mu2", "1/2")[0] == 2
        assert invoke("degrees")[0] == 2

    def test_strata(self):
        code, record, text = invoke("strata", "--genus", "2", "--lyapunov", "1,0.3333333333", "--stderr", "0,0")
        assert code == 0
        assert record.results["hn_polygon"] == [[0, "0"], [1, "1"], [2, "4/3"]]
        assert record.results["dominates"] is True
        trend = [t for t in record.results["trend"] if t["k"] == 1]
        assert all(t["lambda_k_bound"] == "1" for t in trend)

    def test_strata_violation(self):
        _, record, _ = invoke("strata", "--genus", "2", "--lyapunov", "1,0.2")
        assert record.results["dominates"] is False

    def test_polygon_not_concave(self):
        assert invoke("polygon", "--pieces", "1:1/3,1:1")[0] == 2

    def test_polygon(self):
        code, _, text = invoke("polygon", "--pieces", "1:1,1:1/3", "--output", "csv")
        assert code == 0
        assert text.splitlines() == ["rank,height", "0,0", "1,1", "2,4/3"]

    def test_wronskian_small(self):
        code, record, _ = invoke("wronskian", "--N", "40", "--n0", "10", "--self-test")
        assert code == 0
        assert record.results["tW_constant_term"] == "1"
        assert record.results["verdict"].startswith("sqrt-growth consistent: ")
        assert record.results["self_test"]["flagged_exponential"] is True

    @pytest.mark.parametrize("argv", [("--N", "1"), ("--N", "10", "--n0", "10")])
    def test_wronskian_usage(self, argv):
        assert invoke("wronskian", *argv)[0] == 2

    def test_catalog_csv(self):
        _, _, text = invoke("catalog", "--output", "csv")
        assert text.splitlines()[0] == "id,label,C,d,mu1,mu2"


def test_main_returns_code():
    assert main(["degrees", "--mu1", "1/2", "--mu2", "1/3"]) == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "hyperlyap", "catalog", "--output", "csv"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert len(proc.stdout.splitlines()) == 15
