"""Command-line interface: exit codes, schemas, config round-trip."""

import csv
import io
import json

import pytest

from cmextrap import cli


def run_cli(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def parse_csv(text):
    return list(csv.DictReader(io.StringIO(text)))


class TestDemoLeft:
    def test_schema(self, capsys):
        code, out, _ = run_cli(["demo-left", "--eps", "0.01", "--K", "50", "5000"], capsys)
        assert code == 0
        rows = parse_csv(out)
        assert [c for c in rows[0]] == ["K", "l2_discrepancy", "gap_at_c", "c"]
        assert float(rows[1]["gap_at_c"]) == pytest.approx(1.0)

    def test_json_format(self, capsys):
        code, out, _ = run_cli(["demo-left", "--format", "json"], capsys)
        assert code == 0
        assert isinstance(json.loads(out), list)


class TestPowerlaw:
    def test_runs_and_reports_slope(self, capsys):
        code, out, err = run_cli(
            ["powerlaw", "--x0", "2", "--eps-decades", "1e-8:1e-4",
             "--points-per-decade", "1"],
            capsys,
        )
        assert code == 0
        rows = parse_csv(out)
        assert list(rows[0]) == [
            "eps", "veps", "delta_star", "asymptotic_value", "ratio", "local_slope",
        ]
        assert "fitted slope" in err
        slope = float(err.split("fitted slope =")[1].split()[0])
        assert abs(slope - 1.0 / 3.0) <= 0.01

    def test_malformed_range_exits_one(self, capsys):
        code, _, err = run_cli(["powerlaw", "--eps-decades", "banana"], capsys)
        assert code == 1
        assert "eps range" in err

    def test_unknown_flag_exits_one(self, capsys):
        with pytest.raises(SystemExit) as exc:
            run_cli(["powerlaw", "--frobnicate"], capsys)
        assert exc.value.code == 1


class TestLocal:
    def test_slopes_mode(self, capsys):
        code, out, _ = run_cli(["local", "--f0", "exp", "--x0", "1", "--slopes"], capsys)
        assert code == 0
        report = json.loads(out)
        assert report["E_plus"] == pytest.approx(2.67788263, abs=1e-4)

    def test_single_offset_report(self, capsys, tmp_path):
        trace = tmp_path / "trace.csv"
        code, out, _ = run_cli(
            ["local", "--f0", "exp", "--x0", "2", "--delta", "0.01", "--out", str(trace)],
            capsys,
        )
        assert code == 0
        report = json.loads(out)
        assert report["converged"] is True
        assert len(report["atoms"]) == 2
        rows = parse_csv(trace.read_text())
        assert list(rows[0]) == ["branch", "t", "moment_gap", "certificate"]
        assert min(float(r["certificate"]) for r in rows) >= -1e-8

    def test_envelope_mode(self, capsys):
        code, out, _ = run_cli(["local", "--f0", "exp", "--x0", "2", "--eps", "0.01"], capsys)
        assert code == 0
        report = json.loads(out)
        assert report["envelope_lower"] < 0.13533528 < report["envelope_upper"]

    def test_atom_list_f0(self, capsys):
        code, out, _ = run_cli(
            ["local", "--f0", "[[0.5, 0.6], [3.0, 0.4]]", "--x0", "1.5", "--delta", "0.01"],
            capsys,
        )
        assert code == 0
        assert json.loads(out)["converged"] is True

    def test_bad_f0_exits_one(self, capsys):
        code, _, err = run_cli(["local", "--f0", "nope", "--delta", "0.01"], capsys)
        assert code == 1
        assert "--f0" in err


class TestEig:
    def test_table(self, capsys):
        code, out, _ = run_cli(["eig", "--point", "2.0", "--mu-max", "3", "--mu-step", "1"], capsys)
        assert code == 0
        rows = parse_csv(out)
        assert rows[0]["method"] == "series"
        assert float(rows[0]["value"]) == pytest.approx(0.536591, rel=1e-5)


class TestOracleCompare:
    def test_schema_and_gaps(self, capsys):
        code, out, _ = run_cli(["oracle-compare", "--x0", "2", "--veps", "1e-2", "1e-3"], capsys)
        assert code == 0
        rows = parse_csv(out)
        assert list(rows[0]) == ["method", "parameter", "value", "reference", "relative_gap"]
        assert all(float(r["relative_gap"]) <= 1e-4 for r in rows)


class TestVerify:
    def test_single_check(self, capsys):
        code, out, _ = run_cli(["verify", "--only", "left-unbounded"], capsys)
        assert code == 0
        assert "PASS" in out

    def test_json_report(self, capsys):
        code, out, _ = run_cli(["verify", "--only", "left-unbounded", "--json"], capsys)
        assert code == 0
        payload = json.loads(out)
        assert payload[0]["slug"] == "left-unbounded"
        assert payload[0]["passed"] is True


class TestConfig:
    def test_roundtrip(self):
        cfg = cli.RunConfig(command="powerlaw", x0=3.0, eps_decades="1e-7:1e-3", workers=2)
        again = cli.RunConfig.from_json(cfg.to_json())
        assert again == cfg

    def test_config_file_merging(self, capsys, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"k_values": [50.0], "eps": 0.02}))
        code, out, _ = run_cli(["demo-left", "--config", str(path)], capsys)
        assert code == 0
        rows = parse_csv(out)
        assert len(rows) == 1
        assert float(rows[0]["l2_discrepancy"]) == pytest.approx(0.02, rel=1e-6)

    def test_flags_beat_config(self, capsys, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"eps": 0.02}))
        code, out, _ = run_cli(
            ["demo-left", "--config", str(path), "--eps", "0.05", "--K", "50"], capsys
        )
        assert code == 0
        rows = parse_csv(out)
        assert float(rows[0]["l2_discrepancy"]) == pytest.approx(0.05, rel=1e-6)

    def test_missing_config_exits_one(self, capsys):
        code, _, err = run_cli(["demo-left", "--config", "/nonexistent.json"], capsys)
        assert code == 1
