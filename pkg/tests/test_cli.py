"""CLI subcommands: sim output tree, analyze, exit codes."""

from __future__ import annotations

import json

import pytest

from netsentry.cli import cli
from netsentry.fixtures import write_benign_pcap
from netsentry.pcap import pcap_bytes


class TestExitCodes:
    def test_usage_error_is_1(self, capsys):
        assert cli(["sim"]) == 1  # missing required args
        assert "usage" in capsys.readouterr().err

    def test_unknown_subcommand_is_1(self):
        assert cli(["frobnicate"]) == 1

    def test_unknown_scenario_is_1(self, capsys):
        assert cli(["sim", "--scenario", "nope", "--out", "/tmp/x"]) == 1

    def test_missing_pcap_is_1(self):
        assert cli(["analyze", "--pcap", "/does/not/exist.pcap"]) == 1

    def test_runtime_failure_is_2(self, tmp_path):
        bad = tmp_path / "bad.pcap"
        bad.write_bytes(b"\x00" * 30)  # bad magic
        assert cli(["analyze", "--pcap", str(bad)]) == 2


class TestAnalyze:
    def test_empty_pcap(self, tmp_path, capsys):
        path = tmp_path / "empty.pcap"
        path.write_bytes(pcap_bytes([]))
        report_path = tmp_path / "report.json"
        assert cli(["analyze", "--pcap", str(path), "--report", str(report_path)]) == 0
        out = capsys.readouterr().out
        assert "packets: 0" in out
        assert "verdict: benign" in out
        report = json.loads(report_path.read_text())
        assert report["packet_count"] == 0
        assert report["verdict"]["category"] == "benign"

    def test_benign_422(self, tmp_path, capsys):
        path = write_benign_pcap(tmp_path / "benign422.pcap")
        csv_path = tmp_path / "flows.csv"
        report_path = tmp_path / "report.json"
        assert cli(["analyze", "--pcap", str(path), "--csv", str(csv_path),
                    "--report", str(report_path)]) == 0
        assert "packets: 422" in capsys.readouterr().out
        report = json.loads(report_path.read_text())
        assert report["packet_count"] == 422
        assert report["verdict"]["category"] == "benign"
        lines = csv_path.read_text().strip().split("\n")
        assert lines[0].startswith("src,dst,protocol")
        assert len(lines) == 1 + 14  # header + flows

    def test_analyze_native_trace(self, tmp_path, capsys):
        out = tmp_path / "sim"
        assert cli(["sim", "--scenario", "degraded", "--seed", "1",
                    "--out", str(out)]) == 0
        capsys.readouterr()
        assert cli(["analyze", "--pcap", str(out / "trace.bin")]) == 0
        assert "verdict:" in capsys.readouterr().out


class TestSim:
    def test_ddos8_output_tree(self, tmp_path, capsys):
        out = tmp_path / "run"
        assert cli(["sim", "--scenario", "ddos8", "--seed", "7",
                    "--out", str(out)]) == 0
        stdout = capsys.readouterr().out
        assert "1 incidents" in stdout
        assert "192.168.1.1=attacker" in stdout

        for name in ("trace.bin", "trace.bin.idx", "trace.pcap", "scenario.json",
                     "telemetry.json", "incidents.json", "manifest.json"):
            assert (out / name).exists(), name
        reports = sorted((out / "reports").glob("*.json"))
        assert len(reports) >= 8

        [incident] = json.loads((out / "incidents.json").read_text())
        assert incident["category"] == "dos_tcp_flood"
        assert incident["roles"]["192.168.1.1"] == "attacker"
        assert incident["roles"]["192.168.1.4"] == "victim"
        assert incident["roles"]["192.168.1.6"] == "victim"

        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["scenario"] == "ddos8" and manifest["seed"] == 7

    def test_output_byte_stable_across_runs(self, tmp_path):
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert cli(["sim", "--scenario", "ddos8", "--seed", "3", "--out", str(out_a)]) == 0
        assert cli(["sim", "--scenario", "ddos8", "--seed", "3", "--out", str(out_b)]) == 0
        for name in ("trace.bin", "trace.pcap", "incidents.json", "telemetry.json",
                     "manifest.json", "scenario.json"):
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes(), name
        for report in (out_a / "reports").glob("*.json"):
            assert report.read_bytes() == (out_b / "reports" / report.name).read_bytes()

    def test_scenario_file(self, tmp_path):
        from netsentry.simnet import builtin_scenario, scenario_to_dict
        spec_path = tmp_path / "custom.json"
        spec_path.write_text(json.dumps(scenario_to_dict(builtin_scenario("degraded", 0))))
        out = tmp_path / "run"
        assert cli(["sim", "--scenario", str(spec_path), "--seed", "5",
                    "--out", str(out)]) == 0
        assert (out / "trace.bin").exists()
        assert json.loads((out / "scenario.json").read_text())["seed"] == 5
