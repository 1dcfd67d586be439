import json

import pytest

from fracroute.cli import main
from fracroute.routing import recalc_cost


def test_cost_branches(capsys):
    assert main(["cost", "--cost", "10", "--hurst", "0.5", "--sv", "9", "--c0", "4"]) == 0
    assert capsys.readouterr().out == "branch=a C_new=10.000000\n"
    main(["cost", "--cost", "10", "--hurst", "0.7", "--sv", "2", "--c0", "4"])
    assert capsys.readouterr().out == "branch=c C_new=10.800000\n"
    main(["cost", "--cost", "10", "--hurst", "0.9", "--sv", "0", "--c0", "4"])
    assert capsys.readouterr().out == "branch=d C_new=14.000000\n"


@pytest.mark.parametrize("args", [("12.5", "0.63", "1.7", "3.3"), ("1", "0.99", "0", "1"),
                                  ("7", "0.51", "2.999", "0.5")])
def test_cost_matches_library(capsys, args):
    c, h, sv, c0 = args
    main(["cost", "--cost", c, "--hurst", h, "--sv", sv, "--c0", c0])
    out = capsys.readouterr().out
    assert out.split("C_new=")[1].strip() == f"{recalc_cost(*map(float, args)):.6f}"


def test_cost_rejects_out_of_range(capsys):
    assert main(["cost", "--cost", "10", "--hurst", "1.5", "--sv", "0", "--c0", "4"]) == 1


def test_generate_fgn(tmp_path, capsys):
    out = tmp_path / "t.trace"
    rc = main(["generate", "fgn", "--hurst", "0.8", "--n", "16384", "--mean", "100",
               "--std", "20", "--seed", "1", "-o", str(out)])
    assert rc == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "slot_width=1.000000" and len(lines) == 16385
    assert capsys.readouterr().out.startswith("n=16384 mean=")


def test_generate_bad_params_exit_nonzero(tmp_path):
    assert main(["generate", "fgn", "--hurst", "1.2", "-o", str(tmp_path / "x")]) != 0
    assert main(["generate", "fgn", "--n", "1000", "-o", str(tmp_path / "x")]) != 0


def test_usage_errors_exit_one():
    with pytest.raises(SystemExit) as info:
        main(["cost", "--cost", "abc"])
    assert info.value.code == 1


def test_analyze_constant_trace(tmp_path, capsys):
    path = tmp_path / "c.trace"
    path.write_text("slot_width=1\n" + "5\n" * 256)
    assert main(["analyze", str(path), "--window", "128"]) == 0
    recs = [json.loads(l) for l in capsys.readouterr().out.splitlines()]
    assert len(recs) == 2
    assert all(r["H"] == 0.5 and r["S_v"] == 0 and r["degenerate"] for r in recs)


def test_analyze_fgn_windows(tmp_path, capsys):
    path = tmp_path / "f.trace"
    main(["generate", "fgn", "--hurst", "0.8", "--n", "16384", "--mean", "100", "--std", "20",
          "--seed", "4", "-o", str(path)])
    capsys.readouterr()
    main(["analyze", str(path), "--window", "4096"])
    recs = [json.loads(l) for l in capsys.readouterr().out.splitlines()]
    assert [r["window_start"] for r in recs] == [0, 4096, 8192, 12288]
    assert all(0.7 <= r["H"] <= 0.9 for r in recs)
    assert set(recs[0]) == {"window_start", "H", "S_v", "S", "mean", "degenerate"}


def test_analyze_short_trace_warns(tmp_path, capsys):
    path = tmp_path / "s.trace"
    path.write_text("slot_width=1\n1\n2\n3\n")
    assert main(["analyze", str(path), "--window", "64"]) == 0
    captured = capsys.readouterr()
    assert "warning" in captured.err
    recs = [json.loads(l) for l in captured.out.splitlines()]
    assert len(recs) == 1 and recs[0]["degenerate"]


def test_analyze_malformed_trace(tmp_path, capsys):
    path = tmp_path / "m.trace"
    path.write_text("slot_width=1\n1\nx\n")
    assert main(["analyze", str(path)]) == 1
    assert ":3:" in capsys.readouterr().err


def test_run_exit_status_and_outputs(tmp_path, capsys):
    rc = main(["run", "scenarios/small.json", "-o", str(tmp_path)])
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["schema_version"] == 1
    assert rc == (0 if summary["compliance"]["compliant"] else 2)
    header = (tmp_path / "timeseries.csv").read_text().splitlines()[0]
    assert header == "slot,node,class,backlog,dropped,served"


def test_run_reports_qos_violation(tmp_path):
    rc = main(["run", "scenarios/congestion.json", "--mode", "static_costs", "-o",
               str(tmp_path)])
    assert rc == 2


def test_run_invalid_scenario(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"nodes": []}))
    assert main(["run", str(bad), "-o", str(tmp_path / "out")]) == 1
    assert "$" in capsys.readouterr().err


def test_compare_writes_reports(tmp_path, capsys):
    assert main(["compare", "scenarios/small.json", "-o", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "comparison.json").read_text())
    assert set(report["modes"]) == {"static_costs", "fractal_costs"}
    assert set(report["delta"]) == {"loss_fraction", "mean_delay", "loss_violations",
                                    "delay_violations"}
    assert (tmp_path / "static_costs.json").exists()
    assert (tmp_path / "fractal_costs.json").exists()
