"""CLI behaviour: exit codes, output layout, determinism, bundled configs."""

import csv
import os
import re
import subprocess
import sys

import pytest

from pvssbft.cli import main
from pvssbft.metrics import read_csv_rows


TINY = """
[scenario]
name = "tiny"
n = 8
views = 12
seeds = [3]
strategy = "equivocating-leader"

[sweep]
byzantine = [0, 2]
variants = ["pvss-bft", "baseline-bft"]
"""

CMP = """
[scenario]
name = "cmp"
n = 8
duration_ticks = 300
seeds = [1]

[sweep]
variants = ["pvss-bft", "longest-chain"]
"""


def write_cfg(tmp_path, text, name="case.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def read_file(path) -> bytes:
    with open(path, "rb") as fh:
        return fh.read()


# -- run ----------------------------------------------------------------------


def test_run_writes_per_scenario_and_merged_outputs(tmp_path, capsys):
    cfg = write_cfg(tmp_path, TINY)
    out = tmp_path / "out"
    assert main(["run", cfg, "-o", str(out)]) == 0
    stdout = capsys.readouterr().out
    assert "tiny-pvss-bft-b0-s3: decided 12/12 views" in stdout

    for sub in ("tiny-pvss-bft-b0-s3", "tiny-baseline-bft-b2-s3"):
        assert (out / sub / "views.csv").is_file()
        assert (out / sub / "latency.csv").is_file()
        assert (out / sub / "summary.json").is_file()
    merged = read_csv_rows(str(out / "views.csv"))
    assert len(merged) == 4 * 12
    assert {r["variant"] for r in merged} == {"pvss-bft", "baseline-bft"}
    # equivocation forks the share-less baseline but never the PVSS variant
    pvss_forks = [int(r["forks_cum"]) for r in merged if r["variant"] == "pvss-bft"]
    base_forks = [int(r["forks_cum"]) for r in merged
                  if r["variant"] == "baseline-bft" and r["scenario"].endswith("b2-s3")]
    assert set(pvss_forks) == {0}
    assert base_forks[-1] > 0


def test_run_is_deterministic_for_a_fixed_seed(tmp_path):
    cfg = write_cfg(tmp_path, TINY)
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["run", cfg, "--seed", "1", "-o", str(out1)]) == 0
    assert main(["run", cfg, "--seed", "1", "-o", str(out2)]) == 0
    for name in ("views.csv", "latency.csv", "summary.json"):
        assert read_file(out1 / name) == read_file(out2 / name)


def test_run_jobs_fanout_matches_serial_output(tmp_path):
    cfg = write_cfg(tmp_path, TINY)
    serial, threaded = tmp_path / "s", tmp_path / "t"
    assert main(["run", cfg, "-o", str(serial)]) == 0
    assert main(["run", cfg, "--jobs", "4", "-o", str(threaded)]) == 0
    assert read_file(serial / "views.csv") == read_file(threaded / "views.csv")
    assert read_file(serial / "latency.csv") == read_file(threaded / "latency.csv")


def test_invalid_config_exits_nonzero_with_location(tmp_path, capsys):
    cfg = write_cfg(tmp_path, TINY.replace("strategy", "strategee"))
    assert main(["run", cfg, "-o", str(tmp_path / "out")]) == 2
    err = capsys.readouterr().err
    assert "scenario.strategee" in err


def test_missing_config_file_exits_nonzero(tmp_path, capsys):
    assert main(["run", str(tmp_path / "no.cfg"), "-o", str(tmp_path)]) == 2
    assert "config not found" in capsys.readouterr().err


def test_output_dir_is_never_implicit(tmp_path, capsys, monkeypatch):
    monkeypatch.delenv("PVSSBFT_OUTPUT_DIR", raising=False)
    cfg = write_cfg(tmp_path, TINY)
    assert main(["run", cfg]) == 2
    assert "output directory" in capsys.readouterr().err


def test_output_dir_env_override(tmp_path, monkeypatch):
    cfg = write_cfg(tmp_path, TINY)
    out = tmp_path / "env-out"
    monkeypatch.setenv("PVSSBFT_OUTPUT_DIR", str(out))
    assert main(["run", cfg]) == 0
    assert (out / "views.csv").is_file()


def test_safety_assumption_violation_exits_one(tmp_path, capsys):
    # one byzantine node of two breaks the honest-awake-majority assumption
    cfg = write_cfg(
        tmp_path,
        '[scenario]\nname = "bad"\nn = 2\nviews = 4\nseeds = [0]\nbyzantine = 1\n',
    )
    assert main(["run", cfg, "-o", str(tmp_path / "out")]) == 1
    assert "safety violation" in capsys.readouterr().err


# -- bench-pvss -----------------------------------------------------------------


def test_bench_reports_three_positive_timings(tmp_path, capsys):
    out = tmp_path / "bench"
    code = main(
        ["bench-pvss", "--profile", "test64", "--sizes", "4", "--repeats", "3",
         "-o", str(out)]
    )
    assert code == 0
    assert "n=4 t=3" in capsys.readouterr().out
    rows = read_csv_rows(str(out / "pvss_bench.csv"))
    assert [r["operation"] for r in rows] == [
        "split", "verify-all-shares", "reconstruct",
    ]
    assert all(float(r["median_ms"]) > 0 for r in rows)
    assert all(r["t"] == "3" for r in rows)


# -- analyze-churn ----------------------------------------------------------------


def test_analyze_churn_emits_documented_columns(tmp_path):
    out = tmp_path / "churn"
    assert main(["analyze-churn", "--n", "40", "--p", "0.1,0.21", "-o", str(out)]) == 0
    with open(out / "churn.csv", newline="") as fh:
        header = next(csv.reader(fh))
    assert header == [
        "p", "n", "ex1_steady", "ex_phase2", "ex_phase3", "ex_phase4",
        "p_vote_success", "p_confirm_success", "tolerance",
    ]
    rows = read_csv_rows(str(out / "churn.csv"))
    by_p = {r["p"]: r for r in rows}
    assert float(by_p["0.21"]["tolerance"]) == pytest.approx(0.61049919, abs=1e-6)
    assert float(by_p["0.1"]["p_vote_success"]) > float(by_p["0.21"]["p_vote_success"])
    steady = float(by_p["0.21"]["ex1_steady"])
    assert steady == pytest.approx(11.4778, abs=1e-3)


# -- compare ----------------------------------------------------------------------


def test_compare_single_config_emits_joint_per_tick_csv(tmp_path):
    cfg = write_cfg(tmp_path, CMP)
    out = tmp_path / "out"
    assert main(["compare", cfg, "-o", str(out)]) == 0
    rows = read_csv_rows(str(out / "compare.csv"))
    assert len(rows) == 300
    assert rows[0]["variant_a"] == "pvss-bft"
    assert rows[0]["variant_b"] == "longest-chain"
    # BFT decisions land every 4th tick with latency 4; chain confirmations
    # appear from the 11th slot on and take at least 150 ticks
    bft_lat = {r["latency_a"] for r in rows if r["latency_a"]}
    assert bft_lat == {"4"}
    lc_lat = [float(r["latency_b"]) for r in rows if r["latency_b"]]
    assert lc_lat and min(lc_lat) >= 150.0
    assert int(rows[-1]["height_a"]) == 75
    assert int(rows[-1]["height_b"]) == 20


def test_compare_identical_variants_gives_identical_columns(tmp_path):
    single = CMP.replace(
        '[sweep]\nvariants = ["pvss-bft", "longest-chain"]', ""
    )
    cfg = write_cfg(tmp_path, single)
    out = tmp_path / "out"
    assert main(["compare", cfg, cfg, "-o", str(out)]) == 0
    for row in read_csv_rows(str(out / "compare.csv")):
        for col in ("variant", "height", "latency", "awake"):
            assert row[f"{col}_a"] == row[f"{col}_b"]


def test_compare_refuses_schedule_mismatch(tmp_path, capsys):
    churn = '\n[[churn.stages]]\nduration = 300\nmodel = "flip"\np = 0.5\n'
    cfg_a = write_cfg(tmp_path, CMP.split("[sweep]")[0] + churn, "a.cfg")
    cfg_b = write_cfg(tmp_path, CMP.split("[sweep]")[0], "b.cfg")
    assert main(["compare", cfg_a, cfg_b, "-o", str(tmp_path / "o")]) == 2
    assert "schedule mismatch" in capsys.readouterr().err

    # same stages but different tick budgets must also be refused
    cfg_c = write_cfg(
        tmp_path, CMP.split("[sweep]")[0].replace("300", "600"), "c.cfg"
    )
    assert main(["compare", cfg_b, cfg_c, "-o", str(tmp_path / "o")]) == 2
    assert "schedule mismatch" in capsys.readouterr().err


def test_compare_needs_exactly_two_runs(tmp_path, capsys):
    cfg = write_cfg(tmp_path, TINY)  # expands to four runs
    assert main(["compare", cfg, "-o", str(tmp_path / "o")]) == 2
    assert "exactly two" in capsys.readouterr().err


# -- module invocation --------------------------------------------------------------


def test_module_entry_point_runs_in_subprocess(tmp_path):
    env = dict(os.environ, PVSSBFT_OUTPUT_DIR=str(tmp_path / "mod-out"))
    proc = subprocess.run(
        [sys.executable, "-m", "pvssbft.cli", "analyze-churn", "--p", "0.1"],
        capture_output=True,
        text=True,
        env=env,
    )
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "mod-out" / "churn.csv").is_file()


# -- bundled experiments --------------------------------------------------------------


def test_bundled_experiment1_summary_numbers(tmp_path):
    out = tmp_path / "exp1"
    assert main(["run", "experiment1", "-o", str(out)]) == 0
    rows = read_csv_rows(str(out / "views.csv"))
    forks = {}
    for row in rows:
        key = (row["variant"], row["scenario"])
        forks[key] = max(forks.get(key, 0), int(row["forks_cum"]))
    pvss = {k[1]: v for k, v in forks.items() if k[0] == "pvss-bft"}
    base = {int(re.search(r"-b(\d+)-s", k[1]).group(1)): v
            for k, v in forks.items() if k[0] == "baseline-bft"}
    assert len(pvss) == 20 and set(pvss.values()) == {0}
    assert len(base) == 20 and base[0] == 0
    assert all(base[b] > 0 for b in range(10, 20))
    assert base[19] > base[5]


def test_bundled_experiment2_compare_latency_profile(tmp_path):
    out = tmp_path / "exp2"
    assert main(["compare", "experiment2", "-o", str(out)]) == 0
    rows = read_csv_rows(str(out / "compare.csv"))
    assert len(rows) == 1080

    stage12 = [r for r in rows if int(r["tick"]) < 720]
    stage3 = [r for r in rows if int(r["tick"]) >= 720]
    bft12 = {r["latency_a"] for r in stage12 if r["latency_a"]}
    assert bft12 == {"4"}
    assert len([r for r in stage12 if r["latency_a"]]) > 100
    # unstable stage: the quorum path stalls, the ledger stops growing
    assert not any(r["latency_a"] for r in stage3)
    assert int(stage3[-1]["height_a"]) == int(stage3[0]["height_a"])

    lc_lat = [float(r["latency_b"]) for r in rows if r["latency_b"]]
    assert lc_lat and min(lc_lat) >= 150.0
