"""CLI behavior: subcommand flows, exit codes, determinism, output hygiene."""

import json
import subprocess
import sys

import numpy as np
import pytest

from sketchsum.cli import main
from sketchsum.formats import write_points_csv


@pytest.fixture
def workload(tmp_path):
    rng = np.random.default_rng(29)
    pts = np.concatenate(
        [
            rng.normal(0.25, 0.03, size=(3000, 3)),
            rng.normal(0.55, 0.03, size=(3000, 3)),
            rng.normal(0.85, 0.03, size=(3000, 3)),
        ]
    )
    rng.shuffle(pts)
    input_path = tmp_path / "points.csv"
    write_points_csv(pts, input_path, header=True)
    cfg = {
        "input_path": str(input_path),
        "dims": 3,
        "bins": 12,
        "rows": 6,
        "cols": 2048,
        "seed": 3,
        "top_k": 50,
        "candidate_multiplier": 2,
        "scheme": "log_rank",
        "jitter_seed": 17,
        "partitions": 1,
        "output_dir": str(tmp_path / "out"),
    }
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(cfg))
    return tmp_path, cfg_path


def run_cli(*argv):
    return main([str(a) for a in argv])


# -- pipeline ----------------------------------------------------------------


def test_pipeline_partitions_equivalence(workload, capsys):
    tmp_path, cfg = workload
    assert run_cli("pipeline", "--config", cfg, "--out", tmp_path / "p1") == 0
    assert (
        run_cli("pipeline", "--config", cfg, "--out", tmp_path / "p16", "--partitions", 16) == 0
    )
    for name in ("topk.csv", "summary.csv", "merged.snsk"):
        a = (tmp_path / "p1" / name).read_bytes()
        b = (tmp_path / "p16" / name).read_bytes()
        assert a == b, f"{name} differs between partitions=1 and partitions=16"


def test_pipeline_jobs_equivalence(workload):
    tmp_path, cfg = workload
    run_cli("pipeline", "--config", cfg, "--out", tmp_path / "j1", "--partitions", 4)
    run_cli(
        "pipeline", "--config", cfg, "--out", tmp_path / "j4", "--partitions", 4, "--jobs", 4
    )
    for name in ("topk.csv", "summary.csv", "merged.snsk"):
        assert (tmp_path / "j1" / name).read_bytes() == (tmp_path / "j4" / name).read_bytes()


def test_pipeline_rerun_deterministic(workload):
    tmp_path, cfg = workload
    run_cli("pipeline", "--config", cfg, "--out", tmp_path / "r1")
    run_cli("pipeline", "--config", cfg, "--out", tmp_path / "r2")
    for name in ("topk.csv", "summary.csv", "merged.snsk", "stats.json"):
        assert (tmp_path / "r1" / name).read_bytes() == (tmp_path / "r2" / name).read_bytes()


def test_pipeline_no_partial_leftovers(workload):
    tmp_path, cfg = workload
    run_cli("pipeline", "--config", cfg, "--out", tmp_path / "clean")
    leftovers = list((tmp_path / "clean").rglob("*.partial"))
    assert leftovers == []


def test_print_config_resolves_grid(workload, capsys):
    tmp_path, cfg = workload
    assert run_cli("pipeline", "--config", cfg, "--print-config") == 0
    resolved = json.loads(capsys.readouterr().out)
    assert resolved["grid"]["dims"] == 3
    assert resolved["grid"]["bins"] == 12
    assert len(resolved["grid"]["lo"]) == 3
    assert resolved["bounds"] == "explicit"
    # nothing was run
    assert not (tmp_path / "out").exists()


# -- staged flow: sketch -> merge -> topk -> expand --------------------------------


def test_staged_flow_matches_pipeline(workload):
    tmp_path, cfg = workload
    run_cli("pipeline", "--config", cfg, "--out", tmp_path / "ref")
    resolved = tmp_path / "ref" / "resolved_config.json"

    rows = 9000
    bounds = json.loads(resolved.read_text())
    half = rows // 2
    run_cli(
        "sketch", "--config", resolved, "--row-stop", half, "--out-dir", tmp_path / "s0"
    )
    run_cli(
        "sketch", "--config", resolved, "--row-start", half, "--out-dir", tmp_path / "s1"
    )
    run_cli(
        "merge",
        "--out",
        tmp_path / "staged.snsk",
        tmp_path / "s0" / "shard_0000.snsk",
        tmp_path / "s1" / "shard_0000.snsk",
    )
    assert (tmp_path / "staged.snsk").read_bytes() == (
        tmp_path / "ref" / "merged.snsk"
    ).read_bytes()

    run_cli(
        "topk",
        "--sketch",
        tmp_path / "staged.snsk",
        "--candidates",
        tmp_path / "s0" / "shard_0000.snhh",
        tmp_path / "s1" / "shard_0000.snhh",
        "-k",
        50,
        "--out",
        tmp_path / "staged_topk.csv",
    )
    assert (tmp_path / "staged_topk.csv").read_bytes() == (
        tmp_path / "ref" / "topk.csv"
    ).read_bytes()

    run_cli(
        "expand",
        "--hh",
        tmp_path / "staged_topk.csv",
        "--config",
        resolved,
        "--out",
        tmp_path / "staged_summary.csv",
    )
    assert (tmp_path / "staged_summary.csv").read_bytes() == (
        tmp_path / "ref" / "summary.csv"
    ).read_bytes()


# -- oracle / collisions / bench -----------------------------------------------------


def test_oracle_band_report(workload, capsys):
    tmp_path, cfg = workload
    run_cli("pipeline", "--config", cfg, "--out", tmp_path / "o")
    capsys.readouterr()
    code = run_cli(
        "oracle",
        "--config",
        tmp_path / "o" / "resolved_config.json",
        "--sketch",
        tmp_path / "o" / "merged.snsk",
        "--bands",
        "1:11,11:51",
        "--out",
        tmp_path / "bands.csv",
    )
    assert code == 0
    out = capsys.readouterr().out
    assert "rms rel err" in out
    lines = (tmp_path / "bands.csv").read_text().splitlines()
    assert lines[0] == "rank_lo,rank_hi,keys,rms_rel_error"
    assert len(lines) == 3


def test_collisions_prints_reference_value(capsys):
    assert run_cli("collisions", "-K", 10000, "-D", 10, "-M", 8) == 0
    out = capsys.readouterr().out
    value = float(out.strip().splitlines()[-1].split("=")[-1])
    assert 1056.0 <= value <= 1058.0


def test_bench_writes_csv(workload, capsys):
    tmp_path, _ = workload
    code = run_cli(
        "bench",
        "--sizes",
        "2e4,4e4",
        "--keys",
        1000,
        "--rows",
        4,
        "--cols",
        1024,
        "--out",
        tmp_path / "bench.csv",
    )
    assert code == 0
    lines = (tmp_path / "bench.csv").read_text().splitlines()
    assert lines[0] == "size,seconds,updates_per_sec"
    assert len(lines) == 3
    assert "R^2" in capsys.readouterr().out


# -- exit codes ------------------------------------------------------------------------


def test_exit_code_usage():
    assert run_cli("bench", "--sizes", "abc") == 1
    assert run_cli("no-such-command") == 1


def test_exit_code_data_error(tmp_path):
    missing = tmp_path / "nope.snsk"
    assert run_cli("merge", "--out", tmp_path / "o.snsk", missing) == 2


def test_exit_code_config_mismatch(tmp_path):
    from sketchsum import CountSketch, SketchConfig
    from sketchsum.formats import write_sketch

    a, b = tmp_path / "a.snsk", tmp_path / "b.snsk"
    write_sketch(CountSketch(SketchConfig(2, 8, 1)), a)
    write_sketch(CountSketch(SketchConfig(2, 8, 2)), b)
    assert run_cli("merge", "--out", tmp_path / "m.snsk", a, b) == 3


def test_exit_code_bad_config_file(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{\"dims\": 2}")
    assert run_cli("pipeline", "--config", bad) == 3


def test_console_entry_point_runs():
    proc = subprocess.run(
        [sys.executable, "-m", "sketchsum", "collisions", "-K", "0", "-D", "2", "-M", "4"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert "C = 0" in proc.stdout
