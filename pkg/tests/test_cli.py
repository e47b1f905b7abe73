import json
import shutil
from pathlib import Path

import pytest
from click.testing import CliRunner

from placekit.cli import main
from placekit.density import GRID_MAGIC

SCENARIOS = Path(__file__).resolve().parents[1] / "src" / "placekit" / "scenarios"


@pytest.fixture()
def runner():
    return CliRunner()


@pytest.fixture()
def tray_scene_file(tmp_path):
    doc = json.loads((SCENARIOS / "extra" / "tray_sort.json").read_text())["scene"]
    path = tmp_path / "tray_scene.json"
    path.write_text(json.dumps(doc))
    return path


@pytest.fixture()
def config_file(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"resolution": 0.02, "sample_k": 5}))
    return path


def test_plan_writes_outputs_and_figures(runner, tray_scene_file, config_file, tmp_path):
    out = tmp_path / "out"
    store = tmp_path / "store"
    result = runner.invoke(
        main,
        [
            "plan", str(tray_scene_file),
            "--task", "sort objects based on colors",
            "--config", str(config_file),
            "--seed", "4",
            "--out", str(out),
            "--store", str(store),
        ],
    )
    assert result.exit_code == 0, result.output
    candidates = (out / "candidates.csv").read_text().strip().split("\n")
    assert candidates[0] == "rank,x,y,z,density"
    assert len(candidates) == 6  # sample_k 5 from config
    assert (out / "stability_diagnostics.csv").exists()
    assert (out / "density_grid.csv").exists()
    assert (out / "density_grid.bin").read_bytes()[:8] == GRID_MAGIC
    assert (out / "density_heatmap.png").exists()
    plan_meta = json.loads((out / "plan.json").read_text())
    assert plan_meta["status"] == "ok"
    assert plan_meta["decision"] == ["tray_2"]


def test_plan_then_export_density(runner, tray_scene_file, config_file, tmp_path):
    out = tmp_path / "out"
    store = tmp_path / "store"
    result = runner.invoke(
        main,
        [
            "plan", str(tray_scene_file),
            "--task", "sort objects based on colors",
            "--config", str(config_file),
            "--out", str(out),
            "--store", str(store),
        ],
    )
    assert result.exit_code == 0, result.output
    run_id = json.loads((out / "plan.json").read_text())["run_id"]

    text = runner.invoke(
        main, ["export-density", run_id, "--format", "text", "--store", str(store)]
    )
    assert text.exit_code == 0, text.output
    assert text.output.startswith("x,y,z,density")

    target = tmp_path / "grid.bin"
    binary = runner.invoke(
        main,
        [
            "export-density", run_id,
            "--format", "binary",
            "--store", str(store),
            "--out", str(target),
        ],
    )
    assert binary.exit_code == 0, binary.output
    assert target.read_bytes()[:8] == GRID_MAGIC


def test_export_density_unknown_run(runner, tmp_path):
    store = tmp_path / "store"
    store.mkdir()
    result = runner.invoke(main, ["export-density", "missing", "--store", str(store)])
    assert result.exit_code == 1
    assert "not_found" in result.output


def test_bench_command_writes_report_and_charts(runner, tmp_path):
    suite = tmp_path / "suite"
    suite.mkdir()
    shutil.copy(SCENARIOS / "extra" / "tray_sort.json", suite / "tray_sort.json")
    out = tmp_path / "bench"
    result = runner.invoke(
        main, ["bench", "--suite", str(suite), "--reps", "2", "--out", str(out)]
    )
    assert result.exit_code == 0, result.output
    report = (out / "report.csv").read_text().strip().split("\n")
    assert len(report) == 2
    assert report[1].startswith("tray_sort,2,1.0000,1.0000")
    meta = json.loads((out / "report.json").read_text())
    assert meta["candidates_per_plan"] == 10
    assert (out / "bench_success_rates.png").exists()
    assert (out / "bench_stable_fraction.png").exists()


def test_plan_invalid_scene_fails_cleanly(runner, tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"workspace": {"min": [0, 0, 0], "max": [1, 1, 1]}}))
    result = runner.invoke(main, ["plan", str(path), "--task", "x"])
    assert result.exit_code == 1
    assert "ingest" in result.output


def test_serve_rejects_bad_bind(runner):
    result = runner.invoke(main, ["serve", "--bind", "nonsense"])
    assert result.exit_code == 1
    assert "invalid bind address" in result.output
