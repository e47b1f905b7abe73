"""Command line interface: plan, bench, serve, export-density."""

from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import click

from .bench import (
    DEFAULT_REPETITIONS,
    load_suite,
    packaged_scenario_dir,
    run_benchmark,
)
from .density import grid_to_binary, grid_to_text
from .errors import PlacekitError
from .pipeline import Engine, PipelineConfig, config_from_dict, load_config_file
from .scene import TaskDescription, parse_scene
from .store import RunStore

logger = logging.getLogger(__name__)

DEFAULT_STORE = "placekit_runs"


def _load_cfg(config_path: str | None) -> PipelineConfig:
    if config_path:
        return load_config_file(config_path)
    return PipelineConfig()


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Enable debug logging.")
def main(verbose: bool):
    """Placement recommendation engine."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )


@main.command()
@click.argument("scene_file", type=click.Path(exists=True))
@click.option("--task", required=True, help="Task description text.")
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--reasoner", type=click.Choice(["rule", "llm"]),
              help="llm uses the remote reasoner with rule fallback on; a "
                   "config file can select the strict 'llm' mode.")
@click.option("--seed", type=int)
@click.option("--out", "out_dir", type=click.Path(), default="placekit_out")
@click.option("--store", "store_dir", type=click.Path(), default=DEFAULT_STORE)
def plan(scene_file, task, config_path, reasoner, seed, out_dir, store_dir):
    """Plan placements for SCENE_FILE and write candidates, grids, and figures."""
    cfg = _load_cfg(config_path)
    overrides = {}
    if reasoner:
        overrides["reasoner"] = "llm_with_fallback" if reasoner == "llm" else reasoner
    if seed is not None:
        overrides["seed"] = seed
    cfg = config_from_dict(overrides, base=cfg)

    engine = Engine(cfg, store=RunStore(store_dir))
    try:
        scene = parse_scene(Path(scene_file).read_text())
        result = engine.plan(scene, TaskDescription(text=task))
    except PlacekitError as exc:
        click.echo(f"error [{exc.stage}/{exc.code}]: {exc.message}", err=True)
        sys.exit(1)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    record = engine.get_run(result.run_id)

    candidates_csv = out / "candidates.csv"
    with candidates_csv.open("w") as fh:
        fh.write("rank,x,y,z,density\n")
        for c in result.candidates.candidates:
            fh.write(
                f"{c.rank},{c.point[0]:.6f},{c.point[1]:.6f},{c.point[2]:.6f},{c.density:.9g}\n"
            )
    if record.diagnostics is not None:
        (out / "stability_diagnostics.csv").write_text(record.diagnostics.to_delimited())
    if record.field is not None:
        (out / "density_grid.csv").write_text(grid_to_text(record.field))
        (out / "density_grid.bin").write_bytes(grid_to_binary(record.field))
        from .report import render_heatmap

        render_heatmap(
            scene, record.field, result.candidates.candidates, out / "density_heatmap.png"
        )
    (out / "plan.json").write_text(
        json.dumps(
            {
                "run_id": result.run_id,
                "status": result.status,
                "stable_fraction": result.stable_fraction,
                "decision": (
                    list(result.decision.receptacle_ids) if result.decision else None
                ),
                "metrics": result.metrics,
            },
            indent=2,
            sort_keys=True,
        )
    )
    click.echo(f"run {result.run_id}: {result.status}, "
               f"{len(result.candidates.candidates)} candidates -> {out}")


@main.command()
@click.option("--suite", "suite_dir", type=click.Path(exists=True),
              help="Directory of scenario JSON files (defaults to the packaged suite).")
@click.option("--reps", type=int, default=DEFAULT_REPETITIONS, show_default=True)
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--out", "out_dir", type=click.Path(), default="placekit_bench")
def bench(suite_dir, reps, config_path, out_dir):
    """Run the scenario benchmark and write the report table plus figures."""
    cfg = _load_cfg(config_path)
    scenarios = load_suite(suite_dir or packaged_scenario_dir())
    try:
        report = run_benchmark(scenarios, repetitions=reps, cfg=cfg)
    except PlacekitError as exc:
        click.echo(f"error [{exc.stage}/{exc.code}]: {exc.message}", err=True)
        sys.exit(1)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.csv").write_text(report.to_delimited())
    (out / "report.json").write_text(
        json.dumps(
            {
                "repetitions": report.repetitions,
                "candidates_per_plan": report.candidates_per_plan,
                "base_seed": report.base_seed,
                "config": report.config,
                "rows": [
                    {
                        "scenario": r.scenario_id,
                        "repetitions": r.repetitions,
                        "stability_success_rate": r.stability_success_rate,
                        "reasonableness_success_rate": r.reasonableness_success_rate,
                        "time_mean_s": r.time_mean,
                        "time_std_s": r.time_std,
                        "tokens_mean": r.tokens_mean,
                        "stable_fraction": r.stable_fraction,
                    }
                    for r in report.rows
                ],
            },
            indent=2,
            sort_keys=True,
        )
    )
    from .report import render_bench_figures

    figures = render_bench_figures(report, out)
    click.echo(report.to_delimited().rstrip("\n"))
    click.echo(f"report -> {out / 'report.csv'}; figures -> {', '.join(map(str, figures))}")


@main.command()
@click.option("--bind", default="127.0.0.1:8000", show_default=True,
              help="ADDRESS:PORT to listen on.")
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--store", "store_dir", type=click.Path(), default=DEFAULT_STORE)
def serve(bind, config_path, store_dir):
    """Serve the operator REST API."""
    import uvicorn

    from .service import create_app

    cfg = _load_cfg(config_path)
    try:
        host, port = bind.rsplit(":", 1)
        port = int(port)
    except ValueError:
        click.echo(f"invalid bind address {bind!r}", err=True)
        sys.exit(1)
    app = create_app(cfg, store=RunStore(store_dir))
    uvicorn.run(app, host=host, port=port)


@main.command("export-density")
@click.argument("run_id")
@click.option("--format", "fmt", type=click.Choice(["text", "binary"]), default="text",
              show_default=True)
@click.option("--store", "store_dir", type=click.Path(exists=True), default=DEFAULT_STORE)
@click.option("--out", "out_file", type=click.Path(), default=None,
              help="Output path (defaults to stdout for text).")
def export_density(run_id, fmt, store_dir, out_file):
    """Export a persisted run's density grid."""
    engine = Engine(store=RunStore(store_dir))
    try:
        record = engine.get_run(run_id)
    except PlacekitError as exc:
        click.echo(f"error [{exc.stage}/{exc.code}]: {exc.message}", err=True)
        sys.exit(1)
    if record.field is None:
        click.echo(f"run {run_id} has no density field", err=True)
        sys.exit(1)
    if fmt == "text":
        text = grid_to_text(record.field)
        if out_file:
            Path(out_file).write_text(text)
            click.echo(f"wrote {out_file}")
        else:
            click.echo(text, nl=False)
    else:
        blob = grid_to_binary(record.field)
        target = Path(out_file or f"{run_id}_density.bin")
        target.write_bytes(blob)
        click.echo(f"wrote {target}")


if __name__ == "__main__":
    main()
