"""Scenario benchmark harness.

A scenario file bundles a scene document with the task, the ground-truth
receptacle ids used to judge reasonableness, and optional config overrides.
Each repetition plans, auto-selects the rank-1 candidate, re-simulates it,
and records whether the selection was stable and reasonable.  Repetition k
runs with seed base+k so reports are reproducible end to end.
"""

from __future__ import annotations

import json
import statistics
import time
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import BenchValidationError
from .pipeline import Engine, PipelineConfig, config_from_dict, config_to_dict
from .scene import Scene, TaskDescription, parse_scene

DEFAULT_REPETITIONS = 20


@dataclass(frozen=True)
class Scenario:
    id: str
    scene: Scene
    task: TaskDescription
    ground_truth: tuple[str, ...]
    config_overrides: dict


@dataclass(frozen=True)
class ScenarioResult:
    scenario_id: str
    repetitions: int
    stability_success_rate: float
    reasonableness_success_rate: float
    time_mean: float
    time_std: float
    tokens_mean: float
    stable_fraction: float


@dataclass(frozen=True)
class BenchReport:
    rows: tuple[ScenarioResult, ...]
    repetitions: int
    candidates_per_plan: int
    base_seed: int
    config: dict

    def to_delimited(self, delimiter: str = ",") -> str:
        header = delimiter.join(
            [
                "scenario",
                "repetitions",
                "stability_success_rate",
                "reasonableness_success_rate",
                "time_mean_s",
                "time_std_s",
                "tokens_mean",
                "stable_fraction",
            ]
        )
        lines = [header]
        for r in self.rows:
            lines.append(
                delimiter.join(
                    [
                        r.scenario_id,
                        str(r.repetitions),
                        f"{r.stability_success_rate:.4f}",
                        f"{r.reasonableness_success_rate:.4f}",
                        f"{r.time_mean:.3f}",
                        f"{r.time_std:.3f}",
                        f"{r.tokens_mean:.1f}",
                        f"{r.stable_fraction:.4f}",
                    ]
                )
            )
        return "\n".join(lines) + "\n"


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise BenchValidationError(f"{path}: invalid JSON: {exc}") from exc
    for key in ("id", "scene", "task"):
        if key not in data:
            raise BenchValidationError(f"{path}: scenario missing {key!r}")
    ground_truth = tuple(data.get("ground_truth_receptacles", ()))
    if not ground_truth:
        raise BenchValidationError(
            f"{path}: scenario declares no ground_truth_receptacles"
        )
    task_node = data["task"]
    task = TaskDescription(
        text=task_node["text"],
        similarity_hint=task_node.get("similarity_hint", "none"),
    )
    return Scenario(
        id=data["id"],
        scene=parse_scene(data["scene"]),
        task=task,
        ground_truth=ground_truth,
        config_overrides=data.get("config", {}),
    )


def load_suite(directory: str | Path) -> list[Scenario]:
    directory = Path(directory)
    files = sorted(directory.glob("*.json"))
    if not files:
        raise BenchValidationError(f"no scenario files in {directory}")
    return [load_scenario(f) for f in files]


def packaged_scenario_dir() -> Path:
    """The shipped six-scenario benchmark suite."""
    return Path(str(resources.files("placekit") / "scenarios" / "bench"))


def run_benchmark(
    scenarios: list[Scenario],
    repetitions: int = DEFAULT_REPETITIONS,
    cfg: PipelineConfig | None = None,
    chat_client=None,
    engine: Engine | None = None,
) -> BenchReport:
    """Plan/auto-select every scenario x repetition and aggregate success rates."""
    if repetitions <= 0:
        raise BenchValidationError("repetitions must be positive")
    if not scenarios:
        raise BenchValidationError("scenario list is empty")
    cfg = cfg or PipelineConfig()
    engine = engine or Engine(cfg)
    rows = []
    for scenario in scenarios:
        scenario_cfg = config_from_dict(scenario.config_overrides, base=cfg)
        stable_hits = 0
        reasonable_hits = 0
        times: list[float] = []
        tokens: list[float] = []
        stable_fraction = 0.0
        for rep in range(repetitions):
            rep_cfg = config_from_dict({"seed": scenario_cfg.seed + rep}, base=scenario_cfg)
            start = time.perf_counter()
            result = engine.plan(
                scenario.scene,
                scenario.task,
                cfg=rep_cfg,
                chat_client=chat_client,
                scenario_id=scenario.id,
                ground_truth=scenario.ground_truth,
            )
            stable_fraction = result.stable_fraction
            if result.ok and result.candidates.candidates:
                outcome = engine.execute_selection(result.run_id, rank=1)
                stable_hits += int(outcome.stable)
                reasonable_hits += int(bool(outcome.reasonable))
            times.append(time.perf_counter() - start)
            reasoning = result.metrics.get("reasoning", {})
            tokens.append(
                reasoning.get("prompt_tokens", 0) + reasoning.get("completion_tokens", 0)
            )
        rows.append(
            ScenarioResult(
                scenario_id=scenario.id,
                repetitions=repetitions,
                stability_success_rate=stable_hits / repetitions,
                reasonableness_success_rate=reasonable_hits / repetitions,
                time_mean=statistics.fmean(times),
                time_std=statistics.pstdev(times) if len(times) > 1 else 0.0,
                tokens_mean=statistics.fmean(tokens),
                stable_fraction=stable_fraction,
            )
        )
    return BenchReport(
        rows=tuple(rows),
        repetitions=repetitions,
        candidates_per_plan=cfg.sample_k,
        base_seed=cfg.seed,
        config=config_to_dict(cfg),
    )
