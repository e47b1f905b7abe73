"""Pipeline orchestration: candidates -> stability -> reasoning -> density.

The Engine owns run state.  Plans are persisted as append-only events and
are fully reconstructable, so a restarted engine serves the same runs.
Stability sweeps are memoized on (scene, grid, sim config): repeated plans
over the same fixture, as in benchmarks, pay for the sweep once.
"""

from __future__ import annotations

import hashlib
import json
import logging
import time
import uuid
from dataclasses import dataclass, field

import numpy as np

from .density import (
    BlendConfig,
    CandidateList,
    Candidate,
    DensityField,
    GridSpec,
    KdeConfig,
    WeightedPoints,
    build_density,
    sample_candidates,
)
from .errors import (
    AlreadyPlacedError,
    ContractViolationError,
    PlacekitError,
    RunNotFoundError,
)
from .grid import SURFACE_SNAP, CandidateGrid, generate_candidates
from .llm import RemoteChatClient, llm_reason
from .physics import builtin_backend
from .reasoning import (
    PROXIMITY_RADIUS,
    ReasonerMetrics,
    ReceptacleDecision,
    receptacle_points,
    rule_reason,
    summarize_scene,
)
from .scene import Scene, TaskDescription, parse_scene, scene_to_document
from .stability import (
    SimConfig,
    StableSet,
    SweepDiagnostics,
    simulate_placement,
    sweep_stability,
    trace_is_stable,
)
from .store import NullStore, RunStore

logger = logging.getLogger(__name__)

REASONER_RULE = "rule"
REASONER_LLM = "llm"
REASONER_LLM_WITH_FALLBACK = "llm_with_fallback"
_REASONERS = (REASONER_RULE, REASONER_LLM, REASONER_LLM_WITH_FALLBACK)

STATUS_OK = "ok"
STATUS_NO_STABLE = "no_stable_placement"


@dataclass(frozen=True)
class PipelineConfig:
    sim: SimConfig = field(default_factory=SimConfig)
    kde: KdeConfig = field(default_factory=KdeConfig)
    blend: BlendConfig = field(default_factory=BlendConfig)
    reasoner: str = REASONER_RULE
    sample_k: int = 10
    min_separation: float = 0.02
    seed: int = 0
    resolution: float = 0.01
    receptacle_radius: float = PROXIMITY_RADIUS

    def __post_init__(self):
        if self.reasoner not in _REASONERS:
            raise ContractViolationError(f"unknown reasoner {self.reasoner!r}")
        if self.sample_k < 1:
            raise ContractViolationError("sample_k must be >= 1")
        if self.resolution <= 0.0:
            raise ContractViolationError("resolution must be positive")


def config_to_dict(cfg: PipelineConfig) -> dict:
    return {
        "sim": {
            "steps": cfg.sim.steps,
            "dt": cfg.sim.dt,
            "stability_tolerance": cfg.sim.stability_tolerance,
            "sigma_mode": cfg.sim.sigma_mode,
            "perturbation_tilts": [
                [list(axis), angle] for axis, angle in cfg.sim.perturbation_tilts
            ],
            "perturbation_step": cfg.sim.perturbation_step,
            "invert_reward": cfg.sim.invert_reward,
        },
        "kde": {"bandwidth": cfg.kde.bandwidth, "kernel": cfg.kde.kernel},
        "blend": {"beta": cfg.blend.beta},
        "reasoner": cfg.reasoner,
        "sample_k": cfg.sample_k,
        "min_separation": cfg.min_separation,
        "seed": cfg.seed,
        "resolution": cfg.resolution,
        "receptacle_radius": cfg.receptacle_radius,
    }


def config_from_dict(data: dict, base: PipelineConfig | None = None) -> PipelineConfig:
    """Build a config from a (possibly partial) dict layered over ``base``."""
    base = base or PipelineConfig()
    sim_data = data.get("sim", {})
    tilts = sim_data.get("perturbation_tilts")
    sim = SimConfig(
        steps=sim_data.get("steps", base.sim.steps),
        dt=sim_data.get("dt", base.sim.dt),
        stability_tolerance=sim_data.get(
            "stability_tolerance", base.sim.stability_tolerance
        ),
        sigma_mode=sim_data.get("sigma_mode", base.sim.sigma_mode),
        perturbation_tilts=(
            tuple((tuple(axis), float(angle)) for axis, angle in tilts)
            if tilts is not None
            else base.sim.perturbation_tilts
        ),
        perturbation_step=sim_data.get("perturbation_step", base.sim.perturbation_step),
        invert_reward=sim_data.get("invert_reward", base.sim.invert_reward),
    )
    kde_data = data.get("kde", {})
    blend_data = data.get("blend", {})
    return PipelineConfig(
        sim=sim,
        kde=KdeConfig(
            bandwidth=kde_data.get("bandwidth", base.kde.bandwidth),
            kernel=kde_data.get("kernel", base.kde.kernel),
        ),
        blend=BlendConfig(beta=blend_data.get("beta", base.blend.beta)),
        reasoner=data.get("reasoner", base.reasoner),
        sample_k=data.get("sample_k", base.sample_k),
        min_separation=data.get("min_separation", base.min_separation),
        seed=data.get("seed", base.seed),
        resolution=data.get("resolution", base.resolution),
        receptacle_radius=data.get("receptacle_radius", base.receptacle_radius),
    )


def load_config_file(path) -> PipelineConfig:
    with open(path) as fh:
        return config_from_dict(json.load(fh))


@dataclass(frozen=True)
class PlanResult:
    run_id: str
    status: str
    candidates: CandidateList
    decision: ReceptacleDecision | None
    stable_fraction: float
    metrics: dict

    @property
    def ok(self) -> bool:
        return self.status == STATUS_OK


@dataclass(frozen=True)
class PlacementOutcome:
    selected_point: tuple[float, float, float]
    stable: bool
    deviation: float
    reasonable: bool | None  # None when the run declares no ground truth


@dataclass
class RunRecord:
    run_id: str
    scene: Scene
    task: TaskDescription
    cfg: PipelineConfig
    status: str
    grid: CandidateGrid | None = None
    stable: StableSet | None = None
    diagnostics: SweepDiagnostics | None = None
    decision: ReceptacleDecision | None = None
    field: DensityField | None = None
    candidates: CandidateList | None = None
    metrics: dict = None
    ground_truth: tuple[str, ...] = ()
    scenario_id: str | None = None
    placed: bool = False
    outcome: PlacementOutcome | None = None


def _scene_key(scene: Scene, resolution: float, sim: SimConfig) -> str:
    blob = json.dumps(
        {
            "scene": scene_to_document(scene),
            "resolution": resolution,
            "sim": {
                "steps": sim.steps,
                "dt": sim.dt,
                "tilts": [[list(a), ang] for a, ang in sim.perturbation_tilts],
                "step": sim.tilt_step,
                "sigma_mode": sim.sigma_mode,
                "tolerance": sim.stability_tolerance,
                "invert": sim.invert_reward,
            },
        },
        sort_keys=True,
    )
    return hashlib.sha256(blob.encode()).hexdigest()


class Engine:
    """Owns run state, the physics backend, and the persistence log."""

    def __init__(self, cfg: PipelineConfig | None = None, store: RunStore | None = None):
        self.cfg = cfg or PipelineConfig()
        self.store = store or NullStore()
        self.backend = builtin_backend()
        self.runs: dict[str, RunRecord] = {}
        self._sweep_cache: dict[str, tuple[CandidateGrid, StableSet, SweepDiagnostics]] = {}
        self._restore()

    # -- persistence -------------------------------------------------------

    def _restore(self) -> None:
        for event in self.store.replay():
            if event["type"] == "plan":
                record = _record_from_event(event)
                self.runs[record.run_id] = record
            elif event["type"] == "select":
                record = self.runs.get(event["run_id"])
                if record is not None:
                    record.placed = True
                    record.outcome = PlacementOutcome(
                        selected_point=tuple(event["outcome"]["selected_point"]),
                        stable=event["outcome"]["stable"],
                        deviation=event["outcome"]["deviation"],
                        reasonable=event["outcome"]["reasonable"],
                    )

    # -- stages -------------------------------------------------------------

    def _sweep(self, scene: Scene, cfg: PipelineConfig):
        key = _scene_key(scene, cfg.resolution, cfg.sim)
        hit = self._sweep_cache.get(key)
        if hit is not None:
            return hit
        grid = generate_candidates(scene, cfg.resolution, SURFACE_SNAP)
        if len(grid) == 0:
            result = (grid, StableSet(entries=(), config=cfg.sim), None)
        else:
            stable, diagnostics = sweep_stability(self.backend, scene, grid, cfg.sim)
            result = (grid, stable, diagnostics)
        self._sweep_cache[key] = result
        return result

    def _reason(
        self, scene: Scene, task: TaskDescription, cfg: PipelineConfig, chat_client
    ) -> tuple[ReceptacleDecision, dict]:
        summary = summarize_scene(scene)
        extra: dict = {}
        if cfg.reasoner == REASONER_RULE:
            return rule_reason(summary, task), extra
        if chat_client is None:
            chat_client = RemoteChatClient()
        try:
            return llm_reason(chat_client, summary, task), extra
        except PlacekitError as exc:
            if cfg.reasoner != REASONER_LLM_WITH_FALLBACK:
                raise
            logger.warning("remote reasoner failed (%s); falling back to rules", exc)
            extra = {"reasoning_fallback": True, "remote_error": str(exc)}
            return rule_reason(summary, task), extra

    # -- public API -----------------------------------------------------------

    def plan(
        self,
        scene: Scene,
        task: TaskDescription,
        cfg: PipelineConfig | None = None,
        chat_client=None,
        scenario_id: str | None = None,
        ground_truth: tuple[str, ...] = (),
    ) -> PlanResult:
        cfg = cfg or self.cfg
        run_id = uuid.uuid4().hex[:12]
        total_start = time.perf_counter()

        sweep_start = time.perf_counter()
        grid, stable, diagnostics = self._sweep(scene, cfg)
        stability_time = time.perf_counter() - sweep_start
        stable_fraction = len(stable) / len(grid) if len(grid) else 0.0

        metrics: dict = {
            "stability_wall_time": stability_time,
            "reasoning": {"wall_time": 0.0, "prompt_tokens": 0, "completion_tokens": 0},
        }

        if len(stable) == 0:
            empty = CandidateList(
                candidates=(), seed=cfg.seed, min_separation=cfg.min_separation,
                short_list=True,
            )
            metrics["total_wall_time"] = time.perf_counter() - total_start
            record = RunRecord(
                run_id=run_id, scene=scene, task=task, cfg=cfg,
                status=STATUS_NO_STABLE, grid=grid, stable=stable,
                diagnostics=diagnostics, candidates=empty, metrics=metrics,
                ground_truth=tuple(ground_truth), scenario_id=scenario_id,
            )
            self.runs[run_id] = record
            self.store.append(_plan_event(record))
            return PlanResult(
                run_id=run_id, status=STATUS_NO_STABLE, candidates=empty,
                decision=None, stable_fraction=stable_fraction, metrics=metrics,
            )

        decision, extra = self._reason(scene, task, cfg, chat_client)
        metrics.update(extra)
        metrics["reasoning"] = {
            "wall_time": decision.metrics.wall_time,
            "prompt_tokens": decision.metrics.prompt_tokens,
            "completion_tokens": decision.metrics.completion_tokens,
        }

        rewards = receptacle_points(
            stable, decision, scene, radius=cfg.receptacle_radius
        )
        field_ = build_density(
            stable, rewards, cfg.blend, cfg.kde, grid_spec=_heatmap_spec(scene, stable, cfg)
        )
        candidates = sample_candidates(
            field_, cfg.sample_k, min_separation=cfg.min_separation, seed=cfg.seed
        )
        metrics["total_wall_time"] = time.perf_counter() - total_start

        record = RunRecord(
            run_id=run_id, scene=scene, task=task, cfg=cfg, status=STATUS_OK,
            grid=grid, stable=stable, diagnostics=diagnostics, decision=decision,
            field=field_, candidates=candidates, metrics=metrics,
            ground_truth=tuple(ground_truth), scenario_id=scenario_id,
        )
        self.runs[run_id] = record
        self.store.append(_plan_event(record))
        return PlanResult(
            run_id=run_id, status=STATUS_OK, candidates=candidates, decision=decision,
            stable_fraction=stable_fraction, metrics=metrics,
        )

    def get_run(self, run_id: str) -> RunRecord:
        record = self.runs.get(run_id)
        if record is None:
            raise RunNotFoundError(f"unknown run {run_id!r}")
        return record

    def execute_selection(self, run_id: str, rank: int) -> PlacementOutcome:
        """Re-simulate the chosen candidate and mark the run as placed."""
        record = self.get_run(run_id)
        if record.placed:
            raise AlreadyPlacedError(f"run {run_id} already placed a candidate")
        if record.candidates is None or not (
            1 <= rank <= len(record.candidates.candidates)
        ):
            raise RunNotFoundError(f"run {run_id} has no candidate of rank {rank}")
        candidate = record.candidates.candidates[rank - 1]
        point = np.array(candidate.point)
        trace = simulate_placement(self.backend, record.scene, point, record.cfg.sim)
        stable = trace_is_stable(trace, record.cfg.sim)
        deviation = float(abs(trace.samples[-1] - trace.samples[0]))
        reasonable = None
        if record.ground_truth:
            reasonable = _within_ground_truth(
                record.scene, record.ground_truth, point, record.cfg.receptacle_radius
            )
        outcome = PlacementOutcome(
            selected_point=candidate.point,
            stable=stable,
            deviation=deviation,
            reasonable=reasonable,
        )
        record.placed = True
        record.outcome = outcome
        self.store.append(
            {
                "type": "select",
                "run_id": run_id,
                "rank": rank,
                "outcome": {
                    "selected_point": list(candidate.point),
                    "stable": stable,
                    "deviation": deviation,
                    "reasonable": reasonable,
                },
            }
        )
        return outcome


def _within_ground_truth(
    scene: Scene, ground_truth: tuple[str, ...], point: np.ndarray, radius: float
) -> bool:
    summary = summarize_scene(scene)
    by_id = {r.id: r for r in summary.receptacles}
    for gid in ground_truth:
        rec = by_id.get(gid)
        if rec is not None and rec.aabb.distance_to_point(point) <= radius:
            return True
    return False


def _heatmap_spec(scene: Scene, stable: StableSet, cfg: PipelineConfig) -> GridSpec:
    """Top-down evaluation plane at the weight-relevant support height."""
    ws = scene.workspace
    res = cfg.resolution
    nx = int(np.floor((ws.max.x - ws.min.x) / res + 1e-9)) + 1
    ny = int(np.floor((ws.max.y - ws.min.y) / res + 1e-9)) + 1
    pts = stable.points_array()
    z_ref = float(pts[:, 2].mean()) if len(pts) else ws.min.z
    return GridSpec(
        origin=(ws.min.x, ws.min.y, z_ref), spacing=(res, res, res), dims=(nx, ny, 1)
    )


# ---------------------------------------------------------------------------
# Event (de)serialization
# ---------------------------------------------------------------------------


def _plan_event(record: RunRecord) -> dict:
    field_node = None
    if record.field is not None:
        spec = record.field.grid_spec
        field_node = {
            "points": record.field.support.points.tolist(),
            "weights": record.field.support.weights.tolist(),
            "bandwidth": record.field.config.bandwidth,
            "kernel": record.field.config.kernel,
            "grid_spec": {
                "origin": list(spec.origin),
                "spacing": list(spec.spacing),
                "dims": list(spec.dims),
            }
            if spec is not None
            else None,
        }
    decision_node = None
    if record.decision is not None:
        decision_node = {
            "receptacle_ids": list(record.decision.receptacle_ids),
            "rationale": record.decision.rationale,
            "metrics": {
                "wall_time": record.decision.metrics.wall_time,
                "prompt_tokens": record.decision.metrics.prompt_tokens,
                "completion_tokens": record.decision.metrics.completion_tokens,
            },
        }
    candidates_node = {
        "seed": record.candidates.seed,
        "min_separation": record.candidates.min_separation,
        "short_list": record.candidates.short_list,
        "items": [
            {"point": list(c.point), "density": c.density, "rank": c.rank}
            for c in record.candidates.candidates
        ],
    }
    return {
        "type": "plan",
        "run_id": record.run_id,
        "status": record.status,
        "scenario_id": record.scenario_id,
        "scene": scene_to_document(record.scene),
        "task": {"text": record.task.text, "similarity_hint": record.task.similarity_hint},
        "config": config_to_dict(record.cfg),
        "ground_truth": list(record.ground_truth),
        "stable_fraction": (
            len(record.stable) / len(record.grid)
            if record.grid is not None and len(record.grid)
            else 0.0
        ),
        "decision": decision_node,
        "candidates": candidates_node,
        "metrics": record.metrics,
        "density": field_node,
    }


def _record_from_event(event: dict) -> RunRecord:
    scene = parse_scene(event["scene"])
    task = TaskDescription(
        text=event["task"]["text"], similarity_hint=event["task"]["similarity_hint"]
    )
    cfg = config_from_dict(event["config"])
    decision = None
    if event.get("decision"):
        d = event["decision"]
        decision = ReceptacleDecision(
            receptacle_ids=tuple(d["receptacle_ids"]),
            rationale=d["rationale"],
            metrics=ReasonerMetrics(
                wall_time=d["metrics"]["wall_time"],
                prompt_tokens=d["metrics"]["prompt_tokens"],
                completion_tokens=d["metrics"]["completion_tokens"],
            ),
        )
    field_ = None
    if event.get("density"):
        f = event["density"]
        spec = None
        if f.get("grid_spec"):
            g = f["grid_spec"]
            spec = GridSpec(
                origin=tuple(g["origin"]), spacing=tuple(g["spacing"]), dims=tuple(g["dims"])
            )
        support = WeightedPoints(
            points=np.array(f["points"], dtype=float).reshape(-1, 3),
            weights=np.array(f["weights"], dtype=float),
        )
        kde_cfg = KdeConfig(bandwidth=f["bandwidth"], kernel=f["kernel"])
        values = None
        if spec is not None:
            from .density import kde_evaluate

            values = kde_evaluate(support, kde_cfg, spec.points())
        field_ = DensityField(
            support=support, config=kde_cfg, grid_spec=spec, grid_values=values
        )
    c = event["candidates"]
    candidates = CandidateList(
        candidates=tuple(
            Candidate(point=tuple(i["point"]), density=i["density"], rank=i["rank"])
            for i in c["items"]
        ),
        seed=c["seed"],
        min_separation=c["min_separation"],
        short_list=c["short_list"],
    )
    return RunRecord(
        run_id=event["run_id"],
        scene=scene,
        task=task,
        cfg=cfg,
        status=event["status"],
        decision=decision,
        field=field_,
        candidates=candidates,
        metrics=event.get("metrics", {}),
        ground_truth=tuple(event.get("ground_truth", ())),
        scenario_id=event.get("scenario_id"),
    )
