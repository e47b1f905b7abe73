"""REST API for the operator loop.

Scenes are posted once and planned against by id; run artifacts are
addressable by run id, including the density grid in text or binary form.
All errors are reported as ``{stage, code, message}``.
"""

from __future__ import annotations

import threading
import uuid

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, PlainTextResponse, Response
from pydantic import BaseModel

from . import __version__
from .density import grid_to_binary, grid_to_text
from .errors import PlacekitError, RunNotFoundError, SceneValidationError
from .pipeline import Engine, PipelineConfig, config_from_dict
from .scene import Scene, TaskDescription, parse_scene, scene_to_document
from .store import RunStore

_STATUS = {
    "not_found": 404,
    "already_placed": 409,
    "scene_validation": 400,
    "contract_violation": 400,
    "no_receptacle": 400,
    "bench_validation": 400,
    "no_candidates": 422,
    "completion_parse": 502,
    "remote_failure": 502,
    "unsupported_geometry": 422,
}


class PlanBody(BaseModel):
    task: str
    similarity_hint: str = "none"
    overrides: dict = {}


class SelectBody(BaseModel):
    rank: int


def _plan_payload(result, base_url: str) -> dict:
    decision = None
    if result.decision is not None:
        decision = {
            "receptacle_ids": list(result.decision.receptacle_ids),
            "rationale": result.decision.rationale,
            "metrics": {
                "wall_time": result.decision.metrics.wall_time,
                "prompt_tokens": result.decision.metrics.prompt_tokens,
                "completion_tokens": result.decision.metrics.completion_tokens,
            },
        }
    return {
        "run_id": result.run_id,
        "status": result.status,
        "stable_fraction": result.stable_fraction,
        "decision": decision,
        "metrics": result.metrics,
        "candidates": [
            {"point": list(c.point), "density": c.density, "rank": c.rank}
            for c in result.candidates.candidates
        ],
        "short_list": result.candidates.short_list,
        "seed": result.candidates.seed,
        "min_separation": result.candidates.min_separation,
        "density_grid": f"{base_url}runs/{result.run_id}/density",
    }


def _outcome_payload(outcome) -> dict:
    return {
        "selected_point": list(outcome.selected_point),
        "stable": outcome.stable,
        "deviation": outcome.deviation,
        "reasonable": outcome.reasonable,
    }


def create_app(
    cfg: PipelineConfig | None = None,
    store: RunStore | None = None,
    chat_client=None,
) -> FastAPI:
    engine = Engine(cfg, store=store)
    app = FastAPI(title="placekit", version=__version__)
    scenes: dict[str, Scene] = {}
    placed_points: dict[str, list[list[float]]] = {}
    runs_to_scene: dict[str, str] = {}
    lock = threading.Lock()

    @app.exception_handler(PlacekitError)
    async def placekit_error_handler(_: Request, exc: PlacekitError):
        return JSONResponse(
            status_code=_STATUS.get(exc.code, 500),
            content={"stage": exc.stage, "code": exc.code, "message": exc.message},
        )

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", "version": __version__}

    @app.post("/scenes")
    def post_scene(document: dict):
        scene = parse_scene(document)
        scene_id = uuid.uuid4().hex[:12]
        with lock:
            scenes[scene_id] = scene
            placed_points[scene_id] = []
        return {"scene_id": scene_id}

    @app.get("/scenes/{scene_id}")
    def get_scene(scene_id: str):
        scene = scenes.get(scene_id)
        if scene is None:
            raise RunNotFoundError(f"unknown scene {scene_id!r}")
        return {
            "scene": scene_to_document(scene),
            "placed": placed_points.get(scene_id, []),
        }

    @app.post("/scenes/{scene_id}/plan")
    def post_plan(scene_id: str, body: PlanBody, request: Request):
        scene = scenes.get(scene_id)
        if scene is None:
            raise RunNotFoundError(f"unknown scene {scene_id!r}")
        if not body.task:
            raise SceneValidationError("task text must be nonempty", "task")
        run_cfg = config_from_dict(body.overrides, base=engine.cfg)
        task = TaskDescription(text=body.task, similarity_hint=body.similarity_hint)
        result = engine.plan(scene, task, cfg=run_cfg, chat_client=chat_client)
        with lock:
            runs_to_scene[result.run_id] = scene_id
        return _plan_payload(result, base_url=str(request.base_url))

    @app.get("/runs/{run_id}")
    def get_run(run_id: str):
        record = engine.get_run(run_id)
        payload = {
            "run_id": record.run_id,
            "status": record.status,
            "scenario_id": record.scenario_id,
            "task": {
                "text": record.task.text,
                "similarity_hint": record.task.similarity_hint,
            },
            "metrics": record.metrics,
            "placed": record.placed,
            "candidates": [
                {"point": list(c.point), "density": c.density, "rank": c.rank}
                for c in (record.candidates.candidates if record.candidates else ())
            ],
            "decision": (
                {
                    "receptacle_ids": list(record.decision.receptacle_ids),
                    "rationale": record.decision.rationale,
                }
                if record.decision
                else None
            ),
            "outcome": _outcome_payload(record.outcome) if record.outcome else None,
        }
        return payload

    @app.get("/runs/{run_id}/density")
    def get_density(run_id: str, format: str = "binary"):
        record = engine.get_run(run_id)
        if record.field is None:
            raise RunNotFoundError(f"run {run_id} has no density field")
        if format == "text":
            return PlainTextResponse(grid_to_text(record.field))
        return Response(
            content=grid_to_binary(record.field), media_type="application/octet-stream"
        )

    @app.post("/runs/{run_id}/select")
    def post_select(run_id: str, body: SelectBody):
        outcome = engine.execute_selection(run_id, body.rank)
        scene_id = runs_to_scene.get(run_id)
        if scene_id is not None:
            with lock:
                placed_points[scene_id].append(list(outcome.selected_point))
        return _outcome_payload(outcome)

    app.state.engine = engine
    return app
