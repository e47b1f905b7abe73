"""Placement recommendation engine.

Given a declarative 3-D scene, an object to place, and a task description,
the pipeline produces a reward-weighted density over candidate placement
points by combining simulated physical stability with receptacle-level
reasoning, then serves ranked candidates for an operator to choose from.
"""

from .geometry import Aabb, Pose, UnitQuat, Vec3
from .scene import (
    Scene,
    SceneObject,
    ShapePrimitive,
    TaskDescription,
    object_aabb,
    parse_scene,
    scene_to_document,
    serialize_scene,
)
from .grid import CandidateGrid, generate_candidates
from .physics import QuasiStaticBackend, builtin_backend
from .stability import (
    OrientationTrace,
    SimConfig,
    StableSet,
    simulate_placement,
    stable_set,
    sweep_stability,
)
from .reasoning import (
    ReceptacleDecision,
    ReceptacleSet,
    SceneSummary,
    receptacle_points,
    rule_reason,
    summarize_scene,
)
from .llm import RemoteChatClient, llm_reason
from .density import (
    BlendConfig,
    CandidateList,
    DensityField,
    KdeConfig,
    WeightedPoints,
    blend_weights,
    build_density,
    kde_evaluate,
    sample_candidates,
)
from .pipeline import Engine, PipelineConfig, PlanResult, PlacementOutcome
from .bench import BenchReport, load_scenario, run_benchmark

__version__ = "0.1.0"

__all__ = [
    "Aabb",
    "BenchReport",
    "BlendConfig",
    "CandidateGrid",
    "CandidateList",
    "DensityField",
    "Engine",
    "KdeConfig",
    "OrientationTrace",
    "PipelineConfig",
    "PlacementOutcome",
    "PlanResult",
    "Pose",
    "QuasiStaticBackend",
    "ReceptacleDecision",
    "ReceptacleSet",
    "RemoteChatClient",
    "Scene",
    "SceneObject",
    "SceneSummary",
    "ShapePrimitive",
    "SimConfig",
    "StableSet",
    "TaskDescription",
    "UnitQuat",
    "Vec3",
    "WeightedPoints",
    "blend_weights",
    "build_density",
    "builtin_backend",
    "generate_candidates",
    "kde_evaluate",
    "llm_reason",
    "load_scenario",
    "object_aabb",
    "parse_scene",
    "receptacle_points",
    "rule_reason",
    "run_benchmark",
    "sample_candidates",
    "scene_to_document",
    "serialize_scene",
    "simulate_placement",
    "stable_set",
    "summarize_scene",
    "sweep_stability",
]
