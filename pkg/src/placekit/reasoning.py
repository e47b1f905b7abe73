"""Receptacle reasoning: scene summaries, the rule matcher, proximity rewards.

The scene is projected into language-friendly descriptors; a reasoner (the
deterministic rule matcher here, or the remote chat client in ``llm``)
picks the receptacles that fit the task, and stable points within the
proximity radius of a chosen receptacle earn a binary reward.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractViolationError, NoReceptacleError
from .geometry import Aabb, Vec3
from .scene import Scene, TaskDescription, object_aabb
from .stability import StableSet

PROXIMITY_RADIUS = 0.1

DEFAULT_RECEPTACLE_MARKERS = ("rack", "shelf", "tray")

# Similarity kind -> the object attribute that must match.
_SIMILARITY_ATTRIBUTE = {
    "color": "color",
    "shape": "shape-class",
    "object_property": "category",
    "genre": "genre",
}

_KEYWORD_SCAN = (
    ("color", "color"),
    ("shape", "shape"),
    ("categor", "object_property"),
    ("genre", "genre"),
)


@dataclass(frozen=True)
class ObjectDescriptor:
    id: str
    label: str
    attributes: dict[str, str]
    center: Vec3
    size: Vec3


@dataclass(frozen=True)
class ReceptacleDescriptor:
    id: str
    label: str
    attributes: dict[str, str]
    aabb: Aabb


@dataclass(frozen=True)
class SceneSummary:
    objects: tuple[ObjectDescriptor, ...]
    placement_label: str
    placement_attributes: dict[str, str]
    receptacles: tuple[ReceptacleDescriptor, ...]

    def receptacle_ids(self) -> list[str]:
        return [r.id for r in self.receptacles]


@dataclass(frozen=True)
class ReasonerMetrics:
    wall_time: float = 0.0
    prompt_tokens: int = 0
    completion_tokens: int = 0

    def __post_init__(self):
        if self.prompt_tokens < 0 or self.completion_tokens < 0:
            raise ContractViolationError("token counts must be >= 0", stage="reasoning")


@dataclass(frozen=True)
class ReceptacleDecision:
    receptacle_ids: tuple[str, ...]
    rationale: str
    metrics: ReasonerMetrics = field(default_factory=ReasonerMetrics)

    def __post_init__(self):
        if not self.receptacle_ids:
            raise ContractViolationError(
                "a decision must name at least one receptacle", stage="reasoning"
            )


@dataclass(frozen=True)
class ReceptacleSet:
    points: np.ndarray  # (N, 3), identical to the stable set's points
    rewards: np.ndarray  # (N,), values in {0, 1}
    receptacle_ids: tuple[str, ...]
    radius: float


def is_receptacle_label(label: str, markers=DEFAULT_RECEPTACLE_MARKERS) -> bool:
    low = label.lower()
    return any(m in low for m in markers)


def _tier_descriptors(obj, aabb: Aabb, tiers: int) -> list[ReceptacleDescriptor]:
    """Split a tiered receptacle into stacked sub-receptacles, tier 1 lowest."""
    z0, z1 = aabb.min.z, aabb.max.z
    height = (z1 - z0) / tiers
    out = []
    for k in range(1, tiers + 1):
        sub = Aabb(
            Vec3(aabb.min.x, aabb.min.y, z0 + (k - 1) * height),
            Vec3(aabb.max.x, aabb.max.y, z0 + k * height),
        )
        out.append(
            ReceptacleDescriptor(
                id=f"{obj.id}#tier{k}",
                label=f"{obj.label} tier {k}",
                attributes=dict(obj.attributes),
                aabb=sub,
            )
        )
    return out


def summarize_scene(
    scene: Scene, receptacle_markers=DEFAULT_RECEPTACLE_MARKERS
) -> SceneSummary:
    """Project the scene into descriptors for reasoning.

    Objects whose label contains a receptacle marker become receptacle
    candidates; a candidate carrying a ``tiers`` attribute is expanded
    into per-tier sub-receptacles by an even z split of its bound.
    """
    objects = []
    receptacles = []
    for obj in scene.objects:
        aabb = object_aabb(obj)
        objects.append(
            ObjectDescriptor(
                id=obj.id,
                label=obj.label,
                attributes=dict(obj.attributes),
                center=aabb.center(),
                size=aabb.size(),
            )
        )
        if is_receptacle_label(obj.label, receptacle_markers):
            tiers = obj.attributes.get("tiers")
            if tiers is not None and int(tiers) > 1:
                receptacles.extend(_tier_descriptors(obj, aabb, int(tiers)))
            else:
                receptacles.append(
                    ReceptacleDescriptor(
                        id=obj.id,
                        label=obj.label,
                        attributes=dict(obj.attributes),
                        aabb=aabb,
                    )
                )
    return SceneSummary(
        objects=tuple(objects),
        placement_label=scene.placement_object.label,
        placement_attributes=dict(scene.placement_object.attributes),
        receptacles=tuple(receptacles),
    )


def resolve_similarity(task: TaskDescription) -> str:
    """Similarity kind: explicit hint first, then task-text keywords, else category."""
    if task.similarity_hint != "none":
        return task.similarity_hint
    text = task.text.lower()
    for needle, kind in _KEYWORD_SCAN:
        if needle in text:
            return kind
    return "object_property"


def _objects_within(summary: SceneSummary, region: Aabb) -> list[ObjectDescriptor]:
    """Objects whose bound intersects the region; resting on top counts."""
    out = []
    for o in summary.objects:
        lo = o.center - Vec3(o.size.x / 2, o.size.y / 2, o.size.z / 2)
        hi = o.center + Vec3(o.size.x / 2, o.size.y / 2, o.size.z / 2)
        if (
            lo.x <= region.max.x + 1e-9
            and hi.x >= region.min.x - 1e-9
            and lo.y <= region.max.y + 1e-9
            and hi.y >= region.min.y - 1e-9
            and lo.z <= region.max.z + 1e-9
            and hi.z >= region.min.z - 1e-9
        ):
            out.append(o)
    return out


def rule_reason(summary: SceneSummary, task: TaskDescription) -> ReceptacleDecision:
    """Deterministic attribute matcher standing in for a language model.

    A receptacle matches when it, or any object centered inside its bound,
    shares the similarity attribute value with the placement object.  Ties
    keep summary order; with no match every candidate is returned in
    summary order.
    """
    if not summary.receptacles:
        raise NoReceptacleError("scene contains no receptacle candidates")
    similarity = resolve_similarity(task)
    attribute = _SIMILARITY_ATTRIBUTE[similarity]
    target = summary.placement_attributes.get(attribute)

    matched: list[str] = []
    if target is not None:
        for rec in summary.receptacles:
            values = {rec.attributes.get(attribute)}
            values.update(
                o.attributes.get(attribute) for o in _objects_within(summary, rec.aabb)
            )
            if target in values:
                matched.append(rec.id)
    if matched:
        return ReceptacleDecision(
            receptacle_ids=tuple(matched),
            rationale=f"{similarity} match on {attribute}={target!r}",
            metrics=ReasonerMetrics(),
        )
    return ReceptacleDecision(
        receptacle_ids=tuple(summary.receptacle_ids()),
        rationale="no attribute match",
        metrics=ReasonerMetrics(),
    )


def receptacle_points(
    stable: StableSet,
    decision: ReceptacleDecision,
    scene: Scene,
    radius: float = PROXIMITY_RADIUS,
    summary: SceneSummary | None = None,
) -> ReceptacleSet:
    """Binary proximity rewards over the stable set.

    A point earns reward 1 when its distance to the bound of any chosen
    receptacle is at most ``radius`` (zero when inside the bound).
    """
    if radius <= 0.0:
        raise ContractViolationError("radius must be positive", stage="reasoning")
    if summary is None:
        summary = summarize_scene(scene)
    by_id = {r.id: r for r in summary.receptacles}
    aabbs = []
    for chosen in decision.receptacle_ids:
        if chosen not in by_id:
            raise ContractViolationError(
                f"decision references unknown receptacle {chosen!r}", stage="reasoning"
            )
        aabbs.append(by_id[chosen].aabb)
    pts = stable.points_array()
    rewards = np.array(
        [
            1.0 if any(a.distance_to_point(p) <= radius for a in aabbs) else 0.0
            for p in pts
        ]
    )
    return ReceptacleSet(
        points=pts,
        rewards=rewards,
        receptacle_ids=decision.receptacle_ids,
        radius=radius,
    )
