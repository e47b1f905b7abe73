"""Stability sweep: simulate placements, classify stable points, assign rewards.

A placement run records the scalar (w) component of the object's orientation
quaternion at every step.  A point is stable when the run settles without
initial interpenetration and every sample stays within tolerance of the
first one.  The reward grows with the swing of the scalar component over
the run, scaled by 100, then min-max normalized over the stable set.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractViolationError
from .geometry import Vec3
from .grid import CandidateGrid
from .scene import Scene

DEFAULT_STEPS = 200
DEFAULT_DT = 0.005
DEFAULT_TOLERANCE = 0.05
DEFAULT_TILT_ANGLE = 0.05

FIXED_TOLERANCE = "fixed_tolerance"
SERIES_VARIANCE = "series_variance"


def _default_tilts() -> tuple[tuple[tuple[float, float, float], float], ...]:
    a = DEFAULT_TILT_ANGLE
    return (
        ((1.0, 0.0, 0.0), a),
        ((-1.0, 0.0, 0.0), a),
        ((0.0, 1.0, 0.0), a),
        ((0.0, -1.0, 0.0), a),
    )


@dataclass(frozen=True)
class SimConfig:
    steps: int = DEFAULT_STEPS
    dt: float = DEFAULT_DT
    stability_tolerance: float = DEFAULT_TOLERANCE
    sigma_mode: str = FIXED_TOLERANCE
    perturbation_tilts: tuple = field(default_factory=_default_tilts)
    perturbation_step: int | None = None  # defaults to steps // 2
    invert_reward: bool = False

    def __post_init__(self):
        if self.steps < 2:
            raise ContractViolationError("steps must be >= 2", stage="stability")
        if self.dt <= 0.0:
            raise ContractViolationError("dt must be positive", stage="stability")
        if self.stability_tolerance <= 0.0:
            raise ContractViolationError("tolerance must be positive", stage="stability")
        if self.sigma_mode not in (FIXED_TOLERANCE, SERIES_VARIANCE):
            raise ContractViolationError(
                f"unknown sigma mode {self.sigma_mode!r}", stage="stability"
            )
        for _, angle in self.perturbation_tilts:
            if not 0.0 < angle < math.pi / 2.0:
                raise ContractViolationError(
                    "tilt angles must lie in (0, pi/2)", stage="stability"
                )
        if self.perturbation_step is not None and not (
            1 <= self.perturbation_step <= self.steps
        ):
            raise ContractViolationError(
                "perturbation step must lie within the run", stage="stability"
            )

    @property
    def tilt_step(self) -> int:
        return self.perturbation_step if self.perturbation_step is not None else self.steps // 2


@dataclass(frozen=True)
class OrientationTrace:
    point: Vec3
    samples: np.ndarray  # (steps,) scalar quaternion components
    settled: bool
    penetrated: bool

    def max_deviation(self) -> float:
        return float(np.max(np.abs(self.samples - self.samples[0])))


@dataclass(frozen=True)
class StableEntry:
    point: Vec3
    reward_raw: float
    reward_norm: float


@dataclass(frozen=True)
class StableSet:
    entries: tuple[StableEntry, ...]
    config: SimConfig

    def points_array(self) -> np.ndarray:
        return np.array([p.point.as_array() for p in self.entries]).reshape(-1, 3)

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class PointDiagnostics:
    point: Vec3
    included: bool
    reward_raw: float
    max_deviation: float
    settled: bool
    penetrated: bool


@dataclass(frozen=True)
class SweepDiagnostics:
    rows: tuple[PointDiagnostics, ...]
    stable_fraction: float
    wall_time: float

    def to_delimited(self, delimiter: str = ",") -> str:
        header = delimiter.join(
            ["x", "y", "z", "included", "reward_raw", "max_deviation", "settled", "penetrated"]
        )
        lines = [header]
        for r in self.rows:
            lines.append(
                delimiter.join(
                    [
                        f"{r.point.x:.6f}",
                        f"{r.point.y:.6f}",
                        f"{r.point.z:.6f}",
                        str(int(r.included)),
                        f"{r.reward_raw:.9f}",
                        f"{r.max_deviation:.9f}",
                        str(int(r.settled)),
                        str(int(r.penetrated)),
                    ]
                )
            )
        return "\n".join(lines) + "\n"


def simulate_placement(backend, scene: Scene, point, cfg: SimConfig) -> OrientationTrace:
    """Run the object placed at one point through the full perturbation schedule.

    Each configured tilt gets a fresh run forked from the shared settling
    prefix; the returned trace is the worst run, the one whose maximum
    deviation from the first sample is largest (ties keep schedule order).
    """
    p = np.asarray(point, dtype=float)
    vec = Vec3.from_array(p)
    if not scene.workspace.contains(vec, tol=1e-9):
        raise ContractViolationError(
            f"placement point {p.tolist()} lies outside the workspace", stage="stability"
        )
    read_w = getattr(backend, "scalar_component", None) or (
        lambda s: backend.orientation(s).w
    )
    state = backend.place(scene, scene.placement_object, p)
    q1 = read_w(state)
    if backend.penetrating(state):
        samples = np.full(cfg.steps, q1, dtype=float)
        return OrientationTrace(point=vec, samples=samples, settled=False, penetrated=True)

    tilt_step = cfg.tilt_step
    prefix = [q1]
    w = q1
    for _ in range(2, tilt_step + 1):
        prev = state
        state = backend.step(state, cfg.dt)
        if state is not prev:
            w = read_w(state)
        prefix.append(w)

    best: OrientationTrace | None = None
    best_dev = -1.0
    for axis, angle in cfg.perturbation_tilts:
        run_state = backend.tilt(state, np.asarray(axis, dtype=float), angle)
        samples = list(prefix)
        w = read_w(run_state)
        for _ in range(tilt_step + 1, cfg.steps + 1):
            prev = run_state
            run_state = backend.step(run_state, cfg.dt)
            if run_state is not prev:
                w = read_w(run_state)
            samples.append(w)
        trace = OrientationTrace(
            point=vec,
            samples=np.asarray(samples, dtype=float),
            settled=backend.at_rest(run_state),
            penetrated=False,
        )
        dev = trace.max_deviation()
        if dev > best_dev:
            best, best_dev = trace, dev
    assert best is not None
    return best


def trace_is_stable(trace: OrientationTrace, cfg: SimConfig) -> bool:
    """Tolerance test for one trace; penetrated or unsettled runs never pass."""
    if trace.penetrated or not trace.settled:
        return False
    deviations_sq = (trace.samples - trace.samples[0]) ** 2
    if cfg.sigma_mode == FIXED_TOLERANCE:
        bound = cfg.stability_tolerance**2
    else:
        bound = float(np.var(trace.samples))
    return bool(np.all(deviations_sq <= bound))


def trace_reward(trace: OrientationTrace, cfg: SimConfig) -> float:
    swing = float(trace.samples.max() - trace.samples.min())
    if cfg.invert_reward:
        return 100.0 * (1.0 - swing)
    return 100.0 * swing


def stable_set(traces: list[OrientationTrace], cfg: SimConfig) -> StableSet:
    if not traces:
        raise ContractViolationError("traces must be nonempty", stage="stability")
    lengths = {len(t.samples) for t in traces}
    if len(lengths) != 1:
        raise ContractViolationError(
            f"mixed trace lengths {sorted(lengths)}", stage="stability"
        )
    kept = [(t.point, trace_reward(t, cfg)) for t in traces if trace_is_stable(t, cfg)]
    if not kept:
        return StableSet(entries=(), config=cfg)
    raws = np.array([r for _, r in kept])
    lo, hi = float(raws.min()), float(raws.max())
    if hi - lo < 1e-15:
        norms = np.ones_like(raws)
    else:
        norms = (raws - lo) / (hi - lo)
    entries = tuple(
        StableEntry(point=p, reward_raw=float(r), reward_norm=float(n))
        for (p, r), n in zip(kept, norms)
    )
    return StableSet(entries=entries, config=cfg)


def sweep_stability(
    backend, scene: Scene, grid: CandidateGrid, cfg: SimConfig
) -> tuple[StableSet, SweepDiagnostics]:
    """Simulate every grid point in order and reduce to the stable set."""
    if len(grid) == 0:
        raise ContractViolationError("candidate grid is empty", stage="stability")
    start = time.perf_counter()
    traces = [simulate_placement(backend, scene, p, cfg) for p in grid.points]
    stable = stable_set(traces, cfg)
    rows = tuple(
        PointDiagnostics(
            point=t.point,
            included=trace_is_stable(t, cfg),
            reward_raw=trace_reward(t, cfg),
            max_deviation=t.max_deviation(),
            settled=t.settled,
            penetrated=t.penetrated,
        )
        for t in traces
    )
    diagnostics = SweepDiagnostics(
        rows=rows,
        stable_fraction=len(stable) / len(grid),
        wall_time=time.perf_counter() - start,
    )
    return stable, diagnostics
