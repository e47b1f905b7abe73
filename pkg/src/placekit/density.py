"""Reward-weighted kernel density over stable points and seeded sampling.

The density at a query q over support points p_i with weights w_i is

    (1 / (N * h)) * sum_i w_i * exp(-||q - p_i||^2 / (2 h^2))

with N the support size and h the bandwidth.  The kernel is deliberately
unnormalized; every consumer only compares densities or takes argmaxes, so
the constant prefactor is irrelevant and kept in this literal form.
Weights blend the normalized stability reward with the binary receptacle
reward through a single mixing parameter beta.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import ContractViolationError, NoCandidatesError
from .reasoning import ReceptacleSet
from .stability import StableSet

GAUSSIAN_RBF = "gaussian_rbf"

DEFAULT_BANDWIDTH = 0.05
DEFAULT_BETA = 0.1
DEFAULT_MIN_SEPARATION = 0.02

GRID_MAGIC = b"PKDG001\x00"


@dataclass(frozen=True)
class KdeConfig:
    bandwidth: float = DEFAULT_BANDWIDTH
    kernel: str = GAUSSIAN_RBF

    def __post_init__(self):
        if self.bandwidth <= 0.0:
            raise ContractViolationError("bandwidth must be positive", stage="density")
        if self.kernel != GAUSSIAN_RBF:
            raise ContractViolationError(
                f"unknown kernel {self.kernel!r}", stage="density"
            )


@dataclass(frozen=True)
class BlendConfig:
    beta: float = DEFAULT_BETA

    def __post_init__(self):
        if not 0.0 <= self.beta <= 1.0:
            raise ContractViolationError("beta must lie in [0, 1]", stage="density")


@dataclass(frozen=True)
class WeightedPoints:
    points: np.ndarray  # (N, 3)
    weights: np.ndarray  # (N,)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 3)
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if len(pts) != len(w):
            raise ContractViolationError(
                "points and weights must have equal length", stage="density"
            )
        if not np.all(np.isfinite(w)) or np.any(w < 0.0):
            raise ContractViolationError(
                "weights must be finite and nonnegative", stage="density"
            )
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class GridSpec:
    """Regular evaluation lattice: origin corner, per-axis spacing, point counts."""

    origin: tuple[float, float, float]
    spacing: tuple[float, float, float]
    dims: tuple[int, int, int]

    def points(self) -> np.ndarray:
        ox, oy, oz = self.origin
        sx, sy, sz = self.spacing
        nx, ny, nz = self.dims
        xs = ox + sx * np.arange(nx)
        ys = oy + sy * np.arange(ny)
        zs = oz + sz * np.arange(nz)
        out = np.empty((nx * ny * nz, 3))
        i = 0
        for x in xs:
            for y in ys:
                for z in zs:
                    out[i] = (x, y, z)
                    i += 1
        return out


@dataclass(frozen=True)
class DensityField:
    support: WeightedPoints
    config: KdeConfig
    grid_spec: GridSpec | None = None
    grid_values: np.ndarray | None = None  # row-major over grid_spec.points()

    def evaluate(self, queries) -> np.ndarray:
        return kde_evaluate(self.support, self.config, queries)


@dataclass(frozen=True)
class Candidate:
    point: tuple[float, float, float]
    density: float
    rank: int


@dataclass(frozen=True)
class CandidateList:
    candidates: tuple[Candidate, ...]
    seed: int
    min_separation: float
    short_list: bool  # set when separation/support exhausted before k draws


def kde_evaluate(support: WeightedPoints, cfg: KdeConfig, queries) -> np.ndarray:
    """Density at one query point or an array of them (vectorized)."""
    if len(support) == 0:
        raise ContractViolationError("support must be nonempty", stage="density")
    q = np.asarray(queries, dtype=float)
    single = q.ndim == 1
    q = q.reshape(-1, 3)
    h = cfg.bandwidth
    # (M, N) squared distances in bandwidth units.
    diff = q[:, None, :] - support.points[None, :, :]
    d2 = np.einsum("mnk,mnk->mn", diff, diff) / (h * h)
    vals = (np.exp(-0.5 * d2) @ support.weights) / (len(support) * h)
    return float(vals[0]) if single else vals


def blend_weights(
    stable: StableSet, receptacle: ReceptacleSet, blend: BlendConfig
) -> WeightedPoints:
    """Per-point weight beta * stability_reward_norm + (1 - beta) * receptacle_reward."""
    pts = stable.points_array()
    if len(pts) != len(receptacle.points) or not np.array_equal(pts, receptacle.points):
        raise ContractViolationError(
            "receptacle rewards do not align with the stable set", stage="density"
        )
    norm = np.array([e.reward_norm for e in stable.entries])
    weights = blend.beta * norm + (1.0 - blend.beta) * receptacle.rewards
    return WeightedPoints(points=pts, weights=weights)


def build_density(
    stable: StableSet,
    receptacle: ReceptacleSet,
    blend: BlendConfig,
    kde_cfg: KdeConfig,
    grid_spec: GridSpec | None = None,
) -> DensityField:
    support = blend_weights(stable, receptacle, blend)
    grid_values = None
    if grid_spec is not None:
        grid_values = kde_evaluate(support, kde_cfg, grid_spec.points())
    return DensityField(
        support=support, config=kde_cfg, grid_spec=grid_spec, grid_values=grid_values
    )


def sample_candidates(
    field: DensityField,
    k: int,
    min_separation: float = DEFAULT_MIN_SEPARATION,
    seed: int = 0,
) -> CandidateList:
    """Seeded weighted sampling without replacement, spaced by min_separation.

    Draw probability is proportional to the field value at each support
    point; draws closer than min_separation to an accepted candidate are
    discarded.  When fewer than k candidates can satisfy the spacing the
    list is returned short and flagged.  Output is sorted by density
    descending (stable, so equal densities keep acceptance order).
    """
    if k < 1:
        raise ContractViolationError("k must be >= 1", stage="density")
    if len(field.support) == 0:
        raise ContractViolationError("support must be nonempty", stage="density")
    pts = field.support.points
    densities = field.evaluate(pts)
    positive = densities > 0.0
    if not np.any(positive):
        raise NoCandidatesError(
            "density is zero everywhere: no stable point is reasonable or rewarded"
        )
    rng = np.random.default_rng(seed)
    pool = list(np.flatnonzero(positive))
    accepted: list[int] = []
    while pool and len(accepted) < k:
        weights = densities[pool]
        probs = weights / weights.sum()
        draw = int(rng.choice(len(pool), p=probs))
        idx = pool.pop(draw)
        p = pts[idx]
        if accepted and min_separation > 0.0:
            dists = np.linalg.norm(pts[accepted] - p, axis=1)
            if np.min(dists) < min_separation:
                continue
        accepted.append(idx)
    ordered = sorted(accepted, key=lambda i: -densities[i])
    candidates = tuple(
        Candidate(
            point=(float(pts[i][0]), float(pts[i][1]), float(pts[i][2])),
            density=float(densities[i]),
            rank=rank,
        )
        for rank, i in enumerate(ordered, start=1)
    )
    return CandidateList(
        candidates=candidates,
        seed=seed,
        min_separation=min_separation,
        short_list=len(candidates) < k,
    )


# ---------------------------------------------------------------------------
# Evaluation-grid export
# ---------------------------------------------------------------------------


def grid_to_text(field: DensityField, delimiter: str = ",") -> str:
    """Rows of x, y, z, density over the evaluation grid."""
    if field.grid_spec is None or field.grid_values is None:
        raise ContractViolationError("field has no evaluation grid", stage="density")
    lines = [delimiter.join(["x", "y", "z", "density"])]
    for p, v in zip(field.grid_spec.points(), field.grid_values):
        lines.append(
            delimiter.join([f"{p[0]:.6f}", f"{p[1]:.6f}", f"{p[2]:.6f}", f"{v:.12g}"])
        )
    return "\n".join(lines) + "\n"


def grid_to_binary(field: DensityField) -> bytes:
    """Compact little-endian layout for the UI heatmap.

    Header: 8-byte magic, dims as 3 int64, origin as 3 float64, spacing as
    3 float64; then dims[0]*dims[1]*dims[2] float64 densities, row-major
    with z fastest (C order of an (nx, ny, nz) array).
    """
    if field.grid_spec is None or field.grid_values is None:
        raise ContractViolationError("field has no evaluation grid", stage="density")
    spec = field.grid_spec
    header = GRID_MAGIC + struct.pack(
        "<3q6d", *spec.dims, *spec.origin, *spec.spacing
    )
    body = np.ascontiguousarray(field.grid_values, dtype="<f8").tobytes()
    return header + body


def grid_from_binary(blob: bytes) -> tuple[GridSpec, np.ndarray]:
    if blob[:8] != GRID_MAGIC:
        raise ContractViolationError("not a density grid blob", stage="density")
    nx, ny, nz, ox, oy, oz, sx, sy, sz = struct.unpack_from("<3q6d", blob, 8)
    offset = 8 + struct.calcsize("<3q6d")
    values = np.frombuffer(blob, dtype="<f8", offset=offset, count=nx * ny * nz)
    spec = GridSpec(origin=(ox, oy, oz), spacing=(sx, sy, sz), dims=(nx, ny, nz))
    return spec, values.copy()
