/**
 * Pure mapping from service payloads to what the console displays.
 *
 * Every number below is copied verbatim from a response field so the view
 * is a faithful mirror of the service (checked against recorded fixtures).
 */

import type {
  CandidateNode,
  OutcomeResponse,
  PlanResponse,
  SceneResponse,
} from "./api.js";
import type { DensityGrid } from "./grid.js";
import { topDownOutlines, sideOutlines, type Rect } from "./projection.js";

export interface CandidateMarker {
  rank: number;
  label: string;
  x: number;
  y: number;
  z: number;
  density: number;
}

export interface PlanView {
  runId: string;
  status: string;
  stableFraction: number;
  rationale: string | null;
  receptacleIds: string[];
  markers: CandidateMarker[];
  shortList: boolean;
  notice: string | null;
  reasoningTokens: number | null;
  reasoningSeconds: number | null;
}

export interface SceneView {
  topDown: Rect[];
  side: Rect[];
  placed: number[][];
  workspace: { min: [number, number, number]; max: [number, number, number] };
  placementLabel: string;
}

export function sceneView(response: SceneResponse): SceneView {
  return {
    topDown: topDownOutlines(response.scene),
    side: sideOutlines(response.scene),
    placed: response.placed,
    workspace: response.scene.workspace,
    placementLabel: response.scene.placement_object.label,
  };
}

export function candidateMarkers(candidates: CandidateNode[]): CandidateMarker[] {
  return candidates.map((candidate) => ({
    rank: candidate.rank,
    label: String(candidate.rank),
    x: candidate.point[0],
    y: candidate.point[1],
    z: candidate.point[2],
    density: candidate.density,
  }));
}

export function planView(plan: PlanResponse): PlanView {
  const metrics = plan.decision?.metrics ?? null;
  return {
    runId: plan.run_id,
    status: plan.status,
    stableFraction: plan.stable_fraction,
    rationale: plan.decision?.rationale ?? null,
    receptacleIds: plan.decision?.receptacle_ids ?? [],
    markers: candidateMarkers(plan.candidates),
    shortList: plan.short_list,
    notice:
      plan.status === "no_stable_placement"
        ? "no stable placement found in this scene"
        : null,
    reasoningTokens: metrics
      ? metrics.prompt_tokens + metrics.completion_tokens
      : null,
    reasoningSeconds: metrics ? metrics.wall_time : null,
  };
}

export function outcomeBanner(outcome: OutcomeResponse): string {
  const verdict = outcome.stable ? "stable" : "unstable";
  const reasonable =
    outcome.reasonable === null
      ? ""
      : outcome.reasonable
        ? ", reasonable"
        : ", unreasonable";
  return `${verdict}${reasonable} (deviation ${outcome.deviation})`;
}

/** Heatmap cells in world coordinates; values verbatim from the grid. */
export interface HeatCell {
  x: number;
  y: number;
  value: number;
}

export function heatCells(grid: DensityGrid): HeatCell[] {
  const [nx, ny, nz] = grid.dims;
  const cells: HeatCell[] = [];
  for (let ix = 0; ix < nx; ix++) {
    for (let iy = 0; iy < ny; iy++) {
      cells.push({
        x: grid.origin[0] + ix * grid.spacing[0],
        y: grid.origin[1] + iy * grid.spacing[1],
        value: grid.values[(ix * ny + iy) * nz],
      });
    }
  }
  return cells;
}
