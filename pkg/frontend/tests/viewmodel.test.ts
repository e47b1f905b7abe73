import { describe, expect, it } from "vitest";

import type {
  OutcomeResponse,
  PlanResponse,
  SceneResponse,
} from "../src/api.js";
import { decodeGrid } from "../src/grid.js";
import {
  candidateMarkers,
  heatCells,
  outcomeBanner,
  planView,
  sceneView,
} from "../src/viewmodel.js";
import { fixtureBytes, fixtureJson } from "./helpers.js";

const plan = fixtureJson<PlanResponse>("plan_response.json");
const outcome = fixtureJson<OutcomeResponse>("outcome_response.json");
const scene = fixtureJson<SceneResponse>("scene_response.json");

describe("candidate markers mirror the plan response", () => {
  it("keeps count, ranks, coordinates, and densities verbatim", () => {
    const markers = candidateMarkers(plan.candidates);
    expect(markers.length).toBe(plan.candidates.length);
    markers.forEach((marker, i) => {
      const source = plan.candidates[i];
      expect(marker.rank).toBe(source.rank);
      expect(marker.label).toBe(String(source.rank));
      expect([marker.x, marker.y, marker.z]).toEqual(source.point);
      expect(marker.density).toBe(source.density);
    });
    expect(markers.map((m) => m.rank)).toEqual(
      plan.candidates.map((c) => c.rank),
    );
  });
});

describe("plan view", () => {
  it("copies decision and status fields without rewriting them", () => {
    const view = planView(plan);
    expect(view.runId).toBe(plan.run_id);
    expect(view.status).toBe(plan.status);
    expect(view.stableFraction).toBe(plan.stable_fraction);
    expect(view.receptacleIds).toEqual(plan.decision!.receptacle_ids);
    expect(view.rationale).toBe(plan.decision!.rationale);
    expect(view.reasoningTokens).toBe(
      plan.decision!.metrics.prompt_tokens +
        plan.decision!.metrics.completion_tokens,
    );
    expect(view.notice).toBeNull();
  });

  it("raises the empty-candidates notice", () => {
    const empty: PlanResponse = {
      ...plan,
      status: "no_stable_placement",
      candidates: [],
      decision: null,
    };
    const view = planView(empty);
    expect(view.markers).toEqual([]);
    expect(view.notice).toBe("no stable placement found in this scene");
  });
});

describe("outcome banner", () => {
  it("embeds the served deviation value verbatim", () => {
    const banner = outcomeBanner(outcome);
    expect(banner).toContain(String(outcome.deviation));
    expect(banner).toContain(outcome.stable ? "stable" : "unstable");
  });

  it("handles runs without ground truth", () => {
    const banner = outcomeBanner({ ...outcome, reasonable: null });
    expect(banner).not.toContain("reasonable");
  });
});

describe("scene view", () => {
  it("outlines every object in both projections", () => {
    const view = sceneView(scene);
    expect(view.topDown.length).toBe(scene.scene.objects.length);
    expect(view.side.length).toBe(scene.scene.objects.length);
    expect(view.placed).toEqual(scene.placed);
    const desk = view.topDown.find((r) => r.id === "desk")!;
    expect(desk.x1).toBeGreaterThan(desk.x0);
    expect(desk.y1).toBeGreaterThan(desk.y0);
  });
});

describe("heat cells", () => {
  it("copies every grid value at its lattice position", () => {
    const grid = decodeGrid(fixtureBytes("density_grid.bin"));
    const cells = heatCells(grid);
    expect(cells.length).toBe(grid.dims[0] * grid.dims[1]);
    const [, ny, nz] = grid.dims;
    const probe = cells[ny + 3]; // ix = 1, iy = 3
    expect(probe.value).toBe(grid.values[(1 * ny + 3) * nz]);
    expect(probe.x).toBeCloseTo(grid.origin[0] + grid.spacing[0], 12);
  });
});
