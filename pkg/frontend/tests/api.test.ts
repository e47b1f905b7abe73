import { describe, expect, it } from "vitest";

import {
  ApiClient,
  ApiError,
  type OutcomeResponse,
  type PlanResponse,
  type SceneResponse,
} from "../src/api.js";
import {
  binaryResponse,
  fixtureBytes,
  fixtureJson,
  jsonResponse,
} from "./helpers.js";

const planFixture = fixtureJson<PlanResponse>("plan_response.json");
const outcomeFixture = fixtureJson<OutcomeResponse>("outcome_response.json");
const sceneFixture = fixtureJson<SceneResponse>("scene_response.json");
const doubleSelect = fixtureJson<{ status: number; body: object }>(
  "double_select_response.json",
);
const notFound = fixtureJson<{ status: number; body: object }>(
  "not_found_response.json",
);

interface Call {
  url: string;
  init?: RequestInit;
}

/** Scripted fetch that also mimics the service's placed-state machine. */
function scriptedService() {
  const calls: Call[] = [];
  let placed = false;
  const fetchFn = async (url: string, init?: RequestInit): Promise<Response> => {
    calls.push({ url, init });
    if (url.endsWith("/scenes/scene-1")) return jsonResponse(sceneFixture);
    if (url.endsWith("/scenes/scene-1/plan")) return jsonResponse(planFixture);
    if (url.endsWith(`/runs/${planFixture.run_id}/density`)) {
      return binaryResponse(fixtureBytes("density_grid.bin"));
    }
    if (url.endsWith(`/runs/${planFixture.run_id}/select`)) {
      if (placed) return jsonResponse(doubleSelect.body, doubleSelect.status);
      placed = true;
      return jsonResponse(outcomeFixture);
    }
    return jsonResponse(notFound.body, notFound.status);
  };
  return { calls, fetchFn };
}

describe("api client", () => {
  it("round-trips scene, plan, density, and selection", async () => {
    const { calls, fetchFn } = scriptedService();
    const client = new ApiClient("http://svc", fetchFn);

    const scene = await client.getScene("scene-1");
    expect(scene.scene.placement_object.id).toBe("snack");

    const plan = await client.plan("scene-1", "sort objects based on colors", {
      sample_k: 10,
    });
    expect(plan.candidates.length).toBe(planFixture.candidates.length);
    const sent = JSON.parse(String(calls[1].init?.body));
    expect(sent.task).toBe("sort objects based on colors");
    expect(sent.overrides).toEqual({ sample_k: 10 });

    const grid = await client.densityGrid(plan.run_id);
    expect(grid.byteLength).toBeGreaterThan(80);

    const outcome = await client.select(plan.run_id, 1);
    expect(outcome).toEqual(outcomeFixture);
  });

  it("drives the placed state machine: double select is rejected", async () => {
    const { fetchFn } = scriptedService();
    const client = new ApiClient("http://svc", fetchFn);
    await client.select(planFixture.run_id, 1);
    try {
      await client.select(planFixture.run_id, 2);
      expect.unreachable("second select must fail");
    } catch (error) {
      const apiError = error as ApiError;
      expect(apiError).toBeInstanceOf(ApiError);
      expect(apiError.status).toBe(409);
      expect(apiError.detail.code).toBe("already_placed");
      expect(apiError.detail.stage).toBe("service");
    }
  });

  it("maps unknown resources to typed 404 errors", async () => {
    const { fetchFn } = scriptedService();
    const client = new ApiClient("http://svc", fetchFn);
    await expect(client.getScene("missing")).rejects.toMatchObject({
      status: 404,
      detail: { code: "not_found" },
    });
  });
});
