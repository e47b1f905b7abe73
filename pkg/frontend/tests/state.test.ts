import { describe, expect, it } from "vitest";

import type { OutcomeResponse, PlanResponse } from "../src/api.js";
import {
  canPlan,
  canSelect,
  initialState,
  reduce,
  type ConsoleState,
} from "../src/state.js";
import { fixtureJson } from "./helpers.js";

const plan = fixtureJson<PlanResponse>("plan_response.json");
const outcome = fixtureJson<OutcomeResponse>("outcome_response.json");

function planned(): ConsoleState {
  let state = reduce(initialState, { type: "scene_loaded" });
  state = reduce(state, { type: "plan_requested" });
  return reduce(state, { type: "plan_succeeded", plan });
}

describe("console state machine", () => {
  it("walks the happy path to placed", () => {
    let state = planned();
    expect(state.phase).toBe("planned");
    expect(canSelect(state)).toBe(true);
    state = reduce(state, { type: "select_requested", rank: 1 });
    expect(state.phase).toBe("selecting");
    expect(canSelect(state)).toBe(false);
    state = reduce(state, {
      type: "select_succeeded",
      outcome,
      banner: "stable",
    });
    expect(state.phase).toBe("placed");
    expect(state.outcome).toBe(outcome);
  });

  it("refuses to plan before a scene is loaded", () => {
    expect(canPlan(initialState)).toBe(false);
    const state = reduce(initialState, { type: "plan_requested" });
    expect(state).toBe(initialState);
  });

  it("allows a single in-flight plan request", () => {
    let state = reduce(initialState, { type: "scene_loaded" });
    state = reduce(state, { type: "plan_requested" });
    expect(state.phase).toBe("planning");
    expect(canPlan(state)).toBe(false);
    const again = reduce(state, { type: "plan_requested" });
    expect(again).toBe(state);
  });

  it("disables selection while a plan is pending", () => {
    let state = planned();
    state = reduce(state, { type: "plan_requested" });
    expect(canSelect(state)).toBe(false);
    const ignored = reduce(state, { type: "select_requested", rank: 1 });
    expect(ignored).toBe(state);
  });

  it("keeps selection disabled after placing", () => {
    let state = planned();
    state = reduce(state, { type: "select_requested", rank: 1 });
    state = reduce(state, { type: "select_succeeded", outcome, banner: "ok" });
    expect(canSelect(state)).toBe(false);
    const ignored = reduce(state, { type: "select_requested", rank: 2 });
    expect(ignored).toBe(state);
  });

  it("treats an already-placed rejection as placed", () => {
    let state = planned();
    state = reduce(state, { type: "select_requested", rank: 1 });
    state = reduce(state, {
      type: "select_failed",
      message: "service/already_placed: run x already placed a candidate",
    });
    expect(state.phase).toBe("placed");
    expect(state.error).toContain("already_placed");
  });

  it("shows the empty-candidates notice", () => {
    let state = reduce(initialState, { type: "scene_loaded" });
    state = reduce(state, { type: "plan_requested" });
    state = reduce(state, {
      type: "plan_succeeded",
      plan: { ...plan, candidates: [], status: "no_stable_placement" },
    });
    expect(state.phase).toBe("scene_loaded");
    expect(state.banner).toBe("no stable placement");
    expect(canSelect(state)).toBe(false);
  });

  it("surfaces scene load failures as banners", () => {
    const state = reduce(initialState, {
      type: "scene_failed",
      message: "service/not_found: unknown scene 'x'",
    });
    expect(state.error).toContain("not_found");
    expect(state.phase).toBe("empty");
  });
});
