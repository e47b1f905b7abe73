/**
 * Console state machine.
 *
 * One plan request in flight at a time; selection is disabled while a
 * plan is pending and permanently after a successful selection (the
 * service rejects double selection anyway; the console mirrors it).
 */

import type { OutcomeResponse, PlanResponse } from "./api.js";

export type Phase =
  | "empty"
  | "scene_loaded"
  | "planning"
  | "planned"
  | "selecting"
  | "placed";

export interface ConsoleState {
  phase: Phase;
  plan: PlanResponse | null;
  outcome: OutcomeResponse | null;
  banner: string | null;
  error: string | null;
}

export const initialState: ConsoleState = {
  phase: "empty",
  plan: null,
  outcome: null,
  banner: null,
  error: null,
};

export type Event =
  | { type: "scene_loaded" }
  | { type: "scene_failed"; message: string }
  | { type: "plan_requested" }
  | { type: "plan_succeeded"; plan: PlanResponse }
  | { type: "plan_failed"; message: string }
  | { type: "select_requested"; rank: number }
  | { type: "select_succeeded"; outcome: OutcomeResponse; banner: string }
  | { type: "select_failed"; message: string };

export function canPlan(state: ConsoleState): boolean {
  return (
    state.phase === "scene_loaded" ||
    state.phase === "planned" ||
    state.phase === "placed"
  );
}

export function canSelect(state: ConsoleState): boolean {
  return (
    state.phase === "planned" &&
    state.plan !== null &&
    state.plan.candidates.length > 0
  );
}

export function reduce(state: ConsoleState, event: Event): ConsoleState {
  switch (event.type) {
    case "scene_loaded":
      return { ...initialState, phase: "scene_loaded" };
    case "scene_failed":
      return { ...initialState, error: event.message };
    case "plan_requested":
      if (!canPlan(state)) return state;
      return { ...state, phase: "planning", error: null, banner: null };
    case "plan_succeeded": {
      const empty = event.plan.candidates.length === 0;
      return {
        phase: empty ? "scene_loaded" : "planned",
        plan: event.plan,
        outcome: null,
        banner: empty ? "no stable placement" : null,
        error: null,
      };
    }
    case "plan_failed":
      return { ...state, phase: "scene_loaded", error: event.message };
    case "select_requested":
      if (!canSelect(state)) return state;
      return { ...state, phase: "selecting", error: null };
    case "select_succeeded":
      return {
        ...state,
        phase: "placed",
        outcome: event.outcome,
        banner: event.banner,
      };
    case "select_failed":
      // A conflict means this run already placed; anything else returns
      // the console to the planned state for a retry.
      if (event.message.includes("already_placed")) {
        return { ...state, phase: "placed", error: event.message };
      }
      return { ...state, phase: "planned", error: event.message };
  }
}
