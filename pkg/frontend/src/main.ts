/** DOM wiring for the operator console. */

import { ApiClient, ApiError, type SceneResponse } from "./api.js";
import { decodeGrid, GridFormatError, type DensityGrid } from "./grid.js";
import { reduce, initialState, canSelect, type ConsoleState } from "./state.js";
import { renderSide, renderTopDown } from "./render.js";
import {
  outcomeBanner,
  planView,
  sceneView,
  type SceneView,
} from "./viewmodel.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

let state: ConsoleState = initialState;
let scene: SceneView | null = null;
let sceneId = "";
let grid: DensityGrid | null = null;
let client = new ApiClient("http://127.0.0.1:8000");

function setBanner(text: string | null, isError = false): void {
  const banner = el<HTMLDivElement>("banner");
  banner.textContent = text ?? "";
  banner.className = isError ? "banner error" : "banner";
}

function redraw(): void {
  if (scene) {
    renderTopDown(
      el<HTMLCanvasElement>("top-view"),
      scene,
      grid,
      state.plan ? planView(state.plan).markers : [],
    );
    renderSide(el<HTMLCanvasElement>("side-view"), scene);
  }
  const list = el<HTMLOListElement>("candidates");
  list.innerHTML = "";
  if (state.plan) {
    const view = planView(state.plan);
    el<HTMLDivElement>("rationale").textContent = view.rationale
      ? `${view.receptacleIds.join(", ")}: ${view.rationale}` +
        (view.reasoningTokens
          ? ` (${view.reasoningTokens} tokens, ${view.reasoningSeconds?.toFixed(2)}s)`
          : "")
      : "";
    for (const marker of view.markers) {
      const item = document.createElement("li");
      const button = document.createElement("button");
      button.textContent = `rank ${marker.rank} at (${marker.x.toFixed(3)}, ${marker.y.toFixed(3)}, ${marker.z.toFixed(3)}) density ${marker.density}`;
      button.disabled = !canSelect(state);
      button.onclick = () => selectCandidate(marker.rank);
      item.appendChild(button);
      list.appendChild(item);
    }
  }
  setBanner(state.error ?? state.banner, state.error !== null);
}

async function loadScene(): Promise<void> {
  client = new ApiClient(el<HTMLInputElement>("base-url").value);
  sceneId = el<HTMLInputElement>("scene-id").value.trim();
  grid = null;
  try {
    const response: SceneResponse = await client.getScene(sceneId);
    scene = sceneView(response);
    state = reduce(state, { type: "scene_loaded" });
  } catch (error) {
    scene = null;
    state = reduce(state, {
      type: "scene_failed",
      message: error instanceof ApiError ? error.message : String(error),
    });
  }
  redraw();
}

async function requestPlan(): Promise<void> {
  state = reduce(state, { type: "plan_requested" });
  redraw();
  const overrides: Record<string, unknown> = {};
  const beta = el<HTMLInputElement>("beta").value;
  const k = el<HTMLInputElement>("sample-k").value;
  if (beta !== "") overrides["blend"] = { beta: Number(beta) };
  if (k !== "") overrides["sample_k"] = Number(k);
  try {
    const plan = await client.plan(
      sceneId,
      el<HTMLInputElement>("task").value,
      overrides,
    );
    state = reduce(state, { type: "plan_succeeded", plan });
    try {
      grid = decodeGrid(await client.densityGrid(plan.run_id));
    } catch (error) {
      grid = null;
      if (error instanceof GridFormatError) {
        setBanner(`heatmap unavailable: ${error.message}`, true);
      }
    }
  } catch (error) {
    state = reduce(state, {
      type: "plan_failed",
      message: error instanceof ApiError ? error.message : String(error),
    });
  }
  redraw();
}

async function selectCandidate(rank: number): Promise<void> {
  state = reduce(state, { type: "select_requested", rank });
  redraw();
  try {
    const outcome = await client.select(state.plan!.run_id, rank);
    state = reduce(state, {
      type: "select_succeeded",
      outcome,
      banner: outcomeBanner(outcome),
    });
    const refreshed = await client.getScene(sceneId);
    scene = sceneView(refreshed);
  } catch (error) {
    state = reduce(state, {
      type: "select_failed",
      message: error instanceof ApiError ? error.message : String(error),
    });
  }
  redraw();
}

export function boot(): void {
  el<HTMLButtonElement>("load-scene").onclick = () => void loadScene();
  el<HTMLButtonElement>("plan").onclick = () => void requestPlan();
  redraw();
}

if (typeof document !== "undefined" && document.getElementById("load-scene")) {
  boot();
}
