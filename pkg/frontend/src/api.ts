/**
 * Typed client for the placement service REST API.
 *
 * All numbers shown in the console come straight out of these payloads;
 * the client never recomputes physics or density values.
 */

export interface PoseNode {
  position: [number, number, number];
  orientation: [number, number, number, number];
}

export interface ShapeNode {
  kind: "box" | "cylinder";
  dims: number[];
  offset: PoseNode;
}

export interface ObjectNode {
  id: string;
  label: string;
  static: boolean;
  mass: number;
  pose: PoseNode;
  shapes: ShapeNode[];
  attributes: Record<string, string>;
}

export interface SceneDocument {
  objects: ObjectNode[];
  placement_object: ObjectNode;
  workspace: { min: [number, number, number]; max: [number, number, number] };
  gravity: number;
}

export interface SceneResponse {
  scene: SceneDocument;
  placed: number[][];
}

export interface CandidateNode {
  point: [number, number, number];
  density: number;
  rank: number;
}

export interface DecisionNode {
  receptacle_ids: string[];
  rationale: string;
  metrics: {
    wall_time: number;
    prompt_tokens: number;
    completion_tokens: number;
  };
}

export interface PlanResponse {
  run_id: string;
  status: string;
  stable_fraction: number;
  decision: DecisionNode | null;
  metrics: Record<string, unknown>;
  candidates: CandidateNode[];
  short_list: boolean;
  seed: number;
  min_separation: number;
  density_grid: string;
}

export interface OutcomeResponse {
  selected_point: [number, number, number];
  stable: boolean;
  deviation: number;
  reasonable: boolean | null;
}

export interface ServiceError {
  stage: string;
  code: string;
  message: string;
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: ServiceError,
  ) {
    super(`${detail.stage}/${detail.code}: ${detail.message}`);
  }
}

export type FetchLike = (
  input: string,
  init?: RequestInit,
) => Promise<Response>;

async function parseError(response: Response): Promise<never> {
  let detail: ServiceError;
  try {
    detail = (await response.json()) as ServiceError;
  } catch {
    detail = { stage: "service", code: "unknown", message: response.statusText };
  }
  throw new ApiError(response.status, detail);
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private url(path: string): string {
    return this.baseUrl.replace(/\/$/, "") + path;
  }

  private async getJson<T>(path: string): Promise<T> {
    const response = await this.fetchFn(this.url(path));
    if (!response.ok) await parseError(response);
    return (await response.json()) as T;
  }

  private async postJson<T>(path: string, body: unknown): Promise<T> {
    const response = await this.fetchFn(this.url(path), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!response.ok) await parseError(response);
    return (await response.json()) as T;
  }

  async health(): Promise<{ status: string; version: string }> {
    return this.getJson("/healthz");
  }

  async postScene(document: SceneDocument): Promise<string> {
    const body = await this.postJson<{ scene_id: string }>("/scenes", document);
    return body.scene_id;
  }

  async getScene(sceneId: string): Promise<SceneResponse> {
    return this.getJson(`/scenes/${sceneId}`);
  }

  async plan(
    sceneId: string,
    task: string,
    overrides: Record<string, unknown> = {},
  ): Promise<PlanResponse> {
    return this.postJson(`/scenes/${sceneId}/plan`, { task, overrides });
  }

  async densityGrid(runId: string): Promise<ArrayBuffer> {
    const response = await this.fetchFn(this.url(`/runs/${runId}/density`));
    if (!response.ok) await parseError(response);
    return response.arrayBuffer();
  }

  async select(runId: string, rank: number): Promise<OutcomeResponse> {
    return this.postJson(`/runs/${runId}/select`, { rank });
  }
}
