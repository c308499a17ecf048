/** Typed client for the evaluation service. Every number the app shows
 * comes from one field of one of these responses. */

import type {
  AnnotationJson,
  GoldJson,
  KgMatchJson,
  MetricsResponseJson,
  RunRowJson,
  SankeyJson,
  TaskJson,
  TaskRowJson,
  TopRelationJson,
  TrendsResponseJson,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(status === 0 ? `network failure: ${detail}` : `HTTP ${status}: ${detail}`);
    this.name = "ApiError";
  }

  /** True for failures where the request may never have reached the server. */
  get isNetwork(): boolean {
    return this.status === 0;
  }
}

export interface CreateTaskBody {
  kind?: string;
  queries: { query_id: string; text: string }[];
  quorum?: number;
  assigned_annotators?: string[];
  answer_key?: GoldJson[];
  task_id?: string;
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchFn(this.baseUrl + path, init);
    } catch (err) {
      throw new ApiError(0, err instanceof Error ? err.message : String(err));
    }
    const text = await response.text();
    if (!response.ok) {
      let detail = text;
      try {
        const body = JSON.parse(text) as { detail?: unknown };
        if (typeof body.detail === "string") detail = body.detail;
      } catch {
        // non-JSON error body: keep the raw text
      }
      throw new ApiError(response.status, detail);
    }
    return JSON.parse(text) as T;
  }

  health(): Promise<{ status: string }> {
    return this.request("/health");
  }

  async listRuns(): Promise<RunRowJson[]> {
    const body = await this.request<{ runs: RunRowJson[] }>("/runs");
    return body.runs;
  }

  runMetrics(runId: string, slice?: string): Promise<MetricsResponseJson> {
    const suffix = slice ? `?slice=${encodeURIComponent(slice)}` : "";
    return this.request(`/runs/${encodeURIComponent(runId)}/metrics${suffix}`);
  }

  runSankey(runId: string): Promise<SankeyJson> {
    return this.request(`/runs/${encodeURIComponent(runId)}/buckets/sankey`);
  }

  async topRelations(runId: string, k?: number): Promise<TopRelationJson[]> {
    const suffix = k !== undefined ? `?k=${k}` : "";
    const body = await this.request<{ relations: TopRelationJson[] }>(
      `/runs/${encodeURIComponent(runId)}/relations/top${suffix}`,
    );
    return body.relations;
  }

  trends(metric: string, slice = "all"): Promise<TrendsResponseJson> {
    const params = new URLSearchParams({ metric, slice });
    return this.request(`/trends?${params}`);
  }

  async slices(): Promise<string[]> {
    const body = await this.request<{ slices: string[] }>("/slices");
    return body.slices;
  }

  async kgSearch(q: string): Promise<KgMatchJson[]> {
    const body = await this.request<{ matches: KgMatchJson[] }>(
      `/kg/search?q=${encodeURIComponent(q)}`,
    );
    return body.matches;
  }

  async listTasks(): Promise<TaskRowJson[]> {
    const body = await this.request<{ tasks: TaskRowJson[] }>("/annotation/tasks");
    return body.tasks;
  }

  taskDetail(taskId: string): Promise<TaskJson> {
    return this.request(`/annotation/tasks/${encodeURIComponent(taskId)}`);
  }

  createTask(body: CreateTaskBody): Promise<TaskJson> {
    return this.request("/annotation/tasks", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  submit(taskId: string, records: AnnotationJson[]): Promise<TaskJson> {
    return this.request(`/annotation/tasks/${encodeURIComponent(taskId)}/submissions`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ records }),
    });
  }
}
