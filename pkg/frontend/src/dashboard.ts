/** Dashboard state: which run and slice are selected plus the payloads the
 * server returned for them, stored verbatim. All aggregation already
 * happened server-side; this class only fetches and holds. */

import { ApiClient, ApiError } from "./api.js";
import type {
  MetricsResponseJson,
  RunRowJson,
  SankeyJson,
  TopRelationJson,
  TrendsResponseJson,
} from "./types.js";

const COMPONENTS = ["relation", "entity", "answer"] as const;
const MODES = ["headroom", "cascaded"] as const;

/** Choices for the trend dropdown; the server validates them again. */
export const TREND_METRICS: readonly string[] = [
  "e2e_coverage",
  "e2e_precision",
  "kg_accuracy",
  "kg_freshness",
  "kg_coverage",
  ...COMPONENTS.flatMap((c) =>
    MODES.flatMap((m) => [`${c}_${m}_coverage`, `${c}_${m}_precision`]),
  ),
];

export class DashboardView {
  runs: RunRowJson[] = [];
  slices: string[] = [];
  selectedRunId: string | null = null;
  slice = "all";
  trendMetric = "e2e_coverage";

  metrics: MetricsResponseJson | null = null;
  sankey: SankeyJson | null = null;
  topRelations: TopRelationJson[] = [];
  trends: TrendsResponseJson | null = null;
  error: string | null = null;

  constructor(private readonly api: ApiClient) {}

  async init(): Promise<void> {
    this.error = null;
    try {
      this.slices = await this.api.slices();
      this.runs = await this.api.listRuns();
    } catch (err) {
      this.error = describe(err);
      return;
    }
    const newest = this.runs[this.runs.length - 1];
    if (newest) await this.selectRun(newest.run_id);
    await this.refreshTrends();
  }

  async selectRun(runId: string): Promise<void> {
    this.selectedRunId = runId;
    this.error = null;
    try {
      const [metrics, sankey, top] = await Promise.all([
        this.api.runMetrics(runId, this.slice),
        this.api.runSankey(runId),
        this.api.topRelations(runId, 10),
      ]);
      this.metrics = metrics;
      this.sankey = sankey;
      this.topRelations = top;
    } catch (err) {
      this.metrics = null;
      this.sankey = null;
      this.topRelations = [];
      this.error = describe(err);
    }
  }

  async setSlice(slice: string): Promise<void> {
    this.slice = slice;
    if (this.selectedRunId !== null) {
      try {
        this.metrics = await this.api.runMetrics(this.selectedRunId, slice);
        this.error = null;
      } catch (err) {
        this.metrics = null;
        this.error = describe(err);
      }
    }
    await this.refreshTrends();
  }

  async setTrendMetric(metric: string): Promise<void> {
    this.trendMetric = metric;
    await this.refreshTrends();
  }

  async refreshTrends(): Promise<void> {
    try {
      this.trends = await this.api.trends(this.trendMetric, this.slice);
    } catch (err) {
      this.trends = null;
      this.error = describe(err);
    }
  }
}

function describe(err: unknown): string {
  if (err instanceof ApiError) {
    return err.isNetwork ? "server unreachable" : err.detail;
  }
  return String(err);
}
