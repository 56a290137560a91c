/**
 * Thin typed client over the storage-service HTTP API.
 *
 * The fetch implementation is injectable so tests can drive the client with
 * canned responses. Error responses carry a machine-readable envelope
 * ({"error": {"code", "message"}}) which is surfaced as an ApiError.
 */

import type {
  ComparisonReport,
  ExamplesPage,
  SingleAnalysisReport,
  SystemEntry,
} from "./types.js";

export type FetchLike = (
  url: string,
  init?: { method?: string; body?: string },
) => Promise<{
  ok: boolean;
  status: number;
  json(): Promise<unknown>;
  text(): Promise<string>;
}>;

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
  }
}

export interface AnalysisOptions {
  metric?: string;
  feature?: string;
  ci?: "bootstrap" | "ttest" | "none";
  ciLevel?: number;
  ciSeed?: number;
}

function analysisQuery(opts: AnalysisOptions): string {
  const params = new URLSearchParams();
  if (opts.metric) params.set("metric", opts.metric);
  if (opts.feature) params.set("feature", opts.feature);
  if (opts.ci) params.set("ci", opts.ci);
  if (opts.ciLevel !== undefined) params.set("ci_level", String(opts.ciLevel));
  if (opts.ciSeed !== undefined) params.set("ci_seed", String(opts.ciSeed));
  const query = params.toString();
  return query ? `?${query}` : "";
}

/** Percent-encode a bucket label but keep its slashes as path separators. */
export function encodeLabelPath(label: string): string {
  return label.split("/").map(encodeURIComponent).join("/");
}

export class ApiClient {
  constructor(
    private baseUrl: string = "",
    private fetchFn: FetchLike = (...args) => fetch(...args),
  ) {}

  private async request<T>(url: string, init?: { method?: string; body?: string }): Promise<T> {
    const resp = await this.fetchFn(this.baseUrl + url, init);
    if (!resp.ok) {
      let code = "http_error";
      let message = `HTTP ${resp.status}`;
      try {
        const body = (await resp.json()) as { error?: { code: string; message: string } };
        if (body.error) {
          code = body.error.code;
          message = body.error.message;
        }
      } catch {
        // non-JSON error body: keep the generic message
      }
      throw new ApiError(resp.status, code, message);
    }
    return (await resp.json()) as T;
  }

  listSystems(): Promise<SystemEntry[]> {
    return this.request("/api/systems");
  }

  getSystem(id: string): Promise<SystemEntry> {
    return this.request(`/api/systems/${encodeURIComponent(id)}`);
  }

  upload(content: string): Promise<{ id: string }> {
    return this.request("/api/systems", { method: "POST", body: content });
  }

  deleteSystem(id: string): Promise<{ deleted: string }> {
    return this.request(`/api/systems/${encodeURIComponent(id)}`, {
      method: "DELETE",
    });
  }

  getAnalysis(id: string, opts: AnalysisOptions = {}): Promise<SingleAnalysisReport> {
    return this.request(
      `/api/systems/${encodeURIComponent(id)}/analysis${analysisQuery(opts)}`,
    );
  }

  compare(ids: string[], metric: string, opts: AnalysisOptions = {}): Promise<ComparisonReport> {
    const params = new URLSearchParams({ ids: ids.join(","), metric });
    if (opts.feature) params.set("feature", opts.feature);
    if (opts.ci) params.set("ci", opts.ci);
    return this.request(`/api/compare?${params.toString()}`);
  }

  bucketExamples(
    id: string,
    feature: string,
    label: string,
    offset = 0,
    limit = 20,
  ): Promise<ExamplesPage> {
    const path =
      `/api/systems/${encodeURIComponent(id)}/buckets/` +
      `${encodeURIComponent(feature)}/${encodeLabelPath(label)}/examples`;
    return this.request(`${path}?offset=${offset}&limit=${limit}`);
  }
}
