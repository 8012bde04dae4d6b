/** Typed client for the service wire contract. All numbers displayed by the
 * dashboard come from these responses; nothing is recomputed client-side. */

import type {
  Annotation,
  AnalyticKind,
  DesignDocument,
  Explanation,
  NotificationEvent,
  Report,
  Rollup,
  VersionDiff,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public tag: string,
    public detail: string,
  ) {
    super(`${tag}: ${detail}`);
  }

  get isStale(): boolean {
    return this.tag === "stale_item_ref";
  }
}

export interface AnnotationRequest {
  doc_id: string;
  created_version: number;
  kind?: string;
  body?: string;
  target_element_ids?: string[];
  target_region?: { x: number; y: number; w: number; h: number } | null;
  category?: string | null;
  flag?: boolean;
  source_item_ref?: string | null;
}

export interface ContestRequest {
  doc_id: string;
  version: number;
  analytic: AnalyticKind;
  verdict: "valid" | "invalid";
  rationale?: string;
  user_value?: unknown;
  computed_value?: unknown;
  timestamp?: string;
}

export class ApiClient {
  constructor(
    private baseUrl: string,
    private token?: string,
  ) {}

  private headers(json = false): Record<string, string> {
    const out: Record<string, string> = {};
    if (json) out["Content-Type"] = "application/json";
    if (this.token) out["Authorization"] = `Bearer ${this.token}`;
    return out;
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(`${this.baseUrl}${path}`, init);
    if (!response.ok) {
      let tag = "http_error";
      let detail = response.statusText;
      try {
        const body = (await response.json()) as { error?: string; detail?: string };
        tag = body.error ?? tag;
        detail = body.detail ?? detail;
      } catch {
        /* non-JSON error body */
      }
      throw new ApiError(response.status, tag, detail);
    }
    const text = await response.text();
    return (text ? JSON.parse(text) : null) as T;
  }

  listDocuments(): Promise<Record<string, number[]>> {
    return this.request("/documents", { headers: this.headers() });
  }

  getDocument(docId: string, version: number): Promise<DesignDocument> {
    return this.request(`/documents/${encodeURIComponent(docId)}/versions/${version}`, {
      headers: this.headers(),
    });
  }

  putDocument(payload: unknown): Promise<{ doc_id: string; version: number }> {
    return this.request("/documents", {
      method: "POST",
      headers: this.headers(true),
      body: JSON.stringify(payload),
    });
  }

  getReport(docId: string, version: number): Promise<Report> {
    return this.request(`/documents/${encodeURIComponent(docId)}/versions/${version}/report`, {
      headers: this.headers(),
    });
  }

  getExplanation(
    docId: string,
    version: number,
    analytic: AnalyticKind,
    ref: string,
    configHash?: string,
  ): Promise<Explanation> {
    const params = new URLSearchParams({ ref });
    if (configHash) params.set("config_hash", configHash);
    return this.request(
      `/documents/${encodeURIComponent(docId)}/versions/${version}/explanations/${analytic}?${params}`,
      { headers: this.headers() },
    );
  }

  getAnnotations(docId: string): Promise<Annotation[]> {
    return this.request(`/documents/${encodeURIComponent(docId)}/annotations`, {
      headers: this.headers(),
    });
  }

  postAnnotation(body: AnnotationRequest): Promise<{ id: string; status: string }> {
    return this.request("/annotations", {
      method: "POST",
      headers: this.headers(true),
      body: JSON.stringify(body),
    });
  }

  postContest(body: ContestRequest): Promise<{ id: string }> {
    return this.request("/contests", {
      method: "POST",
      headers: this.headers(true),
      body: JSON.stringify(body),
    });
  }

  postStatusAction(body: {
    doc_id: string;
    annotation_id: string;
    action: "mark_addressed" | "validate";
    version: number;
  }): Promise<Annotation> {
    return this.request("/status-actions", {
      method: "POST",
      headers: this.headers(true),
      body: JSON.stringify(body),
    });
  }

  getDiff(docId: string, fromVersion: number, toVersion: number): Promise<VersionDiff> {
    const params = new URLSearchParams({
      from_version: String(fromVersion),
      to_version: String(toVersion),
    });
    return this.request(`/documents/${encodeURIComponent(docId)}/diff?${params}`, {
      headers: this.headers(),
    });
  }

  getRollup(): Promise<Rollup> {
    return this.request("/rollup", { headers: this.headers() });
  }

  getNotifications(since = 0): Promise<NotificationEvent[]> {
    return this.request(`/notifications?since=${since}`, { headers: this.headers() });
  }

  getConfigHash(): Promise<{ config_hash: string }> {
    return this.request("/health");
  }
}
