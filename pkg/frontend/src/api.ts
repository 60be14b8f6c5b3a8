/** Typed client for the tagging service; candidate order is never re-sorted. */

export interface Candidate {
  tag: string;
  probability: number;
}

export interface RecommendResponse {
  candidates: Candidate[];
  policy_view: string;
}

export interface TagResponse {
  labels: string[];
  spans: { start: number; end: number; tag: string }[];
}

export interface HealthResponse {
  status: string;
  model_fingerprint: string;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(path: string, payload?: unknown): Promise<T> {
    const init: RequestInit | undefined = payload === undefined
      ? undefined
      : {
          method: "POST",
          headers: { "Content-Type": "application/json" },
          body: JSON.stringify(payload),
        };
    let response: Response;
    try {
      response = await this.fetchImpl(this.baseUrl + path, init);
    } catch (error) {
      throw new ApiError(0, "network_error", `service unreachable: ${String(error)}`);
    }
    const body = await response.json().catch(() => ({}));
    if (!response.ok) {
      const err = (body as { error?: { code?: string; message?: string } }).error ?? {};
      throw new ApiError(response.status, err.code ?? "unknown_error", err.message ?? "request failed");
    }
    return body as T;
  }

  health(): Promise<HealthResponse> {
    return this.request<HealthResponse>("/healthz");
  }

  async tags(): Promise<string[]> {
    const body = await this.request<{ tags: string[] }>("/api/tags");
    return body.tags;
  }

  tagSentence(tokens: string[]): Promise<TagResponse> {
    return this.request<TagResponse>("/api/tag", { tokens });
  }

  recommend(tokens: string[], index: number, k?: number): Promise<RecommendResponse> {
    const payload: Record<string, unknown> = { tokens, index };
    if (k !== undefined) payload.k = k;
    return this.request<RecommendResponse>("/api/recommend", payload);
  }
}
