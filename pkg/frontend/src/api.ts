/** Thin typed client for the query service; all analysis stays server-side. */

import type {
  ClusterRequest,
  ClusterResponse,
  CurveResponse,
  DatasetMeta,
  DatasetSummary,
  HksColumnResponse,
  MeanResponse,
  PathlineResponse,
  SeedsResponse,
  SimilarityResponse,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

export class ApiClient {
  constructor(
    private baseUrl: string = "",
    private fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async getJson<T>(path: string): Promise<T> {
    const resp = await this.fetchFn(this.baseUrl + path);
    const body = await resp.json();
    if (!resp.ok) {
      throw new ApiError(resp.status, body?.error ?? `request failed: ${path}`);
    }
    return body as T;
  }

  datasets(): Promise<DatasetSummary[]> {
    return this.getJson("/datasets");
  }

  meta(id: string): Promise<DatasetMeta> {
    return this.getJson(`/dataset/${id}/meta`);
  }

  seeds(id: string): Promise<SeedsResponse> {
    return this.getJson(`/dataset/${id}/seeds`);
  }

  hksColumn(id: string, scaleIndex: number): Promise<HksColumnResponse> {
    return this.getJson(`/dataset/${id}/hks?scale_index=${scaleIndex}`);
  }

  mean(id: string, lo: number, hi: number): Promise<MeanResponse> {
    return this.getJson(`/dataset/${id}/mean?lo=${lo}&hi=${hi}`);
  }

  curve(id: string, points: number[]): Promise<CurveResponse> {
    return this.getJson(`/dataset/${id}/curve?points=${points.join(",")}`);
  }

  similarity(
    anchorDataset: string,
    anchorPoint: number,
    lo: number,
    hi: number,
    datasets: string[],
  ): Promise<SimilarityResponse> {
    const ds = datasets.join(",");
    return this.getJson(
      `/similarity?anchor_dataset=${anchorDataset}&anchor_point=${anchorPoint}&lo=${lo}&hi=${hi}&datasets=${ds}`,
    );
  }

  pathline(id: string, index: number): Promise<PathlineResponse> {
    return this.getJson(`/pathline/${id}/${index}`);
  }

  async cluster(request: ClusterRequest): Promise<ClusterResponse> {
    const resp = await this.fetchFn(this.baseUrl + "/cluster", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(request),
    });
    const body = await resp.json();
    if (!resp.ok) {
      throw new ApiError(resp.status, body?.error ?? "cluster request failed");
    }
    return body as ClusterResponse;
  }
}
