/** JSON payload shapes of the flowhks query service. */

export interface DatasetSummary {
  id: string;
  n: number;
  m: number;
  s_min: number;
  s_max: number;
}

export interface DatasetMeta {
  id: string;
  n: number;
  m: number;
  d: number;
  t0: number;
  tau: number;
  n_scales: number;
  s_min: number;
  s_max: number;
  scales: number[];
  domain: { xmin: number; ymin: number; xmax: number; ymax: number };
  summary: Record<string, unknown> | null;
  provenance: Record<string, unknown> | null;
}

export interface SeedsResponse {
  id: string;
  seeds: [number, number][];
}

export interface HksColumnResponse {
  id: string;
  scale_index: number;
  scale: number;
  log10: boolean;
  values: number[];
}

export interface MeanResponse {
  id: string;
  lo: number;
  hi: number;
  log10: boolean;
  values: number[];
}

export interface CurveResponse {
  id: string;
  points: number[];
  scales: number[];
  log10: boolean;
  curves: number[][];
}

export interface SimilarityResponse {
  anchor_dataset: string;
  anchor_point: number;
  lo: number;
  hi: number;
  distances: Record<string, number[]>;
}

export interface ClusterRequest {
  datasets: string[];
  k: number;
  range: [number, number];
  mode: "joint" | "separate";
  region?: Record<string, [number, number, number, number]>;
  seed: number;
}

export interface ClusterResponse {
  mode: string;
  k: number;
  scales: number[];
  labels: Record<string, number[]>;
  indices: Record<string, number[]>;
  centroids: number[][][];
  inertia: number[];
}

export interface PathlineResponse {
  id: string;
  index: number;
  timesteps: number[];
  positions: [number, number][];
}
