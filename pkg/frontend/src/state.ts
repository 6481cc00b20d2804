/** Shareable view state, serialized into the URL hash. */

export type ViewKind = "mean" | "single_scale" | "similarity" | "clusters";

export interface Selection {
  viewport: 0 | 1;
  point: number;
}

export type Region = [number, number, number, number]; // xmin, ymin, xmax, ymax

export interface ViewportState {
  dataset: string;
  scaleIndex: number;
  rangeLo: number;
  rangeHi: number;
  region: Region | null;
}

export interface ViewState {
  view: ViewKind;
  viewports: [ViewportState, ViewportState];
  selections: Selection[];
  k: number;
  mode: "joint" | "separate";
  clusterSeed: number;
  colormapLo: number | null;
  colormapHi: number | null;
  showTrajectories: boolean;
  showPoints: boolean;
}

export function defaultViewState(datasetA: string, datasetB: string, nScales: number): ViewState {
  const vp = (dataset: string): ViewportState => ({
    dataset,
    scaleIndex: Math.floor(nScales / 2),
    rangeLo: 0,
    rangeHi: nScales - 1,
    region: null,
  });
  return {
    view: "mean",
    viewports: [vp(datasetA), vp(datasetB)],
    selections: [],
    k: 3,
    mode: "joint",
    clusterSeed: 0,
    colormapLo: null,
    colormapHi: null,
    showTrajectories: false,
    showPoints: false,
  };
}

const VIEWS: ViewKind[] = ["mean", "single_scale", "similarity", "clusters"];

/** Compact URL-safe encoding (JSON in base64url). */
export function encodeHash(state: ViewState): string {
  const json = JSON.stringify(state);
  const b64 =
    typeof btoa === "function"
      ? btoa(json)
      : Buffer.from(json, "utf-8").toString("base64");
  return b64.replace(/\+/g, "-").replace(/\//g, "_").replace(/=+$/, "");
}

export function decodeHash(hash: string): ViewState | null {
  if (!hash) {
    return null;
  }
  try {
    const b64 = hash.replace(/-/g, "+").replace(/_/g, "/");
    const json =
      typeof atob === "function"
        ? atob(b64)
        : Buffer.from(b64, "base64").toString("utf-8");
    const state = JSON.parse(json) as ViewState;
    if (!VIEWS.includes(state.view) || !Array.isArray(state.viewports)) {
      return null;
    }
    return state;
  } catch {
    return null;
  }
}
