/** View orchestration: what to fetch per view and how to color the result.
 *
 * The controller performs no signature math; every displayed scalar comes
 * from a service response.  Rendering sinks are injected so the controller
 * is testable without a DOM.
 */

import { ApiClient } from "./api.js";
import { labelColors, scalarColors, type RGB } from "./colormap.js";
import { Debouncer, LatestGate } from "./gate.js";
import type { Selection, ViewKind, ViewState } from "./state.js";
import type { ClusterResponse } from "./types.js";

export interface CurveDisplay {
  /** log10 signature curve with its marker color and per-viewport stroke. */
  scales: number[];
  values: number[];
  color: RGB;
  dotted: boolean;
  label: string;
}

export interface RenderSink {
  viewportColors(viewport: 0 | 1, colors: RGB[], values: number[] | null): void;
  curves(curves: CurveDisplay[]): void;
}

const SELECTION_PALETTE: RGB[] = [
  [230, 97, 0],
  [93, 58, 155],
  [26, 133, 255],
  [212, 17, 89],
  [64, 176, 166],
  [153, 79, 0],
  [177, 3, 252],
  [10, 108, 34],
];

export class ViewerController {
  state: ViewState;
  private gate = new LatestGate();
  private debouncer: Debouncer;
  private lastValues: (number[] | null)[] = [null, null];
  private selectionCurves: CurveDisplay[] = [];

  constructor(
    private api: ApiClient,
    private sink: RenderSink,
    state: ViewState,
    debounceMs = 120,
  ) {
    this.state = state;
    this.debouncer = new Debouncer(debounceMs);
  }

  datasetOf(viewport: 0 | 1): string {
    return this.state.viewports[viewport].dataset;
  }

  /** Refresh both viewports for the active view. */
  async refreshAll(): Promise<void> {
    if (this.state.view === "similarity") {
      const anchor = this.lastAnchor();
      if (anchor) {
        await this.refreshSimilarity(anchor);
      }
      return;
    }
    await Promise.all([this.refreshViewport(0), this.refreshViewport(1)]);
  }

  /** Fetch and paint one viewport (mean / single-scale / clusters). */
  async refreshViewport(viewport: 0 | 1): Promise<void> {
    const vp = this.state.viewports[viewport];
    const key = `vp${viewport}`;
    const token = this.gate.next(key);
    switch (this.state.view) {
      case "mean": {
        const resp = await this.api.mean(vp.dataset, vp.rangeLo, vp.rangeHi);
        if (!this.gate.isCurrent(key, token)) return;
        this.paintScalars(viewport, resp.values);
        return;
      }
      case "single_scale": {
        const resp = await this.api.hksColumn(vp.dataset, vp.scaleIndex);
        if (!this.gate.isCurrent(key, token)) return;
        this.paintScalars(viewport, resp.values);
        return;
      }
      case "clusters":
        // cluster coloring happens on explicit compute; fall back to mean
        if (this.gate.isCurrent(key, token)) {
          const resp = await this.api.mean(vp.dataset, vp.rangeLo, vp.rangeHi);
          if (!this.gate.isCurrent(key, token)) return;
          this.paintScalars(viewport, resp.values);
        }
        return;
      case "similarity":
        return; // driven by pick()
    }
  }

  private paintScalars(viewport: 0 | 1, values: number[]): void {
    this.lastValues[viewport] = values;
    const colors = scalarColors(
      values,
      this.state.colormapLo ?? undefined,
      this.state.colormapHi ?? undefined,
    );
    this.sink.viewportColors(viewport, colors, values);
  }

  /** Rescale colors from cached values without refetching. */
  setColormapRange(lo: number | null, hi: number | null): void {
    this.state.colormapLo = lo;
    this.state.colormapHi = hi;
    for (const viewport of [0, 1] as const) {
      const values = this.lastValues[viewport];
      if (values) {
        this.sink.viewportColors(
          viewport,
          scalarColors(values, lo ?? undefined, hi ?? undefined),
          values,
        );
      }
    }
  }

  /** Debounced slider movement; the final state always wins. */
  setScaleIndex(viewport: 0 | 1, scaleIndex: number): void {
    this.state.viewports[viewport].scaleIndex = scaleIndex;
    this.debouncer.schedule(`slider-vp${viewport}`, () => this.refreshViewport(viewport));
  }

  setScaleRange(viewport: 0 | 1, lo: number, hi: number): void {
    this.state.viewports[viewport].rangeLo = lo;
    this.state.viewports[viewport].rangeHi = hi;
    this.debouncer.schedule(`slider-vp${viewport}`, () => this.refreshViewport(viewport));
  }

  private lastAnchor(): Selection | null {
    return this.state.selections.length
      ? this.state.selections[this.state.selections.length - 1]
      : null;
  }

  selectionColor(index: number): RGB {
    return SELECTION_PALETTE[index % SELECTION_PALETTE.length];
  }

  /** Register a picked point: fetch its curve, and in similarity view
   * recolor both viewports from a single response. */
  async pick(viewport: 0 | 1, point: number): Promise<void> {
    const exists = this.state.selections.some(
      (s) => s.viewport === viewport && s.point === point,
    );
    if (!exists) {
      this.state.selections.push({ viewport, point });
      const color = this.selectionColor(this.state.selections.length - 1);
      const resp = await this.api.curve(this.datasetOf(viewport), [point]);
      this.selectionCurves.push({
        scales: resp.scales,
        values: resp.curves[0],
        color,
        dotted: viewport === 1,
        label: `${this.datasetOf(viewport)}:${point}`,
      });
      this.sink.curves([...this.selectionCurves]);
    }
    if (this.state.view === "similarity") {
      await this.refreshSimilarity({ viewport, point });
    }
  }

  clearSelections(): void {
    this.state.selections = [];
    this.selectionCurves = [];
    this.sink.curves([]);
  }

  private async refreshSimilarity(anchor: Selection): Promise<void> {
    const anchorDataset = this.datasetOf(anchor.viewport);
    const ids = [this.datasetOf(0), this.datasetOf(1)];
    const unique = ids[0] === ids[1] ? [ids[0]] : ids;
    const vp = this.state.viewports[anchor.viewport];
    const key = "similarity";
    const token = this.gate.next(key);
    const resp = await this.api.similarity(
      anchorDataset,
      anchor.point,
      vp.rangeLo,
      vp.rangeHi,
      unique,
    );
    if (!this.gate.isCurrent(key, token)) return;
    // one response holds the distances for every viewport's dataset
    for (const viewport of [0, 1] as const) {
      this.paintScalars(viewport, resp.distances[this.datasetOf(viewport)]);
    }
  }

  /** Run clustering over the selected regions and paint labels. */
  async computeClusters(): Promise<ClusterResponse> {
    const ids = [this.datasetOf(0), this.datasetOf(1)];
    const unique = ids[0] === ids[1] ? [ids[0]] : ids;
    const region: Record<string, [number, number, number, number]> = {};
    for (const viewport of [0, 1] as const) {
      const r = this.state.viewports[viewport].region;
      if (r) {
        region[this.datasetOf(viewport)] = r;
      }
    }
    const vp0 = this.state.viewports[0];
    const resp = await this.api.cluster({
      datasets: unique,
      k: this.state.k,
      range: [vp0.rangeLo, vp0.rangeHi],
      mode: this.state.mode,
      region: Object.keys(region).length ? region : undefined,
      seed: this.state.clusterSeed,
    });
    for (const viewport of [0, 1] as const) {
      const id = this.datasetOf(viewport);
      const labels = resp.labels[id];
      if (labels) {
        this.lastValues[viewport] = null; // labels are not rescalable scalars
        this.sink.viewportColors(viewport, labelColors(labels), null);
      }
    }
    const centroidCurves: CurveDisplay[] = [];
    resp.centroids.forEach((group, gi) => {
      group.forEach((values, ci) => {
        centroidCurves.push({
          scales: resp.scales,
          values,
          color: labelColors([ci])[0],
          dotted: gi === 1,
          label: `centroid ${ci}`,
        });
      });
    });
    this.sink.curves(centroidCurves);
    return resp;
  }
}
