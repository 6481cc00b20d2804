/** Colormaps: a perceptually uniform sequential map for scalars and a
 * categorical palette for cluster labels. */

export type RGB = [number, number, number];

// viridis anchors, sampled every 1/15th of the range
const VIRIDIS: RGB[] = [
  [68, 1, 84],
  [72, 26, 108],
  [71, 47, 125],
  [65, 68, 135],
  [57, 86, 140],
  [49, 104, 142],
  [42, 120, 142],
  [35, 136, 142],
  [31, 152, 139],
  [34, 168, 132],
  [53, 183, 121],
  [84, 197, 104],
  [122, 209, 81],
  [165, 219, 54],
  [210, 226, 27],
  [253, 231, 37],
];

export const CATEGORICAL: RGB[] = [
  [68, 119, 170],
  [238, 102, 119],
  [34, 136, 51],
  [204, 187, 68],
  [102, 204, 238],
  [170, 51, 119],
  [187, 187, 187],
  [0, 0, 0],
];

export const MISSING: RGB = [127, 127, 127];

/** Map a scalar to the sequential palette over [lo, hi], clamping. */
export function sequentialColor(value: number, lo: number, hi: number): RGB {
  if (!Number.isFinite(value)) {
    return MISSING;
  }
  const span = hi - lo;
  let t = span > 0 ? (value - lo) / span : 0.5;
  t = Math.min(1, Math.max(0, t));
  const x = t * (VIRIDIS.length - 1);
  const i = Math.min(VIRIDIS.length - 2, Math.floor(x));
  const w = x - i;
  const a = VIRIDIS[i];
  const b = VIRIDIS[i + 1];
  return [
    Math.round(a[0] + w * (b[0] - a[0])),
    Math.round(a[1] + w * (b[1] - a[1])),
    Math.round(a[2] + w * (b[2] - a[2])),
  ];
}

export function categoricalColor(label: number): RGB {
  if (!Number.isInteger(label) || label < 0) {
    return MISSING;
  }
  return CATEGORICAL[label % CATEGORICAL.length];
}

export function valueRange(values: number[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (Number.isFinite(v)) {
      if (v < lo) lo = v;
      if (v > hi) hi = v;
    }
  }
  if (lo > hi) {
    return [0, 1];
  }
  return [lo, hi];
}

/** Per-point colors for a scalar field (auto range unless given). */
export function scalarColors(values: number[], lo?: number, hi?: number): RGB[] {
  const [autoLo, autoHi] = valueRange(values);
  const l = lo ?? autoLo;
  const h = hi ?? autoHi;
  return values.map((v) => sequentialColor(v, l, h));
}

export function labelColors(labels: number[]): RGB[] {
  return labels.map(categoricalColor);
}

export function cssColor(rgb: RGB): string {
  return `rgb(${rgb[0]},${rgb[1]},${rgb[2]})`;
}
