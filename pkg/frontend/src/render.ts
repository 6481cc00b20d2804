/** Nearest-seed (Voronoi) shading and screen-space picking.
 *
 * Every pixel takes the color of its nearest seed, which reproduces the
 * look of a colored Voronoi diagram without constructing one.  The bucket
 * grid search is exact: rings of cells are scanned until no farther ring
 * can beat the best distance found.
 */

import type { RGB } from "./colormap.js";

export interface ViewBox {
  xmin: number;
  ymin: number;
  xmax: number;
  ymax: number;
}

export type Seed = [number, number];

export function dataToScreen(
  p: Seed,
  box: ViewBox,
  width: number,
  height: number,
): [number, number] {
  const sx = ((p[0] - box.xmin) / (box.xmax - box.xmin)) * width;
  const sy = (1 - (p[1] - box.ymin) / (box.ymax - box.ymin)) * height;
  return [sx, sy];
}

export function screenToData(
  px: number,
  py: number,
  box: ViewBox,
  width: number,
  height: number,
): Seed {
  const x = box.xmin + (px / width) * (box.xmax - box.xmin);
  const y = box.ymin + (1 - py / height) * (box.ymax - box.ymin);
  return [x, y];
}

/** Index of the seed nearest to a data-space point (ties to lowest index). */
export function nearestSeed(seeds: Seed[], x: number, y: number): number {
  let best = -1;
  let bestD = Infinity;
  for (let i = 0; i < seeds.length; i++) {
    const dx = seeds[i][0] - x;
    const dy = seeds[i][1] - y;
    const d = dx * dx + dy * dy;
    if (d < bestD) {
      bestD = d;
      best = i;
    }
  }
  return best;
}

/** Index of the seed nearest to a cursor position in screen space. */
export function pickPoint(
  seeds: Seed[],
  box: ViewBox,
  width: number,
  height: number,
  px: number,
  py: number,
): number {
  let best = -1;
  let bestD = Infinity;
  for (let i = 0; i < seeds.length; i++) {
    const [sx, sy] = dataToScreen(seeds[i], box, width, height);
    const d = (sx - px) * (sx - px) + (sy - py) * (sy - py);
    if (d < bestD) {
      bestD = d;
      best = i;
    }
  }
  return best;
}

interface BucketGrid {
  cells: number[][];
  nx: number;
  ny: number;
  cellSize: number;
  box: ViewBox;
}

function buildGrid(seeds: Seed[], box: ViewBox): BucketGrid {
  const spanX = box.xmax - box.xmin;
  const spanY = box.ymax - box.ymin;
  const target = Math.max(1, Math.round(Math.sqrt(seeds.length)));
  const nx = Math.max(1, Math.min(target, 256));
  const cellSize = Math.max(spanX, spanY) / nx;
  const ny = Math.max(1, Math.ceil(spanY / cellSize));
  const nxx = Math.max(1, Math.ceil(spanX / cellSize));
  const cells: number[][] = Array.from({ length: nxx * ny }, () => []);
  for (let i = 0; i < seeds.length; i++) {
    const cx = Math.min(nxx - 1, Math.max(0, Math.floor((seeds[i][0] - box.xmin) / cellSize)));
    const cy = Math.min(ny - 1, Math.max(0, Math.floor((seeds[i][1] - box.ymin) / cellSize)));
    cells[cy * nxx + cx].push(i);
  }
  return { cells, nx: nxx, ny, cellSize, box };
}

function nearestViaGrid(grid: BucketGrid, seeds: Seed[], x: number, y: number): number {
  const { cells, nx, ny, cellSize, box } = grid;
  const cx = Math.min(nx - 1, Math.max(0, Math.floor((x - box.xmin) / cellSize)));
  const cy = Math.min(ny - 1, Math.max(0, Math.floor((y - box.ymin) / cellSize)));
  let best = -1;
  let bestD = Infinity;
  const maxRing = Math.max(nx, ny);
  for (let ring = 0; ring <= maxRing; ring++) {
    // once a ring lies farther than the best hit, nothing beyond can win
    if (best >= 0 && (ring - 1) * cellSize > Math.sqrt(bestD)) {
      break;
    }
    for (let dy = -ring; dy <= ring; dy++) {
      const gy = cy + dy;
      if (gy < 0 || gy >= ny) continue;
      for (let dx = -ring; dx <= ring; dx++) {
        if (Math.max(Math.abs(dx), Math.abs(dy)) !== ring) continue;
        const gx = cx + dx;
        if (gx < 0 || gx >= nx) continue;
        for (const i of cells[gy * nx + gx]) {
          const ddx = seeds[i][0] - x;
          const ddy = seeds[i][1] - y;
          const d = ddx * ddx + ddy * ddy;
          if (d < bestD || (d === bestD && i < best)) {
            bestD = d;
            best = i;
          }
        }
      }
    }
  }
  return best;
}

/** RGBA image of width x height with each pixel colored by its nearest seed. */
export function nearestSeedImage(
  seeds: Seed[],
  colors: RGB[],
  width: number,
  height: number,
  box: ViewBox,
): Uint8ClampedArray {
  if (seeds.length !== colors.length) {
    throw new Error(`seeds (${seeds.length}) and colors (${colors.length}) differ in length`);
  }
  const out = new Uint8ClampedArray(width * height * 4);
  if (seeds.length === 0) {
    return out;
  }
  const grid = buildGrid(seeds, box);
  for (let py = 0; py < height; py++) {
    for (let px = 0; px < width; px++) {
      const [x, y] = screenToData(px + 0.5, py + 0.5, box, width, height);
      const i = nearestViaGrid(grid, seeds, x, y);
      const c = colors[i];
      const o = (py * width + px) * 4;
      out[o] = c[0];
      out[o + 1] = c[1];
      out[o + 2] = c[2];
      out[o + 3] = 255;
    }
  }
  return out;
}
