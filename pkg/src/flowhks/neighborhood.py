"""Neighborhood structure on pathlines-as-points.

Treats each pathline as a point in (d*m)-space and builds the per-point
machinery the discrete operator needs: exact k nearest neighbors, local PCA
dimension estimates, tangent-plane projections, and Voronoi cell areas with
boundary padding.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .flowfield import PathlineSet

__all__ = [
    "NeighborhoodGraph",
    "knn",
    "local_pca",
    "estimate_local_dimension",
    "project_to_tangent",
    "voronoi_volume",
    "build_graph",
    "write_graph_csv",
]

DIM_FLOOR = 1e-12  # absolute eigenvalue floor when no ratio drop occurs


@dataclass
class NeighborhoodGraph:
    """Immutable per-point neighborhood data for a pathline set.

    ``eta`` is the median over points of ``delta``, the distance to the M-th
    neighbor; it sets the global density scale for the Gaussian affinities.
    """

    M: int
    neighbors: np.ndarray  # (n, M) indices, ascending distance
    distances: np.ndarray  # (n, M)
    local_dim: np.ndarray  # (n,) int
    boundary_flag: np.ndarray  # (n,) bool
    cell_volume: np.ndarray  # (n,) positive
    delta: np.ndarray  # (n,) max-neighbor distance
    eta: float

    @property
    def n(self) -> int:
        return self.neighbors.shape[0]

    def boundary_fraction(self) -> float:
        return float(np.mean(self.boundary_flag))

    def dimension_histogram(self) -> dict[int, int]:
        dims, counts = np.unique(self.local_dim, return_counts=True)
        return {int(k): int(v) for k, v in zip(dims, counts)}


def knn(coords, M: int, block: int = 256):
    """Exact M nearest neighbors under Euclidean distance, ties broken by index.

    ``coords`` is (n, D); accepts a :class:`PathlineSet` as well.  Returns
    (neighbors, distances), both (n, M) with rows sorted by ascending
    distance.  Brute force: deterministic and exact, adequate offline.
    """
    if isinstance(coords, PathlineSet):
        coords = coords.coords
    coords = np.asarray(coords, dtype=np.float64)
    n = coords.shape[0]
    if M >= n:
        raise ValueError(f"M={M} must be smaller than the point count n={n}")
    if M < 1:
        raise ValueError("M must be >= 1")

    sq = np.einsum("ij,ij->i", coords, coords)
    neighbors = np.empty((n, M), dtype=np.int64)
    distances = np.empty((n, M), dtype=np.float64)
    all_idx = np.arange(n)
    for start in range(0, n, block):
        stop = min(start + block, n)
        d2 = sq[start:stop, None] + sq[None, :] - 2.0 * coords[start:stop] @ coords.T
        np.maximum(d2, 0.0, out=d2)
        local = np.arange(stop - start)
        d2[local, local + start] = np.inf  # exclude self
        part = np.argpartition(d2, M - 1, axis=1)[:, :M]
        part_d = np.take_along_axis(d2, part, axis=1)
        for r in local:
            row = d2[r]
            order = np.lexsort((part[r], part_d[r]))
            sel = part[r][order]
            # argpartition picks an arbitrary subset when the M-th distance is
            # tied; resolve those rows with a full (distance, index) sort
            if np.count_nonzero(row == row[sel[-1]]) > 1:
                sel = np.lexsort((all_idx, row))[:M]
            neighbors[start + r] = sel
            distances[start + r] = np.sqrt(row[sel])
    return neighbors, distances


def local_pca(points: np.ndarray):
    """PCA of a neighborhood: eigenvalues (descending) and orthonormal directions.

    ``points`` is the (k, D) neighborhood including the center point; it is
    centered on its mean.  Eigenvalues follow the covariance convention
    (singular values squared over k-1).  A degenerate all-identical
    neighborhood yields an all-zero spectrum.
    """
    pts = np.asarray(points, dtype=np.float64)
    k = pts.shape[0]
    if k < 3:
        raise ValueError("neighborhood must contain the point plus at least 2 neighbors")
    centered = pts - pts.mean(axis=0)
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    eigenvalues = s * s / (k - 1)
    return eigenvalues, vt


def estimate_local_dimension(eigenvalues, drop_ratio: float = 0.01) -> int:
    """Dimension at which the PCA spectrum first drops by more than drop_ratio.

    Returns the smallest i with eigenvalue[i] < drop_ratio * eigenvalue[i-1];
    if no drop occurs, the count of eigenvalues above an absolute floor.
    """
    ev = np.asarray(eigenvalues, dtype=np.float64)
    if ev.size == 0 or ev[0] <= DIM_FLOOR:
        return 0
    for i in range(1, ev.size):
        if ev[i] < drop_ratio * ev[i - 1]:
            return i
    return int(np.count_nonzero(ev > DIM_FLOOR))


def project_to_tangent(points: np.ndarray, center: np.ndarray, directions: np.ndarray, dim: int):
    """Project a neighborhood onto the top-``dim`` principal directions.

    The center point maps to the origin.  Returns a (k, dim) array in the
    same row order as ``points``.
    """
    if dim > directions.shape[1]:
        raise ValueError(f"dim={dim} exceeds ambient dimension {directions.shape[1]}")
    rel = np.asarray(points, dtype=np.float64) - np.asarray(center, dtype=np.float64)
    return rel @ directions[:dim].T


def _clip_halfplane(poly: np.ndarray, a: np.ndarray, c: float) -> np.ndarray:
    """Clip a convex polygon (CCW vertices) to the half-plane a.x <= c."""
    vals = poly @ a - c
    inside = vals <= 0.0
    if inside.all():
        return poly
    if not inside.any():
        return poly[:0]
    out = []
    k = poly.shape[0]
    for i in range(k):
        j = (i + 1) % k
        if inside[i]:
            out.append(poly[i])
        if inside[i] != inside[j]:
            t = vals[i] / (vals[i] - vals[j])
            out.append(poly[i] + t * (poly[j] - poly[i]))
    return np.array(out)


def _polygon_area(poly: np.ndarray) -> float:
    if poly.shape[0] < 3:
        return 0.0
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _cell_polygon(sites: np.ndarray, half_extent: float):
    """Voronoi cell of the origin among ``sites``, clipped to a centered square.

    Returns (vertices, touches_bound).  The square has half-width
    ``half_extent``; touching it means the unclipped cell is unbounded or
    extends past 5 max-neighbor distances.
    """
    h = half_extent
    poly = np.array([[-h, -h], [h, -h], [h, h], [-h, h]], dtype=np.float64)
    for q in sites:
        nq = float(q @ q)
        if nq == 0.0:
            continue
        poly = _clip_halfplane(poly, q, 0.5 * nq)
        if poly.shape[0] == 0:
            return poly, False
    touches = bool(np.any(np.abs(poly) >= h * (1.0 - 1e-9)))
    return poly, touches


def _outside_hull(vertices: np.ndarray, hull_points: np.ndarray) -> bool:
    """True if any vertex lies outside the convex hull of hull_points."""
    try:
        hull = ConvexHull(hull_points)
    except QhullError:
        return True  # degenerate (collinear) neighborhood: treat as boundary
    eq = hull.equations
    scale = np.max(np.abs(hull_points)) + 1.0
    vals = vertices @ eq[:, :2].T + eq[:, 2]
    return bool(np.any(vals > 1e-9 * scale))


def voronoi_volume(projected_neighbors: np.ndarray, delta: float | None = None):
    """Area of the origin point's Voronoi cell among its projected neighbors.

    ``projected_neighbors`` is (M, 2), relative to the point at the origin.
    If the cell is unbounded or any of its vertices leaves the convex hull of
    the neighbors, the point is boundary-flagged and the cell is recomputed
    with 4 padding points at the nearest-neighbor distance along the
    (projected) principal axes.  Fewer than 3 distinct points fall back to
    the padded square of area r^2, flagged.
    """
    pts = np.asarray(projected_neighbors, dtype=np.float64)
    norms = np.linalg.norm(pts, axis=1)
    positive = norms > 0.0
    r = float(norms[positive].min()) if positive.any() else 0.0
    if r == 0.0:
        raise ValueError("all projected neighbors coincide with the point")
    if delta is None:
        delta = float(norms.max())
    half_extent = 5.0 * delta

    pads = np.array([[r, 0.0], [-r, 0.0], [0.0, r], [0.0, -r]])
    distinct = np.unique(pts[positive], axis=0)
    if distinct.shape[0] < 2:  # point plus <2 distinct neighbors
        poly, _ = _cell_polygon(pads, half_extent)
        return _polygon_area(poly), True

    poly, touches = _cell_polygon(pts, half_extent)
    boundary = touches or poly.shape[0] < 3 or _outside_hull(poly, pts)
    if boundary:
        poly, _ = _cell_polygon(np.vstack((pts, pads)), half_extent)
    return _polygon_area(poly), boundary


def _point_volume(i, coords, neighbors, distances, drop_ratio):
    nbhd = coords[np.concatenate(([i], neighbors[i]))]
    eigenvalues, directions = local_pca(nbhd)
    dim = estimate_local_dimension(eigenvalues, drop_ratio)
    delta = distances[i, -1]
    if dim > 2:
        # >2-D cells are outside validated scope; fall back to delta^2
        return dim, True, float(delta * delta)
    projected = project_to_tangent(nbhd, coords[i], directions, 2)
    volume, boundary = voronoi_volume(projected[1:], delta=float(delta))
    return dim, boundary, volume


def build_graph(
    pathlines,
    M: int = 30,
    drop_ratio: float = 0.35,
    threads: int = 1,
) -> NeighborhoodGraph:
    """Assemble the full neighborhood graph for a pathline set.

    Local dimension is estimated per point but cell areas are always
    computed in the 2-plane; points estimating above 2 are flagged and fall
    back to delta^2.
    """
    coords = pathlines.coords if isinstance(pathlines, PathlineSet) else np.asarray(pathlines, float)
    n = coords.shape[0]
    neighbors, distances = knn(coords, M)
    delta = distances[:, -1].copy()
    eta = float(np.median(delta))

    local_dim = np.empty(n, dtype=np.int64)
    boundary = np.empty(n, dtype=bool)
    volume = np.empty(n, dtype=np.float64)

    def run(i):
        local_dim[i], boundary[i], volume[i] = _point_volume(
            i, coords, neighbors, distances, drop_ratio
        )

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(run, range(n)))
    else:
        for i in range(n):
            run(i)

    if np.any(volume <= 0.0):
        bad = int(np.flatnonzero(volume <= 0.0)[0])
        raise ValueError(f"nonpositive Voronoi cell volume at point {bad}")

    return NeighborhoodGraph(
        M=M,
        neighbors=neighbors,
        distances=distances,
        local_dim=local_dim,
        boundary_flag=boundary,
        cell_volume=volume,
        delta=delta,
        eta=eta,
    )


def write_graph_csv(path, graph: NeighborhoodGraph) -> None:
    """Per-point debug dump: index,local_dim,boundary_flag,cell_volume,delta."""
    with open(path, "w") as fh:
        fh.write("index,local_dim,boundary_flag,cell_volume,delta\n")
        for i in range(graph.n):
            fh.write(
                f"{i},{graph.local_dim[i]},{int(graph.boundary_flag[i])},"
                f"{graph.cell_volume[i]:.17g},{graph.delta[i]:.17g}\n"
            )
