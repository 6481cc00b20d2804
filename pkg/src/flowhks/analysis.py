"""Derived analytics over one or two HKS fields.

Everything here operates on the log-domain signatures (the displayed
quantity): per-point means over a scale range, L2 curve distances to an
anchor point, and k-means clustering of curve segments, jointly across two
datasets or separately.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .hks import HKSField, sample_scales

__all__ = [
    "ScaleRange",
    "ClusterResult",
    "mean_hks",
    "similarity_field",
    "align_scales",
    "kmeans_curves",
    "kmeans_hks",
    "kmeans_positions",
    "canonicalize_labels",
    "write_labels_csv",
]


@dataclass(frozen=True)
class ScaleRange:
    """Inclusive index range into a scale grid."""

    lo: int
    hi: int

    def __post_init__(self):
        if not (0 <= self.lo <= self.hi):
            raise ValueError(f"invalid scale range [{self.lo}, {self.hi}]")

    def validate(self, n_scales: int) -> None:
        if self.hi >= n_scales:
            raise ValueError(f"scale range [{self.lo}, {self.hi}] exceeds grid of {n_scales}")

    def slice(self) -> slice:
        return slice(self.lo, self.hi + 1)


@dataclass
class ClusterResult:
    """k-means output over one or two datasets.

    ``labels`` and ``indices`` are per dataset (selected points only);
    ``centroids`` holds log-domain centroid curves per clustering (one entry
    in joint mode, one per dataset in separate mode).
    """

    mode: str
    k: int
    scales: np.ndarray  # scale values of the clustered sub-range
    labels: list[np.ndarray]
    indices: list[np.ndarray]
    centroids: list[np.ndarray]
    inertia: list[float]
    inertia_history: list[list[float]] = field(default_factory=list)


def mean_hks(hks: HKSField, scale_range: ScaleRange) -> np.ndarray:
    """Per-point mean of log-domain signatures over the index range."""
    scale_range.validate(hks.n_scales)
    return hks.log_values()[:, scale_range.slice()].mean(axis=1)


def _check_shared_grid(fields: list[HKSField]) -> None:
    ref = fields[0].scales
    for f in fields[1:]:
        if f.scales.shape != ref.shape or not np.allclose(f.scales, ref, rtol=1e-12, atol=0):
            raise ValueError("scale grids differ; align the fields first")


def similarity_field(
    fields: list[HKSField], anchor: tuple[int, int], scale_range: ScaleRange
) -> list[np.ndarray]:
    """L2 distance of every point's log-domain sub-curve to the anchor's.

    ``anchor`` is (dataset index, point index).  All fields must share one
    scale grid (see :func:`align_scales`); returns one distance array per
    field, with the anchor itself at exactly zero.
    """
    _check_shared_grid(fields)
    scale_range.validate(fields[0].n_scales)
    sl = scale_range.slice()
    ds, point = anchor
    ref = fields[ds].log_values()[point, sl]
    out = []
    for f in fields:
        diff = f.log_values()[:, sl] - ref[None, :]
        out.append(np.sqrt(np.einsum("ij,ij->i", diff, diff)))
    out[ds][point] = 0.0
    return out


def _resample_log(field_obj: HKSField, grid: np.ndarray) -> HKSField:
    log_s_old = np.log(field_obj.scales)
    log_s_new = np.log(grid)
    # linear interpolation weights in log-scale, shared across all curves
    idx = np.clip(np.searchsorted(log_s_old, log_s_new, side="right") - 1, 0, log_s_old.size - 2)
    span = log_s_old[idx + 1] - log_s_old[idx]
    w = (log_s_new - log_s_old[idx]) / span

    def interp(matrix: np.ndarray) -> np.ndarray:
        logm = np.log10(matrix)
        out = (1.0 - w)[None, :] * logm[:, idx] + w[None, :] * logm[:, idx + 1]
        return 10.0**out

    raw = interp(field_obj.raw_values) if field_obj.raw_values is not None else None
    return HKSField(
        scales=grid, values=interp(field_obj.values), raw_values=raw, beta=field_obj.beta
    )


def align_scales(a: HKSField, b: HKSField, count: int = 100):
    """Resample two fields onto a common log-spaced grid on the overlap.

    Curves are interpolated linearly in (log s, log HKS) space, which is
    exact for power-law segments.  Identical grids pass through untouched.
    """
    if a.scales.shape == b.scales.shape and np.array_equal(a.scales, b.scales):
        return a, b
    lo = max(a.s_min, b.s_min)
    hi = min(a.s_max, b.s_max)
    if not lo < hi:
        raise ValueError(
            f"scale intervals [{a.s_min:.3g}, {a.s_max:.3g}] and "
            f"[{b.s_min:.3g}, {b.s_max:.3g}] do not overlap"
        )
    grid = sample_scales(lo, hi, count)
    return _resample_log(a, grid), _resample_log(b, grid)


def _kmeans_pp_init(rows: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = rows.shape[0]
    centers = np.empty((k, rows.shape[1]), dtype=np.float64)
    centers[0] = rows[rng.integers(n)]
    d2 = np.einsum("ij,ij->i", rows - centers[0], rows - centers[0])
    for c in range(1, k):
        total = d2.sum()
        if total <= 0:
            centers[c:] = centers[0]  # all points coincide with chosen centers
            break
        probs = d2 / total
        centers[c] = rows[rng.choice(n, p=probs)]
        cand = np.einsum("ij,ij->i", rows - centers[c], rows - centers[c])
        np.minimum(d2, cand, out=d2)
    return centers


def kmeans_curves(rows: np.ndarray, k: int, rng_seed: int = 0, max_iter: int = 300, n_init: int = 1):
    """Seeded k-means++ plus Lloyd iterations to an assignment fixpoint.

    Returns (labels, centroids, inertia, inertia_history).  Ties in the
    assignment go to the lowest centroid index; empty clusters keep their
    previous centroid, so inertia is non-increasing across iterations.
    With ``n_init`` > 1, restarts run with seeds rng_seed..rng_seed+n_init-1
    and the lowest-inertia run wins (ties to the earliest restart).
    """
    if n_init > 1:
        best = None
        for offset in range(n_init):
            candidate = kmeans_curves(rows, k, rng_seed + offset, max_iter, n_init=1)
            if best is None or candidate[2] < best[2]:
                best = candidate
        return best
    rows = np.asarray(rows, dtype=np.float64)
    n = rows.shape[0]
    if k < 1:
        raise ValueError("k must be >= 1")
    if n < k:
        raise ValueError(f"cannot form k={k} clusters from {n} points")
    rng = np.random.default_rng(rng_seed)
    centers = _kmeans_pp_init(rows, k, rng)

    labels = np.full(n, -1, dtype=np.int64)
    history: list[float] = []
    for _ in range(max_iter):
        d2 = (
            np.einsum("ij,ij->i", rows, rows)[:, None]
            - 2.0 * rows @ centers.T
            + np.einsum("ij,ij->i", centers, centers)[None, :]
        )
        new_labels = np.argmin(d2, axis=1)
        inertia = float(np.take_along_axis(d2, new_labels[:, None], axis=1).sum())
        history.append(max(inertia, 0.0))
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for c in range(k):
            members = labels == c
            if members.any():
                centers[c] = rows[members].mean(axis=0)
    return labels, centers, history[-1], history


def canonicalize_labels(labels: np.ndarray, centroids: np.ndarray):
    """Renumber clusters by ascending centroid mean, ties by first member.

    Returns (labels, centroids) relabeled; empty clusters sort last.
    """
    labels = np.asarray(labels)
    k = centroids.shape[0]
    first_member = np.full(k, np.iinfo(np.int64).max, dtype=np.int64)
    for c in range(k):
        members = np.flatnonzero(labels == c)
        if members.size:
            first_member[c] = members[0]
    means = centroids.mean(axis=1)
    order = sorted(range(k), key=lambda c: (first_member[c] == np.iinfo(np.int64).max, means[c], first_member[c]))
    remap = np.empty(k, dtype=np.int64)
    for new, old in enumerate(order):
        remap[old] = new
    return remap[labels], centroids[order]


def _selected_indices(seeds, region) -> np.ndarray:
    n = seeds.shape[0]
    if region is None:
        return np.arange(n)
    xmin, ymin, xmax, ymax = region
    mask = (
        (seeds[:, 0] >= xmin)
        & (seeds[:, 0] <= xmax)
        & (seeds[:, 1] >= ymin)
        & (seeds[:, 1] <= ymax)
    )
    return np.flatnonzero(mask)


def kmeans_hks(
    fields: list[HKSField],
    scale_range: ScaleRange,
    k: int,
    mode: str = "joint",
    rng_seed: int = 0,
    seeds: list[np.ndarray] | None = None,
    regions=None,
    n_init: int = 1,
) -> ClusterResult:
    """Cluster log-domain HKS sub-curves from one or two datasets.

    Joint mode aligns the fields, pools selected rows, and runs one k-means;
    separate mode clusters each dataset independently.  Region filters are
    axis-aligned (xmin, ymin, xmax, ymax) boxes over seed positions.
    """
    if mode not in ("joint", "separate"):
        raise ValueError(f"unknown mode {mode!r}")
    if len(fields) == 2 and mode == "joint":
        fields = list(align_scales(fields[0], fields[1]))
    scale_range.validate(min(f.n_scales for f in fields))
    sl = scale_range.slice()
    sub_scales = fields[0].scales[sl]

    if regions is None:
        regions = [None] * len(fields)
    if seeds is None:
        seeds = [None] * len(fields)
    indices = []
    for f, s, r in zip(fields, seeds, regions):
        if r is not None and s is None:
            raise ValueError("region filters require seed positions")
        indices.append(
            _selected_indices(s, r) if s is not None else np.arange(f.n)
        )

    rows_per_ds = [f.log_values()[idx][:, sl] for f, idx in zip(fields, indices)]

    if mode == "joint":
        pooled = np.vstack(rows_per_ds)
        labels, centroids, inertia, history = kmeans_curves(pooled, k, rng_seed, n_init=n_init)
        labels, centroids = canonicalize_labels(labels, centroids)
        split = np.cumsum([r.shape[0] for r in rows_per_ds])[:-1]
        per_ds = np.split(labels, split)
        return ClusterResult(
            mode=mode,
            k=k,
            scales=sub_scales,
            labels=[np.asarray(p) for p in per_ds],
            indices=indices,
            centroids=[centroids],
            inertia=[inertia],
            inertia_history=[history],
        )

    all_labels, all_centroids, all_inertia, all_hist = [], [], [], []
    for rows in rows_per_ds:
        labels, centroids, inertia, history = kmeans_curves(rows, k, rng_seed, n_init=n_init)
        labels, centroids = canonicalize_labels(labels, centroids)
        all_labels.append(labels)
        all_centroids.append(centroids)
        all_inertia.append(inertia)
        all_hist.append(history)
    return ClusterResult(
        mode=mode,
        k=k,
        scales=sub_scales,
        labels=all_labels,
        indices=indices,
        centroids=all_centroids,
        inertia=all_inertia,
        inertia_history=all_hist,
    )


def kmeans_positions(
    pathline_sets: list,
    k: int,
    rng_seed: int = 0,
    regions=None,
    n_init: int = 1,
) -> ClusterResult:
    """Baseline: cluster raw flattened coordinates instead of signatures."""
    if regions is None:
        regions = [None] * len(pathline_sets)
    indices = [_selected_indices(p.seeds, r) for p, r in zip(pathline_sets, regions)]
    rows = np.vstack([p.coords[idx] for p, idx in zip(pathline_sets, indices)])
    labels, centroids, inertia, history = kmeans_curves(rows, k, rng_seed, n_init=n_init)
    labels, centroids = canonicalize_labels(labels, centroids)
    split = np.cumsum([idx.size for idx in indices])[:-1]
    per_ds = np.split(labels, split)
    return ClusterResult(
        mode="joint",
        k=k,
        scales=np.array([]),
        labels=[np.asarray(p) for p in per_ds],
        indices=indices,
        centroids=[centroids],
        inertia=[inertia],
        inertia_history=[history],
    )


def write_labels_csv(path, result: ClusterResult, dataset_ids: list[str]) -> None:
    """Export per-point labels as ``index,dataset,label_or_value`` CSV."""
    with open(path, "w") as fh:
        fh.write("index,dataset,label_or_value\n")
        for ds_id, idx, labels in zip(dataset_ids, result.indices, result.labels):
            for i, lab in zip(idx, labels):
                fh.write(f"{i},{ds_id},{lab}\n")
