"""Acceptance suite: one test per release criterion, at pinned tolerances.

Each test prints an ``ACCEPTANCE PASS/FAIL`` line (visible with ``pytest -s``
or on failure).  Three desk-scale criteria are known to be unattainable at
the pinned 50x50 grid; they are implemented verbatim and fail honestly, with
supplementary tests demonstrating the properties at configurations where
they hold.  The analysis lives in the project notes, not in this file.
"""

import time

import numpy as np
from oracles import (
    adjusted_rand_index,
    dense_heat_diagonal,
    dense_smallest_eigenpairs,
    random_rigid_motion,
    surface_patch_cloud,
)

from flowhks.analysis import ScaleRange, kmeans_hks, kmeans_positions
from flowhks.cli import main
from flowhks.flowfield import PathlineSet, abc_velocity, integrate_pathlines, seed_grid, write_pathlines
from flowhks.hks import build_field
from flowhks.lbo import LBOConfig, assemble, eigendecompose, symmetrize
from flowhks.neighborhood import build_graph, knn, voronoi_volume
from flowhks.pipeline import PipelineConfig, run_pipeline
from conftest import DESK_CONFIG, DESK_DOMAIN

from oracles import monte_carlo_cell_area

TWO_PI = 2.0 * np.pi


def verdict(name: str, ok: bool, detail: str) -> None:
    print(f"ACCEPTANCE {'PASS' if ok else 'FAIL'}: {name} ({detail})")
    assert ok, f"{name}: {detail}"


def translate_pairs(pathlines: PathlineSet, count: int = 300, seed: int = 0):
    """Pairs related by +(2pi, 2pi); partner = nearest seed to the translate."""
    seeds = pathlines.seeds
    rng = np.random.default_rng(seed)
    hi = 8 * np.pi
    candidates = np.flatnonzero(
        (seeds[:, 0] + TWO_PI <= hi) & (seeds[:, 1] + TWO_PI <= hi)
    )
    sample = rng.choice(candidates, size=min(count, candidates.size), replace=False)
    targets = seeds[sample] + TWO_PI
    d2 = ((seeds[None, :, :] - targets[:, None, :]) ** 2).sum(axis=2)
    return sample, np.argmin(d2, axis=1)


def sampled_all_pairs(n: int, count: int = 20000, seed: int = 0):
    rng = np.random.default_rng(seed)
    ii = rng.integers(0, n, count)
    jj = rng.integers(0, n, count)
    keep = ii != jj
    return ii[keep], jj[keep]


class TestSpectralOracles:
    def test_dense_oracle_spectral_equivalence(self):
        start = time.perf_counter()
        cloud = surface_patch_cloud(20, seed=0)  # n = 400 <= 500
        graph = build_graph(cloud, M=12)
        config = LBOConfig(alpha=0.5, n_eig=300, row_fraction=0.05)
        Q, b = assemble(graph, cloud, config)
        U = symmetrize(Q, b)
        spectrum = eigendecompose(U, b, 300, method="arpack")
        dense_vals, _ = dense_smallest_eigenpairs(U, 300)
        elapsed = time.perf_counter() - start
        err = np.abs(spectrum.eigenvalues - dense_vals).max() / dense_vals[-1]
        verdict(
            "dense-oracle spectral equivalence",
            err < 1e-8 and elapsed < 30.0,
            f"rel err {err:.3e}, {elapsed:.1f} s",
        )

    def test_dense_heat_kernel_oracle(self):
        cloud = surface_patch_cloud(14, seed=1)  # n = 196 <= 200
        graph = build_graph(cloud, M=12)
        config = LBOConfig(alpha=0.5, n_eig=196, sparsity_mode="absolute", threshold=0.0)
        Q, b = assemble(graph, cloud, config)
        U = symmetrize(Q, b)
        spectrum = eigendecompose(U, b, 196)  # full spectrum
        field = build_field(spectrum, beta=0.01, n_scales=8)
        oracle = dense_heat_diagonal(U, b, field.scales)
        err = np.abs(field.raw_values - oracle).max() / np.abs(oracle).max()
        verdict("dense heat-kernel oracle", err < 1e-8, f"rel err {err:.3e}")


class TestDeskScaleIdentities:
    def test_heat_trace_identity(self, desk_result):
        spectrum = desk_result.spectrum
        field = desk_result.hks
        lhs = spectrum.mass @ field.raw_values
        lam = np.maximum(spectrum.eigenvalues, 0.0)
        rhs = np.exp(-np.outer(lam, field.scales)).sum(axis=0)
        err = (np.abs(lhs - rhs) / rhs).max()
        verdict("heat-trace identity", err < 1e-8, f"max rel err {err:.3e} over 100 scales")

    def test_isometry_invariance(self, desk_pathlines, desk_result):
        Q, shift = random_rigid_motion(desk_pathlines.coords.shape[1], seed=2)
        moved = desk_pathlines.coords @ Q.T + shift
        graph = build_graph(moved, M=DESK_CONFIG.M, drop_ratio=DESK_CONFIG.drop_ratio)
        cfg = DESK_CONFIG.lbo_config(moved.shape[0])
        Qm, b = assemble(graph, moved, cfg)
        spectrum = eigendecompose(symmetrize(Qm, b), b, cfg.n_eig)
        field = build_field(spectrum, beta=DESK_CONFIG.beta)
        dev = np.abs(field.values - desk_result.hks.values).max()
        verdict("isometry invariance", dev < 1e-8, f"max abs change {dev:.3e}")

    def test_end_to_end_runtime(self, desk_pathlines, tmp_path):
        pl_file = tmp_path / "desk.pl"
        write_pathlines(pl_file, desk_pathlines)
        out = tmp_path / "desk.hks"
        start = time.perf_counter()
        rc = main([
            "--threads", "1", "hks", str(pl_file), "-o", str(out),
            "--M", "30", "--alpha", "0.5", "--beta", "0.01", "--n-eig", "300",
        ])
        elapsed = time.perf_counter() - start
        verdict(
            "end-to-end desk-scale runtime",
            rc == 0 and out.exists() and elapsed < 300.0,
            f"{elapsed:.1f} s single-threaded (< 300 s)",
        )


class TestLocalDimension:
    def test_local_dimension_claim(self, desk_result):
        graph = desk_result.graph
        frac_dim2 = float(np.mean(graph.local_dim == 2))
        boundary = graph.boundary_fraction()
        verdict(
            "local dimension claim",
            frac_dim2 >= 0.95 and boundary <= 0.15,
            f"dim-2 fraction {frac_dim2:.3f} (need >= 0.95), "
            f"boundary fraction {boundary:.3f} (need <= 0.15)",
        )

    def test_supplementary_dimension_at_higher_resolution(self):
        # same claim on a 100x100 grid, where the sampling resolves the manifold
        seeds = seed_grid(DESK_DOMAIN, (100, 100))
        pathlines = integrate_pathlines(abc_velocity(), seeds, 0.0, TWO_PI, 30)
        graph = build_graph(pathlines, M=30)
        frac_dim2 = float(np.mean(graph.local_dim == 2))
        boundary = graph.boundary_fraction()
        verdict(
            "supplementary: dimension claim at 100x100",
            frac_dim2 >= 0.95 and boundary <= 0.15,
            f"dim-2 fraction {frac_dim2:.3f}, boundary fraction {boundary:.3f}",
        )


class TestABCSymmetry:
    def test_abc_symmetry(self, desk_pathlines, desk_result):
        logv = desk_result.hks.log_values()
        sample, partners = translate_pairs(desk_pathlines)
        pair_d = np.linalg.norm(logv[sample] - logv[partners], axis=1)
        ii, jj = sampled_all_pairs(desk_pathlines.n)
        all_d = np.linalg.norm(logv[ii] - logv[jj], axis=1)
        p5 = np.percentile(all_d, 5)
        frac = float(np.mean(pair_d < p5))
        verdict(
            "ABC symmetry",
            frac >= 0.90,
            f"{frac:.3f} of translate pairs below the all-pairs 5th percentile "
            f"(need >= 0.90; pair median {np.median(pair_d):.3f}, bar {p5:.3f})",
        )

    def test_supplementary_symmetry_small_scale_signal(self):
        # grid divisible by 4 so exact translate pairs exist; compare the
        # small-scale end where local geometry dominates
        grid = 48
        seeds = seed_grid(DESK_DOMAIN, (grid, grid))
        pathlines = integrate_pathlines(abc_velocity(), seeds, 0.0, TWO_PI, 30)
        result = run_pipeline(pathlines, DESK_CONFIG)
        logv = result.hks.log_values()[:, :20]
        n = pathlines.n
        shift = grid // 4
        ix = np.arange(n) % grid
        iy = np.arange(n) // grid
        sample = np.flatnonzero((ix + shift < grid) & (iy + shift < grid))
        partners = sample + shift + shift * grid
        pair_d = np.linalg.norm(logv[sample] - logv[partners], axis=1)
        ii, jj = sampled_all_pairs(n)
        all_d = np.linalg.norm(logv[ii] - logv[jj], axis=1)
        ratio = float(np.median(pair_d) / np.median(all_d))
        verdict(
            "supplementary: translate pairs close at small scales",
            ratio < 0.5,
            f"median pair / median all = {ratio:.3f} over the 20 smallest scales",
        )


def tile_agreements(pathlines: PathlineSet, labels: np.ndarray):
    """Label agreement of the reference 2pi tile with its 3 diagonal copies."""
    seeds = pathlines.seeds
    ref = np.flatnonzero((seeds[:, 0] < TWO_PI) & (seeds[:, 1] < TWO_PI))
    out = []
    for c in (1, 2, 3):
        target = seeds[ref] + c * TWO_PI
        d2 = ((seeds[None, :, :] - target[:, None, :]) ** 2).sum(axis=2)
        partner = np.argmin(d2, axis=1)
        out.append(float(np.mean(labels[ref] == labels[partner])))
    return out


class TestClusteringContrast:
    def test_clustering_contrast_hks(self, desk_pathlines, desk_result):
        result = kmeans_hks(
            [desk_result.hks], ScaleRange(0, 19), k=3, rng_seed=0, n_init=10
        )
        agreements = tile_agreements(desk_pathlines, result.labels[0])
        verdict(
            "clustering contrast: HKS tile consistency",
            all(a >= 0.80 for a in agreements),
            "tile agreements " + ", ".join(f"{a:.3f}" for a in agreements) + " (need all >= 0.80)",
        )

    def test_clustering_contrast_positions_fail(self, desk_pathlines):
        result = kmeans_positions([desk_pathlines], k=3, rng_seed=0, n_init=10)
        agreements = tile_agreements(desk_pathlines, result.labels[0])
        verdict(
            "clustering contrast: raw positions do not group symmetries",
            not all(a >= 0.80 for a in agreements),
            "tile agreements " + ", ".join(f"{a:.3f}" for a in agreements),
        )

    def test_clustering_determinism_exact(self, desk_result):
        r1 = kmeans_hks([desk_result.hks], ScaleRange(0, 19), k=3, rng_seed=0, n_init=10)
        r2 = kmeans_hks([desk_result.hks], ScaleRange(0, 19), k=3, rng_seed=0, n_init=10)
        same = bool(
            np.array_equal(r1.labels[0], r2.labels[0])
            and np.array_equal(r1.centroids[0], r2.centroids[0])
        )
        verdict("clustering determinism under fixed seed", same, "labels and centroids bit-identical")


class TestSampleCountConvergence:
    def test_sample_count_convergence(self):
        seeds = seed_grid(DESK_DOMAIN, (32, 32))
        config = PipelineConfig(M=30, alpha=0.5, beta=0.01, n_eig=200)
        labels = {}
        for m in (2, 17, 30):
            pathlines = integrate_pathlines(abc_velocity(), seeds, 0.0, TWO_PI, m)
            result = run_pipeline(pathlines, config)
            full = ScaleRange(0, result.hks.n_scales - 1)
            labels[m] = kmeans_hks([result.hks], full, k=4, rng_seed=0, n_init=10).labels[0]
        near = adjusted_rand_index(labels[17], labels[30])
        far = adjusted_rand_index(labels[2], labels[30])
        verdict(
            "sample-count convergence",
            near > far,
            f"ARI(m17, m30) = {near:.3f} > ARI(m2, m30) = {far:.3f}",
        )


class TestVoronoiVolumes:
    def test_unit_grid_interior_cells(self):
        xs, ys = np.meshgrid(np.arange(14.0), np.arange(14.0))
        coords = np.column_stack((xs.ravel(), ys.ravel()))
        graph = build_graph(coords, M=8)
        interior = ~graph.boundary_flag
        dev = np.abs(graph.cell_volume[interior] - 1.0).max()
        verdict(
            "Voronoi volumes: unit grid interior cells",
            interior.sum() > 0 and dev < 1e-6,
            f"{int(interior.sum())} interior cells, max |area - 1| = {dev:.2e}",
        )

    def test_monte_carlo_area_oracle(self):
        rng = np.random.default_rng(3)
        pts = rng.random((50, 2))
        neighbors, distances = knn(pts, 12)
        worst = 0.0
        for i in range(0, 50, 7):
            rel = pts[neighbors[i]] - pts[i]
            delta = float(distances[i, -1])
            r = float(distances[i, 0])
            area, boundary = voronoi_volume(rel, delta=delta)
            if boundary:
                sites = np.vstack((rel, [[r, 0], [-r, 0], [0, r], [0, -r]]))
                lim = 0.55 * r
            else:
                sites = rel
                lim = 1.05 * delta
            n_samples = int(min(max(40_000 * (4 * lim * lim) / area, 4e5), 8e6))
            mc = monte_carlo_cell_area(sites, (-lim, -lim, lim, lim), n_samples, seed=i)
            worst = max(worst, abs(mc - area) / area)
        verdict("Voronoi volumes: Monte-Carlo oracle", worst < 0.02, f"max rel dev {worst:.4f}")
