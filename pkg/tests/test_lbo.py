import numpy as np
import pytest
import scipy.sparse as sp
from oracles import dense_smallest_eigenpairs, random_rigid_motion, surface_patch_cloud

from flowhks.lbo import (
    LBOConfig,
    assemble,
    eigendecompose,
    symmetrize,
    write_matrix_coo,
    write_spectrum_csv,
)
from flowhks.neighborhood import build_graph


def graph_for(coords, M=8):
    return build_graph(coords, M=M)


def two_point_setup(sigma=0.5, vols=(1.0, 1.0)):
    """Hand-built graph stand-in for the 2-point affinity example."""

    class Stub:
        cell_volume = np.asarray(vols, dtype=float)
        eta = sigma  # alpha=1 makes sigma = eta

    coords = np.array([[0.0, 0.0], [1.0, 0.0]])  # squared distance 1
    return Stub(), coords


class TestAssemble:
    def test_two_point_affinity_value(self):
        graph, coords = two_point_setup()
        config = LBOConfig(alpha=1.0, sparsity_mode="absolute", threshold=0.0, n_eig=2)
        Q, b = assemble(graph, coords, config)
        qd = Q.toarray()
        expected = np.exp(-0.5) / np.pi  # vol^2/(4 pi sigma^2) e^{-1/(4 sigma)}
        assert qd[0, 1] == pytest.approx(expected, rel=1e-12)
        assert expected == pytest.approx(0.1930647, abs=1e-6)
        assert qd[0, 0] == pytest.approx(-expected, rel=1e-12)
        assert qd[1, 1] == pytest.approx(-expected, rel=1e-12)
        np.testing.assert_array_equal(b, [1.0, 1.0])

    def test_threshold_above_everything_errors(self):
        graph, coords = two_point_setup()
        config = LBOConfig(alpha=1.0, sparsity_mode="absolute", threshold=1.0, n_eig=2)
        with pytest.raises(ValueError, match="point 0"):
            assemble(graph, coords, config)

    def test_row_sums_zero_by_construction(self):
        cloud = surface_patch_cloud(7, seed=0)
        graph = graph_for(cloud)
        Q, _ = assemble(graph, cloud, LBOConfig(alpha=0.5, n_eig=5))
        Qc = Q.tocsr()
        diag = Qc.diagonal()
        for i in range(cloud.shape[0]):
            row = Qc.data[Qc.indptr[i] : Qc.indptr[i + 1]]
            cols = Qc.indices[Qc.indptr[i] : Qc.indptr[i + 1]]
            off = row[cols != i]
            # same grouping as assembly: off-diagonal sum plus its negation
            assert np.sum(off) + diag[i] == 0.0
        assert np.abs(np.asarray(Qc.sum(axis=1))).max() < 1e-12 * np.abs(Qc.data).max()

    def test_fraction_mask_is_symmetric(self):
        cloud = surface_patch_cloud(8, seed=1)
        graph = graph_for(cloud)
        Q, _ = assemble(graph, cloud, LBOConfig(alpha=0.5, row_fraction=0.08, n_eig=5))
        diff = (Q - Q.T).tocoo()
        asymmetry = np.abs(diff.data).max() if diff.nnz else 0.0
        assert asymmetry == 0.0

    def test_duplicate_points_error(self):
        coords = np.zeros((4, 3))
        graph = graph_for(surface_patch_cloud(4, seed=2), M=3)
        graph.cell_volume[:] = 1.0

        class Stub:
            cell_volume = np.ones(4)
            eta = 0.0

        with pytest.raises(ValueError, match="duplicate"):
            assemble(Stub(), coords, LBOConfig(alpha=1.0, n_eig=2))

    def test_isolated_row_error_names_point(self):
        graph, coords = two_point_setup()
        config = LBOConfig(alpha=1.0, sparsity_mode="absolute", threshold=0.5, n_eig=2)
        with pytest.raises(ValueError, match="point 0.*threshold|threshold.*point 0"):
            assemble(graph, coords, config)


class TestSymmetrize:
    def test_identity_mass_is_noop(self):
        cloud = surface_patch_cloud(6, seed=3)
        graph = graph_for(cloud, M=6)
        Q, _ = assemble(graph, cloud, LBOConfig(alpha=0.5, n_eig=5))
        U = symmetrize(Q, np.ones(cloud.shape[0]))
        assert np.abs((U - Q).toarray()).max() == 0.0

    def test_two_by_two_scaling(self):
        graph, coords = two_point_setup(vols=(1.0, 4.0))
        config = LBOConfig(alpha=1.0, sparsity_mode="absolute", threshold=0.0, n_eig=2)
        Q, b = assemble(graph, coords, config)
        q12 = Q.toarray()[0, 1]
        U = symmetrize(Q, b)
        assert U.toarray()[0, 1] == pytest.approx(q12 / 2.0, rel=1e-14)

    def test_symmetry_bound(self):
        cloud = surface_patch_cloud(9, seed=4)
        graph = graph_for(cloud)
        Q, b = assemble(graph, cloud, LBOConfig(alpha=0.5, n_eig=5))
        U = symmetrize(Q, b)
        asym = (U - U.T).tocoo()
        assert (np.abs(asym.data).max() if asym.nnz else 0.0) < 1e-12

    def test_nonpositive_mass_rejected(self):
        Q = sp.csr_array(np.array([[0.0, 1.0], [1.0, 0.0]]))
        with pytest.raises(ValueError, match="mass entry 1"):
            symmetrize(Q, np.array([1.0, 0.0]))


def random_operator(n, seed, density=0.08, connected=True):
    """Random symmetric zero-row-sum Q and positive mass, in U form."""
    rng = np.random.default_rng(seed)
    mask = sp.random_array((n, n), density=density, random_state=rng, format="coo")
    rows = np.concatenate([mask.row, np.arange(n - 1)]) if connected else mask.row
    cols = np.concatenate([mask.col, np.arange(1, n)]) if connected else mask.col
    vals = rng.uniform(0.1, 1.0, size=rows.size)
    S = sp.coo_array((vals, (rows, cols)), shape=(n, n)).tocsr()
    S = S.maximum(S.T).tolil()
    S.setdiag(0.0)
    S = S.tocsr()
    diag = -np.asarray(S.sum(axis=1)).ravel()
    Q = S + sp.diags_array(diag, format="csr")
    b = rng.uniform(0.5, 2.0, size=n)
    return symmetrize(Q, b), b


class TestEigendecompose:
    def test_matches_dense_oracle_n300(self):
        U, b = random_operator(300, seed=5)
        spectrum = eigendecompose(U, b, 40, method="arpack")
        dense_vals, _ = dense_smallest_eigenpairs(U, 40)
        scale = dense_vals[-1]
        np.testing.assert_allclose(spectrum.eigenvalues, dense_vals, atol=1e-8 * scale)

    def test_kernel_vector_is_sqrt_mass(self):
        U, b = random_operator(120, seed=6)
        spectrum = eigendecompose(U, b, 6, method="arpack")
        assert abs(spectrum.eigenvalues[0]) < 1e-8 * spectrum.eigenvalues[-1]
        # phi_0 = B^{-1/2} phi_hat_0 with phi_hat_0 ∝ B^{1/2} 1: phi_0 is constant
        phi0 = spectrum.eigenvectors[:, 0]
        assert np.abs(phi0 - phi0.mean()).max() < 1e-8 * np.abs(phi0.mean())

    def test_b_orthonormality(self):
        U, b = random_operator(150, seed=7)
        spectrum = eigendecompose(U, b, 12, method="arpack")
        gram = (spectrum.eigenvectors * b[:, None]).T @ spectrum.eigenvectors
        assert np.abs(gram - np.eye(12)).max() < 1e-8

    def test_disconnected_components_double_kernel(self):
        Ua, ba = random_operator(40, seed=8)
        Ub, bb = random_operator(25, seed=9)
        U = sp.block_diag((Ua, Ub), format="csr")
        b = np.concatenate((ba, bb))
        spectrum = eigendecompose(U, b, 5, method="arpack")
        lam = spectrum.eigenvalues
        assert abs(lam[0]) < 1e-8 * lam[-1]
        assert abs(lam[1]) < 1e-8 * lam[-1]
        assert lam[2] > 1e-4 * lam[-1]

    def test_residual_bound_enforced(self):
        U, b = random_operator(80, seed=10)
        spectrum = eigendecompose(U, b, 10, method="arpack")
        A = (-U).toarray()
        phi_hat = np.sqrt(b)[:, None] * spectrum.eigenvectors
        res = np.linalg.norm(A @ phi_hat - phi_hat * spectrum.eigenvalues[None, :], axis=0)
        assert np.all(res <= 1e-8 * np.maximum(1.0, spectrum.eigenvalues))

    def test_near_full_spectrum_matches_dense(self):
        n = 120
        U, b = random_operator(n, seed=11)
        k = n - 2  # ARPACK ceiling
        spectrum = eigendecompose(U, b, k, method="arpack")
        dense_vals, dense_vecs = dense_smallest_eigenpairs(U, k)
        scale = dense_vals[-1]
        np.testing.assert_allclose(spectrum.eigenvalues, dense_vals, atol=1e-8 * scale)
        # principal angles for eigenvalues isolated from their neighbors
        lam = dense_vals
        phi_hat = np.sqrt(b)[:, None] * spectrum.eigenvectors
        for i in range(1, k - 1):
            gap = min(lam[i] - lam[i - 1], lam[i + 1] - lam[i])
            if gap > 1e-4 * scale:
                cosine = abs(np.dot(phi_hat[:, i], dense_vecs[:, i]))
                assert np.sqrt(max(0.0, 1.0 - cosine**2)) < 1e-6

    def test_full_spectrum_dense_fallback(self):
        U, b = random_operator(30, seed=12)
        spectrum = eigendecompose(U, b, 30)  # auto: n_eig > n-2 uses the dense path
        dense_vals, _ = dense_smallest_eigenpairs(U, 30)
        np.testing.assert_allclose(spectrum.eigenvalues, dense_vals, atol=1e-10 * dense_vals[-1])

    def test_n_eig_exceeding_n_rejected(self):
        U, b = random_operator(10, seed=13)
        with pytest.raises(ValueError, match="n_eig"):
            eigendecompose(U, b, 11)

    def test_determinism(self):
        U, b = random_operator(100, seed=14)
        s1 = eigendecompose(U, b, 8, method="arpack")
        s2 = eigendecompose(U, b, 8, method="arpack")
        np.testing.assert_array_equal(s1.eigenvalues, s2.eigenvalues)
        np.testing.assert_array_equal(s1.eigenvectors, s2.eigenvectors)


class TestPipelineInvariances:
    def test_rigid_motion_leaves_spectrum(self):
        cloud = surface_patch_cloud(10, seed=15)
        config = LBOConfig(alpha=0.5, n_eig=20)
        graph = graph_for(cloud)
        Q, b = assemble(graph, cloud, config)
        s1 = eigendecompose(symmetrize(Q, b), b, 20, method="arpack")
        Qm, shift = random_rigid_motion(cloud.shape[1], seed=16)
        moved = cloud @ Qm.T + shift
        graph2 = graph_for(moved)
        Q2, b2 = assemble(graph2, moved, config)
        s2 = eigendecompose(symmetrize(Q2, b2), b2, 20, method="arpack")
        scale = s1.eigenvalues[-1]
        np.testing.assert_allclose(s2.eigenvalues, s1.eigenvalues, atol=1e-9 * scale)

    def test_permutation_leaves_eigenvalues(self):
        cloud = surface_patch_cloud(9, seed=17)
        config = LBOConfig(alpha=0.5, n_eig=15)
        graph = graph_for(cloud)
        Q, b = assemble(graph, cloud, config)
        s1 = eigendecompose(symmetrize(Q, b), b, 15, method="arpack")
        perm = np.random.default_rng(18).permutation(cloud.shape[0])
        graph2 = graph_for(cloud[perm])
        Q2, b2 = assemble(graph2, cloud[perm], config)
        s2 = eigendecompose(symmetrize(Q2, b2), b2, 15, method="arpack")
        scale = s1.eigenvalues[-1]
        np.testing.assert_allclose(s2.eigenvalues, s1.eigenvalues, atol=1e-9 * scale)


class TestDumps:
    def test_spectrum_csv(self, tmp_path):
        U, b = random_operator(20, seed=19)
        spectrum = eigendecompose(U, b, 5, method="arpack")
        out = tmp_path / "spec.csv"
        write_spectrum_csv(out, spectrum)
        lines = out.read_text().splitlines()
        assert lines[0] == "index,eigenvalue"
        assert len(lines) == 6
        assert float(lines[2].split(",")[1]) == spectrum.eigenvalues[1]

    def test_matrix_coo_roundtrip(self, tmp_path):
        graph, coords = two_point_setup()
        Q, _ = assemble(graph, coords, LBOConfig(alpha=1.0, sparsity_mode="absolute", n_eig=2))
        out = tmp_path / "q.txt"
        write_matrix_coo(out, Q)
        rows = [line.split() for line in out.read_text().splitlines()]
        entries = {(int(r), int(c)): float(v) for r, c, v in rows}
        assert entries[(0, 1)] == Q.toarray()[0, 1]
