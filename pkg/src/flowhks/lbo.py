"""Discrete Laplace-Beltrami operator on the pathline point cloud.

Gaussian affinities weighted by Voronoi cell volumes form a sparse symmetric
matrix Q with zero row sums; the diagonal mass matrix B of cell volumes makes
it symmetrizable.  Eigenpairs of the symmetrized operator drive the heat
kernel signature downstream.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

__all__ = [
    "LBOConfig",
    "SpectralDecomposition",
    "EigensolverError",
    "assemble",
    "symmetrize",
    "eigendecompose",
    "write_spectrum_csv",
    "write_matrix_coo",
]

_DENORMAL_FLOOR = 1e-300  # clamp affinities below this to zero


class EigensolverError(RuntimeError):
    """Raised when the iterative eigensolver fails to reach the residual bound."""


@dataclass
class LBOConfig:
    """Operator assembly and eigensolver parameters.

    The Gaussian bandwidth is sigma = alpha * eta with eta the graph's global
    density scale.  Sparsity is controlled either by an absolute affinity
    cutoff ``threshold`` or, by default, by keeping the densest
    ``row_fraction`` of entries per row and symmetrizing the mask.
    """

    alpha: float = 0.5
    n_eig: int = 300
    beta: float = 0.01
    sparsity_mode: str = "fraction"  # "fraction" | "absolute"
    row_fraction: float = 0.05
    threshold: float = 0.0
    exponent_sigma_squared: bool = False  # exp(-d^2/(4 sigma^2)) instead of /(4 sigma)

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.n_eig < 2:
            raise ValueError("n_eig must be >= 2")
        if self.beta <= 0 or self.beta >= 1:
            raise ValueError("beta must lie in (0, 1)")
        if self.sparsity_mode not in ("fraction", "absolute"):
            raise ValueError(f"unknown sparsity_mode {self.sparsity_mode!r}")
        if self.threshold < 0:
            raise ValueError("threshold must be >= 0")
        if not (0 < self.row_fraction <= 1):
            raise ValueError("row_fraction must lie in (0, 1]")


@dataclass
class SpectralDecomposition:
    """Low-end eigenpairs of the discrete operator.

    Eigenvalues are those of -U (heat-kernel sign convention), ascending and
    nonnegative up to round-off; eigenvectors are B-orthonormal.
    """

    eigenvalues: np.ndarray  # (k,) ascending
    eigenvectors: np.ndarray  # (n, k), B-orthonormal
    mass: np.ndarray  # (n,) diagonal of B

    @property
    def n_eig(self) -> int:
        return self.eigenvalues.shape[0]


def _affinity_block(coords, rows, vols, sigma, prefactor, exponent_denom):
    d2 = (
        np.einsum("ij,ij->i", coords[rows], coords[rows])[:, None]
        + np.einsum("ij,ij->i", coords, coords)[None, :]
        - 2.0 * coords[rows] @ coords.T
    )
    np.maximum(d2, 0.0, out=d2)
    q = vols[rows][:, None] * vols[None, :] * (prefactor * np.exp(-d2 / exponent_denom))
    q[q < _DENORMAL_FLOOR] = 0.0
    return q


def assemble(graph, pathlines, config: LBOConfig):
    """Build the sparse symmetric Q and the diagonal mass vector b.

    Off-diagonals are q_ij = vol_i vol_j (1/(4 pi sigma^2)) exp(-|p_i-p_j|^2
    / (4 sigma)), computed for all pairs and thresholded; q_ii = -sum of the
    row.  Returns (Q, b) with Q in CSR form and b = cell volumes.
    """
    coords = np.asarray(
        pathlines.coords if hasattr(pathlines, "coords") else pathlines, dtype=np.float64
    )
    n = coords.shape[0]
    vols = np.asarray(graph.cell_volume, dtype=np.float64)
    sigma = config.alpha * graph.eta
    if sigma <= 0:
        raise ValueError("sigma = alpha * eta is zero; data contains duplicate points")
    prefactor = 1.0 / (4.0 * np.pi * sigma * sigma)
    exponent_denom = 4.0 * sigma * sigma if config.exponent_sigma_squared else 4.0 * sigma

    if config.sparsity_mode == "fraction":
        keep = max(1, int(round(config.row_fraction * (n - 1))))
    block = max(1, min(n, int(2e7) // n))
    rows_idx: list[np.ndarray] = []
    cols_idx: list[np.ndarray] = []
    vals: list[np.ndarray] = []
    for start in range(0, n, block):
        rows = np.arange(start, min(start + block, n))
        q = _affinity_block(coords, rows, vols, sigma, prefactor, exponent_denom)
        q[rows - start, rows] = 0.0
        if config.sparsity_mode == "absolute":
            r, c = np.nonzero(q >= config.threshold)
            v = q[r, c]
            m = v > 0.0
            r, c, v = r[m], c[m], v[m]
        else:
            cols = np.argpartition(q, n - keep, axis=1)[:, n - keep :]
            v = np.take_along_axis(q, cols, axis=1)
            r = np.repeat(np.arange(rows.size), keep)
            c = cols.ravel()
            v = v.ravel()
            m = v > 0.0
            r, c, v = r[m], c[m], v[m]
        rows_idx.append(rows[r])
        cols_idx.append(c)
        vals.append(v)

    S = sp.csr_array(
        (np.concatenate(vals), (np.concatenate(rows_idx), np.concatenate(cols_idx))),
        shape=(n, n),
    )
    # keep an entry if either direction survived the mask; q_ij is a symmetric
    # function of the inputs so the surviving values agree
    off = S.maximum(S.T).tocsr()

    row_nnz = np.diff(off.indptr)
    if np.any(row_nnz == 0):
        bad = int(np.flatnonzero(row_nnz == 0)[0])
        raise ValueError(
            f"point {bad} has no surviving affinities; lower the threshold or "
            f"increase alpha"
        )

    off.sort_indices()
    # per-row np.sum so q_ii + sum(off-diagonal row slice) is exactly zero for
    # anyone re-reducing the returned CSR data the same way
    diag = np.array(
        [-np.sum(off.data[s:e]) for s, e in zip(off.indptr[:-1], off.indptr[1:])]
    )
    Q = (off + sp.diags_array(diag, format="csr")).tocsr()
    return Q, vols.copy()


def symmetrize(Q, b):
    """U = B^{-1/2} Q B^{-1/2}; symmetric by construction."""
    b = np.asarray(b, dtype=np.float64)
    if np.any(b <= 0):
        bad = int(np.flatnonzero(b <= 0)[0])
        raise ValueError(f"mass entry {bad} is nonpositive")
    inv_sqrt = 1.0 / np.sqrt(b)
    D = sp.diags_array(inv_sqrt, format="csr")
    U = (D @ Q @ D).tocsr()
    U = ((U + U.T) * 0.5).tocsr()  # kill last-ulp asymmetry from the scaling
    return U


def _residuals(U, eigenvalues, vectors):
    # U acts as -lambda on its eigenvectors under the sign convention
    r = U @ vectors + vectors * eigenvalues[None, :]
    return np.linalg.norm(r, axis=0)


def eigendecompose(U, b, n_eig: int, method: str = "auto") -> SpectralDecomposition:
    """Smallest ``n_eig`` eigenvalues of -U with B-orthonormal eigenvectors.

    Uses ARPACK (Lanczos, shift-invert near zero) on the sparse matrix; the
    full-spectrum corner ``n_eig > n-2`` that ARPACK cannot reach falls back
    to a dense solve.  Enforces the residual bound ||U v + lambda v|| <=
    1e-8 max(1, lambda) and raises with the achieved residuals otherwise.
    """
    n = U.shape[0]
    if n_eig > n:
        raise ValueError(f"n_eig={n_eig} exceeds matrix size n={n}")
    b = np.asarray(b, dtype=np.float64)

    if method == "auto":
        method = "arpack" if n_eig <= n - 2 else "dense"

    A = (-U).tocsc()
    if method == "dense":
        dense_vals, dense_vecs = np.linalg.eigh(A.toarray())
        eigenvalues = dense_vals[:n_eig]
        vectors = dense_vecs[:, :n_eig]
    elif method == "arpack":
        scale = max(float(np.abs(A.diagonal()).max()), 1e-30)
        shift = -1e-6 * scale
        v0 = np.random.default_rng(0).standard_normal(n)  # fixed start: determinism
        try:
            eigenvalues, vectors = spla.eigsh(
                A, k=n_eig, sigma=shift, which="LM", v0=v0, maxiter=50 * n_eig
            )
        except spla.ArpackNoConvergence as exc:
            raise EigensolverError(
                f"ARPACK did not converge within the iteration budget; "
                f"{len(exc.eigenvalues)} of {n_eig} pairs converged"
            ) from exc
        order = np.argsort(eigenvalues, kind="stable")
        eigenvalues = eigenvalues[order]
        vectors = vectors[:, order]
    else:
        raise ValueError(f"unknown method {method!r}")

    res = _residuals(U, eigenvalues, vectors)
    bound = 1e-8 * np.maximum(1.0, np.abs(eigenvalues))
    if np.any(res > bound):
        worst = int(np.argmax(res / bound))
        raise EigensolverError(
            f"eigenpair {worst} residual {res[worst]:.3e} exceeds bound "
            f"{bound[worst]:.3e}; residuals: {np.array2string(res, precision=3)}"
        )

    phi = vectors / np.sqrt(b)[:, None]
    return SpectralDecomposition(eigenvalues=eigenvalues, eigenvectors=phi, mass=b.copy())


def write_spectrum_csv(path, spectrum: SpectralDecomposition) -> None:
    """Dump eigenvalues as ``index,eigenvalue`` CSV."""
    with open(path, "w") as fh:
        fh.write("index,eigenvalue\n")
        for i, lam in enumerate(spectrum.eigenvalues):
            fh.write(f"{i},{lam:.17g}\n")


def write_matrix_coo(path, Q) -> None:
    """Dump a sparse matrix in ``row col value`` text form for cross-checking."""
    coo = sp.coo_array(Q)
    with open(path, "w") as fh:
        for r, c, v in zip(coo.row, coo.col, coo.data):
            fh.write(f"{r} {c} {v:.17g}\n")
