"""Multi-scale heat kernel signatures from a spectral decomposition.

The signature of a point is k_s(p, p) = sum_i exp(-lambda_i s) phi_i(p)^2
sampled on a log-spaced scale grid bounded by the spectrum, then normalized
per scale so values are comparable across datasets.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .lbo import SpectralDecomposition

__all__ = [
    "HKSField",
    "HKSFormatError",
    "scale_range",
    "sample_scales",
    "compute_hks",
    "normalize_hks",
    "build_field",
    "write_hks",
    "load_hks",
]

_TEXT_MAGIC = "HKS1"
_BINARY_MAGIC = b"HKB1"


class HKSFormatError(ValueError):
    """Raised on malformed HKS files."""


@dataclass
class HKSField:
    """Normalized signatures over a log-spaced scale grid.

    ``values`` columns each sum to 1; ``raw_values`` holds the
    pre-normalization k_s(p, p) and is None for fields loaded from disk.
    """

    scales: np.ndarray  # (nscales,) ascending
    values: np.ndarray  # (n, nscales), column-normalized
    raw_values: np.ndarray | None = None
    beta: float | None = None
    _log_values: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.scales = np.ascontiguousarray(self.scales, dtype=np.float64)
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)
        if not np.all(np.diff(self.scales) > 0):
            raise ValueError("scales must be strictly increasing")
        if self.values.ndim != 2 or self.values.shape[1] != self.scales.shape[0]:
            raise ValueError("values shape inconsistent with scale grid")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def n_scales(self) -> int:
        return self.scales.shape[0]

    @property
    def s_min(self) -> float:
        return float(self.scales[0])

    @property
    def s_max(self) -> float:
        return float(self.scales[-1])

    def log_values(self) -> np.ndarray:
        """Base-10 log view used for display, distances, and clustering."""
        if self._log_values is None:
            if np.any(self.values <= 0):
                raise ValueError("log view requires strictly positive values")
            self._log_values = np.log10(self.values)
        return self._log_values


def scale_range(spectrum: SpectralDecomposition, beta: float = 0.01):
    """Scale interval on which retained eigenpairs stay above precision beta.

    s_min = -ln(beta)/lambda_max and s_max = -ln(beta)/lambda_1, the second
    smallest eigenvalue (the smallest is always 0).
    """
    if not (0 < beta < 1):
        raise ValueError("beta must lie in (0, 1)")
    lam = spectrum.eigenvalues
    if lam.shape[0] < 2:
        raise ValueError("need at least 2 eigenvalues for a scale range")
    lam1 = float(lam[1])
    lam_max = float(lam[-1])
    if lam1 <= 1e-8 * max(lam_max, 0.0):
        raise ValueError(
            "second smallest eigenvalue is zero to round-off; the operator graph "
            "is disconnected (raise alpha or lower the sparsity threshold)"
        )
    log_beta = -np.log(beta)
    s_min = log_beta / lam_max
    s_max = log_beta / lam1
    if not s_min < s_max:
        raise ValueError("degenerate scale range: spectrum has no spread")
    return s_min, s_max


def sample_scales(s_min: float, s_max: float, count: int = 100) -> np.ndarray:
    """Geometric progression of ``count`` scales from s_min to s_max inclusive."""
    if not (0 < s_min < s_max):
        raise ValueError("need 0 < s_min < s_max")
    if count < 2:
        raise ValueError("count must be >= 2")
    return np.geomspace(s_min, s_max, count)


def compute_hks(spectrum: SpectralDecomposition, scales) -> np.ndarray:
    """Raw signature matrix: entry [p, j] = sum_i exp(-lambda_i s_j) phi_i(p)^2.

    Round-off negatives in the spectrum are clamped to zero so each term is
    non-increasing in s, as the heat kernel demands.
    """
    scales = np.asarray(scales, dtype=np.float64)
    if np.any(scales <= 0) or np.any(np.diff(scales) < 0):
        raise ValueError("scales must be positive and ascending")
    lam = np.maximum(spectrum.eigenvalues, 0.0)
    weights = spectrum.eigenvectors**2  # (n, k)
    decay = np.exp(-np.outer(lam, scales))  # (k, nscales)
    return weights @ decay


def normalize_hks(raw: np.ndarray, mass=None, mass_weighted: bool = False) -> np.ndarray:
    """Normalize each scale column by its sum (optionally mass-weighted).

    The unweighted default keeps per-scale values comparable across datasets
    of differing total volume; the weighted variant divides by the discrete
    heat trace sum_q b_qq raw[q, s].
    """
    raw = np.asarray(raw, dtype=np.float64)
    if np.any(raw < 0):
        raise ValueError("raw signatures must be nonnegative")
    if mass_weighted:
        if mass is None:
            raise ValueError("mass-weighted normalization requires the mass vector")
        denom = np.asarray(mass, dtype=np.float64) @ raw
    else:
        denom = raw.sum(axis=0)
    if np.any(denom <= 0):
        bad = int(np.flatnonzero(denom <= 0)[0])
        raise ValueError(f"scale column {bad} sums to zero")
    return raw / denom[None, :]


def build_field(
    spectrum: SpectralDecomposition,
    beta: float = 0.01,
    n_scales: int = 100,
    mass_weighted: bool = False,
) -> HKSField:
    """Full signature pipeline: scale bounds, log sampling, raw HKS, normalization."""
    s_min, s_max = scale_range(spectrum, beta)
    scales = sample_scales(s_min, s_max, n_scales)
    raw = compute_hks(spectrum, scales)
    if np.any(raw <= 0):
        bad = np.argwhere(raw <= 0)[0]
        raise ValueError(f"nonpositive raw signature at point {bad[0]}, scale {bad[1]}")
    values = normalize_hks(raw, mass=spectrum.mass, mass_weighted=mass_weighted)
    return HKSField(scales=scales, values=values, raw_values=raw, beta=beta)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_hks(path, hks: HKSField, binary: bool = False) -> None:
    """Write an HKS file (text ``HKS1`` header or binary ``HKB1``)."""
    if binary:
        with open(path, "wb") as fh:
            fh.write(_BINARY_MAGIC)
            fh.write(struct.pack("<II", hks.n, hks.n_scales))
            fh.write(hks.scales.astype("<f8").tobytes())
            fh.write(np.ascontiguousarray(hks.values, dtype="<f8").tobytes())
        return
    with open(path, "w") as fh:
        fh.write(f"{_TEXT_MAGIC} {hks.n} {hks.n_scales}\n")
        fh.write(" ".join(_fmt(s) for s in hks.scales) + "\n")
        for row in hks.values:
            fh.write(" ".join(_fmt(v) for v in row) + "\n")


def load_hks(path) -> HKSField:
    """Load an HKS file, auto-detecting the text or binary variant."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] == _BINARY_MAGIC:
        if len(raw) < 12:
            raise HKSFormatError(f"{path}: truncated binary header")
        n, nscales = struct.unpack_from("<II", raw, 4)
        expected = 12 + 8 * nscales + 8 * n * nscales
        if len(raw) != expected:
            raise HKSFormatError(f"{path}: expected {expected} bytes, got {len(raw)}")
        scales = np.frombuffer(raw, dtype="<f8", count=nscales, offset=12).copy()
        values = (
            np.frombuffer(raw, dtype="<f8", count=n * nscales, offset=12 + 8 * nscales)
            .reshape(n, nscales)
            .copy()
        )
        return HKSField(scales=scales, values=values)

    lines = raw.decode("ascii", errors="replace").splitlines()
    if not lines:
        raise HKSFormatError(f"{path}: empty file")
    header = lines[0].split()
    if len(header) != 3 or header[0] != _TEXT_MAGIC:
        raise HKSFormatError(f"{path}: malformed header {lines[0]!r}")
    try:
        n, nscales = int(header[1]), int(header[2])
    except ValueError as exc:
        raise HKSFormatError(f"{path}: malformed header: {exc}") from None
    if len(lines) < 2 + n:
        raise HKSFormatError(f"{path}: declared n={n} but found {len(lines) - 2} rows")
    scales = np.array([float(v) for v in lines[1].split()], dtype=np.float64)
    if scales.shape[0] != nscales:
        raise HKSFormatError(
            f"{path}: scale line has {scales.shape[0]} entries, expected {nscales}"
        )
    values = np.empty((n, nscales), dtype=np.float64)
    for i in range(n):
        row = lines[2 + i].split()
        if len(row) != nscales:
            raise HKSFormatError(f"{path}: row {i} has {len(row)} values, expected {nscales}")
        values[i] = [float(v) for v in row]
    return HKSField(scales=scales, values=values)
