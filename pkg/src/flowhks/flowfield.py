"""Analytic unsteady vector fields, pathline integration, and pathline file I/O.

Pathlines are trajectories of massless particles sampled at m shared
timesteps and flattened into points in (d*m)-dimensional space.  This module
produces and loads :class:`PathlineSet` objects; everything downstream
(neighborhood graphs, the discrete operator, signatures) consumes them.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ABCParams",
    "PathlineSet",
    "IntegrationError",
    "PathlineFormatError",
    "eval_abc",
    "abc_velocity",
    "constant_velocity",
    "seed_grid",
    "integrate_pathlines",
    "write_pathlines",
    "load_pathlines",
]

_TEXT_MAGIC = "PLSET"
_BINARY_MAGIC = b"PLB1"


class IntegrationError(RuntimeError):
    """Raised when pathline integration produces non-finite values."""


class PathlineFormatError(ValueError):
    """Raised on malformed pathline files; carries the byte offset of the defect."""

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


@dataclass(frozen=True)
class ABCParams:
    """Amplitudes of the unsteady Arnold-Beltrami-Childress flow."""

    A: float = math.sqrt(3.0)
    B: float = math.sqrt(2.0)
    C: float = 1.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.A, self.B, self.C)):
            raise ValueError("ABC amplitudes must be finite")


@dataclass
class PathlineSet:
    """n pathlines sampled at m shared timesteps in d spatial dimensions.

    ``coords`` is timestep-major: row i holds (x, y) at t_0, then (x, y) at
    t_1, and so on.  ``seeds`` is a read-only view of the first d columns.
    """

    t0: float
    tau: float
    timesteps: np.ndarray  # (m,)
    coords: np.ndarray  # (n, m*d)
    d: int = 2
    seeds: np.ndarray = field(init=False)

    def __post_init__(self):
        self.timesteps = np.ascontiguousarray(self.timesteps, dtype=np.float64)
        self.coords = np.ascontiguousarray(self.coords, dtype=np.float64)
        m = self.timesteps.shape[0]
        if m < 2:
            raise ValueError(f"need at least 2 timesteps, got {m}")
        if self.coords.ndim != 2 or self.coords.shape[1] != m * self.d:
            raise ValueError(
                f"coords shape {self.coords.shape} inconsistent with m={m}, d={self.d}"
            )
        if not np.all(np.diff(self.timesteps) > 0):
            raise ValueError("timesteps must be strictly increasing")
        end = self.t0 + self.tau
        scale = max(abs(self.t0), abs(end), 1.0)
        if abs(self.timesteps[0] - self.t0) > 1e-9 * scale:
            raise ValueError("timesteps[0] must equal t0")
        if abs(self.timesteps[-1] - end) > 1e-9 * scale:
            raise ValueError("timesteps[-1] must equal t0 + tau")
        if not np.all(np.isfinite(self.coords)):
            raise ValueError("coordinates must be finite")
        self.seeds = self.coords[:, : self.d]

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def m(self) -> int:
        return self.timesteps.shape[0]

    def positions(self) -> np.ndarray:
        """Trajectories as an (n, m, d) view."""
        return self.coords.reshape(self.n, self.m, self.d)


def eval_abc(x, y, t, params: ABCParams = ABCParams()):
    """Velocity of the unsteady ABC flow at (x, y, t).

    The field is the 2D reduction of the ABC flow with z replaced by time:
    u = A sin(t) + C cos(y), v = B sin(x) + A cos(t).  Accepts scalars or
    broadcastable arrays.
    """
    u = params.A * np.sin(t) + params.C * np.cos(y)
    v = params.B * np.sin(x) + params.A * np.cos(t)
    return u, v


def abc_velocity(params: ABCParams = ABCParams()):
    """Wrap :func:`eval_abc` as a field callable ``f(xy, t) -> (n, d) velocities``."""

    def field_fn(xy: np.ndarray, t: float) -> np.ndarray:
        u, v = eval_abc(xy[:, 0], xy[:, 1], t, params)
        return np.column_stack((u, v))

    return field_fn


def constant_velocity(u: float, v: float):
    """Uniform field, mainly for integrator tests (RK4 is exact on it)."""

    def field_fn(xy: np.ndarray, t: float) -> np.ndarray:
        out = np.empty_like(xy)
        out[:, 0] = u
        out[:, 1] = v
        return out

    return field_fn


def seed_grid(bounds, counts) -> np.ndarray:
    """Cell-centered uniform lattice of seeds covering an axis-aligned box.

    ``bounds`` is (xmin, ymin, xmax, ymax); ``counts`` is (nx, ny).  Cell
    centers avoid duplicated boundary seeds under periodic fields.  Seeds are
    ordered x-fastest (row by row in y).
    """
    xmin, ymin, xmax, ymax = (float(v) for v in bounds)
    nx, ny = (int(c) for c in counts)
    if nx < 1 or ny < 1:
        raise ValueError("counts must be >= 1 per axis")
    if not (xmax > xmin and ymax > ymin):
        raise ValueError(f"degenerate box {bounds}: extents must be positive")
    xs = xmin + (np.arange(nx) + 0.5) * (xmax - xmin) / nx
    ys = ymin + (np.arange(ny) + 0.5) * (ymax - ymin) / ny
    gx, gy = np.meshgrid(xs, ys)
    return np.column_stack((gx.ravel(), gy.ravel()))


def integrate_pathlines(
    field_fn,
    seeds,
    t0: float,
    tau: float,
    m: int,
    substeps_per_sample: int = 16,
) -> PathlineSet:
    """Trace pathlines with classic fixed-step RK4 and record m uniform samples.

    The step inside each sample interval is (tau/(m-1))/substeps_per_sample.
    No domain clamping is applied.  Raises :class:`IntegrationError` naming
    the first offending pathline if the field returns non-finite velocities.
    """
    if m < 2:
        raise ValueError(f"m must be >= 2, got {m}")
    if tau <= 0:
        raise ValueError(f"tau must be positive, got {tau}")
    if substeps_per_sample < 1:
        raise ValueError("substeps_per_sample must be >= 1")

    seeds = np.asarray(seeds, dtype=np.float64)
    if seeds.ndim != 2 or seeds.shape[1] != 2:
        raise ValueError("seeds must be an (n, 2) array")
    n = seeds.shape[0]

    times = np.linspace(t0, t0 + tau, m)
    coords = np.empty((n, m * 2), dtype=np.float64)
    coords[:, 0:2] = seeds

    xy = seeds.copy()
    for j in range(m - 1):
        h = (times[j + 1] - times[j]) / substeps_per_sample
        t = times[j]
        for _ in range(substeps_per_sample):
            k1 = field_fn(xy, t)
            k2 = field_fn(xy + 0.5 * h * k1, t + 0.5 * h)
            k3 = field_fn(xy + 0.5 * h * k2, t + 0.5 * h)
            k4 = field_fn(xy + h * k3, t + h)
            step = (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            bad = ~np.all(np.isfinite(step), axis=1)
            if bad.any():
                idx = int(np.flatnonzero(bad)[0])
                raise IntegrationError(
                    f"non-finite velocity for pathline {idx} near t={t:.6g}"
                )
            xy = xy + step
            t += h
        coords[:, 2 * (j + 1) : 2 * (j + 2)] = xy

    return PathlineSet(t0=float(t0), tau=float(tau), timesteps=times, coords=coords, d=2)


def _fmt(x: float) -> str:
    # 17 significant digits round-trip any float64 exactly
    return format(float(x), ".17g")


def write_pathlines(path, pathlines: PathlineSet, binary: bool = False) -> None:
    """Write a pathline file (text ``PLSET`` header or binary ``PLB1``)."""
    p = pathlines
    if binary:
        with open(path, "wb") as fh:
            fh.write(_BINARY_MAGIC)
            fh.write(struct.pack("<III", p.n, p.m, p.d))
            fh.write(struct.pack("<dd", p.t0, p.tau))
            fh.write(p.timesteps.astype("<f8").tobytes())
            fh.write(np.ascontiguousarray(p.coords, dtype="<f8").tobytes())
        return
    with open(path, "w") as fh:
        fh.write(f"{_TEXT_MAGIC} {p.n} {p.m} {p.d} {_fmt(p.t0)} {_fmt(p.tau)}\n")
        fh.write(" ".join(_fmt(t) for t in p.timesteps) + "\n")
        for row in p.coords:
            fh.write(" ".join(_fmt(v) for v in row) + "\n")


def _parse_floats(text: str, count: int, what: str, offset: int) -> np.ndarray:
    parts = text.split()
    if len(parts) != count:
        raise PathlineFormatError(
            f"{what}: expected {count} values, found {len(parts)}", offset
        )
    try:
        return np.array([float(v) for v in parts], dtype=np.float64)
    except ValueError as exc:
        raise PathlineFormatError(f"{what}: {exc}", offset) from None


def _load_text(raw: bytes, path) -> PathlineSet:
    text = raw.decode("ascii", errors="replace")
    lines = text.splitlines(keepends=True)
    if not lines:
        raise PathlineFormatError(f"{path}: empty file", 0)
    offset = 0
    header = lines[0].split()
    if len(header) != 6 or header[0] != _TEXT_MAGIC:
        raise PathlineFormatError(f"{path}: malformed header {lines[0]!r}", 0)
    try:
        n, m, d = int(header[1]), int(header[2]), int(header[3])
        t0, tau = float(header[4]), float(header[5])
    except ValueError as exc:
        raise PathlineFormatError(f"{path}: malformed header: {exc}", 0) from None
    if m < 2:
        raise PathlineFormatError(f"{path}: m must be >= 2, got {m}", 0)
    if len(lines) < 2 + n:
        raise PathlineFormatError(
            f"{path}: declared n={n} but file has {max(len(lines) - 2, 0)} coordinate rows",
            len(raw),
        )
    offset = len(lines[0].encode())
    times = _parse_floats(lines[1], m, f"{path}: timestep line", offset)
    if not np.all(np.diff(times) > 0):
        raise PathlineFormatError(f"{path}: timesteps not strictly increasing", offset)
    offset += len(lines[1].encode())
    coords = np.empty((n, m * d), dtype=np.float64)
    for i in range(n):
        coords[i] = _parse_floats(lines[2 + i], m * d, f"{path}: row {i}", offset)
        offset += len(lines[2 + i].encode())
    for extra in lines[2 + n :]:
        if extra.strip():
            raise PathlineFormatError(
                f"{path}: trailing data after {n} declared rows", offset
            )
        offset += len(extra.encode())
    try:
        return PathlineSet(t0=t0, tau=tau, timesteps=times, coords=coords, d=d)
    except ValueError as exc:
        raise PathlineFormatError(f"{path}: {exc}", 0) from None


def _load_binary(raw: bytes, path) -> PathlineSet:
    header_size = 4 + 12 + 16
    if len(raw) < header_size:
        raise PathlineFormatError(f"{path}: truncated binary header", len(raw))
    n, m, d = struct.unpack_from("<III", raw, 4)
    t0, tau = struct.unpack_from("<dd", raw, 16)
    if m < 2:
        raise PathlineFormatError(f"{path}: m must be >= 2, got {m}", 4)
    expected = header_size + 8 * m + 8 * n * m * d
    if len(raw) != expected:
        raise PathlineFormatError(
            f"{path}: expected {expected} bytes for n={n} m={m} d={d}, got {len(raw)}",
            min(len(raw), expected),
        )
    times = np.frombuffer(raw, dtype="<f8", count=m, offset=header_size).copy()
    if not np.all(np.diff(times) > 0):
        raise PathlineFormatError(
            f"{path}: timesteps not strictly increasing", header_size
        )
    coords = (
        np.frombuffer(raw, dtype="<f8", count=n * m * d, offset=header_size + 8 * m)
        .reshape(n, m * d)
        .copy()
    )
    try:
        return PathlineSet(t0=t0, tau=tau, timesteps=times, coords=coords, d=d)
    except ValueError as exc:
        raise PathlineFormatError(f"{path}: {exc}", header_size) from None


def load_pathlines(path) -> PathlineSet:
    """Load a pathline file, auto-detecting the text or binary variant."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] == _BINARY_MAGIC:
        return _load_binary(raw, path)
    return _load_text(raw, path)
