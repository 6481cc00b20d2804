"""Precompute pipeline: pathlines -> neighborhood graph -> operator -> HKS.

Keeps the four-stage timing breakdown (volumes, operator assembly,
eigendecomposition, signature evaluation) that the CLI reports.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

from . import hks as hks_mod
from . import lbo as lbo_mod
from . import neighborhood
from .flowfield import PathlineSet

__all__ = [
    "PipelineConfig",
    "PipelineResult",
    "PipelineStageError",
    "run_pipeline",
    "parse_config_file",
    "format_timings",
]


class PipelineStageError(RuntimeError):
    """Wraps a failure with the name of the pipeline stage that raised it."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage {stage!r}: {cause}")
        self.stage = stage
        self.__cause__ = cause


@dataclass(frozen=True)
class PipelineConfig:
    """Every knob of the precompute pipeline in one place."""

    M: int = 30
    alpha: float = 0.5
    drop_ratio: float = 0.35
    n_eig: int = 300
    beta: float = 0.01
    n_scales: int = 100
    sparsity_mode: str = "fraction"
    row_fraction: float = 0.05
    threshold: float = 0.0
    exponent_sigma_squared: bool = False
    mass_weighted_normalization: bool = False
    rng_seed: int = 0
    threads: int = 1

    def lbo_config(self, n: int) -> lbo_mod.LBOConfig:
        return lbo_mod.LBOConfig(
            alpha=self.alpha,
            n_eig=min(self.n_eig, n),
            beta=self.beta,
            sparsity_mode=self.sparsity_mode,
            row_fraction=self.row_fraction,
            threshold=self.threshold,
            exponent_sigma_squared=self.exponent_sigma_squared,
        )


@dataclass
class PipelineResult:
    pathlines: PathlineSet
    graph: neighborhood.NeighborhoodGraph
    spectrum: lbo_mod.SpectralDecomposition
    hks: hks_mod.HKSField
    config: PipelineConfig
    timings: dict[str, float] = field(default_factory=dict)


_STAGES = ("volumes", "lbo", "eigendecomposition", "hks")


def run_pipeline(pathlines: PathlineSet, config: PipelineConfig = PipelineConfig()) -> PipelineResult:
    """Run the full precompute chain, recording per-stage wall-clock times."""
    timings: dict[str, float] = {}

    def stage(name: str, fn):
        t = time.perf_counter()
        try:
            out = fn()
        except Exception as exc:
            raise PipelineStageError(name, exc) from exc
        timings[name] = time.perf_counter() - t
        return out

    graph = stage(
        "volumes",
        lambda: neighborhood.build_graph(
            pathlines, M=config.M, drop_ratio=config.drop_ratio, threads=config.threads
        ),
    )

    cfg = config.lbo_config(pathlines.n)

    def assemble_and_symmetrize():
        Q, b = lbo_mod.assemble(graph, pathlines, cfg)
        return lbo_mod.symmetrize(Q, b), b

    U, b = stage("lbo", assemble_and_symmetrize)

    spectrum = stage(
        "eigendecomposition", lambda: lbo_mod.eigendecompose(U, b, cfg.n_eig)
    )

    field_obj = stage(
        "hks",
        lambda: hks_mod.build_field(
            spectrum,
            beta=config.beta,
            n_scales=config.n_scales,
            mass_weighted=config.mass_weighted_normalization,
        ),
    )

    return PipelineResult(
        pathlines=pathlines,
        graph=graph,
        spectrum=spectrum,
        hks=field_obj,
        config=config,
        timings=timings,
    )


_BOOL_FIELDS = {"exponent_sigma_squared", "mass_weighted_normalization"}
_INT_FIELDS = {"M", "n_eig", "n_scales", "rng_seed", "threads"}
_FLOAT_FIELDS = {"alpha", "drop_ratio", "beta", "row_fraction", "threshold"}
_STR_FIELDS = {"sparsity_mode"}


def parse_config_file(path, base: PipelineConfig = PipelineConfig()) -> PipelineConfig:
    """Read ``key=value`` lines into a :class:`PipelineConfig`.

    Blank lines and ``#`` comments are ignored; unknown keys are an error.
    """
    overrides = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, value = (part.strip() for part in stripped.split("=", 1))
            if key in _BOOL_FIELDS:
                overrides[key] = value.lower() in ("1", "true", "yes", "on")
            elif key in _INT_FIELDS:
                overrides[key] = int(value)
            elif key in _FLOAT_FIELDS:
                overrides[key] = float(value)
            elif key in _STR_FIELDS:
                overrides[key] = value
            else:
                raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
    return replace(base, **overrides)


def format_timings(timings: dict[str, float]) -> str:
    lines = [f"{stage}: {timings[stage]:.2f} s" for stage in _STAGES if stage in timings]
    total = sum(timings.get(stage, 0.0) for stage in _STAGES)
    lines.append(f"total: {total:.2f} s")
    return "\n".join(lines)
