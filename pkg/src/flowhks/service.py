"""Precompute-then-serve layer: HTTP/JSON queries over loaded datasets.

The service never runs eigensolves; it loads pathline and HKS files produced
offline and answers read-only analysis queries (columns, means, similarity,
clustering) for the viewer.  Floats are serialized with 17 significant
digits so responses are byte-identical and round-trip exactly.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass

import numpy as np
from fastapi import FastAPI, Request, Response

from . import analysis
from .flowfield import PathlineSet, load_pathlines
from .hks import HKSField, load_hks

__all__ = ["DatasetRecord", "ServiceError", "json17", "create_app", "load_dataset", "serve"]


class ServiceError(Exception):
    def __init__(self, message: str, status: int = 400):
        super().__init__(message)
        self.status = status


@dataclass
class DatasetRecord:
    """One loaded dataset: pathlines plus its precomputed signatures."""

    id: str
    pathlines: PathlineSet
    hks: HKSField
    summary: dict | None = None  # graph summary when built in-process
    provenance: dict | None = None  # pipeline config used, if known

    def __post_init__(self):
        if self.hks.n != self.pathlines.n:
            raise ValueError(
                f"dataset {self.id!r}: HKS rows ({self.hks.n}) != pathlines ({self.pathlines.n})"
            )


def load_dataset(dataset_id: str, pathline_file, hks_file) -> DatasetRecord:
    return DatasetRecord(
        id=dataset_id, pathlines=load_pathlines(pathline_file), hks=load_hks(hks_file)
    )


def _encode(obj, out: list) -> None:
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        v = float(obj)
        if not np.isfinite(v):
            raise ValueError(f"cannot serialize non-finite float {v}")
        out.append(format(v, ".17g"))
    elif isinstance(obj, np.ndarray):
        _encode(obj.tolist(), out)
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        for i, item in enumerate(obj):
            if i:
                out.append(",")
            _encode(item, out)
        out.append("]")
    elif isinstance(obj, dict):
        out.append("{")
        for i, (key, value) in enumerate(obj.items()):
            if i:
                out.append(",")
            if not isinstance(key, str):
                raise TypeError(f"JSON object keys must be strings, got {key!r}")
            out.append(json.dumps(key))
            out.append(":")
            _encode(value, out)
        out.append("}")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def json17(obj) -> str:
    """Deterministic JSON with floats at 17 significant digits."""
    parts: list[str] = []
    _encode(obj, parts)
    return "".join(parts)


def _json_response(payload, status: int = 200) -> Response:
    return Response(content=json17(payload), status_code=status, media_type="application/json")


def create_app(records: list[DatasetRecord]) -> FastAPI:
    """Build the query application over immutable loaded datasets."""
    registry: dict[str, DatasetRecord] = {}
    for rec in records:
        if rec.id in registry:
            raise ValueError(f"duplicate dataset id {rec.id!r}")
        registry[rec.id] = rec

    align_cache: dict[tuple[str, str], tuple[HKSField, HKSField]] = {}
    align_lock = threading.Lock()

    def get(dataset_id: str) -> DatasetRecord:
        rec = registry.get(dataset_id)
        if rec is None:
            raise ServiceError(f"unknown dataset {dataset_id!r}", status=404)
        return rec

    def aligned_fields(ids: list[str]) -> list[HKSField]:
        recs = [get(i) for i in ids]
        if len(recs) == 1:
            return [recs[0].hks]
        if len(recs) != 2:
            raise ServiceError("expected one or two dataset ids")
        key = (recs[0].id, recs[1].id)
        with align_lock:
            if key not in align_cache:
                align_cache[key] = analysis.align_scales(recs[0].hks, recs[1].hks)
            pair = align_cache[key]
        return list(pair)

    def parse_range(lo: int, hi: int, n_scales: int) -> analysis.ScaleRange:
        try:
            rng = analysis.ScaleRange(lo, hi)
            rng.validate(n_scales)
        except ValueError as exc:
            raise ServiceError(str(exc)) from None
        return rng

    app = FastAPI(title="flowhks service")

    @app.exception_handler(ServiceError)
    async def _service_error(_request: Request, exc: ServiceError):
        return _json_response({"error": str(exc)}, status=exc.status)

    @app.exception_handler(ValueError)
    async def _value_error(_request: Request, exc: ValueError):
        return _json_response({"error": str(exc)}, status=400)

    @app.get("/datasets")
    def list_datasets():
        payload = [
            {
                "id": rec.id,
                "n": rec.pathlines.n,
                "m": rec.pathlines.m,
                "s_min": rec.hks.s_min,
                "s_max": rec.hks.s_max,
            }
            for rec in registry.values()
        ]
        return _json_response(payload)

    @app.get("/dataset/{dataset_id}/meta")
    def dataset_meta(dataset_id: str):
        rec = get(dataset_id)
        p = rec.pathlines
        payload = {
            "id": rec.id,
            "n": p.n,
            "m": p.m,
            "d": p.d,
            "t0": p.t0,
            "tau": p.tau,
            "n_scales": rec.hks.n_scales,
            "s_min": rec.hks.s_min,
            "s_max": rec.hks.s_max,
            "scales": rec.hks.scales,
            "domain": {
                "xmin": float(p.seeds[:, 0].min()),
                "ymin": float(p.seeds[:, 1].min()),
                "xmax": float(p.seeds[:, 0].max()),
                "ymax": float(p.seeds[:, 1].max()),
            },
            "summary": rec.summary,
            "provenance": rec.provenance,
        }
        return _json_response(payload)

    @app.get("/dataset/{dataset_id}/seeds")
    def dataset_seeds(dataset_id: str):
        rec = get(dataset_id)
        return _json_response({"id": rec.id, "seeds": rec.pathlines.seeds})

    @app.get("/dataset/{dataset_id}/hks")
    def dataset_hks(dataset_id: str, scale_index: int):
        rec = get(dataset_id)
        if not 0 <= scale_index < rec.hks.n_scales:
            raise ServiceError(f"scale_index {scale_index} out of range")
        payload = {
            "id": rec.id,
            "scale_index": scale_index,
            "scale": float(rec.hks.scales[scale_index]),
            "log10": True,
            "values": rec.hks.log_values()[:, scale_index],
        }
        return _json_response(payload)

    @app.get("/dataset/{dataset_id}/mean")
    def dataset_mean(dataset_id: str, lo: int, hi: int):
        rec = get(dataset_id)
        rng = parse_range(lo, hi, rec.hks.n_scales)
        payload = {
            "id": rec.id,
            "lo": lo,
            "hi": hi,
            "log10": True,
            "values": analysis.mean_hks(rec.hks, rng),
        }
        return _json_response(payload)

    @app.get("/dataset/{dataset_id}/curve")
    def dataset_curve(dataset_id: str, points: str):
        rec = get(dataset_id)
        try:
            idx = [int(tok) for tok in points.split(",") if tok != ""]
        except ValueError:
            raise ServiceError(f"malformed points list {points!r}") from None
        if not idx:
            raise ServiceError("points list is empty")
        for i in idx:
            if not 0 <= i < rec.hks.n:
                raise ServiceError(f"point index {i} out of range", status=404)
        payload = {
            "id": rec.id,
            "points": idx,
            "scales": rec.hks.scales,
            "log10": True,
            "curves": rec.hks.log_values()[idx],
        }
        return _json_response(payload)

    @app.get("/similarity")
    def similarity(anchor_dataset: str, anchor_point: int, lo: int, hi: int, datasets: str = ""):
        ids = [tok for tok in datasets.split(",") if tok]
        if not ids:
            ids = [anchor_dataset]
        if anchor_dataset not in ids:
            raise ServiceError("anchor_dataset must be among the queried datasets")
        fields = aligned_fields(ids)
        anchor_ds = ids.index(anchor_dataset)
        rec = get(anchor_dataset)
        if not 0 <= anchor_point < rec.hks.n:
            raise ServiceError(f"anchor point {anchor_point} out of range", status=404)
        rng = parse_range(lo, hi, min(f.n_scales for f in fields))
        dists = analysis.similarity_field(fields, (anchor_ds, anchor_point), rng)
        payload = {
            "anchor_dataset": anchor_dataset,
            "anchor_point": anchor_point,
            "lo": lo,
            "hi": hi,
            "distances": {ds_id: d for ds_id, d in zip(ids, dists)},
        }
        return _json_response(payload)

    @app.post("/cluster")
    async def cluster(request: Request):
        try:
            body = json.loads(await request.body())
        except json.JSONDecodeError as exc:
            raise ServiceError(f"malformed JSON body: {exc}") from None
        try:
            ids = list(body["datasets"])
            k = int(body["k"])
            lo, hi = (int(v) for v in body["range"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ServiceError(f"bad cluster request: {exc}") from None
        mode = body.get("mode", "joint")
        seed = int(body.get("seed", 0))
        region_map = body.get("region") or {}

        fields = aligned_fields(ids)
        recs = [get(i) for i in ids]
        rng = parse_range(lo, hi, min(f.n_scales for f in fields))
        regions = [region_map.get(i) for i in ids]
        seeds = [rec.pathlines.seeds for rec in recs]
        result = analysis.kmeans_hks(
            fields, rng, k=k, mode=mode, rng_seed=seed, seeds=seeds, regions=regions
        )
        payload = {
            "mode": result.mode,
            "k": result.k,
            "scales": result.scales,
            "labels": {ds_id: labels for ds_id, labels in zip(ids, result.labels)},
            "indices": {ds_id: idx for ds_id, idx in zip(ids, result.indices)},
            "centroids": result.centroids,
            "inertia": result.inertia,
        }
        return _json_response(payload)

    @app.get("/pathline/{dataset_id}/{index}")
    def pathline(dataset_id: str, index: int):
        rec = get(dataset_id)
        if not 0 <= index < rec.pathlines.n:
            raise ServiceError(f"pathline index {index} out of range", status=404)
        payload = {
            "id": rec.id,
            "index": index,
            "timesteps": rec.pathlines.timesteps,
            "positions": rec.pathlines.positions()[index],
        }
        return _json_response(payload)

    return app


def serve(records: list[DatasetRecord], host: str = "127.0.0.1", port: int = 8040) -> None:
    """Run the query service until interrupted."""
    import uvicorn

    app = create_app(records)
    uvicorn.run(app, host=host, port=port, log_level="warning")
