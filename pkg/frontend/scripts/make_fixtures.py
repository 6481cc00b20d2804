"""Regenerate golden service-response fixtures for the viewer tests.

Builds a small deterministic dataset pair, runs the real service in-process,
and dumps selected endpoint responses keyed by "METHOD path?query".
"""

import json
from pathlib import Path

import numpy as np
from fastapi.testclient import TestClient

from flowhks.flowfield import abc_velocity, integrate_pathlines, seed_grid
from flowhks.pipeline import PipelineConfig, run_pipeline
from flowhks.service import DatasetRecord, create_app

OUT = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "golden.json"


def main():
    seeds = seed_grid((0, 0, 8 * np.pi, 8 * np.pi), (12, 12))
    pathlines = integrate_pathlines(abc_velocity(), seeds, 0.0, 2 * np.pi, 8)
    result = run_pipeline(pathlines, PipelineConfig(M=10, alpha=0.5, n_eig=60, n_scales=40))
    records = [
        DatasetRecord(id="a", pathlines=pathlines, hks=result.hks),
        DatasetRecord(id="b", pathlines=pathlines, hks=result.hks),
    ]
    client = TestClient(create_app(records))

    fixtures = {}

    def get(path):
        resp = client.get(path)
        assert resp.status_code == 200, (path, resp.status_code)
        fixtures[f"GET {path}"] = json.loads(resp.content)

    get("/datasets")
    get("/dataset/a/meta")
    get("/dataset/b/meta")
    get("/dataset/a/seeds")
    get("/dataset/b/seeds")
    get("/dataset/a/hks?scale_index=5")
    get("/dataset/b/hks?scale_index=5")
    get("/dataset/a/mean?lo=0&hi=19")
    get("/dataset/b/mean?lo=0&hi=19")
    get("/dataset/a/curve?points=3")
    get("/dataset/a/curve?points=3,7")
    get("/pathline/a/3")
    get("/similarity?anchor_dataset=a&anchor_point=3&lo=0&hi=19&datasets=a,b")

    body = {"datasets": ["a", "b"], "k": 3, "range": [0, 19], "mode": "joint", "seed": 7}
    resp = client.post("/cluster", json=body)
    assert resp.status_code == 200
    fixtures["POST /cluster " + json.dumps(body, separators=(",", ":"), sort_keys=True)] = json.loads(resp.content)

    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps(fixtures, indent=1))
    print(f"wrote {OUT} ({len(fixtures)} fixtures)")


if __name__ == "__main__":
    main()
