"""Built-in latency harness for the hot read endpoints.

Drives the ASGI app in-process (no sockets) with viewport boxes of varying
area and name-fragment searches, and reports latency percentiles in
milliseconds. This is the measurement the scale targets are checked
against.
"""

from __future__ import annotations

import time

import numpy as np
from fastapi.testclient import TestClient


def _percentiles(samples_ms: list[float]) -> dict:
    arr = np.asarray(samples_ms)
    return {
        "n": int(arr.size),
        "p50_ms": round(float(np.percentile(arr, 50)), 3),
        "p95_ms": round(float(np.percentile(arr, 95)), 3),
        "p99_ms": round(float(np.percentile(arr, 99)), 3),
        "max_ms": round(float(arr.max()), 3),
    }


def run_bench(app, n_queries: int = 200, seed: int = 0, limit: int = 2000) -> dict:
    rng = np.random.default_rng(seed)
    snapshot = app.state.snapshot
    xs = np.array([v.x for v in snapshot.views])
    ys = np.array([v.y for v in snapshot.views])
    x_lo, x_hi = float(xs.min()), float(xs.max())
    y_lo, y_hi = float(ys.min()), float(ys.max())
    span_x, span_y = x_hi - x_lo, y_hi - y_lo
    names = [v.name for v in snapshot.views if v.name]

    nodes_ms: list[float] = []
    search_ms: list[float] = []
    with TestClient(app) as client:
        client.get("/api/v1/healthz")  # warm up the stack before timing
        for _ in range(n_queries):
            # box areas from 0.1% to ~10% of the field, like pan/zoom traffic
            frac = 10 ** rng.uniform(-3, -1)
            w, h = span_x * np.sqrt(frac), span_y * np.sqrt(frac)
            cx = rng.uniform(x_lo, x_hi - w) if span_x > w else x_lo
            cy = rng.uniform(y_lo, y_hi - h) if span_y > h else y_lo
            bbox = f"{cx},{cy},{cx + w},{cy + h}"
            t0 = time.perf_counter()
            resp = client.get("/api/v1/nodes", params={"bbox": bbox, "limit": limit})
            nodes_ms.append((time.perf_counter() - t0) * 1000.0)
            resp.raise_for_status()

        for _ in range(n_queries):
            name = names[int(rng.integers(len(names)))]
            start = int(rng.integers(0, max(1, len(name) - 3)))
            fragment = name[start : start + int(rng.integers(2, 5))].strip() or name[:2]
            t0 = time.perf_counter()
            resp = client.get("/api/v1/search", params={"q": fragment})
            search_ms.append((time.perf_counter() - t0) * 1000.0)
            resp.raise_for_status()

    return {
        "views": len(snapshot.views),
        "nodes": _percentiles(nodes_ms),
        "search": _percentiles(search_ms),
    }
