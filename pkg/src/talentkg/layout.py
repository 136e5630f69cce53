"""2D layout of the embedding space plus render attributes.

Two reduction modes:
  pca                exact top-2 principal projection; cheap, reproducible,
                     preserves intrinsically-2D inputs to float precision
  neighbor_embedding attraction-repulsion over a fuzzy k-nearest-neighbor
                     graph (k=15, 200 epochs, min_dist=0.1 by default),
                     initialized from the PCA projection

Layout quality is reported as trustworthiness: the rank-based score in
[0, 1] that penalizes 2D neighbors which are not neighbors in the original
space.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np
import scipy.optimize
import scipy.sparse as sp

from ._ne_kernel import optimize_layout
from .corpus import Corpus
from .errors import ContractViolation, ValidationError
from .ioutil import read_jsonl, write_jsonl

log = logging.getLogger(__name__)

SIZE_MIN = 2.0
SIZE_SCALE = 1.5

_KINDS = ("author", "dataset", "bio_entity")


@dataclass
class LayoutResult:
    coordinates: dict[str, tuple[float, float]]
    method: str
    seed: int
    trustworthiness: float


@dataclass
class NodeView:
    node_id: str
    kind: str  # author | dataset | bio_entity
    x: float
    y: float
    size: float
    publication_count: int
    career_start_year: int | None = None
    name: str = ""

    @property
    def shape(self) -> str:
        return "circle" if self.kind == "author" else "square"


def node_size(publication_count: int, s_min: float = SIZE_MIN, s_scale: float = SIZE_SCALE) -> float:
    """Log-scaled render size; s_min at zero publications."""
    if publication_count < 0:
        raise ContractViolation("publication_count must be nonnegative")
    return s_min + s_scale * math.log1p(publication_count)


# ---------------------------------------------------------------------------
# dimensionality reduction
# ---------------------------------------------------------------------------


def _as_matrix(vectors: Mapping[str, np.ndarray]) -> tuple[list[str], np.ndarray]:
    ids = sorted(vectors)
    x = np.vstack([np.asarray(vectors[i], dtype=np.float64) for i in ids])
    if not np.isfinite(x).all():
        raise ValidationError("non-finite values in input vectors")
    return ids, x


def _pca_2d(x: np.ndarray) -> np.ndarray:
    centered = x - x.mean(axis=0)
    # economy SVD; principal axes are the top right singular vectors
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    comps = vt[:2]
    if comps.shape[0] < 2:  # single feature column; pad a zero axis
        comps = np.vstack([comps, np.zeros_like(comps[0])])
    # sign convention: largest-magnitude loading of each axis is positive
    for row in comps:
        pivot = np.argmax(np.abs(row))
        if row[pivot] < 0:
            row *= -1
    return centered @ comps.T


def _knn_cosine(x: np.ndarray, k: int, block: int = 1024) -> tuple[np.ndarray, np.ndarray]:
    """Exact k nearest neighbors by cosine distance on normalized rows."""
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    unit = (x / norms).astype(np.float32)
    n = unit.shape[0]
    idx = np.empty((n, k), dtype=np.int64)
    dist = np.empty((n, k), dtype=np.float64)
    for start in range(0, n, block):
        stop = min(start + block, n)
        sims = unit[start:stop] @ unit.T
        sims[np.arange(stop - start), np.arange(start, stop)] = -np.inf
        part = np.argpartition(-sims, k - 1, axis=1)[:, :k]
        psims = np.take_along_axis(sims, part, axis=1)
        order = np.argsort(-psims, axis=1, kind="stable")
        idx[start:stop] = np.take_along_axis(part, order, axis=1)
        dist[start:stop] = 1.0 - np.take_along_axis(psims, order, axis=1)
    return idx, np.clip(dist, 0.0, None)


def _smooth_memberships(dist: np.ndarray, k: int, n_iter: int = 64) -> np.ndarray:
    """Per-point bandwidth calibration: sum of memberships targets log2(k)."""
    n = dist.shape[0]
    target = math.log2(k)
    weights = np.ones_like(dist)
    for i in range(n):
        row = dist[i]
        nonzero = row[row > 0.0]
        rho = nonzero.min() if nonzero.size else 0.0
        lo, hi, mid = 0.0, np.inf, 1.0
        for _ in range(n_iter):
            psum = np.exp(-np.clip(row - rho, 0.0, None) / mid).sum()
            if abs(psum - target) < 1e-5:
                break
            if psum > target:
                hi = mid
                mid = (lo + hi) / 2.0
            else:
                lo = mid
                mid = mid * 2.0 if hi == np.inf else (lo + hi) / 2.0
        weights[i] = np.exp(-np.clip(row - rho, 0.0, None) / mid)
    return weights


def _fit_curve_params(min_dist: float, spread: float = 1.0) -> tuple[float, float]:
    """Least-squares fit of 1/(1 + a x^(2b)) to the target falloff curve."""
    xs = np.linspace(0.0, spread * 3.0, 300)
    ys = np.where(xs < min_dist, 1.0, np.exp(-(xs - min_dist) / spread))
    (a, b), _ = scipy.optimize.curve_fit(
        lambda x, a, b: 1.0 / (1.0 + a * x ** (2.0 * b)), xs, ys, p0=(1.0, 1.0), maxfev=10000
    )
    return float(a), float(b)


def _neighbor_embedding(
    x: np.ndarray,
    seed: int,
    n_neighbors: int,
    n_epochs: int,
    min_dist: float,
    negative_sample_rate: int = 5,
) -> np.ndarray:
    n = x.shape[0]
    k = min(n_neighbors, n - 1)
    knn_idx, knn_dist = _knn_cosine(x, k)
    memberships = _smooth_memberships(knn_dist, k)

    rows = np.repeat(np.arange(n), k)
    w = sp.coo_matrix((memberships.ravel(), (rows, knn_idx.ravel())), shape=(n, n)).tocsr()
    # fuzzy union of the directed neighborhoods
    wt = w.T.tocsr()
    sym = (w + wt - w.multiply(wt)).tocoo()
    mask = sym.row < sym.col  # keep each undirected edge once; both ends move
    heads = sym.row[mask].astype(np.int64)
    tails = sym.col[mask].astype(np.int64)
    weights = np.asarray(sym.data[mask], dtype=np.float64)
    keep = weights > weights.max() / float(n_epochs)
    heads, tails, weights = heads[keep], tails[keep], weights[keep]
    epochs_per_sample = weights.max() / weights

    init = _pca_2d(x)
    extent = np.abs(init).max()
    if extent > 0:
        init = init * (10.0 / extent)
    emb = np.ascontiguousarray(init, dtype=np.float32)

    a, b = _fit_curve_params(min_dist)
    rng_state = np.random.SeedSequence(seed).generate_state(3, dtype=np.uint64)
    rng_state[rng_state == 0] = 1  # xorshift must not start at zero
    optimize_layout(
        emb,
        heads,
        tails,
        np.ascontiguousarray(epochs_per_sample),
        n_epochs,
        a,
        b,
        rng_state,
        1.0,
        1.0,
        negative_sample_rate,
    )
    return emb.astype(np.float64)


def reduce_to_2d(
    vectors: Mapping[str, np.ndarray],
    method: str = "pca",
    seed: int = 0,
    n_neighbors: int = 15,
    n_epochs: int = 200,
    min_dist: float = 0.1,
    quality_k: int = 10,
    max_quality_queries: int = 1024,
) -> LayoutResult:
    """Project vectors to 2D and score the projection's trustworthiness.

    Deterministic for a fixed (method, seed). The trustworthiness stored in
    the result is exact up to max_quality_queries points and a seeded query
    sample beyond that.
    """
    if len(vectors) < 2:
        raise ContractViolation("need at least 2 vectors to lay out")
    ids, x = _as_matrix(vectors)

    if method == "pca":
        coords = _pca_2d(x)
    elif method == "neighbor_embedding":
        coords = _neighbor_embedding(x, seed, n_neighbors, n_epochs, min_dist)
    else:
        raise ContractViolation(f"unknown layout method: {method}")

    k = min(quality_k, len(ids) - 1)
    quality = _trustworthiness_arrays(x, coords, k, max_queries=max_quality_queries, seed=seed)
    return LayoutResult(
        coordinates={ids[i]: (float(coords[i, 0]), float(coords[i, 1])) for i in range(len(ids))},
        method=method,
        seed=seed,
        trustworthiness=quality,
    )


# ---------------------------------------------------------------------------
# trustworthiness
# ---------------------------------------------------------------------------


def trustworthiness(
    high_d: Mapping[str, np.ndarray], low_d: Mapping[str, tuple[float, float]], k: int
) -> float:
    """Rank-based neighborhood preservation score in [0, 1].

    For every point, each of its k 2D-nearest neighbors is charged
    max(0, high_d_rank - k), where the rank counts strictly closer points,
    so tied distances never penalize. 1.0 means every low-d neighborhood is
    drawn from the high-d neighborhood.
    """
    if set(high_d) != set(low_d):
        raise ContractViolation("high_d and low_d must cover the same ids")
    ids = sorted(high_d)
    n = len(ids)
    if not 0 < k < n:
        raise ContractViolation(f"k must be in [1, {n - 1}], got {k}")
    x = np.vstack([np.asarray(high_d[i], dtype=np.float64) for i in ids])
    y = np.asarray([low_d[i] for i in ids], dtype=np.float64)
    return _trustworthiness_arrays(x, y, k, max_queries=None, seed=0)


def _trustworthiness_arrays(
    x: np.ndarray, y: np.ndarray, k: int, max_queries: int | None, seed: int
) -> float:
    n = x.shape[0]
    if k >= n:
        raise ContractViolation(f"k must be below the point count ({n})")
    queries = np.arange(n)
    if max_queries is not None and n > max_queries:
        queries = np.sort(np.random.default_rng(seed).choice(n, size=max_queries, replace=False))

    x_sq = (x * x).sum(axis=1)
    total = 0.0
    for i in queries:
        d_high = x_sq + x_sq[i] - 2.0 * (x @ x[i])
        d_low = ((y - y[i]) ** 2).sum(axis=1)
        d_low[i] = np.inf
        # k lowest by (distance, index); index tie-break keeps this exact
        part = np.argpartition(d_low, k - 1)[:k]
        neigh = part[np.lexsort((part, d_low[part]))]
        d_high_i = d_high.copy()
        d_high_i[i] = np.inf
        for j in neigh:
            rank = int((d_high_i < d_high_i[j]).sum()) + 1
            if rank > k:
                total += rank - k
    if total == 0.0:
        return 1.0
    q = len(queries)
    denom = q * k * (2.0 * n - 3.0 * k - 1.0)
    if denom <= 0:
        raise ContractViolation(f"k={k} too large to normalize penalties over {n} points")
    return float(1.0 - (2.0 / denom) * total)


# ---------------------------------------------------------------------------
# node views
# ---------------------------------------------------------------------------


def make_node_views(
    corpus: Corpus,
    layout: LayoutResult,
    s_min: float = SIZE_MIN,
    s_scale: float = SIZE_SCALE,
) -> list[NodeView]:
    """One renderable view per node that has coordinates.

    Authors and datasets take their position from the layout; bio entities
    with precomputed positions pass through untouched. Nodes with neither an
    embedding-derived coordinate nor a stored position are skipped (counted
    in a single warning).
    """
    views: list[NodeView] = []
    skipped = 0

    for aid in sorted(corpus.authors):
        pos = layout.coordinates.get(aid)
        if pos is None:
            skipped += 1
            continue
        author = corpus.authors[aid]
        views.append(
            NodeView(
                node_id=aid,
                kind="author",
                x=pos[0],
                y=pos[1],
                size=node_size(author.publication_count, s_min, s_scale),
                publication_count=author.publication_count,
                career_start_year=author.career_start_year,
                name=author.name,
            )
        )

    for did in sorted(corpus.datasets):
        pos = layout.coordinates.get(did)
        if pos is None:
            skipped += 1
            continue
        ds = corpus.datasets[did]
        views.append(
            NodeView(
                node_id=did,
                kind="dataset",
                x=pos[0],
                y=pos[1],
                size=node_size(len(ds.user_paper_ids), s_min, s_scale),
                publication_count=len(ds.user_paper_ids),
                name=ds.name,
            )
        )

    for eid in sorted(corpus.bio_entities):
        entity = corpus.bio_entities[eid]
        pos = entity.position_2d or layout.coordinates.get(eid)
        if pos is None:
            skipped += 1
            continue
        views.append(
            NodeView(
                node_id=eid,
                kind="bio_entity",
                x=float(pos[0]),
                y=float(pos[1]),
                size=node_size(0, s_min, s_scale),
                publication_count=0,
                name=entity.name,
            )
        )

    if skipped:
        log.warning("make_node_views: %d node(s) lack both embedding and position; excluded", skipped)
    return views


def save_node_views(views: list[NodeView], path: Path) -> None:
    write_jsonl(
        path,
        (
            {
                "node_id": v.node_id,
                "kind": v.kind,
                "x": v.x,
                "y": v.y,
                "size": v.size,
                "publication_count": v.publication_count,
                "career_start_year": v.career_start_year,
                "name": v.name,
            }
            for v in views
        ),
    )


def load_node_views(path: Path) -> list[NodeView]:
    views = []
    for _, row in read_jsonl(path):
        kind = row["kind"]
        if kind not in _KINDS:
            raise ValidationError(f"unknown node kind in layout file: {kind}")
        views.append(
            NodeView(
                node_id=row["node_id"],
                kind=kind,
                x=float(row["x"]),
                y=float(row["y"]),
                size=float(row["size"]),
                publication_count=int(row["publication_count"]),
                career_start_year=row.get("career_start_year"),
                name=row.get("name", ""),
            )
        )
    return views
