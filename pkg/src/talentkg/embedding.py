"""Expertise and dataset embeddings.

Author expertise is the positional-weighted mean of the author's paper
embeddings: first and last authors weigh 1, the k-th author weighs 1/k, and
anyone past the 10th position weighs 1/10. Dataset embeddings are the plain
mean over papers that used the dataset. Everything is L2-normalized so that
cosine similarity downstream reduces to a dot product.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from . import EMBEDDING_DIM
from .corpus import Corpus, EmbeddingStore
from .errors import ContractViolation, DegenerateAggregateError, NoSignalError, NotFoundError

_NORM_EPS = 1e-12


def position_weight(position: int, n_authors: int, is_last: bool) -> float:
    """Weight of the author at a 1-based byline position.

    1.0 for the first or last author, 1/position up to the 10th slot, and a
    flat 0.1 beyond that. The last-author rule wins whenever both could
    apply, so a 15th-of-15 author still weighs 1.0.
    """
    if n_authors < 1 or position < 1 or position > n_authors:
        raise ContractViolation(f"position {position} out of range for {n_authors} authors")
    if position == 1 or is_last:
        return 1.0
    if position <= 10:
        return 1.0 / position
    return 0.1


def _normalize(vec: np.ndarray, *, context: str) -> np.ndarray:
    vec = np.asarray(vec, dtype=np.float64)
    norm = float(np.linalg.norm(vec))
    if norm < _NORM_EPS:
        raise DegenerateAggregateError(f"degenerate aggregate: {context}")
    return vec / norm


def _paper_weight(paper, author_id: str) -> float:
    pos = paper.author_ids.index(author_id) + 1
    n = len(paper.author_ids)
    return position_weight(pos, n, is_last=(pos == n))


def author_embedding(
    author_id: str,
    corpus: Corpus,
    paper_embeddings: Mapping[str, np.ndarray] | EmbeddingStore,
) -> np.ndarray:
    """Positional-weighted mean of the author's embedded papers, unit-norm.

    Raises NoSignalError when none of the author's papers has an embedding
    and DegenerateAggregateError when opposing papers cancel to zero.
    """
    getter = paper_embeddings.get if hasattr(paper_embeddings, "get") else paper_embeddings.__getitem__
    total = np.zeros(EMBEDDING_DIM, dtype=np.float64)
    weight_sum = 0.0
    for paper in corpus.author_papers(author_id):
        vec = getter(paper.paper_id)
        if vec is None:
            continue
        w = _paper_weight(paper, author_id)
        total += w * np.asarray(vec, dtype=np.float64)
        weight_sum += w
    if weight_sum == 0.0:
        raise NoSignalError(f"no expertise signal: author {author_id} has no embedded papers")
    return _normalize(total / weight_sum, context=f"author {author_id}")


def dataset_embedding(
    dataset_id: str,
    corpus: Corpus,
    paper_embeddings: Mapping[str, np.ndarray] | EmbeddingStore,
) -> np.ndarray:
    """Unweighted mean embedding of the papers that used the dataset."""
    if dataset_id not in corpus.datasets:
        raise NotFoundError(f"unknown dataset id: {dataset_id}")
    getter = paper_embeddings.get if hasattr(paper_embeddings, "get") else paper_embeddings.__getitem__
    vecs = []
    for pid in corpus.datasets[dataset_id].user_paper_ids:
        vec = getter(pid)
        if vec is not None:
            vecs.append(np.asarray(vec, dtype=np.float64))
    if not vecs:
        raise NoSignalError(f"no usage signal: dataset {dataset_id} has no embedded papers")
    return _normalize(np.mean(vecs, axis=0), context=f"dataset {dataset_id}")


# ---------------------------------------------------------------------------
# batch aggregation (same math as the per-entity ops, vectorized for builds)
# ---------------------------------------------------------------------------


def build_author_embeddings(corpus: Corpus, store: EmbeddingStore) -> tuple[EmbeddingStore, list[str]]:
    """Aggregate expertise vectors for every author with embedded papers.

    Returns the store (rows sorted by author id) and the list of authors
    skipped for lack of signal. Weighted sums run through a sparse
    author-by-paper weight matrix; results match author_embedding to float32
    precision.
    """
    author_ids = sorted(corpus.authors)
    rows, cols, weights = [], [], []
    for ai, aid in enumerate(author_ids):
        for pid in corpus.papers_by_author.get(aid, []):
            row = store.row_of.get(pid)
            if row is None:
                continue
            rows.append(ai)
            cols.append(row)
            weights.append(_paper_weight(corpus.papers[pid], aid))
    w = sp.csr_matrix(
        (np.asarray(weights, dtype=np.float64), (rows, cols)),
        shape=(len(author_ids), len(store)),
    )
    weight_sums = np.asarray(w.sum(axis=1)).ravel()
    sums = w @ store.matrix.astype(np.float64)
    kept_idx = np.flatnonzero(weight_sums > 0.0)
    skipped = [author_ids[i] for i in np.flatnonzero(weight_sums == 0.0)]
    means = sums[kept_idx] / weight_sums[kept_idx, None]
    norms = np.linalg.norm(means, axis=1)
    degenerate = norms < _NORM_EPS
    if degenerate.any():
        bad = [author_ids[kept_idx[i]] for i in np.flatnonzero(degenerate)]
        raise DegenerateAggregateError(f"degenerate aggregate for authors: {', '.join(bad[:10])}")
    out = EmbeddingStore([author_ids[i] for i in kept_idx], (means / norms[:, None]).astype(np.float32))
    return out, skipped


def build_dataset_embeddings(corpus: Corpus, store: EmbeddingStore) -> tuple[EmbeddingStore, list[str]]:
    """Mean embeddings for every dataset with at least one embedded paper."""
    ids, vecs, skipped = [], [], []
    for did in sorted(corpus.datasets):
        try:
            vecs.append(dataset_embedding(did, corpus, store))
            ids.append(did)
        except NoSignalError:
            skipped.append(did)
    matrix = np.vstack(vecs).astype(np.float32) if vecs else np.zeros((0, EMBEDDING_DIM), np.float32)
    return EmbeddingStore(ids, matrix), skipped


# ---------------------------------------------------------------------------
# expertise facets (spherical k-means over one author's papers)
# ---------------------------------------------------------------------------


@dataclass
class Facet:
    embedding: np.ndarray
    paper_ids: list[str]
    weight: float  # member count / total papers


@dataclass
class ExpertiseProfile:
    author_id: str
    primary_embedding: np.ndarray
    facets: list[Facet]


def _spherical_kmeans(x: np.ndarray, k: int, rng: np.random.Generator, n_iter: int = 100) -> np.ndarray:
    """Cluster unit rows of x into k groups by cosine; returns labels."""
    n = x.shape[0]
    # k-means++ style seeding on cosine distance
    centers = np.empty((k, x.shape[1]))
    first = int(rng.integers(n))
    centers[0] = x[first]
    for c in range(1, k):
        d = 1.0 - np.max(x @ centers[:c].T, axis=1)
        d = np.clip(d, 0.0, None)
        if d.sum() <= 0:
            centers[c] = x[int(rng.integers(n))]
            continue
        probs = d / d.sum()
        centers[c] = x[int(rng.choice(n, p=probs))]

    labels = np.zeros(n, dtype=np.int64)
    for _ in range(n_iter):
        sims = x @ centers.T
        new_labels = np.argmax(sims, axis=1)
        for c in range(k):
            members = new_labels == c
            if not members.any():
                # re-seed an empty cluster with the worst-fitting point
                worst = int(np.argmin(sims[np.arange(n), new_labels]))
                new_labels[worst] = c
                members = new_labels == c
            mean = x[members].mean(axis=0)
            norm = np.linalg.norm(mean)
            centers[c] = mean / norm if norm > _NORM_EPS else x[int(np.flatnonzero(members)[0])]
        if (new_labels == labels).all():
            break
        labels = new_labels
    return labels


def _cosine_silhouette(x: np.ndarray, labels: np.ndarray) -> float:
    """Mean silhouette on cosine distance; 0 contribution for singletons."""
    n = x.shape[0]
    d = np.clip(1.0 - x @ x.T, 0.0, None)
    d[d < 1e-12] = 0.0  # duplicates must score 0, not float noise
    clusters = np.unique(labels)
    scores = np.zeros(n)
    for i in range(n):
        own = labels[i]
        own_mask = labels == own
        own_size = int(own_mask.sum())
        if own_size <= 1:
            scores[i] = 0.0
            continue
        a = d[i, own_mask].sum() / (own_size - 1)
        b = np.inf
        for c in clusters:
            if c == own:
                continue
            b = min(b, d[i, labels == c].mean())
        denom = max(a, b)
        scores[i] = 0.0 if denom <= 0 else (b - a) / denom
    return float(scores.mean())


def cluster_expertise(
    author_id: str,
    corpus: Corpus,
    paper_embeddings: Mapping[str, np.ndarray] | EmbeddingStore,
    max_facets: int = 4,
    seed: int = 0,
) -> ExpertiseProfile:
    """Split an author's papers into up to max_facets expertise clusters.

    Facet count is picked by the best cosine silhouette over k in
    [2, min(max_facets, n)]; authors with fewer than 4 embedded papers, or
    whose best silhouette is not positive (e.g. all papers identical), get a
    single facet. Deterministic for a fixed seed.
    """
    getter = paper_embeddings.get if hasattr(paper_embeddings, "get") else paper_embeddings.__getitem__
    pids, vecs = [], []
    for paper in corpus.author_papers(author_id):
        vec = getter(paper.paper_id)
        if vec is not None:
            pids.append(paper.paper_id)
            vecs.append(np.asarray(vec, dtype=np.float64))
    if not pids:
        raise NoSignalError(f"no expertise signal: author {author_id} has no embedded papers")

    order = np.argsort(pids)
    pids = [pids[i] for i in order]
    x = np.vstack([vecs[i] for i in order])
    x = x / np.linalg.norm(x, axis=1, keepdims=True)
    n = len(pids)

    best_labels = np.zeros(n, dtype=np.int64)
    if n >= 4:
        best_score = 0.0
        for k in range(2, min(max_facets, n) + 1):
            rng = np.random.default_rng(seed * 1000003 + k)
            labels = _spherical_kmeans(x, k, rng)
            score = _cosine_silhouette(x, labels)
            if score > best_score:
                best_score, best_labels = score, labels

    facets = []
    for c in sorted(set(best_labels.tolist())):
        members = [pids[i] for i in np.flatnonzero(best_labels == c)]
        centroid = _normalize(x[best_labels == c].mean(axis=0), context=f"facet of {author_id}")
        facets.append(Facet(embedding=centroid, paper_ids=members, weight=len(members) / n))
    facets.sort(key=lambda f: (-f.weight, f.paper_ids[0]))
    return ExpertiseProfile(
        author_id=author_id,
        primary_embedding=author_embedding(author_id, corpus, paper_embeddings),
        facets=facets,
    )


# ---------------------------------------------------------------------------
# deterministic stand-in embedder for tests and synthetic corpora
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(r"[a-z0-9]+")
_gram_cache: dict[tuple[int, int, str], tuple[int, float]] = {}


def _gram_slot(gram: str, dim: int, seed: int) -> tuple[int, float]:
    key = (seed, dim, gram)
    hit = _gram_cache.get(key)
    if hit is None:
        digest = hashlib.blake2b(f"{seed}:{gram}".encode("utf-8"), digest_size=8).digest()
        value = int.from_bytes(digest, "little")
        hit = (value % dim, 1.0 if (value >> 63) & 1 else -1.0)
        if len(_gram_cache) < 1_000_000:
            _gram_cache[key] = hit
    return hit


def pseudo_embed(text: str, dim: int = EMBEDDING_DIM, seed: int = 0) -> np.ndarray:
    """Hash token unigrams and bigrams into a signed bag-of-buckets vector.

    Pure function of (text, dim, seed): shared tokens pull texts together,
    which is all the downstream similarity machinery needs. Empty input maps
    to the unit basis vector 0.
    """
    tokens = _TOKEN_RE.findall(text.lower())
    vec = np.zeros(dim, dtype=np.float64)
    if not tokens:
        vec[0] = 1.0
        return vec
    grams = list(tokens)
    grams.extend(f"{a} {b}" for a, b in zip(tokens, tokens[1:]))
    for gram in grams:
        slot, sign = _gram_slot(gram, dim, seed)
        vec[slot] += sign
    norm = np.linalg.norm(vec)
    if norm < _NORM_EPS:
        vec[:] = 0.0
        vec[0] = 1.0
        return vec
    return vec / norm


def make_pseudo_embedder(dim: int = EMBEDDING_DIM, seed: int = 0) -> Callable[[str], np.ndarray]:
    return lambda text: pseudo_embed(text, dim=dim, seed=seed)
