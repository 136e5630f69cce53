"""Immutable serving snapshot assembled from build artifacts."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..build import BuildManifest, verify_artifacts
from ..corpus import Corpus, EmbeddingStore, load_corpus
from ..graphnet import CoauthorGraph, load_graph
from ..layout import NodeView, load_node_views
from ..recommend import Recommendation, SimilarityIndex, load_recommendations

log = logging.getLogger(__name__)


@dataclass
class Snapshot:
    version: str
    manifest: BuildManifest
    corpus: Corpus
    views: list[NodeView]
    view_by_id: dict[str, NodeView]
    graph: CoauthorGraph
    author_index: SimilarityIndex
    dataset_index: SimilarityIndex | None
    recommendations: dict[str, tuple[str, list[Recommendation]]]


def load_snapshot(artifact_dir: str | Path, verify: bool = True) -> Snapshot:
    out = Path(artifact_dir)
    if verify:
        manifest = verify_artifacts(out)
    else:
        manifest = BuildManifest.load(out / "manifest.json")

    corpus = load_corpus(out)
    views = load_node_views(out / "layout.jsonl")
    graph = load_graph(out / "coauthor_graph.jsonl", node_ids=sorted(corpus.authors))
    author_index = SimilarityIndex.from_store(EmbeddingStore.load(out / "author_embeddings.f32"))
    dataset_store = EmbeddingStore.load(out / "dataset_embeddings.f32")
    dataset_index = SimilarityIndex.from_store(dataset_store) if len(dataset_store) else None

    recs: dict[str, tuple[str, list[Recommendation]]] = {}
    recs_path = out / "recommendations.jsonl"
    if recs_path.exists():
        recs = load_recommendations(recs_path)

    log.info(
        "snapshot %s: %d views, %d authors indexed, %d rec lists",
        manifest.version, len(views), len(author_index), len(recs),
    )
    return Snapshot(
        version=manifest.version,
        manifest=manifest,
        corpus=corpus,
        views=views,
        view_by_id={v.node_id: v for v in views},
        graph=graph,
        author_index=author_index,
        dataset_index=dataset_index,
        recommendations=recs,
    )
