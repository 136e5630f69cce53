"""Offline build pipeline: corpus -> embeddings -> index -> graph -> layout -> recs.

Every stage writes its artifacts into the output directory and records
their sha256 in the manifest. The pipeline is deterministic for fixed
(inputs, seed, config), so rebuilding produces identical checksums; the
snapshot version served by the API is a hash over the stage checksums.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import EMBEDDING_DIM
from .config import Config
from .corpus import (
    Corpus,
    EmbeddingStore,
    filter_authors,
    load_corpus,
    load_paper_embeddings,
    save_corpus,
    validate_embedding_coverage,
)
from .embedding import build_author_embeddings, build_dataset_embeddings, pseudo_embed
from .errors import LoadError, TalentKGError
from .graphnet import build_coauthor_graph, save_graph
from .ioutil import canonical_json, sha256_file
from .layout import make_node_views, reduce_to_2d, save_node_views
from .recommend import (
    SimilarityIndex,
    precompute_collaborators,
    precompute_dataset_users,
    save_recommendations,
)

log = logging.getLogger(__name__)

STAGES = ("corpus", "embeddings", "index", "graph", "layout", "recommendations")


@dataclass
class BuildManifest:
    corpus_path: str
    out_dir: str
    seed: int
    method: str
    config: dict
    stages: dict[str, dict] = field(default_factory=dict)
    stats: dict = field(default_factory=dict)

    @property
    def version(self) -> str:
        return hashlib.sha256(canonical_json(self.stages).encode("utf-8")).hexdigest()[:16]

    def checksums(self) -> dict[str, dict[str, str]]:
        return {name: stage.get("files", {}) for name, stage in self.stages.items()}

    def to_dict(self) -> dict:
        return {
            "corpus_path": self.corpus_path,
            "out_dir": self.out_dir,
            "seed": self.seed,
            "method": self.method,
            "config": self.config,
            "stages": self.stages,
            "stats": self.stats,
            "version": self.version,
        }

    def save(self, path: Path) -> None:
        path.write_text(canonical_json(self.to_dict()) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: Path) -> "BuildManifest":
        if not path.exists():
            raise LoadError(f"manifest.json not found in {path.parent}")
        data = json.loads(path.read_text(encoding="utf-8"))
        manifest = cls(
            corpus_path=data["corpus_path"],
            out_dir=data["out_dir"],
            seed=data["seed"],
            method=data["method"],
            config=data["config"],
            stages=data["stages"],
            stats=data.get("stats", {}),
        )
        return manifest


def _record(manifest: BuildManifest, out: Path, stage: str, files: list[str], status: str = "ok") -> None:
    manifest.stages[stage] = {
        "status": status,
        "files": {name: sha256_file(out / name) for name in files if (out / name).exists()},
    }


def pseudo_embed_papers(corpus: Corpus, seed: int) -> EmbeddingStore:
    """Deterministic stand-in embeddings from paper text (test corpora)."""
    ids = sorted(corpus.papers)
    matrix = np.empty((len(ids), EMBEDDING_DIM), dtype=np.float32)
    for i, pid in enumerate(ids):
        p = corpus.papers[pid]
        matrix[i] = pseudo_embed(p.title + " " + p.abstract, seed=seed)
    return EmbeddingStore(ids, matrix)


def run_build(
    corpus_dir: str | Path,
    out_dir: str | Path,
    config: Config | None = None,
    seed: int | None = None,
    method: str | None = None,
    skip_recs: bool = False,
    use_pseudo_embeddings: bool = False,
) -> BuildManifest:
    """Run all stages; raises on the first failing stage after persisting a
    manifest that marks it failed."""
    config = config or Config()
    seed = config.seed if seed is None else seed
    method = config.layout_method if method is None else method
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    manifest = BuildManifest(
        corpus_path=str(corpus_dir),
        out_dir=str(out),
        seed=seed,
        method=method,
        config=config.to_dict(),
    )

    stage = "corpus"
    try:
        raw = load_corpus(corpus_dir)
        paper_store = load_paper_embeddings(corpus_dir)
        if paper_store is None:
            if not use_pseudo_embeddings:
                raise LoadError(
                    f"embeddings.f32 not found in {corpus_dir} "
                    "(rerun with --pseudo-embed to derive stand-in embeddings from text)"
                )
            paper_store = pseudo_embed_papers(raw, config.embed_seed)
        else:
            validate_embedding_coverage(raw, paper_store)
        corpus = filter_authors(raw, min_pubs=config.min_pubs, active_since=config.active_since)
        save_corpus(corpus, out)
        corpus_files = ["papers.jsonl", "authors.jsonl", "datasets.jsonl"]
        if corpus.bio_entities:
            corpus_files.append("bio_entities.jsonl")
        if corpus.external_author_ids:
            corpus_files.append("corpus_meta.json")
        _record(manifest, out, stage, corpus_files)
        manifest.stats["counts"] = {
            "papers": len(corpus.papers),
            "authors": len(corpus.authors),
            "authors_before_filter": len(raw.authors),
            "datasets": len(corpus.datasets),
            "bio_entities": len(corpus.bio_entities),
        }
        log.info("corpus: %d papers, %d/%d authors kept", len(corpus.papers), len(corpus.authors), len(raw.authors))

        stage = "embeddings"
        author_store, skipped_authors = build_author_embeddings(corpus, paper_store)
        dataset_store, skipped_datasets = build_dataset_embeddings(corpus, paper_store)
        author_store.save(out / "author_embeddings.f32")
        dataset_store.save(out / "dataset_embeddings.f32")
        _record(
            manifest,
            out,
            stage,
            [
                "author_embeddings.f32",
                "author_embeddings.index.jsonl",
                "dataset_embeddings.f32",
                "dataset_embeddings.index.jsonl",
            ],
        )
        manifest.stats["embeddings"] = {
            "authors_embedded": len(author_store),
            "authors_skipped": len(skipped_authors),
            "datasets_embedded": len(dataset_store),
            "datasets_skipped": len(skipped_datasets),
        }
        log.info(
            "embeddings: %d authors (%d skipped), %d datasets (%d skipped)",
            len(author_store), len(skipped_authors), len(dataset_store), len(skipped_datasets),
        )

        stage = "index"
        author_index = SimilarityIndex.from_store(author_store)
        dataset_index = SimilarityIndex.from_store(dataset_store) if len(dataset_store) else None
        index_meta = {
            "author_version": author_index.version,
            "dataset_version": dataset_index.version if dataset_index else None,
            "authors": len(author_index),
            "datasets": len(dataset_index) if dataset_index else 0,
            "dim": EMBEDDING_DIM,
        }
        (out / "index_meta.json").write_text(canonical_json(index_meta) + "\n", encoding="utf-8")
        _record(manifest, out, stage, ["index_meta.json"])

        stage = "graph"
        graph = build_coauthor_graph(corpus)
        save_graph(graph, out / "coauthor_graph.jsonl")
        _record(manifest, out, stage, ["coauthor_graph.jsonl"])
        manifest.stats["graph"] = {
            "nodes": len(graph.adjacency),
            "edges": len(graph.edge_papers),
        }
        log.info("graph: %d nodes, %d edges", len(graph.adjacency), len(graph.edge_papers))

        stage = "layout"
        vectors: dict[str, np.ndarray] = {}
        for store in (author_store, dataset_store):
            for eid in store.ids:
                vectors[eid] = store[eid]
        for eid, entity in corpus.bio_entities.items():
            if entity.embedding is not None and entity.position_2d is None:
                vectors[eid] = entity.embedding
        layout = reduce_to_2d(
            vectors,
            method=method,
            seed=seed,
            n_neighbors=config.layout_neighbors,
            n_epochs=config.layout_epochs,
            min_dist=config.layout_min_dist,
        )
        views = make_node_views(corpus, layout, s_min=config.size_min, s_scale=config.size_scale)
        save_node_views(views, out / "layout.jsonl")
        _record(manifest, out, stage, ["layout.jsonl"])
        manifest.stats["layout"] = {
            "method": method,
            "nodes": len(views),
            "trustworthiness": round(layout.trustworthiness, 6),
        }
        log.info("layout: %d views, trustworthiness %.3f", len(views), layout.trustworthiness)

        stage = "recommendations"
        if skip_recs:
            manifest.stages[stage] = {"status": "skipped", "files": {}}
        else:
            lists: dict[str, tuple[str, list]] = {}
            for aid, recs in precompute_collaborators(
                author_index, graph, k=config.top_k_collaborators, exclusion_depth=config.exclusion_depth
            ).items():
                lists[aid] = ("collaborators", recs)
            if dataset_index:
                for did, recs in precompute_dataset_users(
                    dataset_index, author_index, corpus, k=config.top_k_dataset_users
                ).items():
                    lists[did] = ("dataset_users", recs)
            save_recommendations(out / "recommendations.jsonl", lists)
            _record(manifest, out, stage, ["recommendations.jsonl"])
            log.info("recommendations: %d lists", len(lists))

        manifest.save(out / "manifest.json")
        return manifest
    except TalentKGError:
        manifest.stages[stage] = {"status": "failed", "files": {}}
        for name in STAGES:
            manifest.stages.setdefault(name, {"status": "not-run", "files": {}})
        manifest.save(out / "manifest.json")
        raise


def verify_artifacts(out_dir: str | Path) -> BuildManifest:
    """Check the manifest is complete and every artifact matches its checksum."""
    out = Path(out_dir)
    manifest = BuildManifest.load(out / "manifest.json")
    for stage_name, stage in manifest.stages.items():
        if stage["status"] == "skipped":
            continue
        if stage["status"] != "ok":
            raise LoadError(f"manifest stage '{stage_name}' is {stage['status']}; rebuild required")
        for fname, digest in stage["files"].items():
            path = out / fname
            if not path.exists():
                raise LoadError(f"artifact missing: {fname}")
            if sha256_file(path) != digest:
                raise LoadError(f"artifact checksum mismatch: {fname}")
    return manifest
