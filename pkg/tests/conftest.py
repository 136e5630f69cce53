from __future__ import annotations

import numpy as np
import pytest

from talentkg.build import run_build
from talentkg.config import Config
from talentkg.corpus import EmbeddingStore, load_corpus
from talentkg.ioutil import write_jsonl
from talentkg.synth import SynthSpec, generate_corpus


def write_corpus_dir(root, papers, authors, datasets, bio_entities=None, embeddings=None):
    """Write a hand-made corpus; embeddings is an optional id -> vector map."""
    root.mkdir(parents=True, exist_ok=True)
    write_jsonl(root / "papers.jsonl", papers)
    write_jsonl(root / "authors.jsonl", authors)
    write_jsonl(root / "datasets.jsonl", datasets)
    if bio_entities:
        write_jsonl(root / "bio_entities.jsonl", bio_entities)
    if embeddings:
        ids = sorted(embeddings)
        matrix = np.vstack([embeddings[i] for i in ids]).astype(np.float32)
        EmbeddingStore(ids, matrix).save(root / "embeddings.f32")
    return root


def paper(pid, authors, year=2021, datasets=(), title="t", citations=0, venue="v", abstract=""):
    return {
        "paper_id": pid,
        "title": title,
        "abstract": abstract,
        "year": year,
        "venue": venue,
        "citation_count": citations,
        "author_ids": list(authors),
        "dataset_ids": list(datasets),
    }


def author(aid, name=None, affiliation="Inst", career_start_year=None):
    row = {"author_id": aid, "name": name or f"Name {aid}", "affiliation": affiliation}
    if career_start_year is not None:
        row["career_start_year"] = career_start_year
    return row


def dataset(did, name=None, description="desc"):
    return {"dataset_id": did, "name": name or f"Dataset {did}", "description": description}


def unit(dim=768, hot=0, value=1.0):
    v = np.zeros(dim, dtype=np.float64)
    v[hot] = value
    return v / np.linalg.norm(v)


def random_unit_rows(n, dim=768, seed=0):
    rng = np.random.default_rng(seed)
    m = rng.normal(size=(n, dim))
    return m / np.linalg.norm(m, axis=1, keepdims=True)


@pytest.fixture(scope="session")
def synth_corpus_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("synth") / "corpus"
    spec = SynthSpec(
        n_authors=80,
        n_papers=220,
        n_datasets=10,
        n_bio_entities=15,
        n_topics=6,
        seed=11,
        coverage=0.85,
    )
    generate_corpus(spec, out)
    return out


@pytest.fixture(scope="session")
def built_artifacts(tmp_path_factory, synth_corpus_dir):
    out = tmp_path_factory.mktemp("build") / "artifacts"
    config = Config(layout_epochs=80)
    manifest = run_build(synth_corpus_dir, out, config=config, seed=5)
    return out, manifest


@pytest.fixture(scope="session")
def snapshot(built_artifacts):
    from talentkg.server.snapshot import load_snapshot

    out, _ = built_artifacts
    return load_snapshot(out)


@pytest.fixture()
def client(snapshot):
    from fastapi.testclient import TestClient

    from talentkg.server.app import create_app

    app = create_app(snapshot, config=Config(layout_epochs=80), mock_llm=True)
    with TestClient(app) as c:
        yield c


@pytest.fixture(scope="session")
def synth_corpus(synth_corpus_dir):
    return load_corpus(synth_corpus_dir)
