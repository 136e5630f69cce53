"""Synthetic corpus generator.

Produces a desk-scale corpus with planted topic clusters (papers within a
topic share vocabulary, so their hashed embeddings cluster), power-law
authorship (a few prolific authors, a long tail), topic-affine datasets,
and bio entities that carry either an embedding or fixed 2D coordinates.
Byte-identical output for a fixed seed; this is the fixture generator the
oracle tests build on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import EMBEDDING_DIM
from .corpus import EmbeddingStore
from .embedding import pseudo_embed
from .ioutil import write_jsonl

_SYLLABLES = [
    "ba", "be", "bi", "bo", "bu", "da", "de", "di", "do", "du", "fa", "fe",
    "fi", "fo", "ga", "ge", "gi", "go", "ka", "ke", "ki", "ko", "la", "le",
    "li", "lo", "ma", "me", "mi", "mo", "na", "ne", "ni", "no", "pa", "pe",
    "pi", "po", "ra", "re", "ri", "ro", "sa", "se", "si", "so", "ta", "te",
    "ti", "to", "va", "ve", "vi", "vo", "za", "ze", "zi", "zo",
]

_GLOBAL_WORDS = [
    "analysis", "study", "model", "data", "method", "results", "approach",
    "evaluation", "framework", "learning", "network", "system", "profile",
    "clinical", "cohort", "screen", "assay", "map", "atlas", "pathway",
]


def _word(rng: np.random.Generator, n_syll: int) -> str:
    return "".join(_SYLLABLES[int(i)] for i in rng.integers(0, len(_SYLLABLES), size=n_syll))


@dataclass
class SynthSpec:
    n_authors: int = 100
    n_papers: int = 250
    n_datasets: int = 12
    n_bio_entities: int = 0
    n_topics: int = 8
    seed: int = 42
    embed_seed: int = 0
    # fraction of authors guaranteed to survive the default activity filter
    # (>=2 papers, >=1 since 2020); the rest are left to chance
    coverage: float = 1.0
    year_min: int = 2006
    year_max: int = 2025


def generate_corpus(spec: SynthSpec, out_dir: str | Path) -> dict:
    """Write a full corpus directory; returns summary counts."""
    rng = np.random.default_rng(spec.seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    n_topics = max(1, min(spec.n_topics, spec.n_authors))
    topic_vocab = [[_word(rng, 3) for _ in range(40)] for _ in range(n_topics)]

    # --- authors: topic assignment + power-law prolificness ---------------
    author_ids = [f"A{i:06d}" for i in range(spec.n_authors)]
    author_topic = rng.integers(0, n_topics, size=spec.n_authors)
    prolific = rng.pareto(1.3, size=spec.n_authors) + 0.2
    affiliations = [f"Institute of {_word(rng, 3).capitalize()}" for _ in range(max(5, spec.n_authors // 60))]
    author_affil = rng.integers(0, len(affiliations), size=spec.n_authors)
    names = [f"{_word(rng, 2).capitalize()} {_word(rng, 3).capitalize()}" for _ in range(spec.n_authors)]

    topic_members: list[np.ndarray] = [np.flatnonzero(author_topic == t) for t in range(n_topics)]
    # every topic needs at least one member to sample leads from
    for t in range(n_topics):
        if topic_members[t].size == 0:
            topic_members[t] = np.array([t % spec.n_authors])
    topic_cumw = []
    for t in range(n_topics):
        w = prolific[topic_members[t]]
        topic_cumw.append(np.cumsum(w) / w.sum())

    venues = [f"Journal of {_word(rng, 2).capitalize()} {_word(rng, 2).capitalize()}" for _ in range(20)]

    # --- papers ------------------------------------------------------------
    def sample_author(topic: int) -> int:
        u = float(rng.random())
        pos = int(np.searchsorted(topic_cumw[topic], u))
        return int(topic_members[topic][min(pos, len(topic_members[topic]) - 1)])

    def make_paper(pid: str, lead: int, topic: int, year: int) -> dict:
        n_co = 1 + min(int(rng.zipf(2.0)), 19)
        members = [lead]
        seen = {lead}
        for _ in range(n_co - 1):
            t = topic if rng.random() < 0.9 else int(rng.integers(0, n_topics))
            cand = sample_author(t)
            if cand not in seen:
                members.append(cand)
                seen.add(cand)
        vocab = topic_vocab[topic]
        title_idx = rng.integers(0, len(vocab), size=int(rng.integers(5, 9)))
        title = " ".join(vocab[int(i)] for i in title_idx)
        abs_len = int(rng.integers(25, 45))
        abstract_words = []
        for _ in range(abs_len):
            if rng.random() < 0.8:
                abstract_words.append(vocab[int(rng.integers(0, len(vocab)))])
            else:
                abstract_words.append(_GLOBAL_WORDS[int(rng.integers(0, len(_GLOBAL_WORDS)))])
        age = spec.year_max - year
        citations = int(rng.lognormal(mean=0.5 + 0.25 * age, sigma=1.0))
        return {
            "paper_id": pid,
            "title": title,
            "abstract": " ".join(abstract_words),
            "year": year,
            "venue": venues[int(rng.integers(0, len(venues)))],
            "citation_count": citations,
            "author_ids": [author_ids[m] for m in members],
            "dataset_ids": [],
        }

    papers: list[dict] = []
    years_span = spec.year_max - spec.year_min
    for i in range(spec.n_papers):
        topic = int(rng.integers(0, n_topics))
        lead = sample_author(topic)
        # skew publication years toward the recent end
        year = spec.year_min + int(years_span * math.sqrt(rng.random()))
        papers.append(make_paper(f"P{i:07d}", lead, topic, year))

    # coverage pass: top up the guaranteed fraction of authors so they pass
    # the default activity filter
    n_guaranteed = int(round(spec.coverage * spec.n_authors))
    pub_years: dict[int, list[int]] = {i: [] for i in range(spec.n_authors)}
    for p in papers:
        for aid in p["author_ids"]:
            pub_years[int(aid[1:])].append(p["year"])
    extra = 0
    for a in range(n_guaranteed):
        have = pub_years[a]
        need_recent = not any(y >= 2020 for y in have)
        need_count = max(0, 2 - len(have)) or (1 if need_recent else 0)
        for j in range(max(need_count, 1 if need_recent else 0)):
            year = int(rng.integers(2020, spec.year_max + 1)) if (need_recent or j == 0) else int(
                rng.integers(spec.year_min, spec.year_max + 1)
            )
            pid = f"P{spec.n_papers + extra:07d}"
            papers.append(make_paper(pid, a, int(author_topic[a]), year))
            pub_years[a].append(year)
            extra += 1

    # coverage papers pull in co-authors too; rebuild the year map so every
    # author's career start is derived from their true earliest paper
    pub_years = {i: [] for i in range(spec.n_authors)}
    for p in papers:
        for aid in p["author_ids"]:
            pub_years[int(aid[1:])].append(p["year"])

    # --- datasets: topic-affine usage ---------------------------------------
    dataset_ids = [f"D{i:05d}" for i in range(spec.n_datasets)]
    dataset_topic = rng.integers(0, n_topics, size=max(spec.n_datasets, 1))
    dataset_pop = rng.pareto(1.5, size=max(spec.n_datasets, 1)) + 0.3
    datasets = []
    for i in range(spec.n_datasets):
        vocab = topic_vocab[int(dataset_topic[i])]
        datasets.append(
            {
                "dataset_id": dataset_ids[i],
                "name": f"{_word(rng, 2).capitalize()} {vocab[int(rng.integers(0, len(vocab)))].capitalize()} Dataset",
                "description": " ".join(vocab[int(j)] for j in rng.integers(0, len(vocab), size=12)),
            }
        )
    if spec.n_datasets:
        by_topic_ds: dict[int, list[int]] = {}
        for i in range(spec.n_datasets):
            by_topic_ds.setdefault(int(dataset_topic[i]), []).append(i)
        for p in papers:
            if rng.random() >= 0.45:
                continue
            topic_guess = int(rng.integers(0, n_topics))
            pool = by_topic_ds.get(topic_guess)
            if not pool:
                pool = list(range(spec.n_datasets))
            w = dataset_pop[pool]
            cum = np.cumsum(w) / w.sum()
            pick = pool[min(int(np.searchsorted(cum, float(rng.random()))), len(pool) - 1)]
            ids = {dataset_ids[pick]}
            if rng.random() < 0.15:
                ids.add(dataset_ids[int(rng.integers(0, spec.n_datasets))])
            p["dataset_ids"] = sorted(ids)

    # --- author records ------------------------------------------------------
    authors = []
    for i, aid in enumerate(author_ids):
        years = pub_years[i]
        row = {"author_id": aid, "name": names[i], "affiliation": affiliations[int(author_affil[i])]}
        if years and rng.random() < 0.7:
            row["career_start_year"] = int(min(years) - int(rng.integers(0, 4)))
        authors.append(row)

    # --- bio entities ----------------------------------------------------------
    bio_rows = []
    for i in range(spec.n_bio_entities):
        eid = f"B{i:05d}"
        name = _word(rng, 2).upper() + str(int(rng.integers(1, 99)))
        if rng.random() < 0.1:
            vocab = topic_vocab[int(rng.integers(0, n_topics))]
            text = " ".join(vocab[int(j)] for j in rng.integers(0, len(vocab), size=10))
            emb = pseudo_embed(text, dim=EMBEDDING_DIM, seed=spec.embed_seed)
            bio_rows.append({"entity_id": eid, "name": name, "embedding": [round(float(v), 6) for v in emb]})
        else:
            bio_rows.append(
                {
                    "entity_id": eid,
                    "name": name,
                    "x": round(float(rng.uniform(-30, 30)), 4),
                    "y": round(float(rng.uniform(-30, 30)), 4),
                }
            )

    # --- paper embeddings from the planted-topic text -------------------------
    matrix = np.empty((len(papers), EMBEDDING_DIM), dtype=np.float32)
    for i, p in enumerate(papers):
        matrix[i] = pseudo_embed(p["title"] + " " + p["abstract"], dim=EMBEDDING_DIM, seed=spec.embed_seed)
    store = EmbeddingStore([p["paper_id"] for p in papers], matrix)

    write_jsonl(out / "papers.jsonl", papers)
    write_jsonl(out / "authors.jsonl", authors)
    write_jsonl(out / "datasets.jsonl", datasets)
    if bio_rows:
        write_jsonl(out / "bio_entities.jsonl", bio_rows)
    store.save(out / "embeddings.f32")

    return {
        "papers": len(papers),
        "authors": spec.n_authors,
        "datasets": spec.n_datasets,
        "bio_entities": spec.n_bio_entities,
        "topics": n_topics,
        "seed": spec.seed,
    }
