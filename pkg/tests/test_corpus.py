from __future__ import annotations

import numpy as np
import pytest

from talentkg.corpus import (
    EmbeddingStore,
    derive_inverses,
    filter_authors,
    load_corpus,
    load_paper_embeddings,
    save_corpus,
)
from talentkg.errors import LoadError, ValidationError

from conftest import author, dataset, paper, write_corpus_dir


def test_empty_directory_reports_missing_papers_file(tmp_path):
    with pytest.raises(LoadError, match="papers.jsonl not found"):
        load_corpus(tmp_path)


def test_three_paper_fixture_round_trips(tmp_path):
    write_corpus_dir(
        tmp_path / "c",
        papers=[
            paper("P1", ["A1", "A2"], year=2020, datasets=["D1"]),
            paper("P2", ["A2"], year=2021),
            paper("P3", ["A1", "A3"], year=2022, datasets=["D1"]),
        ],
        authors=[author("A1"), author("A2"), author("A3")],
        datasets=[dataset("D1")],
    )
    corpus = load_corpus(tmp_path / "c")
    assert len(corpus.papers) == 3
    assert corpus.authors["A1"].publication_count == 2
    assert corpus.datasets["D1"].user_paper_ids == ["P1", "P3"]


def test_dangling_author_reference_names_the_id(tmp_path):
    write_corpus_dir(
        tmp_path / "c",
        papers=[paper("P1", ["A1", "A9"])],
        authors=[author("A1")],
        datasets=[],
    )
    with pytest.raises(ValidationError, match="A9"):
        load_corpus(tmp_path / "c")


def test_malformed_line_reports_line_number(tmp_path):
    root = write_corpus_dir(
        tmp_path / "c",
        papers=[paper("P1", ["A1"]), paper("P2", ["A1"])],
        authors=[author("A1")],
        datasets=[],
    )
    lines = (root / "papers.jsonl").read_text().splitlines()
    lines.insert(1, "{this is not json")
    (root / "papers.jsonl").write_text("\n".join(lines) + "\n")
    with pytest.raises(LoadError, match="line 2"):
        load_corpus(root)


def test_year_out_of_range_rejected(tmp_path):
    write_corpus_dir(
        tmp_path / "c",
        papers=[paper("P1", ["A1"], year=1850)],
        authors=[author("A1")],
        datasets=[],
    )
    with pytest.raises(LoadError, match="year"):
        load_corpus(tmp_path / "c")


def test_duplicate_authors_in_byline_rejected(tmp_path):
    write_corpus_dir(
        tmp_path / "c",
        papers=[paper("P1", ["A1", "A1"])],
        authors=[author("A1")],
        datasets=[],
    )
    with pytest.raises(LoadError, match="duplicate author"):
        load_corpus(tmp_path / "c")


def test_career_start_year_after_first_publication_rejected(tmp_path):
    write_corpus_dir(
        tmp_path / "c",
        papers=[paper("P1", ["A1"], year=2010)],
        authors=[author("A1", career_start_year=2015)],
        datasets=[],
    )
    with pytest.raises(ValidationError, match="career_start_year"):
        load_corpus(tmp_path / "c")


def test_career_start_year_derived_from_first_publication(tmp_path):
    write_corpus_dir(
        tmp_path / "c",
        papers=[paper("P1", ["A1"], year=2012), paper("P2", ["A1"], year=2008)],
        authors=[author("A1")],
        datasets=[],
    )
    corpus = load_corpus(tmp_path / "c")
    assert corpus.authors["A1"].career_start_year == 2008


# ---------------------------------------------------------------------------
# filter_authors
# ---------------------------------------------------------------------------


def _filter_fixture(tmp_path):
    return write_corpus_dir(
        tmp_path / "c",
        papers=[
            paper("P1", ["A1"], year=2022),                      # A1: 1 pub
            paper("P2", ["A2", "A3"], year=2019),                # A2: 5 pubs, none recent
            paper("P3", ["A2"], year=2018),
            paper("P4", ["A2"], year=2017),
            paper("P5", ["A2"], year=2016),
            paper("P6", ["A2"], year=2015),
            paper("P7", ["A3"], year=2021),                      # A3: 2 pubs, one 2021
        ],
        authors=[author("A1"), author("A2"), author("A3")],
        datasets=[],
    )


def test_filter_removes_single_publication_author(tmp_path):
    corpus = filter_authors(load_corpus(_filter_fixture(tmp_path)))
    assert "A1" not in corpus.authors
    assert "A1" in corpus.external_author_ids


def test_filter_removes_inactive_author(tmp_path):
    corpus = filter_authors(load_corpus(_filter_fixture(tmp_path)))
    assert "A2" not in corpus.authors  # five papers but latest 2019


def test_filter_retains_boundary_author(tmp_path):
    corpus = filter_authors(load_corpus(_filter_fixture(tmp_path)))
    assert "A3" in corpus.authors
    assert corpus.authors["A3"].publication_count == 2


def test_filter_preserves_author_positions(tmp_path):
    corpus = filter_authors(load_corpus(_filter_fixture(tmp_path)))
    assert corpus.papers["P2"].author_ids == ["A2", "A3"]  # removed id still listed


def test_filter_is_idempotent(tmp_path):
    once = filter_authors(load_corpus(_filter_fixture(tmp_path)))
    twice = filter_authors(once)
    assert set(once.authors) == set(twice.authors)
    assert once.external_author_ids == twice.external_author_ids


def test_filter_of_empty_corpus_is_empty(tmp_path):
    write_corpus_dir(tmp_path / "c", papers=[], authors=[], datasets=[])
    corpus = filter_authors(load_corpus(tmp_path / "c"))
    assert not corpus.authors and not corpus.papers


def test_filter_predicate_matches_brute_force_on_synth(synth_corpus):
    filtered = filter_authors(synth_corpus, min_pubs=2, active_since=2020)
    expected = set()
    for aid in synth_corpus.authors:
        pids = synth_corpus.papers_by_author.get(aid, [])
        years = [synth_corpus.papers[p].year for p in pids]
        if len(pids) >= 2 and any(y >= 2020 for y in years):
            expected.add(aid)
    assert set(filtered.authors) == expected


def test_post_filter_invariants(synth_corpus):
    filtered = filter_authors(synth_corpus, min_pubs=2, active_since=2020)
    for aid in filtered.authors:
        pids = filtered.papers_by_author[aid]
        assert len(pids) >= 2
        assert max(filtered.papers[p].year for p in pids) >= 2020


# ---------------------------------------------------------------------------
# derive_inverses
# ---------------------------------------------------------------------------


def test_derive_inverses_matches_brute_force_scan():
    rng = np.random.default_rng(3)
    author_ids = [f"A{i}" for i in range(25)]
    dataset_ids = [f"D{i}" for i in range(6)]
    papers = []
    for i in range(100):
        k = int(rng.integers(1, 5))
        byline = [author_ids[j] for j in rng.choice(25, size=k, replace=False)]
        used = [dataset_ids[j] for j in rng.choice(6, size=int(rng.integers(0, 3)), replace=False)]
        papers.append(paper(f"P{i:03d}", byline, year=2020, datasets=used))

    import pathlib
    import tempfile

    with tempfile.TemporaryDirectory() as tmp:
        root = write_corpus_dir(
            pathlib.Path(tmp) / "c",
            papers=papers,
            authors=[author(a) for a in author_ids],
            datasets=[dataset(d) for d in dataset_ids],
        )
        corpus = load_corpus(root)

    # brute-force oracle: rescan every paper record
    pub_count = {a: 0 for a in author_ids}
    users = {d: set() for d in dataset_ids}
    for p in papers:
        for a in p["author_ids"]:
            pub_count[a] += 1
        for d in p["dataset_ids"]:
            users[d].add(p["paper_id"])
    for a in author_ids:
        assert corpus.authors[a].publication_count == pub_count[a]
    for d in dataset_ids:
        assert set(corpus.datasets[d].user_paper_ids) == users[d]


def test_derive_inverses_idempotent(synth_corpus):
    before = {d: list(ds.user_paper_ids) for d, ds in synth_corpus.datasets.items()}
    derive_inverses(synth_corpus)
    after = {d: list(ds.user_paper_ids) for d, ds in synth_corpus.datasets.items()}
    assert before == after


def test_zero_publication_author_dropped_by_filter(tmp_path):
    write_corpus_dir(
        tmp_path / "c",
        papers=[paper("P1", ["A1"], year=2021), paper("P2", ["A1"], year=2022)],
        authors=[author("A1"), author("A2")],
        datasets=[],
    )
    corpus = load_corpus(tmp_path / "c")
    assert corpus.authors["A2"].publication_count == 0
    assert "A2" not in filter_authors(corpus).authors


# ---------------------------------------------------------------------------
# round trip + embeddings file
# ---------------------------------------------------------------------------


def test_save_load_is_fixed_point(synth_corpus, tmp_path):
    save_corpus(synth_corpus, tmp_path / "out")
    again = load_corpus(tmp_path / "out")
    assert set(again.papers) == set(synth_corpus.papers)
    assert set(again.authors) == set(synth_corpus.authors)
    for pid, p in synth_corpus.papers.items():
        assert again.papers[pid].author_ids == p.author_ids
        assert again.papers[pid].year == p.year
    # serialize once more: bytes must be identical (fixed point)
    save_corpus(again, tmp_path / "out2")
    for name in ("papers.jsonl", "authors.jsonl", "datasets.jsonl"):
        assert (tmp_path / "out" / name).read_bytes() == (tmp_path / "out2" / name).read_bytes()


def test_filtered_corpus_round_trips_with_external_ids(tmp_path):
    corpus = filter_authors(load_corpus(_filter_fixture(tmp_path)))
    save_corpus(corpus, tmp_path / "out")
    again = load_corpus(tmp_path / "out")
    assert set(again.authors) == set(corpus.authors)
    assert again.external_author_ids == corpus.external_author_ids


def test_embedding_store_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    ids = [f"P{i}" for i in range(7)]
    matrix = rng.normal(size=(7, 768)).astype(np.float32)
    EmbeddingStore(ids, matrix).save(tmp_path / "embeddings.f32")
    loaded = EmbeddingStore.load(tmp_path / "embeddings.f32")
    assert loaded.ids == ids
    assert np.array_equal(loaded.matrix, matrix)


def test_embedding_store_header_magic_checked(tmp_path):
    path = tmp_path / "embeddings.f32"
    path.write_bytes(b"NOTMAGIC" + b"\x00" * 8)
    (tmp_path / "embeddings.index.jsonl").write_text("")
    with pytest.raises(LoadError, match="bad magic"):
        EmbeddingStore.load(path)


def test_synth_corpus_has_full_embedding_coverage(synth_corpus_dir, synth_corpus):
    store = load_paper_embeddings(synth_corpus_dir)
    assert store is not None
    assert set(store.ids) == set(synth_corpus.papers)
    norms = np.linalg.norm(store.matrix.astype(np.float64), axis=1)
    assert np.allclose(norms, 1.0, atol=1e-5)
