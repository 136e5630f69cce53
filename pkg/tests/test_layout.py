from __future__ import annotations

import math

import numpy as np
import pytest

from talentkg.corpus import load_corpus
from talentkg.errors import ContractViolation, ValidationError
from talentkg.layout import (
    NodeView,
    load_node_views,
    make_node_views,
    node_size,
    reduce_to_2d,
    save_node_views,
    trustworthiness,
)

from conftest import author, dataset, paper, random_unit_rows, write_corpus_dir


def _planted_clusters(n_per=100, k=3, noise=0.08, seed=7, dim=768):
    rng = np.random.default_rng(seed)
    centers = rng.normal(size=(k, dim))
    centers /= np.linalg.norm(centers, axis=1, keepdims=True)
    vectors, labels = {}, {}
    for c in range(k):
        for i in range(n_per):
            v = centers[c] + noise * rng.normal(size=dim)
            key = f"n{c}_{i:03d}"
            vectors[key] = v / np.linalg.norm(v)
            labels[key] = c
    return vectors, labels


# ---------------------------------------------------------------------------
# PCA mode
# ---------------------------------------------------------------------------


def test_pca_recovers_intrinsically_2d_input():
    rng = np.random.default_rng(1)
    points = rng.normal(size=(60, 2))
    high = np.zeros((60, 768))
    high[:, 0] = points[:, 0]
    high[:, 1] = points[:, 1]
    result = reduce_to_2d({f"p{i:02d}": high[i] for i in range(60)}, method="pca")
    coords = np.array([result.coordinates[f"p{i:02d}"] for i in range(60)])
    d_orig = np.sqrt(((points[:, None] - points[None, :]) ** 2).sum(-1))
    d_new = np.sqrt(((coords[:, None] - coords[None, :]) ** 2).sum(-1))
    assert np.abs(d_orig - d_new).max() <= 1e-6


def test_pca_rotated_plane_preserves_distances():
    rng = np.random.default_rng(2)
    points = rng.normal(size=(40, 2))
    basis, _ = np.linalg.qr(rng.normal(size=(768, 2)))  # random orthonormal plane
    high = points @ basis.T
    result = reduce_to_2d({f"p{i:02d}": high[i] for i in range(40)}, method="pca")
    coords = np.array([result.coordinates[f"p{i:02d}"] for i in range(40)])
    d_orig = np.sqrt(((points[:, None] - points[None, :]) ** 2).sum(-1))
    d_new = np.sqrt(((coords[:, None] - coords[None, :]) ** 2).sum(-1))
    assert np.abs(d_orig - d_new).max() <= 1e-6


def test_pca_identical_vectors_coincide():
    v = random_unit_rows(1, seed=3)[0]
    result = reduce_to_2d({f"p{i}": v for i in range(5)}, method="pca")
    coords = np.array(list(result.coordinates.values()))
    assert np.allclose(coords, coords[0], atol=1e-9)


def test_fewer_than_two_vectors_rejected():
    with pytest.raises(ContractViolation):
        reduce_to_2d({"only": random_unit_rows(1)[0]}, method="pca")


def test_non_finite_input_rejected():
    bad = random_unit_rows(2, seed=4)
    bad[1, 5] = np.nan
    with pytest.raises(ValidationError):
        reduce_to_2d({"a": bad[0], "b": bad[1]}, method="pca")


def test_unknown_method_rejected():
    vecs = {f"p{i}": random_unit_rows(3, seed=5)[i] for i in range(3)}
    with pytest.raises(ContractViolation):
        reduce_to_2d(vecs, method="tsne")


# ---------------------------------------------------------------------------
# neighbor embedding mode
# ---------------------------------------------------------------------------


def test_neighbor_embedding_cluster_quality():
    vectors, labels = _planted_clusters()
    result = reduce_to_2d(vectors, method="neighbor_embedding", seed=3)
    assert result.trustworthiness >= 0.80

    ids = sorted(vectors)
    coords = np.array([result.coordinates[i] for i in ids])
    lab = np.array([labels[i] for i in ids])
    d = np.sqrt(((coords[:, None] - coords[None, :]) ** 2).sum(-1))
    same = lab[:, None] == lab[None, :]
    off_diag = ~np.eye(len(ids), dtype=bool)
    within = d[same & off_diag].mean()
    cross = d[~same].mean()
    assert within < cross


def test_neighbor_embedding_bitwise_deterministic():
    vectors, _ = _planted_clusters(n_per=40)
    a = reduce_to_2d(vectors, method="neighbor_embedding", seed=9)
    b = reduce_to_2d(vectors, method="neighbor_embedding", seed=9)
    assert a.coordinates == b.coordinates


def test_neighbor_embedding_seed_changes_layout():
    vectors, _ = _planted_clusters(n_per=30)
    a = reduce_to_2d(vectors, method="neighbor_embedding", seed=1)
    b = reduce_to_2d(vectors, method="neighbor_embedding", seed=2)
    assert a.coordinates != b.coordinates


def test_all_coordinates_finite(synth_corpus_dir):
    from talentkg.corpus import load_paper_embeddings
    from talentkg.embedding import build_author_embeddings

    corpus = load_corpus(synth_corpus_dir)
    store = load_paper_embeddings(synth_corpus_dir)
    authors_store, _ = build_author_embeddings(corpus, store)
    vectors = {aid: authors_store[aid] for aid in authors_store.ids}
    result = reduce_to_2d(vectors, method="neighbor_embedding", seed=0, n_epochs=50)
    coords = np.array(list(result.coordinates.values()))
    assert np.isfinite(coords).all()


# ---------------------------------------------------------------------------
# trustworthiness
# ---------------------------------------------------------------------------


def test_trustworthiness_identity_projection_is_one():
    rng = np.random.default_rng(6)
    points = rng.normal(size=(50, 2))
    high = {f"p{i}": np.concatenate([points[i], np.zeros(10)]) for i in range(50)}
    low = {f"p{i}": (float(points[i, 0]), float(points[i, 1])) for i in range(50)}
    assert trustworthiness(high, low, k=10) == pytest.approx(1.0)


def test_trustworthiness_shuffled_scores_below_true_layout():
    rng = np.random.default_rng(7)
    points = rng.normal(size=(100, 2))
    high = {f"p{i}": np.concatenate([points[i], np.zeros(5)]) for i in range(100)}
    low_true = {f"p{i}": (float(points[i, 0]), float(points[i, 1])) for i in range(100)}
    perm = rng.permutation(100)
    low_shuffled = {f"p{i}": low_true[f"p{perm[i]}"] for i in range(100)}
    t_true = trustworthiness(high, low_true, k=10)
    t_shuffled = trustworthiness(high, low_shuffled, k=10)
    assert t_shuffled < t_true


def test_trustworthiness_equidistant_ties_score_one():
    # three points at the corners of an equilateral triangle in both spaces
    high = {
        "a": np.array([0.0, 0.0]),
        "b": np.array([1.0, 0.0]),
        "c": np.array([0.5, math.sqrt(3) / 2]),
    }
    low = {"a": (0.0, 0.0), "b": (1.0, 0.0), "c": (0.5, math.sqrt(3) / 2)}
    assert trustworthiness(high, low, k=1) == pytest.approx(1.0)


def test_trustworthiness_matches_sklearn_on_continuous_data():
    from sklearn.manifold import trustworthiness as sk_trust

    rng = np.random.default_rng(8)
    high_m = rng.normal(size=(80, 20))
    low_m = rng.normal(size=(80, 2))
    high = {f"p{i:02d}": high_m[i] for i in range(80)}
    low = {f"p{i:02d}": (float(low_m[i, 0]), float(low_m[i, 1])) for i in range(80)}
    ids = sorted(high)
    ours = trustworthiness(high, low, k=7)
    theirs = float(sk_trust(high_m, low_m, n_neighbors=7))
    assert ours == pytest.approx(theirs, abs=1e-9)


def test_trustworthiness_k_bounds():
    high = {f"p{i}": np.array([float(i), 0.0]) for i in range(5)}
    low = {f"p{i}": (float(i), 0.0) for i in range(5)}
    with pytest.raises(ContractViolation):
        trustworthiness(high, low, k=5)
    with pytest.raises(ContractViolation):
        trustworthiness(high, low, k=0)


def test_trustworthiness_id_mismatch_rejected():
    with pytest.raises(ContractViolation):
        trustworthiness({"a": np.zeros(3)}, {"b": (0.0, 0.0)}, k=1)


# ---------------------------------------------------------------------------
# node sizes and views
# ---------------------------------------------------------------------------


def test_node_size_zero_publications_is_floor():
    assert node_size(0) == 2.0


def test_node_size_formula_value():
    # direct evaluation of size = s_min + s_scale * ln(1 + count) at count=2
    expected = 2.0 + 1.5 * math.log(3)
    assert node_size(2) == pytest.approx(expected)
    assert round(node_size(2), 3) == 3.648


def test_node_size_strictly_increasing():
    sizes = [node_size(c) for c in range(0, 200)]
    assert all(a < b for a, b in zip(sizes, sizes[1:]))


def test_node_size_negative_rejected():
    with pytest.raises(ContractViolation):
        node_size(-1)


def _views_fixture(tmp_path):
    root = write_corpus_dir(
        tmp_path / "c",
        papers=[
            paper("P1", ["A1"], year=2021, datasets=["D1"]),
            paper("P2", ["A1"], year=2022, datasets=["D1"]),
        ],
        authors=[author("A1", name="Ada One")],
        datasets=[dataset("D1", name="Screening Set")],
        bio_entities=[
            {"entity_id": "B1", "name": "GENE1", "x": 4.5, "y": -2.25},
            {"entity_id": "B2", "name": "GENE2", "embedding": [1.0] + [0.0] * 767},
        ],
    )
    return load_corpus(root)


def test_make_node_views_kinds_and_sizes(tmp_path):
    corpus = _views_fixture(tmp_path)
    vectors = {
        "A1": random_unit_rows(1, seed=9)[0],
        "D1": random_unit_rows(1, seed=10)[0],
        "B2": random_unit_rows(1, seed=11)[0],
    }
    layout = reduce_to_2d(vectors, method="pca")
    views = {v.node_id: v for v in make_node_views(corpus, layout)}
    assert len(views) == 4
    assert views["A1"].kind == "author" and views["A1"].shape == "circle"
    assert views["D1"].kind == "dataset" and views["D1"].shape == "square"
    assert views["B1"].shape == "square"
    assert views["A1"].size == pytest.approx(node_size(2))
    assert views["D1"].publication_count == 2  # linked papers
    # precomputed bio position passes through untouched
    assert (views["B1"].x, views["B1"].y) == (4.5, -2.25)
    assert views["A1"].career_start_year == 2021


def test_make_node_views_skips_unplaced_nodes(tmp_path, caplog):
    corpus = _views_fixture(tmp_path)
    vectors = {"A1": random_unit_rows(1, seed=12)[0], "D1": random_unit_rows(1, seed=13)[0]}
    layout = reduce_to_2d(vectors, method="pca")  # B2 embedding never laid out
    import logging

    with caplog.at_level(logging.WARNING):
        views = make_node_views(corpus, layout)
    assert {v.node_id for v in views} == {"A1", "D1", "B1"}
    assert any("lack both embedding and position" in r.message for r in caplog.records)


def test_views_file_round_trip(tmp_path):
    views = [
        NodeView("A1", "author", 0.5, -1.5, 3.0, 7, 2018, "Ada One"),
        NodeView("D1", "dataset", 2.0, 2.0, 2.5, 3, None, "Screening Set"),
    ]
    save_node_views(views, tmp_path / "layout.jsonl")
    loaded = load_node_views(tmp_path / "layout.jsonl")
    assert loaded == views
