from __future__ import annotations

import numpy as np
import pytest

from talentkg.agents.llm import AgentParseError, MockLLMClient, salient_tokens
from talentkg.agents.pipeline import (
    ChatSession,
    JustificationCache,
    PipelineError,
    TeamingDeps,
    build_author_context,
    detect_expertise_gap,
    justify_recommendation,
    record_feedback,
    rerank,
    retrieve_candidates,
    run_teaming_chat,
    transcript_text,
)
from talentkg.config import Config
from talentkg.corpus import load_corpus
from talentkg.embedding import make_pseudo_embedder, pseudo_embed
from talentkg.errors import ContractViolation, NotFoundError
from talentkg.graphnet import build_coauthor_graph, shortest_path
from talentkg.recommend import SimilarityIndex

from conftest import author, dataset, paper, write_corpus_dir


class CountingLLM:
    """Wraps a client and counts complete() calls (cache contract checks)."""

    def __init__(self, inner):
        self.inner = inner
        self.name = inner.name
        self.calls = 0

    def complete(self, prompt, temperature=0.0, seed=0, max_tokens=512):
        self.calls += 1
        return self.inner.complete(prompt, temperature=temperature, seed=seed, max_tokens=max_tokens)


class FailingLLM:
    name = "failing"

    def __init__(self, fail_for: set[str]):
        self.fail_for = fail_for

    def complete(self, prompt, temperature=0.0, seed=0, max_tokens=512):
        for marker in self.fail_for:
            if marker in prompt:
                return "garbled output with no envelope"
        return MockLLMClient().complete(prompt, temperature=temperature, seed=seed, max_tokens=max_tokens)


# ---------------------------------------------------------------------------
# author context
# ---------------------------------------------------------------------------


def _context_corpus(tmp_path, papers_rows):
    root = write_corpus_dir(
        tmp_path / "c",
        papers=papers_rows,
        authors=[author("A1", name="Lin Aba")],
        datasets=[],
    )
    return load_corpus(root)


def test_context_three_recent_papers_exhaust_cited_list(tmp_path):
    corpus = _context_corpus(
        tmp_path,
        [
            paper("P1", ["A1"], year=2018, citations=50),
            paper("P2", ["A1"], year=2020, citations=10),
            paper("P3", ["A1"], year=2022, citations=5),
        ],
    )
    ctx = build_author_context("A1", corpus)
    assert [p.paper_id for p in ctx.recent_papers] == ["P3", "P2", "P1"]
    assert ctx.cited_papers == []


def test_context_twelve_papers_matches_sort_oracle(tmp_path):
    rows = []
    rng = np.random.default_rng(1)
    for i in range(12):
        rows.append(
            paper(f"P{i:02d}", ["A1"], year=2017 + int(rng.integers(0, 8)), citations=int(rng.integers(0, 500)))
        )
    corpus = _context_corpus(tmp_path, rows)
    ctx = build_author_context("A1", corpus)

    # independent oracle over the raw rows
    recent_exp = sorted(rows, key=lambda r: (-r["year"], r["paper_id"]))[:5]
    recent_ids = [r["paper_id"] for r in recent_exp]
    cited_exp = sorted(
        (r for r in rows if r["paper_id"] not in recent_ids),
        key=lambda r: (-r["citation_count"], r["paper_id"]),
    )[:5]
    assert [p.paper_id for p in ctx.recent_papers] == recent_ids
    assert [p.paper_id for p in ctx.cited_papers] == [r["paper_id"] for r in cited_exp]
    assert len(ctx.recent_papers) == 5 and len(ctx.cited_papers) == 5
    assert not {p.paper_id for p in ctx.recent_papers} & {p.paper_id for p in ctx.cited_papers}


def test_context_falls_back_to_all_time_before_2017(tmp_path):
    corpus = _context_corpus(
        tmp_path,
        [
            paper("P1", ["A1"], year=2010, citations=100),
            paper("P2", ["A1"], year=2012, citations=300),
        ],
    )
    ctx = build_author_context("A1", corpus)
    assert [p.paper_id for p in ctx.recent_papers] == ["P2", "P1"]


def test_context_unknown_author(tmp_path):
    corpus = _context_corpus(tmp_path, [paper("P1", ["A1"], year=2020)])
    with pytest.raises(NotFoundError):
        build_author_context("A9", corpus)


# ---------------------------------------------------------------------------
# gap detection
# ---------------------------------------------------------------------------


def _some_context(tmp_path):
    corpus = _context_corpus(
        tmp_path,
        [paper("P1", ["A1"], year=2021, title="deep kernels for cell imaging", citations=12)],
    )
    return build_author_context("A1", corpus)


def test_gap_detection_deterministic(tmp_path):
    ctx = _some_context(tmp_path)
    llm = MockLLMClient()
    a = detect_expertise_gap(ctx, "interpretable genotype-phenotype machine learning", llm, seed=3)
    b = detect_expertise_gap(ctx, "interpretable genotype-phenotype machine learning", llm, seed=3)
    assert a == b


def test_gap_query_echoes_salient_need_tokens(tmp_path):
    ctx = _some_context(tmp_path)
    gap = detect_expertise_gap(ctx, "interpretable genotype-phenotype machine learning", MockLLMClient(), seed=0)
    tokens = set(gap.query_text.split())
    assert {"interpretable", "genotype-phenotype", "machine", "learning"} <= tokens
    assert gap.thoughts


def test_gap_requires_need_or_seed_paper(tmp_path):
    ctx = _some_context(tmp_path)
    with pytest.raises(ContractViolation):
        detect_expertise_gap(ctx, "   ", MockLLMClient(), seed=0)


def test_gap_paper_based_mode(tmp_path):
    corpus = _context_corpus(
        tmp_path, [paper("P1", ["A1"], year=2021, title="gene set function discovery", citations=3)]
    )
    ctx = build_author_context("A1", corpus)
    gap = detect_expertise_gap(ctx, "", MockLLMClient(), seed=0, seed_paper=corpus.papers["P1"])
    assert "gene" in gap.query_text


def test_gap_parse_failure_surfaces_raw_text(tmp_path):
    class Garbler:
        name = "garbler"

        def complete(self, prompt, temperature=0.0, seed=0, max_tokens=512):
            return "no envelope here"

    ctx = _some_context(tmp_path)
    with pytest.raises(AgentParseError) as exc_info:
        detect_expertise_gap(ctx, "anything at all", Garbler(), seed=0)
    assert "no envelope here" in exc_info.value.raw


def test_salient_tokens_drop_stopwords():
    assert salient_tokens("I want to collaborate with experts in graph learning") == [
        "graph",
        "learning",
    ]


# ---------------------------------------------------------------------------
# retrieval
# ---------------------------------------------------------------------------


def _single_paper_world(tmp_path, n=12):
    """Each author has one paper with a distinct planted phrase."""
    texts = {f"A{i:02d}": f"subject{i} special phrase number {i} about topic{i}" for i in range(n)}
    papers_rows = [
        paper(f"P{i:02d}", [f"A{i:02d}"], year=2021, title=texts[f"A{i:02d}"]) for i in range(n)
    ]
    root = write_corpus_dir(
        tmp_path / "c",
        papers=papers_rows,
        authors=[author(f"A{i:02d}") for i in range(n)],
        datasets=[],
    )
    corpus = load_corpus(root)
    vectors = {f"A{i:02d}": pseudo_embed(texts[f"A{i:02d}"]) for i in range(n)}
    index = SimilarityIndex(sorted(vectors), np.vstack([vectors[a] for a in sorted(vectors)]))
    return corpus, index, texts


def test_retrieval_exact_text_match_ranks_first(tmp_path):
    corpus, index, texts = _single_paper_world(tmp_path)
    from talentkg.agents.pipeline import GapQuery

    gap = GapQuery(query_text=texts["A05"], thoughts="t")
    out = retrieve_candidates(gap, make_pseudo_embedder(), index, exclude=set(), k=3)
    assert out[0].candidate_id == "A05"
    assert out[0].score == pytest.approx(1.0, abs=1e-6)


def test_retrieval_total_exclusion_empty(tmp_path):
    corpus, index, texts = _single_paper_world(tmp_path)
    from talentkg.agents.pipeline import GapQuery

    gap = GapQuery(query_text="anything", thoughts="t")
    out = retrieve_candidates(gap, make_pseudo_embedder(), index, exclude=set(index.ids), k=5)
    assert out == []


def test_retrieval_pool_matches_brute_force(tmp_path):
    corpus, index, texts = _single_paper_world(tmp_path, n=100)
    from talentkg.agents.pipeline import GapQuery

    gap = GapQuery(query_text="special phrase number 42 about topic42", thoughts="t")
    embedder = make_pseudo_embedder()
    got = retrieve_candidates(gap, embedder, index, exclude={"A000"}, k=25)

    q = embedder(gap.query_text)
    rows = []
    for aid in index.ids:
        if aid == "A000":
            continue
        v = index.vector(aid)
        rows.append((aid, float(np.dot(v, q))))
    rows.sort(key=lambda r: (-r[1], r[0]))
    assert [r.candidate_id for r in got] == [r[0] for r in rows[:25]]


# ---------------------------------------------------------------------------
# rerank
# ---------------------------------------------------------------------------


def _teaming_world(tmp_path, n=50, seed=2):
    rng = np.random.default_rng(seed)
    authors_rows = [author(f"A{i:02d}", name=f"Res Earcher{i:02d}") for i in range(n)]
    papers_rows = []
    pid = 0
    for i in range(n):
        for _ in range(int(rng.integers(1, 4))):
            coauthors = [f"A{i:02d}"]
            if rng.random() < 0.6:
                other = int(rng.integers(0, n))
                if other != i:
                    coauthors.append(f"A{other:02d}")
            papers_rows.append(
                paper(
                    f"P{pid:03d}",
                    coauthors,
                    year=2017 + int(rng.integers(0, 8)),
                    title=f"study {pid} of theme{int(rng.integers(0, 6))}",
                    citations=int(rng.integers(0, 200)),
                )
            )
            pid += 1
    root = write_corpus_dir(tmp_path / "c", papers=papers_rows, authors=authors_rows, datasets=[])
    corpus = load_corpus(root)
    graph = build_coauthor_graph(corpus)
    vectors = {
        aid: pseudo_embed(" ".join(corpus.papers[p].title for p in corpus.papers_by_author[aid]))
        for aid in corpus.authors
    }
    index = SimilarityIndex(sorted(vectors), np.vstack([vectors[a] for a in sorted(vectors)]))
    return corpus, graph, index


def test_rerank_order_preserving_under_mock(tmp_path):
    corpus, graph, index = _teaming_world(tmp_path)
    from talentkg.agents.pipeline import GapQuery

    gap = GapQuery(query_text="theme3 study methods", thoughts="t")
    pool = retrieve_candidates(gap, make_pseudo_embedder(), index, exclude=set(), k=10)
    contexts = {r.candidate_id: build_author_context(r.candidate_id, corpus) for r in pool}
    ranked = rerank(gap, pool, contexts, MockLLMClient(), top_n=10)
    # mock scores are monotone in retrieval score, so ordering must match
    assert [r.candidate_id for r in ranked] == [r.candidate_id for r in pool]
    assert all(0 <= r.score <= 100 for r in ranked)
    assert all(r.justification for r in ranked)


def test_rerank_truncates_to_top_n(tmp_path):
    corpus, graph, index = _teaming_world(tmp_path)
    from talentkg.agents.pipeline import GapQuery

    gap = GapQuery(query_text="theme1", thoughts="t")
    pool = retrieve_candidates(gap, make_pseudo_embedder(), index, exclude=set(), k=25)
    contexts = {r.candidate_id: build_author_context(r.candidate_id, corpus) for r in pool}
    ranked = rerank(gap, pool, contexts, MockLLMClient(), top_n=5)
    assert len(ranked) == 5


def test_rerank_enrichment_matches_graph_oracle(tmp_path):
    corpus, graph, index = _teaming_world(tmp_path)
    from talentkg.agents.pipeline import GapQuery

    requester = "A00"
    gap = GapQuery(query_text="theme2 theme4 study", thoughts="t")
    pool = retrieve_candidates(gap, make_pseudo_embedder(), index, exclude={requester}, k=15)
    contexts = {r.candidate_id: build_author_context(r.candidate_id, corpus) for r in pool}
    ranked = rerank(gap, pool, contexts, MockLLMClient(), graph=graph, requester_id=requester, top_n=15)
    for cand in ranked:
        path = shortest_path(graph, requester, cand.candidate_id)
        if path is None:
            assert cand.distance is None and cand.shortest_path is None
        else:
            assert cand.shortest_path == path
            assert cand.distance == len(path) - 1


def test_rerank_drops_failing_candidates(tmp_path):
    corpus, graph, index = _teaming_world(tmp_path)
    from talentkg.agents.pipeline import GapQuery

    gap = GapQuery(query_text="theme0", thoughts="t")
    pool = retrieve_candidates(gap, make_pseudo_embedder(), index, exclude=set(), k=6)
    contexts = {r.candidate_id: build_author_context(r.candidate_id, corpus) for r in pool}
    victim = pool[2].candidate_id
    ranked = rerank(gap, pool, contexts, FailingLLM({f"CANDIDATE_ID: {victim}"}), top_n=10)
    assert victim not in {r.candidate_id for r in ranked}
    assert len(ranked) == len(pool) - 1


def test_rerank_all_failures_is_pipeline_error(tmp_path):
    corpus, graph, index = _teaming_world(tmp_path)
    from talentkg.agents.pipeline import GapQuery

    gap = GapQuery(query_text="theme0", thoughts="t")
    pool = retrieve_candidates(gap, make_pseudo_embedder(), index, exclude=set(), k=4)
    contexts = {r.candidate_id: build_author_context(r.candidate_id, corpus) for r in pool}
    with pytest.raises(PipelineError):
        rerank(gap, pool, contexts, FailingLLM({"CANDIDATE_ID:"}), top_n=5)


def test_rerank_drops_candidates_exceeding_call_timeout(tmp_path):
    import time as _time

    from talentkg.agents.pipeline import AuthorContext, GapQuery
    from talentkg.recommend import Recommendation

    class SlowLLM:
        name = "slow"

        def complete(self, prompt, temperature=0.0, seed=0, max_tokens=512):
            if "CANDIDATE_ID: C1" in prompt:
                _time.sleep(1.5)
            return MockLLMClient().complete(prompt, seed=seed)

    contexts = {f"C{i}": AuthorContext(f"C{i}", f"Name{i}", "Inst", [], []) for i in range(3)}
    pool = [Recommendation(f"C{i}", 0.9 - i * 0.1, i + 1) for i in range(3)]
    ranked = rerank(
        GapQuery("q tokens", "t"), pool, contexts, SlowLLM(), top_n=5, parallelism=3, call_timeout=0.4
    )
    assert [c.candidate_id for c in ranked] == ["C0", "C2"]


def test_rerank_parallel_equals_serial(tmp_path):
    corpus, graph, index = _teaming_world(tmp_path)
    from talentkg.agents.pipeline import GapQuery

    gap = GapQuery(query_text="theme5 methods", thoughts="t")
    pool = retrieve_candidates(gap, make_pseudo_embedder(), index, exclude=set(), k=12)
    contexts = {r.candidate_id: build_author_context(r.candidate_id, corpus) for r in pool}
    serial = rerank(gap, pool, contexts, MockLLMClient(), top_n=12, parallelism=1)
    parallel = rerank(gap, pool, contexts, MockLLMClient(), top_n=12, parallelism=4)
    assert serial == parallel


# ---------------------------------------------------------------------------
# justifications
# ---------------------------------------------------------------------------


def _justify_fixture(tmp_path):
    root = write_corpus_dir(
        tmp_path / "c",
        papers=[
            paper("P1", ["A1"], year=2020, title="network models of disease", citations=10),
            paper("P2", ["A2"], year=2021, title="deep feature atlases", citations=4),
        ],
        authors=[author("A1", name="Po Raso"), author("A2", name="Vi Keda")],
        datasets=[dataset("D1", name="Perturb Atlas Set", description="perturbation screens")],
    )
    return load_corpus(root)


def test_dataset_justification_mentions_dataset_name(tmp_path):
    corpus = _justify_fixture(tmp_path)
    contexts = {
        "D1": {"name": "Perturb Atlas Set", "description": "perturbation screens"},
        "A2": build_author_context("A2", corpus),
    }
    text = justify_recommendation(("dataset", "D1", "A2"), contexts, MockLLMClient())
    assert "Perturb Atlas Set" in text
    again = justify_recommendation(("dataset", "D1", "A2"), contexts, MockLLMClient())
    assert text == again  # deterministic


def test_collab_justification_mentions_candidate_title(tmp_path):
    corpus = _justify_fixture(tmp_path)
    contexts = {"A1": build_author_context("A1", corpus), "A2": build_author_context("A2", corpus)}
    text = justify_recommendation(("collab", "A1", "A2"), contexts, MockLLMClient())
    assert "deep feature atlases" in text


def test_justification_survives_parenthetical_titles(tmp_path):
    root = write_corpus_dir(
        tmp_path / "c",
        papers=[
            paper("P1", ["A1"], year=2020, title="screening maps", citations=1),
            paper("P2", ["A2"], year=2021, title="atlas models (phase II) of tissue", citations=9),
        ],
        authors=[author("A1", name="Po Raso"), author("A2", name="Vi Keda")],
        datasets=[],
    )
    corpus = load_corpus(root)
    contexts = {"A1": build_author_context("A1", corpus), "A2": build_author_context("A2", corpus)}
    text = justify_recommendation(("collab", "A1", "A2"), contexts, MockLLMClient())
    assert "atlas models (phase II) of tissue" in text


def test_justification_cache_bypasses_client(tmp_path):
    corpus = _justify_fixture(tmp_path)
    contexts = {"A1": build_author_context("A1", corpus), "A2": build_author_context("A2", corpus)}
    counting = CountingLLM(MockLLMClient())
    cache = JustificationCache()
    first = justify_recommendation(("collab", "A1", "A2"), contexts, counting, cache=cache)
    assert counting.calls == 1
    second = justify_recommendation(("collab", "A1", "A2"), contexts, counting, cache=cache)
    assert counting.calls == 1  # served from cache
    assert first == second


def test_justification_cache_persists_to_file(tmp_path):
    corpus = _justify_fixture(tmp_path)
    contexts = {"A1": build_author_context("A1", corpus), "A2": build_author_context("A2", corpus)}
    path = tmp_path / "cache.json"
    cache = JustificationCache(path)
    text = justify_recommendation(("collab", "A1", "A2"), contexts, MockLLMClient(), cache=cache)
    reloaded = JustificationCache(path)
    counting = CountingLLM(MockLLMClient())
    assert justify_recommendation(("collab", "A1", "A2"), contexts, counting, cache=reloaded) == text
    assert counting.calls == 0


# ---------------------------------------------------------------------------
# chat sessions
# ---------------------------------------------------------------------------


def _deps(tmp_path, ab=False):
    corpus, graph, index = _teaming_world(tmp_path)
    tick = iter(range(10_000))
    return TeamingDeps(
        corpus=corpus,
        graph=graph,
        author_index=index,
        embedder=make_pseudo_embedder(),
        llm_a=MockLLMClient(persona_seed=0, name="mock-a"),
        llm_b=MockLLMClient(persona_seed=1, name="mock-b") if ab else None,
        config=Config(rerank_pool=10, rerank_top_n=3),
        clock=lambda: float(next(tick)),
    )


def test_chat_turn_appends_user_and_agent(tmp_path):
    deps = _deps(tmp_path)
    session = ChatSession(session_id="s1", author_id="A00", seed=7)
    run_teaming_chat(session, "need theme1 expertise for collaboration", deps)
    assert [t.role for t in session.history] == ["user", "agent"]
    assert session.last_query
    assert session.last_ranked


def test_chat_transcript_deterministic(tmp_path):
    transcripts = []
    for _ in range(2):
        deps = _deps(tmp_path)
        session = ChatSession(session_id="s1", author_id="A00", seed=7)
        run_teaming_chat(session, "need theme1 expertise for collaboration", deps)
        run_teaming_chat(session, "also methods for theme4 analysis", deps)
        transcripts.append(transcript_text(session))
    assert transcripts[0] == transcripts[1]
    assert "[Start of Thoughts]" in transcripts[0]


def test_chat_exclusion_never_returns_requester_or_coauthors(tmp_path):
    deps = _deps(tmp_path)
    for trial in range(10):
        requester = f"A{trial:02d}"
        session = ChatSession(session_id=f"s{trial}", author_id=requester, seed=trial)
        run_teaming_chat(session, f"find theme{trial % 6} collaborators", deps)
        forbidden = {requester} | deps.graph.adjacency.get(requester, set())
        for cand in session.last_ranked:
            assert cand.candidate_id not in forbidden


def test_chat_ab_mode_reproducible_assignment(tmp_path):
    labels = []
    for _ in range(2):
        deps = _deps(tmp_path, ab=True)
        session = ChatSession(session_id="ab", author_id="A01", seed=99, ab_mode=True)
        run_teaming_chat(session, "seeking theme2 modelling expertise", deps)
        labels.append({k: v[0] for k, v in session.ab_lists.items()})
        assert set(session.ab_lists) == {"A", "B"}
    assert labels[0] == labels[1]  # same session seed, same blind assignment


def test_chat_ab_lists_can_differ(tmp_path):
    deps = _deps(tmp_path, ab=True)
    session = ChatSession(session_id="ab", author_id="A01", seed=5, ab_mode=True)
    run_teaming_chat(session, "seeking theme2 modelling expertise", deps)
    a_scores = [c.score for c in session.ab_lists["A"][1]]
    b_scores = [c.score for c in session.ab_lists["B"][1]]
    assert a_scores and b_scores  # both backbones answered


def test_vote_recorded_and_revote_audited(tmp_path):
    deps = _deps(tmp_path, ab=True)
    session = ChatSession(session_id="ab", author_id="A01", seed=5, ab_mode=True)
    run_teaming_chat(session, "seeking theme2 modelling expertise", deps)
    tick = iter(range(100))
    record_feedback(session, "A", clock=lambda: float(next(tick)))
    assert session.preference == "A"
    record_feedback(session, "B", clock=lambda: float(next(tick)))
    assert session.preference == "B"
    assert len(session.vote_audit) == 2
    assert session.vote_audit[1]["overwrote"] == "A"


def test_vote_without_ab_turn_rejected(tmp_path):
    deps = _deps(tmp_path)
    session = ChatSession(session_id="s1", author_id="A00", seed=7)
    run_teaming_chat(session, "need theme1 expertise", deps)
    with pytest.raises(ContractViolation):
        record_feedback(session, "A")


def test_pipeline_error_recorded_in_history(tmp_path):
    deps = _deps(tmp_path)
    session = ChatSession(session_id="s1", author_id="A00", seed=7)
    with pytest.raises(ContractViolation):
        run_teaming_chat(session, "   ", deps)
    assert session.history[-1].role == "error"


def test_anonymous_session_works(tmp_path):
    deps = _deps(tmp_path)
    session = ChatSession(session_id="anon", author_id=None, seed=1)
    run_teaming_chat(session, "looking for theme3 specialists", deps)
    assert session.last_ranked
    assert all(c.distance is None for c in session.last_ranked)


def test_chat_reports_no_eligible_candidates(tmp_path):
    # an author connected to every other author has an all-covering exclusion
    rows = [paper("P0", [f"A{i:02d}" for i in range(8)], year=2021, title="joint megapaper")]
    for i in range(8):
        rows.append(paper(f"P{i+1}", [f"A{i:02d}"], year=2022, title=f"solo {i}"))
    root = write_corpus_dir(
        tmp_path / "c", papers=rows, authors=[author(f"A{i:02d}") for i in range(8)], datasets=[]
    )
    corpus = load_corpus(root)
    graph = build_coauthor_graph(corpus)
    vectors = {aid: pseudo_embed(f"text {aid}") for aid in corpus.authors}
    index = SimilarityIndex(sorted(vectors), np.vstack([vectors[a] for a in sorted(vectors)]))
    deps = TeamingDeps(
        corpus=corpus,
        graph=graph,
        author_index=index,
        embedder=make_pseudo_embedder(),
        llm_a=MockLLMClient(),
        config=Config(rerank_pool=5, rerank_top_n=3),
        clock=lambda: 0.0,
    )
    session = ChatSession(session_id="full", author_id="A00", seed=1)
    run_teaming_chat(session, "anything at all really", deps)
    assert session.last_ranked == []
    assert "No eligible candidates" in session.history[-1].text


def test_out_of_range_score_drops_candidate(tmp_path):
    class OverScorer:
        name = "overscorer"

        def __init__(self, victim):
            self.victim = victim

        def complete(self, prompt, temperature=0.0, seed=0, max_tokens=512):
            if f"CANDIDATE_ID: {self.victim}" in prompt:
                return "SCORE: 150\nJUSTIFICATION: way too enthusiastic"
            return MockLLMClient().complete(prompt, temperature=temperature, seed=seed, max_tokens=max_tokens)

    corpus, graph, index = _teaming_world(tmp_path)
    from talentkg.agents.pipeline import GapQuery

    gap = GapQuery(query_text="theme2", thoughts="t")
    pool = retrieve_candidates(gap, make_pseudo_embedder(), index, exclude=set(), k=6)
    contexts = {r.candidate_id: build_author_context(r.candidate_id, corpus) for r in pool}
    victim = pool[1].candidate_id
    ranked = rerank(gap, pool, contexts, OverScorer(victim), top_n=10)
    assert victim not in {r.candidate_id for r in ranked}
    assert all(0 <= r.score <= 100 for r in ranked)
