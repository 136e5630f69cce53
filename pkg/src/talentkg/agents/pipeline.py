"""Expertise-gap teaming pipeline: detect gap, retrieve, rerank, justify.

Flow per chat turn: the gap-detection agent turns the user's profile plus
stated need into a retrieval query; the query is embedded and run against
the author index (excluding the requester and their co-authors); the
reranking agent scores each retrieved candidate 0-100 with a justification;
results are enriched with shortest path, mutual co-authors, and hop
distance from the co-authorship graph. With the mock client everything is a
pure function of (corpus snapshot, seed, inputs).
"""

from __future__ import annotations

import importlib.resources
import json
import re
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from concurrent.futures import TimeoutError as FuturesTimeoutError
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from ..config import Config
from ..corpus import Corpus, PaperRecord
from ..errors import ContractViolation, NotFoundError, TalentKGError
from ..graphnet import CoauthorGraph, mutual_coauthors, neighbors_within, shortest_path
from ..recommend import Recommendation, SimilarityIndex, search_by_vector
from .llm import AgentParseError, LLMClient, MockLLMClient

PROMPT_VERSION = "v1"

_templates: dict[str, str] = {}


def _template(name: str) -> str:
    if name not in _templates:
        ref = importlib.resources.files("talentkg.agents") / "prompts" / f"{name}.{PROMPT_VERSION}.txt"
        _templates[name] = ref.read_text(encoding="utf-8")
    return _templates[name]


class PipelineError(TalentKGError):
    """The whole teaming turn failed (e.g. every rerank call errored)."""


# ---------------------------------------------------------------------------
# author context
# ---------------------------------------------------------------------------


@dataclass
class AuthorContext:
    author_id: str
    name: str
    affiliation: str
    recent_papers: list[PaperRecord]
    cited_papers: list[PaperRecord]

    def profile_block(self) -> str:
        lines = []
        if self.recent_papers:
            lines.append("RECENT PAPERS:")
            lines.extend(_paper_line(p) for p in self.recent_papers)
        if self.cited_papers:
            lines.append("MOST CITED PAPERS:")
            lines.extend(_paper_line(p) for p in self.cited_papers)
        return "\n".join(lines) if lines else "(no publications on record)"


def _paper_line(p: PaperRecord) -> str:
    return f"- {p.title} ({p.venue}, {p.year}, {p.citation_count} citations)"


ANONYMOUS_CONTEXT = AuthorContext(
    author_id="", name="Guest researcher", affiliation="", recent_papers=[], cited_papers=[]
)


def build_author_context(
    author_id: str, corpus: Corpus, since: int = 2017, n_recent: int = 5, n_cited: int = 5
) -> AuthorContext:
    """Five most recent and five most cited papers since `since`.

    Recent takes precedence when a paper would qualify for both lists. When
    the author has nothing since `since` at all, both lists fall back to the
    author's all-time papers.
    """
    author = corpus.authors.get(author_id)
    if author is None:
        raise NotFoundError(f"unknown author id: {author_id}")
    papers = corpus.author_papers(author_id)
    eligible = [p for p in papers if p.year >= since]
    if not eligible:
        eligible = list(papers)
    recent = sorted(eligible, key=lambda p: (-p.year, p.paper_id))[:n_recent]
    recent_ids = {p.paper_id for p in recent}
    cited = sorted(
        (p for p in eligible if p.paper_id not in recent_ids),
        key=lambda p: (-p.citation_count, p.paper_id),
    )[:n_cited]
    return AuthorContext(
        author_id=author_id,
        name=author.name,
        affiliation=author.affiliation,
        recent_papers=recent,
        cited_papers=cited,
    )


# ---------------------------------------------------------------------------
# gap detection
# ---------------------------------------------------------------------------


@dataclass
class GapQuery:
    query_text: str
    thoughts: str


def _parse_gap_reply(raw: str) -> GapQuery:
    thoughts_m = re.search(r"^THOUGHTS:\s*(.*?)(?=^QUERY:|\Z)", raw, flags=re.MULTILINE | re.DOTALL)
    query_m = re.search(r"^QUERY:\s*(.+)$", raw, flags=re.MULTILINE)
    if not thoughts_m or not query_m or not query_m.group(1).strip():
        raise AgentParseError("gap reply missing THOUGHTS/QUERY fields", raw=raw)
    return GapQuery(query_text=query_m.group(1).strip(), thoughts=thoughts_m.group(1).strip())


def detect_expertise_gap(
    context: AuthorContext,
    user_need: str,
    llm: LLMClient,
    seed: int = 0,
    seed_paper: PaperRecord | None = None,
) -> GapQuery:
    """Turn (profile, need) into a retrieval query with a reasoning trace.

    Either a nonempty user_need or a seed_paper must be supplied; the
    paper-based mode asks for collaborators who would strengthen that paper.
    Parse failures are retried once with a shifted seed, then surfaced.
    """
    need = user_need.strip()
    if not need and seed_paper is not None:
        need = f'strengthen the recent paper titled "{seed_paper.title}"'
    if not need:
        raise ContractViolation("either a teaming need or a seed paper is required")
    prompt = _template("gap_detect").format(
        name=context.name,
        affiliation=context.affiliation or "(none)",
        profile_block=context.profile_block(),
        need=need,
    )
    try:
        return _parse_gap_reply(llm.complete(prompt, seed=seed))
    except AgentParseError:
        return _parse_gap_reply(llm.complete(prompt, seed=seed + 1))


# ---------------------------------------------------------------------------
# retrieval and reranking
# ---------------------------------------------------------------------------


def retrieve_candidates(
    gap: GapQuery,
    embedder: Callable[[str], np.ndarray],
    index: SimilarityIndex,
    exclude: set[str],
    k: int = 25,
) -> list[Recommendation]:
    return search_by_vector(embedder(gap.query_text), index, k, exclude=exclude)


@dataclass
class RankedCandidate:
    candidate_id: str
    name: str
    affiliation: str
    score: int
    justification: str
    retrieval_score: float
    shortest_path: list[str] | None = None
    mutual_coauthors: list[str] = field(default_factory=list)
    distance: int | None = None


def _parse_rerank_reply(raw: str) -> tuple[int, str]:
    score_m = re.search(r"^SCORE:\s*(-?\d+)\s*$", raw, flags=re.MULTILINE)
    just_m = re.search(r"^JUSTIFICATION:\s*(.+)$", raw, flags=re.MULTILINE | re.DOTALL)
    if not score_m or not just_m or not just_m.group(1).strip():
        raise AgentParseError("rerank reply missing SCORE/JUSTIFICATION", raw=raw)
    score = int(score_m.group(1))
    if not 0 <= score <= 100:
        raise AgentParseError(f"score {score} outside [0, 100]", raw=raw)
    return score, just_m.group(1).strip()


def _score_candidate(
    gap: GapQuery, rec: Recommendation, context: AuthorContext, llm: LLMClient, seed: int
) -> tuple[int, str]:
    prompt = _template("rerank").format(
        query=gap.query_text,
        candidate_id=rec.candidate_id,
        candidate_name=context.name,
        affiliation=context.affiliation or "(none)",
        retrieval_score=f"{rec.score:.4f}",
        profile_block=context.profile_block(),
    )
    try:
        return _parse_rerank_reply(llm.complete(prompt, seed=seed))
    except AgentParseError:
        return _parse_rerank_reply(llm.complete(prompt, seed=seed + 1))


def rerank(
    gap: GapQuery,
    pool: Sequence[Recommendation],
    contexts: dict[str, AuthorContext],
    llm: LLMClient,
    graph: CoauthorGraph | None = None,
    requester_id: str | None = None,
    top_n: int = 5,
    seed: int = 0,
    parallelism: int = 1,
    call_timeout: float = 60.0,
) -> list[RankedCandidate]:
    """Score and justify every pool candidate, keep the best top_n.

    Ordering: score desc, then retrieval score desc, then id. A candidate
    whose LLM call fails (after one retry) is dropped with a warning rather
    than failing the batch; if every candidate fails the turn fails.
    """
    if not pool:
        raise ContractViolation("rerank needs a nonempty candidate pool")

    def work(item: tuple[int, Recommendation]) -> tuple[int, tuple[int, str] | Exception]:
        i, rec = item
        try:
            return i, _score_candidate(gap, rec, contexts[rec.candidate_id], llm, seed + i)
        except Exception as exc:  # noqa: BLE001 - isolate per-candidate failures
            return i, exc

    items = list(enumerate(pool))
    results: dict[int, tuple[int, str] | Exception] = {}
    if parallelism > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=parallelism) as pool_exec:
            futures = {i: pool_exec.submit(work, item) for i, item in zip((i for i, _ in items), items)}
            for i, future in futures.items():
                try:
                    results[i] = future.result(timeout=call_timeout)[1]
                except FuturesTimeoutError as exc:
                    results[i] = exc
    else:
        results = {i: outcome for i, outcome in map(work, items)}

    scored: list[RankedCandidate] = []
    failures = 0
    for i, rec in items:
        outcome = results[i]
        if isinstance(outcome, Exception):
            failures += 1
            continue
        score, justification = outcome
        ctx = contexts[rec.candidate_id]
        scored.append(
            RankedCandidate(
                candidate_id=rec.candidate_id,
                name=ctx.name,
                affiliation=ctx.affiliation,
                score=score,
                justification=justification,
                retrieval_score=rec.score,
            )
        )
    if not scored:
        raise PipelineError(f"all {failures} rerank calls failed")

    scored.sort(key=lambda c: (-c.score, -c.retrieval_score, c.candidate_id))
    scored = scored[:top_n]

    if graph is not None and requester_id is not None and requester_id in graph:
        for cand in scored:
            if cand.candidate_id not in graph:
                continue
            path = shortest_path(graph, requester_id, cand.candidate_id)
            cand.shortest_path = path
            cand.distance = len(path) - 1 if path else None
            cand.mutual_coauthors = sorted(mutual_coauthors(graph, requester_id, cand.candidate_id))
    return scored


# ---------------------------------------------------------------------------
# pairwise justifications with a persistent cache
# ---------------------------------------------------------------------------


class JustificationCache:
    """Keyed file store; a cache hit never reaches the LLM client."""

    def __init__(self, path: str | Path | None = None):
        self.path = Path(path) if path else None
        self._data: dict[str, str] = {}
        self._lock = threading.Lock()
        if self.path and self.path.exists():
            self._data = json.loads(self.path.read_text(encoding="utf-8"))

    @staticmethod
    def key(kind: str, subject_id: str, candidate_id: str) -> str:
        return f"{kind}:{subject_id}:{candidate_id}:{PROMPT_VERSION}"

    def get(self, key: str) -> str | None:
        with self._lock:
            return self._data.get(key)

    def put(self, key: str, value: str) -> None:
        with self._lock:
            self._data[key] = value
            if self.path:
                self.path.write_text(
                    json.dumps(self._data, ensure_ascii=False, sort_keys=True, indent=0),
                    encoding="utf-8",
                )


def justify_recommendation(
    subject: tuple[str, str, str],
    contexts: dict[str, object],
    llm: LLMClient,
    cache: JustificationCache | None = None,
    seed: int = 0,
) -> str:
    """Generate (or fetch) the "why recommend" text for a linked pair.

    subject is (kind, subject_id, candidate_id) with kind "collab" (author
    pair) or "dataset" (dataset, prospective author). contexts must hold an
    AuthorContext per author id, plus name/description strings under the
    dataset id for dataset subjects. Mock output is checked to mention a
    context paper title or the dataset name.
    """
    kind, subject_id, candidate_id = subject
    cache_key = JustificationCache.key(kind, subject_id, candidate_id)
    if cache is not None:
        hit = cache.get(cache_key)
        if hit is not None:
            return hit

    if kind == "collab":
        subj_ctx: AuthorContext = contexts[subject_id]
        cand_ctx: AuthorContext = contexts[candidate_id]
        prompt = _template("justify_collab").format(
            subject_name=subj_ctx.name,
            subject_block=subj_ctx.profile_block(),
            candidate_name=cand_ctx.name,
            candidate_block=cand_ctx.profile_block(),
        )
        anchors = [p.title for p in cand_ctx.recent_papers + cand_ctx.cited_papers]
    elif kind == "dataset":
        ds = contexts[subject_id]  # {"name": ..., "description": ...}
        cand_ctx = contexts[candidate_id]
        prompt = _template("justify_dataset").format(
            dataset_name=ds["name"],
            description=ds["description"],
            researcher_name=cand_ctx.name,
            profile_block=cand_ctx.profile_block(),
        )
        anchors = [ds["name"]]
    else:
        raise ContractViolation(f"unknown justification kind: {kind}")

    text = llm.complete(prompt, seed=seed).strip()
    if not text:
        raise AgentParseError("empty justification", raw=text)
    if isinstance(llm, MockLLMClient) and anchors and not any(a and a in text for a in anchors):
        raise AgentParseError("mock justification does not reference the supplied context", raw=text)
    if cache is not None:
        cache.put(cache_key, text)
    return text


# ---------------------------------------------------------------------------
# chat sessions
# ---------------------------------------------------------------------------


@dataclass
class ChatTurn:
    role: str  # user | agent | error
    text: str
    timestamp: float


@dataclass
class ChatSession:
    session_id: str
    author_id: str | None = None
    seed: int = 0
    ab_mode: bool = False
    history: list[ChatTurn] = field(default_factory=list)
    last_query: str | None = None
    last_thoughts: str | None = None
    last_ranked: list[RankedCandidate] = field(default_factory=list)
    # blind label -> (backbone name, ranked list); populated in A/B turns
    ab_lists: dict[str, tuple[str, list[RankedCandidate]]] = field(default_factory=dict)
    preference: str | None = None
    vote_audit: list[dict] = field(default_factory=list)
    turn_count: int = 0


@dataclass
class TeamingDeps:
    corpus: Corpus
    graph: CoauthorGraph
    author_index: SimilarityIndex
    embedder: Callable[[str], np.ndarray]
    llm_a: LLMClient
    llm_b: LLMClient | None = None
    config: Config = field(default_factory=Config)
    clock: Callable[[], float] = time.time
    justify_cache: JustificationCache | None = None


GREETING = (
    "Hi! I am a scientific teaming assistant. Describe your teaming needs "
    "and I will suggest collaborators."
)


def _candidate_lines(ranked: Sequence[RankedCandidate], name_of=lambda a: a) -> list[str]:
    lines = []
    for i, cand in enumerate(ranked, start=1):
        lines.append(f"{i}: {cand.name} (Score: {cand.score})")
        if cand.affiliation:
            lines.append(f"   Affiliation: {cand.affiliation}")
        lines.append(f"   {cand.justification}")
        if cand.mutual_coauthors:
            lines.append("   Mutual Co-Authors: " + ", ".join(name_of(a) for a in cand.mutual_coauthors))
        if cand.distance is not None:
            lines.append(f"   Distance within the Co-Authorship Network: {cand.distance}")
    return lines


def _agent_turn_text(
    gap: GapQuery, ranked: Sequence[RankedCandidate], ab: dict | None, name_of=lambda a: a
) -> str:
    lines = [
        "Based on your request, I propose this search query:",
        gap.query_text,
        "",
        f"[Start of Thoughts] {gap.thoughts} [End of Thoughts]",
        "",
    ]
    if ab:
        for label in sorted(ab):
            lines.append(f"Model {label}:")
            lines.extend(_candidate_lines(ab[label][1], name_of))
            lines.append("")
        lines.append("Please vote for the list you prefer (A or B).")
    elif ranked:
        lines.append("Top recommended collaborators:")
        lines.extend(_candidate_lines(ranked, name_of))
    else:
        lines.append("No eligible candidates were found for this query.")
    return "\n".join(lines)


def run_teaming_chat(
    session: ChatSession, message: str, deps: TeamingDeps, seed_paper: PaperRecord | None = None
) -> ChatSession:
    """Run one full teaming turn and append it to the session history."""
    session.history.append(ChatTurn(role="user", text=message, timestamp=deps.clock()))
    session.turn_count += 1
    turn_seed = session.seed * 100003 + session.turn_count

    try:
        if session.author_id and session.author_id in deps.corpus.authors:
            context = build_author_context(session.author_id, deps.corpus)
        else:
            context = ANONYMOUS_CONTEXT
        gap = detect_expertise_gap(context, message, deps.llm_a, seed=turn_seed, seed_paper=seed_paper)

        exclude: set[str] = set()
        if session.author_id:
            exclude.add(session.author_id)
            if session.author_id in deps.graph:
                exclude |= neighbors_within(deps.graph, session.author_id, deps.config.exclusion_depth)
        pool = retrieve_candidates(
            gap, deps.embedder, deps.author_index, exclude, k=deps.config.rerank_pool
        )

        ranked: list[RankedCandidate] = []
        ab: dict[str, tuple[str, list[RankedCandidate]]] = {}
        if pool:
            contexts = {rec.candidate_id: build_author_context(rec.candidate_id, deps.corpus) for rec in pool}
            common = dict(
                gap=gap,
                pool=pool,
                contexts=contexts,
                graph=deps.graph,
                requester_id=session.author_id,
                top_n=deps.config.rerank_top_n,
                parallelism=deps.config.justify_parallelism,
            )
            if session.ab_mode and deps.llm_b is not None:
                list_a = rerank(llm=deps.llm_a, seed=turn_seed, **common)
                list_b = rerank(llm=deps.llm_b, seed=turn_seed, **common)
                # blind assignment: seeded coin decides which backbone shows as A
                flip = np.random.default_rng(turn_seed).integers(0, 2)
                pair = [(deps.llm_a.name, list_a), (deps.llm_b.name, list_b)]
                if flip:
                    pair.reverse()
                ab = {"A": pair[0], "B": pair[1]}
                ranked = pair[0][1]
            else:
                ranked = rerank(llm=deps.llm_a, seed=turn_seed, **common)

        session.last_query = gap.query_text
        session.last_thoughts = gap.thoughts
        session.last_ranked = ranked
        session.ab_lists = ab

        def name_of(author_id: str) -> str:
            rec = deps.corpus.authors.get(author_id)
            return rec.name if rec and rec.name else author_id

        session.history.append(
            ChatTurn(
                role="agent",
                text=_agent_turn_text(gap, ranked, ab or None, name_of),
                timestamp=deps.clock(),
            )
        )
        return session
    except TalentKGError as exc:
        session.history.append(
            ChatTurn(role="error", text=f"{type(exc).__name__}: {exc}", timestamp=deps.clock())
        )
        raise


def record_feedback(session: ChatSession, preferred: str, clock: Callable[[], float] = time.time) -> dict:
    """Store an A/B preference vote; re-voting overwrites with an audit row."""
    if preferred not in ("A", "B"):
        raise ContractViolation("preferred must be 'A' or 'B'")
    if not session.ab_lists:
        raise ContractViolation("session has no pending A/B comparison to vote on")
    entry = {
        "preferred": preferred,
        "backbone": session.ab_lists[preferred][0],
        "timestamp": clock(),
        "overwrote": session.preference,
    }
    session.preference = preferred
    session.vote_audit.append(entry)
    return entry


def transcript_text(session: ChatSession) -> str:
    """Deterministic render of the whole session (no timestamps)."""
    blocks = [f"[{session.session_id}] {GREETING}"]
    for turn in session.history:
        blocks.append(f"--- {turn.role} ---\n{turn.text}")
    return "\n".join(blocks) + "\n"
