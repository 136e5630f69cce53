"""HTTP JSON API over an immutable snapshot.

All routes live under /api/v1. Read endpoints only touch snapshot state and
can run fully concurrently; mutable state (chat sessions, feedback, the
justification cache) is guarded separately, and turns within one session
are serialized. In mock-LLM mode every response body is byte-stable across
identical request sequences (timestamps come from a logical counter).
"""

from __future__ import annotations

import hashlib
import itertools
import json
import logging
import os
import time
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse, Response

from ..agents.llm import HTTPLLMClient, LLMTransportError, MockLLMClient
from ..agents.pipeline import (
    AuthorContext,
    ChatSession,
    JustificationCache,
    PipelineError,
    TeamingDeps,
    build_author_context,
    justify_recommendation,
    record_feedback,
    run_teaming_chat,
)
from ..config import Config
from ..embedding import make_pseudo_embedder
from ..errors import ContractViolation, NotFoundError
from ..graphnet import collaborator_set, shortest_path
from .sessions import SessionStore
from .snapshot import Snapshot
from .spatial import Quadtree

log = logging.getLogger(__name__)

_ALL_KINDS = ("author", "dataset", "bio_entity")
_SEARCH_KINDS = ("author", "dataset")


@dataclass
class _NodeField:
    """Vectorized view columns plus the quadtree, built once at startup."""

    ids: list[str]
    xs: np.ndarray
    ys: np.ndarray
    sizes: np.ndarray
    pubs: np.ndarray
    career: np.ndarray  # nan where not an author
    kind_code: np.ndarray  # 0 author, 1 dataset, 2 bio_entity
    payloads: list[dict]
    payload_json: list[str]  # pre-serialized fragments for the hot path
    decimation_rank: np.ndarray  # position in (size desc, id asc) order
    rank_to_index: np.ndarray  # inverse permutation of decimation_rank
    tree: Quadtree
    search_rows: list[tuple[str, str, str, int]] = field(default_factory=list)  # lower name, id, kind, pubs
    search_names: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype="U1"))
    search_pubs: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    search_ids: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype="U1"))
    search_kinds: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int8))


def _build_node_field(snapshot: Snapshot) -> _NodeField:
    views = snapshot.views
    n = len(views)
    ids = [v.node_id for v in views]
    xs = np.array([v.x for v in views], dtype=np.float64)
    ys = np.array([v.y for v in views], dtype=np.float64)
    sizes = np.array([v.size for v in views], dtype=np.float64)
    pubs = np.array([v.publication_count for v in views], dtype=np.int64)
    career = np.array(
        [v.career_start_year if (v.kind == "author" and v.career_start_year is not None) else np.nan for v in views],
        dtype=np.float64,
    )
    kind_code = np.array([_ALL_KINDS.index(v.kind) for v in views], dtype=np.int8)
    payloads = [
        {
            "node_id": v.node_id,
            "kind": v.kind,
            "x": float(v.x),
            "y": float(v.y),
            "size": float(v.size),
            "publication_count": int(v.publication_count),
            "career_start_year": v.career_start_year,
            "name": v.name,
        }
        for v in views
    ]
    payload_json = [json.dumps(p, ensure_ascii=False, separators=(",", ":")) for p in payloads]
    order = np.lexsort((np.array(ids), -sizes))
    rank = np.empty(n, dtype=np.int64)
    rank[order] = np.arange(n)
    tree = Quadtree(xs, ys, sizes)
    search_rows = [
        (v.name.lower(), v.node_id, v.kind, v.publication_count)
        for v in views
        if v.kind in _SEARCH_KINDS
    ]
    # fixed-width arrays let one np.char.find call scan every name in C
    search_names = np.array([row[0] for row in search_rows])
    search_pubs = np.array([row[3] for row in search_rows], dtype=np.int64)
    search_ids = np.array([row[1] for row in search_rows])
    search_kinds = np.array([0 if row[2] == "author" else 1 for row in search_rows], dtype=np.int8)
    return _NodeField(
        ids, xs, ys, sizes, pubs, career, kind_code, payloads, payload_json, rank, order, tree,
        search_rows, search_names, search_pubs, search_ids, search_kinds,
    )


def _bad_request(detail: str) -> HTTPException:
    return HTTPException(status_code=400, detail=detail)


def _parse_kinds(raw: str | None, allowed: tuple[str, ...]) -> list[str]:
    if not raw:
        return list(allowed)
    kinds = [k.strip() for k in raw.split(",") if k.strip()]
    for k in kinds:
        if k not in _ALL_KINDS:
            raise _bad_request(f"unknown node kind: {k}")
    return [k for k in kinds if k in allowed]


def _parse_int(raw: str | None, name: str) -> int | None:
    if raw is None or raw == "":
        return None
    try:
        return int(raw)
    except ValueError as exc:
        raise _bad_request(f"{name} must be an integer") from exc


def create_app(
    snapshot: Snapshot,
    config: Config | None = None,
    mock_llm: bool = False,
    session_store: SessionStore | None = None,
    justify_cache: JustificationCache | None = None,
) -> FastAPI:
    config = config or Config()
    nodes = _build_node_field(snapshot)
    sessions = session_store or SessionStore(":memory:")
    cache = justify_cache if justify_cache is not None else JustificationCache()

    endpoint_configured = bool(os.environ.get(config.llm_endpoint_env))
    if mock_llm or not endpoint_configured:
        if not mock_llm:
            log.warning("no LLM endpoint configured (%s); serving with the deterministic mock", config.llm_endpoint_env)
        llm_a = MockLLMClient(persona_seed=0, name="mock-a")
        llm_b = MockLLMClient(persona_seed=1, name="mock-b")
        tick = itertools.count()
        clock = lambda: float(next(tick))  # noqa: E731 - logical clock for reproducibility
    else:
        llm_a = HTTPLLMClient(
            model=os.environ.get(config.llm_model_a_env, "model-a"),
            endpoint_env=config.llm_endpoint_env,
            api_key_env=config.llm_api_key_env,
        )
        model_b = os.environ.get(config.llm_model_b_env)
        llm_b = (
            HTTPLLMClient(
                model=model_b,
                endpoint_env=config.llm_endpoint_env,
                api_key_env=config.llm_api_key_env,
            )
            if model_b
            else None
        )
        clock = time.time

    deps = TeamingDeps(
        corpus=snapshot.corpus,
        graph=snapshot.graph,
        author_index=snapshot.author_index,
        embedder=make_pseudo_embedder(seed=config.embed_seed),
        llm_a=llm_a,
        llm_b=llm_b,
        config=config,
        clock=clock,
        justify_cache=cache,
    )

    app = FastAPI(title="talentkg", version=snapshot.version, docs_url=None, redoc_url=None)
    app.state.snapshot = snapshot
    app.state.config = config
    app.state.deps = deps
    api = "/api/v1"

    # ------------------------------------------------------------------ nodes

    @app.get(api + "/nodes")
    def query_viewport(request: Request):
        params = request.query_params
        bbox = params.get("bbox")
        if not bbox:
            raise _bad_request("bbox=x_min,y_min,x_max,y_max is required")
        try:
            x0, y0, x1, y1 = (float(p) for p in bbox.split(","))
        except ValueError as exc:
            raise _bad_request("bbox must be four comma-separated numbers") from exc
        if not (np.isfinite([x0, y0, x1, y1]).all() and x1 > x0 and y1 > y0):
            raise _bad_request("bbox is degenerate")
        kinds = _parse_kinds(params.get("kinds"), _ALL_KINDS)
        pubs_min = _parse_int(params.get("pubs_min"), "pubs_min")
        pubs_max = _parse_int(params.get("pubs_max"), "pubs_max")
        career_min = _parse_int(params.get("career_min"), "career_min")
        career_max = _parse_int(params.get("career_max"), "career_max")
        limit = _parse_int(params.get("limit"), "limit")
        if limit is None:
            limit = config.viewport_default_limit
        if limit <= 0 or limit > config.viewport_limit_cap:
            raise _bad_request(f"limit must be in [1, {config.viewport_limit_cap}]")

        idx = nodes.tree.query(x0, y0, x1, y1)
        if len(idx):
            mask = np.ones(len(idx), dtype=bool)
            if set(kinds) != set(_ALL_KINDS):
                codes = np.array([_ALL_KINDS.index(k) for k in kinds], dtype=np.int8)
                mask &= np.isin(nodes.kind_code[idx], codes)
            if pubs_min is not None:
                mask &= nodes.pubs[idx] >= pubs_min
            if pubs_max is not None:
                mask &= nodes.pubs[idx] <= pubs_max
            # career range applies to author nodes; other kinds pass through
            if career_min is not None:
                career = nodes.career[idx]
                mask &= (nodes.kind_code[idx] != 0) | (~np.isnan(career) & (career >= career_min))
            if career_max is not None:
                career = nodes.career[idx]
                mask &= (nodes.kind_code[idx] != 0) | (~np.isnan(career) & (career <= career_max))
            idx = idx[mask]

        total = int(len(idx))
        decimated = total > limit
        if decimated:
            # keep the most salient nodes: largest size first, then id order
            keep = np.sort(nodes.decimation_rank[idx])[:limit]
            chosen = nodes.rank_to_index[keep]
        else:
            chosen = idx
        # node payloads are immutable per snapshot, so the body is assembled
        # from pre-serialized fragments; this keeps big viewports cheap
        frags = nodes.payload_json
        body = (
            '{"nodes":[' + ",".join(frags[i] for i in chosen) + "],"
            f'"total_matched":{total},"returned":{len(chosen)},'
            f'"decimated":{"true" if decimated else "false"}}}'
        )
        return Response(content=body, media_type="application/json")

    # ----------------------------------------------------------------- search

    @app.get(api + "/search")
    def search_nodes(request: Request):
        params = request.query_params
        query = (params.get("q") or "").strip().lower()
        kinds = set(_parse_kinds(params.get("kinds"), _SEARCH_KINDS))
        limit = _parse_int(params.get("limit"), "limit")
        if limit is None:
            limit = config.search_limit
        if limit <= 0:
            raise _bad_request("limit must be positive")
        # search covers authors and datasets; other requested kinds match nothing
        if not query or not kinds or len(nodes.search_names) == 0:
            return {"results": []}
        positions = np.char.find(nodes.search_names, query)
        mask = positions >= 0
        if kinds != set(_SEARCH_KINDS):
            code = 0 if kinds == {"author"} else 1
            mask &= nodes.search_kinds == code
        rows = np.flatnonzero(mask)
        if len(rows) == 0:
            return {"results": []}
        order = np.lexsort((nodes.search_ids[rows], -nodes.search_pubs[rows], positions[rows]))
        results = []
        for row in rows[order[:limit]]:
            node_id = str(nodes.search_ids[row])
            view = snapshot.view_by_id[node_id]
            results.append(
                {
                    "node_id": node_id,
                    "name": view.name,
                    "kind": "author" if nodes.search_kinds[row] == 0 else "dataset",
                    "publication_count": int(view.publication_count),
                    "match_position": int(positions[row]),
                }
            )
        return {"results": results}

    # ------------------------------------------------------------ node detail

    def _author_context_cached(author_id: str) -> AuthorContext:
        return build_author_context(author_id, snapshot.corpus)

    @app.get(api + "/node/{node_id}")
    def get_node(node_id: str):
        corpus = snapshot.corpus
        detail_url = f"{api}/node/{node_id}"
        if node_id in corpus.authors:
            author = corpus.authors[node_id]
            return {
                "kind": "author",
                "node_id": node_id,
                "name": author.name,
                "affiliation": author.affiliation,
                "career_start_year": author.career_start_year,
                "publication_count": author.publication_count,
                "has_embedding": node_id in snapshot.author_index,
                "detail_url": detail_url,
            }
        if node_id in corpus.datasets:
            ds = corpus.datasets[node_id]
            return {
                "kind": "dataset",
                "node_id": node_id,
                "name": ds.name,
                "description": ds.description,
                "user_paper_count": len(ds.user_paper_ids),
                "has_embedding": bool(snapshot.dataset_index and node_id in snapshot.dataset_index),
                "detail_url": detail_url,
            }
        if node_id in corpus.bio_entities:
            entity = corpus.bio_entities[node_id]
            return {
                "kind": "bio_entity",
                "node_id": node_id,
                "name": entity.name,
                "has_embedding": entity.embedding is not None,
                "has_position": entity.position_2d is not None,
                "detail_url": detail_url,
            }
        raise HTTPException(status_code=404, detail=f"unknown node id: {node_id}")

    # -------------------------------------------------------- recommendations

    @app.get(api + "/node/{node_id}/recommendations")
    def get_recommendations(node_id: str, kind: str | None = None, justify: str | None = None):
        entry = snapshot.recommendations.get(node_id)
        if entry is None:
            raise HTTPException(status_code=404, detail=f"no precomputed recommendations for {node_id}")
        rec_kind, recs = entry
        if kind is not None and kind != rec_kind:
            raise _bad_request(f"node {node_id} has '{rec_kind}' recommendations, not '{kind}'")
        rows = []
        for rec in recs:
            view_name = ""
            author = snapshot.corpus.authors.get(rec.candidate_id)
            if author:
                view_name = author.name
            rows.append(
                {
                    "candidate_id": rec.candidate_id,
                    "name": view_name,
                    "score": round(float(rec.score), 8),
                    "rank": rec.rank,
                }
            )
        payload = {"query_id": node_id, "kind": rec_kind, "recommendations": rows}
        if justify:
            if justify not in {r.candidate_id for r in recs}:
                raise _bad_request(f"{justify} is not a recommended candidate for {node_id}")
            if rec_kind == "collaborators":
                contexts = {
                    node_id: _author_context_cached(node_id),
                    justify: _author_context_cached(justify),
                }
                subject = ("collab", node_id, justify)
            else:
                ds = snapshot.corpus.datasets[node_id]
                contexts = {
                    node_id: {"name": ds.name, "description": ds.description},
                    justify: _author_context_cached(justify),
                }
                subject = ("dataset", node_id, justify)
            try:
                text = justify_recommendation(subject, contexts, deps.llm_a, cache=cache)
            except LLMTransportError as exc:
                raise HTTPException(status_code=503, detail=str(exc)) from exc
            payload["justification"] = {"candidate_id": justify, "text": text}
        return payload

    # ---------------------------------------------------------- collaborators

    @app.get(api + "/node/{node_id}/collaborators")
    def get_collaborator_highlights(node_id: str):
        try:
            collaborators = collaborator_set(snapshot.graph, node_id)
        except NotFoundError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        return {"author_id": node_id, "collaborator_ids": sorted(collaborators)}

    # ------------------------------------------------------------------- path

    @app.get(api + "/path")
    def get_path(request: Request):
        params = request.query_params
        from_id, to_id = params.get("from"), params.get("to")
        if not from_id or not to_id:
            raise _bad_request("both from= and to= are required")
        try:
            path = shortest_path(snapshot.graph, from_id, to_id, max_depth=config.path_depth_cap)
        except NotFoundError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        if path is None:
            return {
                "from": from_id,
                "to": to_id,
                "path": None,
                "distance": None,
                "reason": f"no path within depth cap {config.path_depth_cap}",
            }
        names = [snapshot.corpus.authors[a].name for a in path]
        return {"from": from_id, "to": to_id, "path": path, "names": names, "distance": len(path) - 1}

    # ---------------------------------------------------------------- teaming

    @app.post(api + "/teaming/{session_id}/message")
    async def post_teaming_message(session_id: str, request: Request):
        body = await request.json()
        message = (body.get("message") or "").strip()
        seed_paper_id = body.get("seed_paper_id")
        seed_paper = None
        if seed_paper_id:
            seed_paper = snapshot.corpus.papers.get(seed_paper_id)
            if seed_paper is None:
                raise HTTPException(status_code=404, detail=f"unknown paper id: {seed_paper_id}")
        if not message and seed_paper is None:
            raise _bad_request("message must not be empty (or supply seed_paper_id)")

        lock = sessions.turn_lock(session_id)
        with lock:
            session = sessions.load(session_id)
            if session is None:
                author_id = body.get("author_id")
                if author_id is not None and author_id not in snapshot.corpus.authors:
                    raise HTTPException(status_code=404, detail=f"unknown author id: {author_id}")
                digest = hashlib.blake2b(session_id.encode("utf-8"), digest_size=4).digest()
                session = ChatSession(
                    session_id=session_id,
                    author_id=author_id,
                    seed=config.seed + int.from_bytes(digest, "little"),
                    ab_mode=bool(body.get("ab_mode", False)),
                )
            try:
                run_teaming_chat(session, message, deps, seed_paper=seed_paper)
            except ContractViolation as exc:
                sessions.save(session)
                raise _bad_request(str(exc)) from exc
            except LLMTransportError as exc:
                sessions.save(session)
                raise HTTPException(status_code=503, detail=str(exc)) from exc
            except PipelineError as exc:
                sessions.save(session)
                raise HTTPException(status_code=502, detail=str(exc)) from exc
            sessions.save(session)

        def cand_payload(cand):
            return {
                "candidate_id": cand.candidate_id,
                "name": cand.name,
                "affiliation": cand.affiliation,
                "score": cand.score,
                "justification": cand.justification,
                "retrieval_score": round(float(cand.retrieval_score), 6),
                "shortest_path": cand.shortest_path,
                "mutual_coauthors": cand.mutual_coauthors,
                "distance": cand.distance,
            }

        ab_payload = None
        if session.ab_lists:
            ab_payload = {
                label: [cand_payload(c) for c in pair[1]] for label, pair in sorted(session.ab_lists.items())
            }
        return {
            "session_id": session_id,
            "query": session.last_query,
            "thoughts": session.last_thoughts,
            "candidates": [cand_payload(c) for c in session.last_ranked],
            "ab": ab_payload,
            "agent_text": session.history[-1].text,
            "history_length": len(session.history),
        }

    @app.post(api + "/teaming/{session_id}/feedback")
    async def post_feedback(session_id: str, request: Request):
        body = await request.json()
        preferred = body.get("preferred")
        lock = sessions.turn_lock(session_id)
        with lock:
            session = sessions.load(session_id)
            if session is None:
                raise HTTPException(status_code=404, detail=f"unknown session: {session_id}")
            try:
                entry = record_feedback(session, preferred, clock=clock)
            except ContractViolation as exc:
                raise HTTPException(status_code=409, detail=str(exc)) from exc
            sessions.save(session)
        return {
            "recorded": True,
            "preferred": entry["preferred"],
            "backbone": entry["backbone"],
            "overwrote": entry["overwrote"],
        }

    @app.get(api + "/teaming/{session_id}")
    def get_session(session_id: str):
        dump = sessions.dump(session_id)
        if dump is None:
            raise HTTPException(status_code=404, detail=f"unknown session: {session_id}")
        return dump

    # ------------------------------------------------------------------- meta

    @app.get(api + "/healthz")
    def healthz():
        return {"status": "ok", "snapshot": snapshot.version}

    @app.get(api + "/meta")
    def meta():
        stats = snapshot.manifest.stats
        return {
            "snapshot": snapshot.version,
            "counts": stats.get("counts", {}),
            "graph": stats.get("graph", {}),
            "layout": stats.get("layout", {}),
            "views": len(snapshot.views),
            "llm_backbones": [llm_a.name] + ([llm_b.name] if llm_b else []),
        }

    @app.exception_handler(NotFoundError)
    def not_found_handler(request: Request, exc: NotFoundError):
        return JSONResponse(status_code=404, content={"detail": str(exc)})

    return app
