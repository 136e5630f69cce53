"""Co-authorship network: neighbors, mutual co-authors, shortest paths.

Edges are unweighted; two authors are linked iff they share at least one
paper. Distances reported anywhere in the system are hop counts on this
graph. Path tie-breaking is deterministic: among all minimum-hop paths the
lexicographically smallest id sequence wins.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import Corpus
from .errors import NotFoundError
from .ioutil import read_jsonl, write_jsonl


@dataclass
class CoauthorGraph:
    adjacency: dict[str, set[str]] = field(default_factory=dict)
    edge_papers: dict[tuple[str, str], set[str]] = field(default_factory=dict)

    def __contains__(self, author_id: str) -> bool:
        return author_id in self.adjacency

    def _check(self, author_id: str) -> None:
        if author_id not in self.adjacency:
            raise NotFoundError(f"author not in graph: {author_id}")

    def neighbors(self, author_id: str) -> set[str]:
        self._check(author_id)
        return self.adjacency[author_id]


def build_coauthor_graph(corpus: Corpus) -> CoauthorGraph:
    """Clique-per-paper construction over the corpus's retained authors.

    External (filtered-out) author ids never become graph nodes.
    """
    graph = CoauthorGraph(adjacency={aid: set() for aid in corpus.authors})
    for pid in sorted(corpus.papers):
        members = [a for a in corpus.papers[pid].author_ids if a in corpus.authors]
        for i in range(len(members)):
            for j in range(i + 1, len(members)):
                a, b = members[i], members[j]
                graph.adjacency[a].add(b)
                graph.adjacency[b].add(a)
                key = (a, b) if a < b else (b, a)
                graph.edge_papers.setdefault(key, set()).add(pid)
    return graph


def shortest_path(
    graph: CoauthorGraph, from_id: str, to_id: str, max_depth: int | None = None
) -> list[str] | None:
    """Minimum-hop path between two authors, endpoints included.

    Returns None when disconnected or farther than max_depth. BFS runs from
    the target, then the path is rebuilt greedily from the source by always
    stepping to the smallest-id neighbor one hop closer, which yields the
    lexicographically smallest minimal path.
    """
    graph._check(from_id)
    graph._check(to_id)
    if from_id == to_id:
        return [from_id]

    dist = {to_id: 0}
    queue = deque([to_id])
    while queue:
        node = queue.popleft()
        d = dist[node]
        if node == from_id:
            break
        if max_depth is not None and d >= max_depth:
            continue
        for nb in graph.adjacency[node]:
            if nb not in dist:
                dist[nb] = d + 1
                queue.append(nb)
    if from_id not in dist:
        return None

    path = [from_id]
    current = from_id
    while current != to_id:
        step = dist[current] - 1
        current = min(nb for nb in graph.adjacency[current] if dist.get(nb) == step)
        path.append(current)
    return path


def mutual_coauthors(graph: CoauthorGraph, a: str, b: str) -> set[str]:
    graph._check(a)
    graph._check(b)
    return (graph.adjacency[a] & graph.adjacency[b]) - {a, b}


def collaborator_set(graph: CoauthorGraph, author_id: str) -> set[str]:
    return set(graph.neighbors(author_id))


def neighbors_within(graph: CoauthorGraph, author_id: str, depth: int) -> set[str]:
    """All authors within `depth` hops, excluding the author itself."""
    graph._check(author_id)
    seen = {author_id}
    frontier = {author_id}
    for _ in range(depth):
        frontier = {nb for node in frontier for nb in graph.adjacency[node]} - seen
        if not frontier:
            break
        seen |= frontier
    return seen - {author_id}


def save_graph(graph: CoauthorGraph, path: Path) -> None:
    rows = []
    for (a, b) in sorted(graph.edge_papers):
        rows.append({"a": a, "b": b, "papers": sorted(graph.edge_papers[(a, b)])})
    write_jsonl(path, rows)


def load_graph(path: Path, node_ids: list[str]) -> CoauthorGraph:
    """Rebuild a graph from its edge file; node_ids supplies isolated nodes."""
    graph = CoauthorGraph(adjacency={aid: set() for aid in node_ids})
    for _, row in read_jsonl(path):
        a, b = row["a"], row["b"]
        graph.adjacency.setdefault(a, set()).add(b)
        graph.adjacency.setdefault(b, set()).add(a)
        graph.edge_papers[(a, b) if a < b else (b, a)] = set(row["papers"])
    return graph
