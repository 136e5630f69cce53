"""Corpus loading, validation, and filtering.

On-disk layout of a corpus directory (all entity files line-delimited JSON):

    papers.jsonl        paper_id, title, abstract, year, venue,
                        citation_count, author_ids (ordered), dataset_ids
    authors.jsonl       author_id, name, affiliation, career_start_year?
    datasets.jsonl      dataset_id, name, description
    bio_entities.jsonl  entity_id, name, embedding? (array), x?, y?   (optional file)
    embeddings.f32      binary paper embedding matrix (see EmbeddingStore)
    embeddings.index.jsonl  sidecar mapping row -> id
    corpus_meta.json    external author ids kept in author lists after filtering

Authors removed by filter_authors stay in paper author lists as "external"
ids so that author positions, and hence positional weights, are unchanged
by filtering.
"""

from __future__ import annotations

import datetime
import json
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from . import EMBEDDING_DIM
from .errors import LoadError, NotFoundError, ValidationError
from .ioutil import canonical_json, read_jsonl, write_jsonl

YEAR_MIN = 1900

EMB_MAGIC = b"KGEMB1\x00\x00"
EMB_HEADER = struct.Struct("<8sII")  # magic, row count, dim


@dataclass
class PaperRecord:
    paper_id: str
    title: str
    abstract: str
    year: int
    venue: str
    citation_count: int
    author_ids: list[str]
    dataset_ids: list[str]


@dataclass
class AuthorRecord:
    author_id: str
    name: str
    affiliation: str
    career_start_year: int | None = None
    publication_count: int = 0  # derived; see derive_inverses


@dataclass
class DatasetRecord:
    dataset_id: str
    name: str
    description: str
    user_paper_ids: list[str] = field(default_factory=list)  # derived


@dataclass
class BioEntityRecord:
    entity_id: str
    name: str
    embedding: np.ndarray | None = None
    position_2d: tuple[float, float] | None = None


@dataclass
class Corpus:
    papers: dict[str, PaperRecord]
    authors: dict[str, AuthorRecord]
    datasets: dict[str, DatasetRecord]
    bio_entities: dict[str, BioEntityRecord]
    # author ids that appear in paper author lists but were filtered out of
    # `authors`; they keep their list positions but are not corpus entities
    external_author_ids: set[str] = field(default_factory=set)
    # reverse index, derived
    papers_by_author: dict[str, list[str]] = field(default_factory=dict)

    def author_papers(self, author_id: str) -> list[PaperRecord]:
        if author_id not in self.authors:
            raise NotFoundError(f"unknown author id: {author_id}")
        return [self.papers[pid] for pid in self.papers_by_author.get(author_id, [])]


# ---------------------------------------------------------------------------
# embeddings.f32
# ---------------------------------------------------------------------------


class EmbeddingStore:
    """Id-addressable matrix of float32 row vectors.

    File format: 16-byte header (magic "KGEMB1\\0\\0", u32 row count, u32 dim,
    little-endian) followed by row-major float32 data. A sidecar
    <name>.index.jsonl maps each row to its entity id.
    """

    def __init__(self, ids: list[str], matrix: np.ndarray):
        if matrix.ndim != 2 or matrix.shape[0] != len(ids):
            raise ValidationError("embedding matrix shape does not match id list")
        if len(set(ids)) != len(ids):
            raise ValidationError("duplicate ids in embedding store")
        self.ids = list(ids)
        self.matrix = np.ascontiguousarray(matrix, dtype=np.float32)
        self.row_of = {eid: i for i, eid in enumerate(self.ids)}

    def __len__(self) -> int:
        return len(self.ids)

    def __contains__(self, eid: str) -> bool:
        return eid in self.row_of

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[1])

    def get(self, eid: str) -> np.ndarray | None:
        row = self.row_of.get(eid)
        return None if row is None else self.matrix[row]

    def __getitem__(self, eid: str) -> np.ndarray:
        vec = self.get(eid)
        if vec is None:
            raise NotFoundError(f"no embedding for id: {eid}")
        return vec

    def save(self, path: Path) -> None:
        path = Path(path)
        with open(path, "wb") as fh:
            fh.write(EMB_HEADER.pack(EMB_MAGIC, len(self.ids), self.dim))
            fh.write(self.matrix.tobytes(order="C"))
        sidecar = path.with_name(path.stem + ".index.jsonl")
        write_jsonl(sidecar, ({"row": i, "id": eid} for i, eid in enumerate(self.ids)))

    @classmethod
    def load(cls, path: Path) -> "EmbeddingStore":
        path = Path(path)
        if not path.exists():
            raise LoadError(f"{path.name} not found in {path.parent}")
        with open(path, "rb") as fh:
            header = fh.read(EMB_HEADER.size)
            if len(header) < EMB_HEADER.size:
                raise LoadError(f"{path.name}: truncated header")
            magic, rows, dim = EMB_HEADER.unpack(header)
            if magic != EMB_MAGIC:
                raise LoadError(f"{path.name}: bad magic {magic!r}")
            data = np.fromfile(fh, dtype="<f4", count=rows * dim)
        if data.size != rows * dim:
            raise LoadError(f"{path.name}: expected {rows * dim} floats, got {data.size}")
        sidecar = path.with_name(path.stem + ".index.jsonl")
        if not sidecar.exists():
            raise LoadError(f"{sidecar.name} not found in {path.parent}")
        ids: list[str] = [""] * rows
        assigned = [False] * rows
        for lineno, row in read_jsonl(sidecar):
            try:
                idx = int(row["row"])
                eid = str(row["id"])
            except (KeyError, ValueError) as exc:
                raise LoadError(f"{sidecar.name} line {lineno}: bad row mapping") from exc
            if not 0 <= idx < rows:
                raise LoadError(f"{sidecar.name} line {lineno}: row {idx} out of range")
            if assigned[idx]:
                raise LoadError(f"{sidecar.name} line {lineno}: row {idx} mapped twice")
            ids[idx] = eid
            assigned[idx] = True
        if not all(assigned):
            missing = assigned.index(False)
            raise LoadError(f"{sidecar.name}: row {missing} has no id mapping")
        return cls(ids, data.reshape(rows, dim))


# ---------------------------------------------------------------------------
# loading
# ---------------------------------------------------------------------------


def _require(obj: dict, key: str, fname: str, lineno: int):
    if key not in obj:
        raise LoadError(f"{fname} line {lineno}: missing field '{key}'")
    return obj[key]


def _parse_paper(obj: dict, lineno: int, current_year: int) -> PaperRecord:
    fname = "papers.jsonl"
    paper_id = str(_require(obj, "paper_id", fname, lineno))
    year = _require(obj, "year", fname, lineno)
    if not isinstance(year, int) or not (YEAR_MIN <= year <= current_year):
        raise LoadError(
            f"{fname} line {lineno}: year must be an integer in [{YEAR_MIN}, {current_year}]"
        )
    citation_count = _require(obj, "citation_count", fname, lineno)
    if not isinstance(citation_count, int) or citation_count < 0:
        raise LoadError(f"{fname} line {lineno}: citation_count must be a nonnegative integer")
    author_ids = _require(obj, "author_ids", fname, lineno)
    if not isinstance(author_ids, list) or not author_ids:
        raise LoadError(f"{fname} line {lineno}: author_ids must be a nonempty array")
    author_ids = [str(a) for a in author_ids]
    if len(set(author_ids)) != len(author_ids):
        raise LoadError(f"{fname} line {lineno}: duplicate author ids in author_ids")
    dataset_ids = obj.get("dataset_ids", [])
    if not isinstance(dataset_ids, list):
        raise LoadError(f"{fname} line {lineno}: dataset_ids must be an array")
    return PaperRecord(
        paper_id=paper_id,
        title=str(obj.get("title", "")),
        abstract=str(obj.get("abstract", "")),
        year=year,
        venue=str(obj.get("venue", "")),
        citation_count=citation_count,
        author_ids=author_ids,
        dataset_ids=[str(d) for d in dataset_ids],
    )


def _parse_author(obj: dict, lineno: int) -> AuthorRecord:
    fname = "authors.jsonl"
    author_id = str(_require(obj, "author_id", fname, lineno))
    csy = obj.get("career_start_year")
    if csy is not None and not isinstance(csy, int):
        raise LoadError(f"{fname} line {lineno}: career_start_year must be an integer")
    return AuthorRecord(
        author_id=author_id,
        name=str(obj.get("name", "")),
        affiliation=str(obj.get("affiliation", "")),
        career_start_year=csy,
    )


def _parse_dataset(obj: dict, lineno: int) -> DatasetRecord:
    dataset_id = str(_require(obj, "dataset_id", "datasets.jsonl", lineno))
    return DatasetRecord(
        dataset_id=dataset_id,
        name=str(obj.get("name", "")),
        description=str(obj.get("description", "")),
    )


def _parse_bio_entity(obj: dict, lineno: int) -> BioEntityRecord:
    fname = "bio_entities.jsonl"
    entity_id = str(_require(obj, "entity_id", fname, lineno))
    embedding = None
    if obj.get("embedding") is not None:
        arr = np.asarray(obj["embedding"], dtype=np.float32)
        if arr.ndim != 1:
            raise LoadError(f"{fname} line {lineno}: embedding must be a flat array")
        embedding = arr
    position = None
    if obj.get("x") is not None and obj.get("y") is not None:
        position = (float(obj["x"]), float(obj["y"]))
    if embedding is None and position is None:
        raise LoadError(f"{fname} line {lineno}: entity needs an embedding or x/y coordinates")
    return BioEntityRecord(entity_id=entity_id, name=str(obj.get("name", "")), embedding=embedding, position_2d=position)


def load_corpus(path: str | Path) -> Corpus:
    """Load and validate a corpus directory.

    Raises LoadError when a required file is missing or a line is malformed
    (the message names the file and line), ValidationError when ids dangle
    or derived invariants fail.
    """
    root = Path(path)
    for fname in ("papers.jsonl", "authors.jsonl", "datasets.jsonl"):
        if not (root / fname).exists():
            raise LoadError(f"{fname} not found in {root}")

    current_year = datetime.date.today().year
    papers: dict[str, PaperRecord] = {}
    for lineno, obj in read_jsonl(root / "papers.jsonl"):
        rec = _parse_paper(obj, lineno, current_year)
        if rec.paper_id in papers:
            raise LoadError(f"papers.jsonl line {lineno}: duplicate paper_id {rec.paper_id}")
        papers[rec.paper_id] = rec

    authors: dict[str, AuthorRecord] = {}
    for lineno, obj in read_jsonl(root / "authors.jsonl"):
        rec = _parse_author(obj, lineno)
        if rec.author_id in authors:
            raise LoadError(f"authors.jsonl line {lineno}: duplicate author_id {rec.author_id}")
        authors[rec.author_id] = rec

    datasets: dict[str, DatasetRecord] = {}
    for lineno, obj in read_jsonl(root / "datasets.jsonl"):
        rec = _parse_dataset(obj, lineno)
        if rec.dataset_id in datasets:
            raise LoadError(f"datasets.jsonl line {lineno}: duplicate dataset_id {rec.dataset_id}")
        datasets[rec.dataset_id] = rec

    bio_entities: dict[str, BioEntityRecord] = {}
    bio_path = root / "bio_entities.jsonl"
    if bio_path.exists():
        for lineno, obj in read_jsonl(bio_path):
            rec = _parse_bio_entity(obj, lineno)
            if rec.entity_id in bio_entities:
                raise LoadError(f"bio_entities.jsonl line {lineno}: duplicate entity_id {rec.entity_id}")
            bio_entities[rec.entity_id] = rec

    external: set[str] = set()
    meta_path = root / "corpus_meta.json"
    if meta_path.exists():
        try:
            meta = json.loads(meta_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise LoadError(f"corpus_meta.json: invalid JSON ({exc.msg})") from exc
        external = {str(a) for a in meta.get("external_author_ids", [])}

    corpus = Corpus(
        papers=papers,
        authors=authors,
        datasets=datasets,
        bio_entities=bio_entities,
        external_author_ids=external,
    )
    derive_inverses(corpus)
    validate_corpus(corpus)
    return corpus


def validate_corpus(corpus: Corpus) -> None:
    """Check referential integrity and derived invariants.

    Dangling references are reported up to 20 ids per error to keep messages
    bounded on large corpora.
    """
    dangling_authors: list[str] = []
    dangling_datasets: list[str] = []
    for paper in corpus.papers.values():
        for aid in paper.author_ids:
            if aid not in corpus.authors and aid not in corpus.external_author_ids:
                dangling_authors.append(aid)
        for did in paper.dataset_ids:
            if did not in corpus.datasets:
                dangling_datasets.append(did)
    if dangling_authors:
        shown = sorted(set(dangling_authors))[:20]
        raise ValidationError(
            f"{len(set(dangling_authors))} author id(s) referenced by papers are undefined: "
            + ", ".join(shown)
        )
    if dangling_datasets:
        shown = sorted(set(dangling_datasets))[:20]
        raise ValidationError(
            f"{len(set(dangling_datasets))} dataset id(s) referenced by papers are undefined: "
            + ", ".join(shown)
        )

    bad_career: list[str] = []
    for author in corpus.authors.values():
        pids = corpus.papers_by_author.get(author.author_id, [])
        if author.publication_count != len(pids):
            raise ValidationError(
                f"author {author.author_id}: publication_count {author.publication_count} "
                f"!= {len(pids)} listed papers"
            )
        if pids and author.career_start_year is not None:
            first_year = min(corpus.papers[p].year for p in pids)
            if author.career_start_year > first_year:
                bad_career.append(author.author_id)
    if bad_career:
        shown = sorted(bad_career)[:20]
        raise ValidationError(
            f"{len(bad_career)} author(s) have career_start_year after their first "
            "publication: " + ", ".join(shown)
        )

    for ds in corpus.datasets.values():
        for pid in ds.user_paper_ids:
            if pid not in corpus.papers:
                raise ValidationError(f"dataset {ds.dataset_id} references unknown paper {pid}")


def derive_inverses(corpus: Corpus) -> Corpus:
    """Recompute all derived fields from the paper records. Idempotent.

    Populates dataset user_paper_ids, author publication_count and
    papers_by_author, and fills a missing career_start_year with the
    author's earliest publication year.
    """
    by_author: dict[str, list[str]] = {aid: [] for aid in corpus.authors}
    by_dataset: dict[str, list[str]] = {did: [] for did in corpus.datasets}
    for pid in sorted(corpus.papers):
        paper = corpus.papers[pid]
        for aid in paper.author_ids:
            if aid in by_author:
                by_author[aid].append(pid)
        for did in paper.dataset_ids:
            if did in by_dataset:
                by_dataset[did].append(pid)

    corpus.papers_by_author = by_author
    for aid, pids in by_author.items():
        author = corpus.authors[aid]
        author.publication_count = len(pids)
        if author.career_start_year is None and pids:
            author.career_start_year = min(corpus.papers[p].year for p in pids)
    for did, pids in by_dataset.items():
        corpus.datasets[did].user_paper_ids = pids
    return corpus


def filter_authors(corpus: Corpus, min_pubs: int = 2, active_since: int = 2020) -> Corpus:
    """Drop authors below the activity bar; keep every paper untouched.

    An author is retained iff publication_count >= min_pubs and at least one
    of their papers has year >= active_since. Removed authors' ids stay in
    paper author lists, flagged external, so positional weights downstream
    are unaffected. Idempotent.
    """
    keep: dict[str, AuthorRecord] = {}
    removed: set[str] = set()
    for aid, author in corpus.authors.items():
        pids = corpus.papers_by_author.get(aid, [])
        latest = max((corpus.papers[p].year for p in pids), default=None)
        if len(pids) >= min_pubs and latest is not None and latest >= active_since:
            keep[aid] = replace(author)
        else:
            removed.add(aid)

    filtered = Corpus(
        papers=corpus.papers,
        authors=keep,
        datasets={d: replace(ds, user_paper_ids=list(ds.user_paper_ids)) for d, ds in corpus.datasets.items()},
        bio_entities=corpus.bio_entities,
        external_author_ids=set(corpus.external_author_ids) | removed,
    )
    derive_inverses(filtered)
    return filtered


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def _paper_row(p: PaperRecord) -> dict:
    return {
        "paper_id": p.paper_id,
        "title": p.title,
        "abstract": p.abstract,
        "year": p.year,
        "venue": p.venue,
        "citation_count": p.citation_count,
        "author_ids": p.author_ids,
        "dataset_ids": p.dataset_ids,
    }


def _author_row(a: AuthorRecord) -> dict:
    row = {"author_id": a.author_id, "name": a.name, "affiliation": a.affiliation}
    if a.career_start_year is not None:
        row["career_start_year"] = a.career_start_year
    return row


def _bio_row(b: BioEntityRecord) -> dict:
    row: dict = {"entity_id": b.entity_id, "name": b.name}
    if b.embedding is not None:
        row["embedding"] = [float(v) for v in b.embedding]
    if b.position_2d is not None:
        row["x"], row["y"] = float(b.position_2d[0]), float(b.position_2d[1])
    return row


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    """Write the corpus back out in the canonical on-disk layout.

    Records are sorted by id so identical corpora serialize to identical
    bytes. load_corpus(save_corpus(c)) reproduces c exactly.
    """
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    write_jsonl(root / "papers.jsonl", (_paper_row(corpus.papers[k]) for k in sorted(corpus.papers)))
    write_jsonl(root / "authors.jsonl", (_author_row(corpus.authors[k]) for k in sorted(corpus.authors)))
    write_jsonl(
        root / "datasets.jsonl",
        (
            {"dataset_id": d.dataset_id, "name": d.name, "description": d.description}
            for d in (corpus.datasets[k] for k in sorted(corpus.datasets))
        ),
    )
    if corpus.bio_entities:
        write_jsonl(root / "bio_entities.jsonl", (_bio_row(corpus.bio_entities[k]) for k in sorted(corpus.bio_entities)))
    if corpus.external_author_ids:
        (root / "corpus_meta.json").write_text(
            canonical_json({"external_author_ids": sorted(corpus.external_author_ids)}) + "\n",
            encoding="utf-8",
        )


def load_paper_embeddings(path: str | Path) -> EmbeddingStore | None:
    """Load embeddings.f32 from a corpus directory, or None if absent."""
    f32 = Path(path) / "embeddings.f32"
    if not f32.exists():
        return None
    store = EmbeddingStore.load(f32)
    if store.dim != EMBEDDING_DIM:
        raise ValidationError(f"embeddings.f32 has dim {store.dim}, expected {EMBEDDING_DIM}")
    return store


def validate_embedding_coverage(corpus: Corpus, store: EmbeddingStore) -> None:
    unknown = [eid for eid in store.ids if eid not in corpus.papers]
    if unknown:
        raise ValidationError(
            f"{len(unknown)} embedding row(s) reference unknown papers: "
            + ", ".join(sorted(unknown)[:20])
        )


def corpus_counts(corpus: Corpus) -> Mapping[str, int]:
    return {
        "papers": len(corpus.papers),
        "authors": len(corpus.authors),
        "datasets": len(corpus.datasets),
        "bio_entities": len(corpus.bio_entities),
        "external_authors": len(corpus.external_author_ids),
    }
