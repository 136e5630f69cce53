"""Talent knowledge graph engine.

Ingests a scholarly corpus (papers, authors, datasets, bio entities plus
precomputed paper embeddings), aggregates positional-weighted expertise
embeddings, recommends unconnected collaborators and prospective dataset
users by cosine similarity, runs an expertise-gap teaming pipeline behind a
pluggable LLM client, lays the whole graph out in 2D, and serves it over a
JSON API built for a WebGL explorer.
"""

__version__ = "0.1.0"

EMBEDDING_DIM = 768
