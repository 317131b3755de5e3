"""Reference scoring functions.

These are the plain-numpy definitions of the model: the structured
distance between a relation and an entity pair, the mention distance
between a relation and a bag of words, and their sum.  Training and
ranking kernels must agree with these on every input; the tests hold
them to that.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from .data import Belief
from .embeddings import EmbeddingTable


def _check_id(i: int, n: int, kind: str) -> None:
    # Negative ids would silently index from the end of the table.
    if not 0 <= i < n:
        raise IndexError(f"{kind} id {i} out of range [0, {n})")


def triple_distance(table: EmbeddingTable, head: int, relation: int, tail: int) -> float:
    """Squared Euclidean length of head + relation - tail.

    Zero means the relation vector translates the head exactly onto the
    tail; larger is worse.
    """
    _check_id(head, table.n_entities, "entity")
    _check_id(tail, table.n_entities, "entity")
    _check_id(relation, table.n_relations, "relation")
    diff = table.entity_vecs[head] + table.relation_vecs[relation] - table.entity_vecs[tail]
    return float(diff @ diff)


def mention_vector(table: EmbeddingTable, words: Sequence[int]) -> np.ndarray:
    """Sum of word vectors, with multiplicity: a repeated id counts twice.

    The empty mention is the zero vector.
    """
    m = np.zeros(table.dim, dtype=np.float64)
    for w in words:
        _check_id(w, table.n_words, "word")
        m += table.word_vecs[w]
    return m


def mention_distance(table: EmbeddingTable, relation: int, words: Sequence[int]) -> float:
    """Negative inner product of the relation vector with the mention vector.

    More aligned mentions give lower (better) values; the empty mention
    scores exactly 0 for every relation.
    """
    _check_id(relation, table.n_relations, "relation")
    return float(-(table.relation_vecs[relation] @ mention_vector(table, words)))


def belief_score(table: EmbeddingTable, belief: Belief) -> float:
    """Joint score: triple distance plus mention distance.  Lower is better."""
    return triple_distance(table, belief.head, belief.relation, belief.tail) + mention_distance(
        table, belief.relation, belief.mention
    )


def hinge(x: float) -> float:
    """max(0, x).  A term sitting exactly at zero contributes nothing."""
    return x if x > 0.0 else 0.0
