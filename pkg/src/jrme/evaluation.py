"""Relation-ranking evaluation: Average Rank, Hit@10, Hit@1.

Every candidate relation is substituted for the true one and scored;
candidates are ranked ascending (lower score is better).  Ranking is
raw: nothing is filtered out, and the candidate set always includes
the true relation itself.  Ties are broken by relation id, which makes
every rank deterministic.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .data import Belief
from .embeddings import EmbeddingTable
from .errors import DataError
from .kernels import PackedBeliefs, rank_all
from .training import variant_flags


@dataclass(frozen=True)
class EvalReport:
    """Aggregate metrics plus the per-belief (index, rank) pairs behind them."""

    avg_rank: float
    hit_at_10: float
    hit_at_1: float
    ranks: tuple

    @property
    def n_examples(self) -> int:
        return len(self.ranks)


def summarize_ranks(ranks) -> tuple[float, float, float]:
    """(average rank, Hit@10, Hit@1) from a list of integer ranks.

    Plain Python arithmetic, so small cases come out exact: [1, 3, 20]
    gives exactly (8.0, 2/3, 1/3).
    """
    ranks = list(ranks)
    if not ranks:
        raise DataError("cannot summarize an empty rank list")
    n = len(ranks)
    avg = sum(ranks) / n
    hit10 = sum(1 for r in ranks if r <= 10) / n
    hit1 = sum(1 for r in ranks if r <= 1) / n
    return avg, hit10, hit1


def candidate_scores(table: EmbeddingTable, head: int, tail: int, mention, variant: str):
    """Score of every relation id substituted into (head, ?, tail, mention)."""
    use_kg, use_text = variant_flags(variant)
    if not 0 <= head < table.n_entities:
        raise IndexError(f"entity id {head} out of range [0, {table.n_entities})")
    if not 0 <= tail < table.n_entities:
        raise IndexError(f"entity id {tail} out of range [0, {table.n_entities})")
    scores = np.zeros(table.n_relations, dtype=np.float64)
    if use_kg:
        diff = (table.entity_vecs[head] - table.entity_vecs[tail])[None, :] + table.relation_vecs
        scores += np.einsum("ij,ij->i", diff, diff)
    if use_text and len(mention):
        ids = np.asarray(mention, dtype=np.int64)
        if ids.min() < 0 or ids.max() >= table.n_words:
            raise IndexError(f"word id out of range [0, {table.n_words})")
        scores -= table.relation_vecs @ table.word_vecs[ids].sum(axis=0)
    return scores


def rank_true_relation(table: EmbeddingTable, belief: Belief, variant: str) -> int:
    """Ascending-sort position of the true relation among all candidates.

    rank = 1 + #(candidates scoring strictly lower)
             + #(candidates tied with a smaller relation id).
    """
    scores = candidate_scores(table, belief.head, belief.tail, belief.mention, variant)
    r = belief.relation
    if not 0 <= r < table.n_relations:
        raise IndexError(f"relation id {r} out of range [0, {table.n_relations})")
    s_true = scores[r]
    ids = np.arange(table.n_relations)
    return int(1 + np.count_nonzero(scores < s_true) + np.count_nonzero((scores == s_true) & (ids < r)))


def _rank_chunk(table, packed, lo, hi, use_kg, use_text):
    # moff keeps absolute offsets, so the shared flat word array needs no copy
    return rank_all(
        table.entity_vecs,
        table.relation_vecs,
        table.word_vecs,
        packed.heads[lo:hi],
        packed.relations[lo:hi],
        packed.tails[lo:hi],
        packed.mention_off[lo : hi + 1],
        packed.mention_flat,
        use_kg,
        use_text,
    )


def evaluate(table: EmbeddingTable, beliefs, variant: str, n_workers: int = 1) -> EvalReport:
    """Rank every belief's true relation and aggregate the metrics.

    Read-only over the table and embarrassingly parallel: results are
    merged in belief order, so the report is identical for any worker
    count.
    """
    beliefs = list(beliefs)
    if not beliefs:
        raise DataError("evaluation split is empty")
    use_kg, use_text = variant_flags(variant)
    packed = PackedBeliefs.from_beliefs(beliefs)
    n = len(beliefs)
    if n_workers <= 1 or n < 2 * n_workers:
        ranks = _rank_chunk(table, packed, 0, n, use_kg, use_text)
    else:
        bounds = np.linspace(0, n, n_workers + 1).astype(np.int64)
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            parts = [
                pool.submit(_rank_chunk, table, packed, int(bounds[w]), int(bounds[w + 1]), use_kg, use_text)
                for w in range(n_workers)
            ]
            ranks = np.concatenate([p.result() for p in parts])
    avg, hit10, hit1 = summarize_ranks(int(r) for r in ranks)
    return EvalReport(avg, hit10, hit1, tuple((i, int(r)) for i, r in enumerate(ranks)))


def format_report(report: EvalReport, label: str) -> str:
    """Small table plus a machine-readable key=value block."""
    head = f"{'approach':<12}{'avg rank':>10}{'Hit@10':>10}{'Hit@1':>10}"
    row = (
        f"{label:<12}{report.avg_rank:>10.2f}"
        f"{report.hit_at_10 * 100:>9.1f}%{report.hit_at_1 * 100:>9.1f}%"
    )
    block = "\n".join(
        [
            f"avg_rank={report.avg_rank!r}",
            f"hit_at_10={report.hit_at_10!r}",
            f"hit_at_1={report.hit_at_1!r}",
            f"n_examples={report.n_examples}",
        ]
    )
    return f"{head}\n{row}\n\n{block}"


def write_ranks_tsv(report: EvalReport, path) -> None:
    """One "index TAB rank" line per evaluated belief."""
    with open(path, "w", encoding="utf-8") as f:
        f.write("index\trank\n")
        for i, r in report.ranks:
            f.write(f"{i}\t{r}\n")
