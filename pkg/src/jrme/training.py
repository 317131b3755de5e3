"""Margin-ranking SGD for the three model variants.

Variants select which distance terms enter the per-negative hinge:

    kre    alpha + D_r(h,r,t) - D_r(h,r',t)
    tme    beta  + D_m(r,m)   - D_m(r',m)
    jrme   gamma + D_r(h,r,t) - D_r(h,r',t) + D_m(r,m) - D_m(r',m)

with one shared corrupt relation r' per term and [x]_+ around each.
The pure example-loss functions here are the reference semantics; the
batched kernels must match them and the unit tests enforce that.
"""

from __future__ import annotations

import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import product

import numpy as np

from .data import Belief, Dataset, Vocabulary
from .embeddings import EmbeddingTable, ModelConfig, init_embeddings, parse_neg_mode
from .errors import ConfigError, DataError, TrainingDivergedError
from .kernels import PackedBeliefs, enum_negative_table, run_epoch
from .scoring import mention_distance, mention_vector, triple_distance

VARIANTS = ("kre", "tme", "jrme")

_SEED_MASK = (1 << 64) - 1


def variant_flags(variant: str) -> tuple[bool, bool]:
    """(use_kg, use_text) for a variant name."""
    if variant == "kre":
        return True, False
    if variant == "tme":
        return False, True
    if variant == "jrme":
        return True, True
    raise ConfigError(f"unknown variant {variant!r}, expected one of {VARIANTS}")


def variant_margin(variant: str, config: ModelConfig) -> float:
    return {"kre": config.alpha, "tme": config.beta, "jrme": config.gamma}[variant]


def negatives_for(relation: int, n_relations: int, neg_mode: str, rng=None) -> np.ndarray:
    """Corrupt-relation ids for one example.

    "all" enumerates every other relation in ascending id order;
    "sample:K" draws K of them uniformly without replacement, in draw
    order, from the supplied generator.
    """
    mode, k = parse_neg_mode(neg_mode)
    if n_relations < 2:
        raise ConfigError("need at least 2 relations to build corrupt triples")
    if mode == "all":
        ids = np.arange(n_relations, dtype=np.int64)
        return ids[ids != relation]
    if k > n_relations - 1:
        raise ConfigError(
            f"cannot sample {k} distinct negatives from {n_relations - 1} other relations"
        )
    if rng is None:
        raise ConfigError("sample mode needs a random generator")
    draw = rng.choice(n_relations - 1, size=k, replace=False).astype(np.int64)
    return np.where(draw >= relation, draw + 1, draw)


def _hinge_terms(table, belief, negatives, margin, use_kg, use_text):
    """Yield (negative id, hinge argument) per negative, pre-step values."""
    h, r, t = belief.head, belief.relation, belief.tail
    dr_pos = triple_distance(table, h, r, t) if use_kg else 0.0
    dm_pos = mention_distance(table, r, belief.mention) if use_text else 0.0
    for rp in negatives:
        rp = int(rp)
        term = margin
        if use_kg:
            term = term + dr_pos - triple_distance(table, h, rp, t)
        if use_text:
            term = term + dm_pos - mention_distance(table, rp, belief.mention)
        yield rp, term


def _example_loss(table, belief, negatives, margin, use_kg, use_text):
    if len(negatives) == 0:
        raise ConfigError("example loss needs at least one negative")
    active = []
    terms = []
    for rp, term in _hinge_terms(table, belief, negatives, margin, use_kg, use_text):
        if term > 0.0:
            active.append(rp)
            terms.append(term)
    return math.fsum(terms), active


def kre_example_loss(table, belief, negatives, alpha):
    """Hinge loss over corrupt relations using the triple distance only.

    Returns (loss, active ids); a term exactly at the margin boundary
    is inactive and contributes nothing.
    """
    return _example_loss(table, belief, negatives, alpha, True, False)


def tme_example_loss(table, belief, negatives, beta):
    """Hinge loss over corrupt relations using the mention distance only."""
    return _example_loss(table, belief, negatives, beta, False, True)


def jrme_example_loss(table, belief, negatives, gamma):
    """Joint hinge loss: both distances, one shared corrupt relation per term."""
    return _example_loss(table, belief, negatives, gamma, True, True)


def example_loss(table, belief, negatives, variant, margin):
    use_kg, use_text = variant_flags(variant)
    return _example_loss(table, belief, negatives, margin, use_kg, use_text)


def example_gradients(table, belief, negatives, variant, margin):
    """Analytic subgradient of the example loss per touched table row.

    Returns (loss, grads) with grads keyed by (kind, id), kind in
    entity/relation/word, each value the accumulated gradient over all
    active terms.  A self-loop's head and tail contributions land on
    one entity row and cancel; repeated mention words accumulate once
    per occurrence.
    """
    use_kg, use_text = variant_flags(variant)
    h, r, t = belief.head, belief.relation, belief.tail
    m = mention_vector(table, belief.mention)
    diff_pos = table.entity_vecs[h] + table.relation_vecs[r] - table.entity_vecs[t]
    grads: dict[tuple[str, int], np.ndarray] = {}

    def bump(kind, idx, vec):
        key = (kind, idx)
        if key in grads:
            grads[key] = grads[key] + vec
        else:
            grads[key] = np.array(vec, dtype=np.float64)

    loss, active = _example_loss(table, belief, negatives, margin, use_kg, use_text)
    for rp in active:
        if use_kg:
            diff_neg = table.entity_vecs[h] + table.relation_vecs[rp] - table.entity_vecs[t]
            bump("relation", r, 2.0 * diff_pos)
            bump("relation", rp, -2.0 * diff_neg)
            bump("entity", h, 2.0 * (table.relation_vecs[r] - table.relation_vecs[rp]))
            bump("entity", t, -2.0 * (table.relation_vecs[r] - table.relation_vecs[rp]))
        if use_text:
            bump("relation", r, -m)
            bump("relation", rp, m)
            for w in belief.mention:
                bump("word", w, table.relation_vecs[rp] - table.relation_vecs[r])
    return loss, grads


def sgd_step(table, belief, variant, config, rng=None) -> float:
    """One example's update, in place, returning its loss.

    Exactly the batched-kernel semantics: all active terms accumulated
    against pre-step values, applied as one update, entities
    renormalized afterwards when the config says so.
    """
    use_kg, use_text = variant_flags(variant)
    negatives = negatives_for(belief.relation, table.n_relations, config.neg_mode, rng)
    packed = PackedBeliefs.from_beliefs([belief])
    order = np.zeros(1, dtype=np.int64)
    loss, _, bad = run_epoch(
        table.entity_vecs,
        table.relation_vecs,
        table.word_vecs,
        packed,
        order,
        negatives.reshape(1, -1),
        False,
        config.learning_rate,
        variant_margin(variant, config),
        use_kg,
        use_text,
        config.normalize_entities,
    )
    if bad >= 0:
        raise TrainingDivergedError(
            f"non-finite value while updating belief "
            f"(head={belief.head}, relation={belief.relation}, tail={belief.tail})"
        )
    return loss


@dataclass(frozen=True)
class EpochReport:
    epoch: int
    loss: float
    active: int
    seconds: float = 0.0

    def line(self) -> str:
        return f"epoch={self.epoch} loss={self.loss!r} active={self.active}"


def _sample_negative_rows(rels, n_relations, k, rng):
    if k > n_relations - 1:
        raise ConfigError(
            f"cannot sample {k} distinct negatives from {n_relations - 1} other relations"
        )
    rows = np.empty((rels.shape[0], k), dtype=np.int64)
    for pos in range(rels.shape[0]):
        r = rels[pos]
        draw = rng.choice(n_relations - 1, size=k, replace=False).astype(np.int64)
        rows[pos] = np.where(draw >= r, draw + 1, draw)
    return rows


def train(
    dataset: Dataset,
    vocab: Vocabulary,
    config: ModelConfig,
    variant: str,
    n_threads: int = 1,
    verbose: bool = False,
    log=None,
):
    """Initialize tables and run the full SGD schedule.

    Single-threaded runs are a deterministic function of (seed, config,
    dataset, variant).  With n_threads > 1, each epoch's visiting order
    is split into contiguous shards updated lock-free on real threads;
    races are benign for convergence but bit-reproducibility is gone.
    """
    use_kg, use_text = variant_flags(variant)
    margin = variant_margin(variant, config)
    if not dataset.train:
        raise DataError("training split is empty")
    if len(vocab.relations) < 2:
        raise ConfigError("need at least 2 relations to build corrupt triples")
    if log is None:
        log = sys.stderr

    table = init_embeddings(vocab, config)
    packed = PackedBeliefs.from_beliefs(dataset.train)
    n = len(dataset.train)
    n_rel = table.n_relations
    mode, k = parse_neg_mode(config.neg_mode)
    if mode == "all":
        neg_table = enum_negative_table(n_rel)
    rng = np.random.default_rng(np.random.SeedSequence(config.seed & _SEED_MASK, spawn_key=(1,)))

    reports = []
    for epoch in range(config.epochs):
        t0 = time.perf_counter()
        order = rng.permutation(n).astype(np.int64)
        if mode == "sample":
            neg_table = _sample_negative_rows(packed.relations[order], n_rel, k, rng)
        by_relation = mode == "all"

        if n_threads <= 1:
            loss_sum, active, bad = run_epoch(
                table.entity_vecs, table.relation_vecs, table.word_vecs,
                packed, order, neg_table, by_relation,
                config.learning_rate, margin, use_kg, use_text,
                config.normalize_entities,
            )
            bads = [bad]
        else:
            bounds = np.linspace(0, n, n_threads + 1).astype(np.int64)
            jobs = []
            with ThreadPoolExecutor(max_workers=n_threads) as pool:
                for w in range(n_threads):
                    lo, hi = int(bounds[w]), int(bounds[w + 1])
                    if lo == hi:
                        continue
                    shard_negs = neg_table if by_relation else neg_table[lo:hi]
                    jobs.append(
                        pool.submit(
                            run_epoch,
                            table.entity_vecs, table.relation_vecs, table.word_vecs,
                            packed, order[lo:hi], shard_negs, by_relation,
                            config.learning_rate, margin, use_kg, use_text,
                            config.normalize_entities,
                        )
                    )
                parts = [j.result() for j in jobs]
            loss_sum = sum(p[0] for p in parts)
            active = sum(p[1] for p in parts)
            bads = [p[2] for p in parts]

        for bad in bads:
            if bad >= 0:
                b = dataset.train[bad]
                raise TrainingDivergedError(
                    f"non-finite value at epoch {epoch}, training example {bad} "
                    f"(head={b.head}, relation={b.relation}, tail={b.tail})"
                )
        report = EpochReport(epoch, loss_sum / n, active, time.perf_counter() - t0)
        reports.append(report)
        if verbose:
            print(report.line(), file=log, flush=True)
    return table, reports


@dataclass(frozen=True)
class GridPoint:
    config: ModelConfig
    report: "object"


@dataclass(frozen=True)
class GridResult:
    points: list
    best: GridPoint


def grid_search(
    dataset: Dataset,
    vocab: Vocabulary,
    dims,
    alphas,
    betas,
    gammas,
    base: ModelConfig,
    variant: str,
    n_threads: int = 1,
    verbose: bool = False,
    log=None,
):
    """Train one model per (dim, alpha, beta, gamma) point, evaluate on
    the validation split, return all points plus the winner.

    Best = lowest average rank, ties broken by higher Hit@10, then
    higher Hit@1, then by lexicographically smaller (dim, alpha, beta,
    gamma).  Points are visited in lexicographic order, so keeping the
    first strict improvement implements the final tie-break.
    """
    from .evaluation import evaluate

    if log is None:
        log = sys.stderr
    dims, alphas, betas, gammas = (sorted(set(v)) for v in (dims, alphas, betas, gammas))
    if not (dims and alphas and betas and gammas):
        raise ConfigError("grid search needs at least one value per hyperparameter")
    if not dataset.valid:
        raise DataError("grid search needs a non-empty validation split")

    points = []
    best = None
    best_key = None
    for d, a, b, g in product(dims, alphas, betas, gammas):
        config = ModelConfig(
            dim=d, alpha=a, beta=b, gamma=g,
            learning_rate=base.learning_rate, epochs=base.epochs,
            neg_mode=base.neg_mode, seed=base.seed,
            normalize_entities=base.normalize_entities,
        )
        table, _ = train(dataset, vocab, config, variant, n_threads=n_threads)
        report = evaluate(table, dataset.valid, variant, n_workers=n_threads)
        point = GridPoint(config, report)
        points.append(point)
        if verbose:
            print(
                f"grid dim={d} alpha={a} beta={b} gamma={g} "
                f"avg_rank={report.avg_rank:.4f} hit@10={report.hit_at_10:.4f} "
                f"hit@1={report.hit_at_1:.4f}",
                file=log, flush=True,
            )
        key = (report.avg_rank, -report.hit_at_10, -report.hit_at_1)
        if best_key is None or key < best_key:
            best, best_key = point, key
    return GridResult(points, best)
