"""Hot numeric kernels, in two interchangeable backends.

The loop kernels are compiled with numba when it is importable; setting
the environment variable JRME_DISABLE_NUMBA to anything but "0" (or
empty) forces the vectorized plain-numpy twins instead.  Both backends
implement the same update and ranking rules; they may differ in the
last float bits because summation order differs, never in semantics.

The compiled kernels release the GIL, so training shards and evaluation
chunks can run on real threads.
"""

from __future__ import annotations

import os

import numpy as np

_DISABLED = os.environ.get("JRME_DISABLE_NUMBA", "0") not in ("", "0")

HAS_NUMBA = False
if not _DISABLED:
    try:
        from numba import njit

        HAS_NUMBA = True
    except ImportError:
        pass

BACKEND = "numba" if HAS_NUMBA else "numpy"

if HAS_NUMBA:
    _kernel = njit(cache=True, nogil=True)
else:

    def _kernel(func):
        return func


def pyfunc(f):
    """Uncompiled Python version of a loop kernel (itself when not jitted)."""
    return getattr(f, "py_func", f)


class PackedBeliefs:
    """Belief list flattened to int64 arrays the kernels can chew on.

    Mentions are ragged, so they live in one flat array indexed by
    per-belief offsets: belief i's words are
    mention_flat[mention_off[i]:mention_off[i + 1]].
    """

    __slots__ = ("heads", "relations", "tails", "mention_off", "mention_flat")

    def __init__(self, heads, relations, tails, mention_off, mention_flat):
        self.heads = heads
        self.relations = relations
        self.tails = tails
        self.mention_off = mention_off
        self.mention_flat = mention_flat

    def __len__(self) -> int:
        return self.heads.shape[0]

    @classmethod
    def from_beliefs(cls, beliefs) -> "PackedBeliefs":
        n = len(beliefs)
        heads = np.empty(n, dtype=np.int64)
        relations = np.empty(n, dtype=np.int64)
        tails = np.empty(n, dtype=np.int64)
        mention_off = np.zeros(n + 1, dtype=np.int64)
        words = []
        for i, b in enumerate(beliefs):
            heads[i] = b.head
            relations[i] = b.relation
            tails[i] = b.tail
            words.extend(b.mention)
            mention_off[i + 1] = len(words)
        mention_flat = np.asarray(words, dtype=np.int64)
        return cls(heads, relations, tails, mention_off, mention_flat)


def enum_negative_table(n_relations: int) -> np.ndarray:
    """Row r lists every relation id except r, ascending."""
    r = np.arange(n_relations, dtype=np.int64)
    grid = np.broadcast_to(r, (n_relations, n_relations))
    keep = grid != r[:, None]
    return grid[keep].reshape(n_relations, n_relations - 1)


# --- training epoch -------------------------------------------------------
#
# Per example, all active hinge terms are accumulated against the
# pre-step table and applied as one update.  Negative-relation rows are
# written during the scan (each appears at most once per example, and
# nothing later reads them); everything else is written afterwards from
# stashed pre-step quantities.
#
# Per active term the descent directions are:
#   relation r:   -lr * (2*(h+r-t))        and  -lr * (-m)
#   relation r':  -lr * (-2*(h+r'-t))      and  -lr * (+m)
#   entity h:     -lr * 2*(r - r')         (tail gets the opposite)
#   each word:    -lr * (r' - r)           (per occurrence)
# summed over active negatives; wc = sum(r') - a*r collects the shared
# vector for the entity and word updates.


@_kernel
def _epoch_loops(
    entity,
    relation,
    word,
    heads,
    rels,
    tails,
    moff,
    mflat,
    order,
    neg_table,
    neg_by_relation,
    lr,
    margin,
    use_kg,
    use_text,
    normalize,
):
    d = relation.shape[1]
    k = neg_table.shape[1]
    m = np.zeros(d, dtype=np.float64)
    diff_pos = np.zeros(d, dtype=np.float64)
    diff_neg = np.zeros(d, dtype=np.float64)
    sum_rneg = np.zeros(d, dtype=np.float64)
    wc = np.zeros(d, dtype=np.float64)
    loss_sum = 0.0
    active_sum = 0
    for pos in range(order.shape[0]):
        i = order[pos]
        h = heads[i]
        r = rels[i]
        t = tails[i]
        if use_text:
            for q in range(d):
                m[q] = 0.0
            for j in range(moff[i], moff[i + 1]):
                w = mflat[j]
                for q in range(d):
                    m[q] += word[w, q]
        s_pos = 0.0
        if use_kg:
            acc = 0.0
            for q in range(d):
                v = entity[h, q] + relation[r, q] - entity[t, q]
                diff_pos[q] = v
                acc += v * v
            s_pos += acc
        if use_text:
            acc = 0.0
            for q in range(d):
                acc -= relation[r, q] * m[q]
            s_pos += acc

        nrow = r if neg_by_relation else pos
        a = 0
        loss_i = 0.0
        for q in range(d):
            sum_rneg[q] = 0.0
        for j in range(k):
            rp = neg_table[nrow, j]
            s_neg = 0.0
            if use_kg:
                acc = 0.0
                for q in range(d):
                    v = entity[h, q] + relation[rp, q] - entity[t, q]
                    diff_neg[q] = v
                    acc += v * v
                s_neg += acc
            if use_text:
                acc = 0.0
                for q in range(d):
                    acc -= relation[rp, q] * m[q]
                s_neg += acc
            term = margin + s_pos - s_neg
            if term > 0.0:
                a += 1
                loss_i += term
                for q in range(d):
                    sum_rneg[q] += relation[rp, q]
                if use_kg:
                    for q in range(d):
                        relation[rp, q] += lr * 2.0 * diff_neg[q]
                if use_text:
                    for q in range(d):
                        relation[rp, q] -= lr * m[q]

        if a > 0:
            af = float(a)
            for q in range(d):
                wc[q] = sum_rneg[q] - af * relation[r, q]
            if use_kg:
                for q in range(d):
                    relation[r, q] -= lr * 2.0 * af * diff_pos[q]
            if use_text:
                for q in range(d):
                    relation[r, q] += lr * af * m[q]
            if use_kg and h != t:
                for q in range(d):
                    entity[h, q] += lr * 2.0 * wc[q]
                    entity[t, q] -= lr * 2.0 * wc[q]
                if normalize:
                    acc = 0.0
                    for q in range(d):
                        acc += entity[h, q] * entity[h, q]
                    nrm = np.sqrt(acc)
                    if nrm > 0.0:
                        for q in range(d):
                            entity[h, q] /= nrm
                    acc = 0.0
                    for q in range(d):
                        acc += entity[t, q] * entity[t, q]
                    nrm = np.sqrt(acc)
                    if nrm > 0.0:
                        for q in range(d):
                            entity[t, q] /= nrm
            if use_text:
                for j in range(moff[i], moff[i + 1]):
                    w = mflat[j]
                    for q in range(d):
                        word[w, q] -= lr * wc[q]

        loss_sum += loss_i
        active_sum += a
        if not np.isfinite(loss_i):
            return loss_sum, active_sum, i
        ok = True
        for q in range(d):
            if not np.isfinite(relation[r, q]):
                ok = False
        if use_kg:
            for q in range(d):
                if not np.isfinite(entity[h, q]):
                    ok = False
        if not ok:
            return loss_sum, active_sum, i
    return loss_sum, active_sum, np.int64(-1)


def _epoch_numpy(
    entity,
    relation,
    word,
    heads,
    rels,
    tails,
    moff,
    mflat,
    order,
    neg_table,
    neg_by_relation,
    lr,
    margin,
    use_kg,
    use_text,
    normalize,
):
    d = relation.shape[1]
    loss_sum = 0.0
    active_sum = 0
    zero_m = np.zeros(d, dtype=np.float64)
    for pos in range(order.shape[0]):
        i = int(order[pos])
        h = int(heads[i])
        r = int(rels[i])
        t = int(tails[i])
        ids = mflat[moff[i] : moff[i + 1]]
        m = word[ids].sum(axis=0) if (use_text and ids.size) else zero_m
        s_pos = 0.0
        if use_kg:
            diff_pos = entity[h] + relation[r] - entity[t]
            s_pos += float(diff_pos @ diff_pos)
        if use_text:
            s_pos -= float(relation[r] @ m)

        negs = neg_table[r] if neg_by_relation else neg_table[pos]
        rel_negs = relation[negs]
        s_negs = np.zeros(negs.shape[0], dtype=np.float64)
        if use_kg:
            diff_negs = (entity[h] - entity[t])[None, :] + rel_negs
            s_negs += np.einsum("ij,ij->i", diff_negs, diff_negs)
        if use_text:
            s_negs -= rel_negs @ m
        terms = margin + s_pos - s_negs
        act = terms > 0.0
        a = int(np.count_nonzero(act))
        loss_i = float(terms[act].sum()) if a else 0.0

        if a:
            sum_rneg = rel_negs[act].sum(axis=0)
            wc = sum_rneg - a * relation[r]
            # the active negative ids are distinct, so plain fancy
            # indexing applies each row's update exactly once
            if use_kg:
                relation[negs[act]] += lr * 2.0 * diff_negs[act]
            if use_text:
                relation[negs[act]] -= lr * m
            if use_kg:
                relation[r] -= lr * 2.0 * a * diff_pos
            if use_text:
                relation[r] += lr * a * m
            if use_kg and h != t:
                entity[h] += lr * 2.0 * wc
                entity[t] -= lr * 2.0 * wc
                if normalize:
                    for e in (h, t):
                        nrm = float(np.linalg.norm(entity[e]))
                        if nrm > 0.0:
                            entity[e] /= nrm
            if use_text and ids.size:
                np.subtract.at(word, ids, lr * wc)

        loss_sum += loss_i
        active_sum += a
        bad = not np.isfinite(loss_i) or not np.isfinite(relation[r]).all()
        if use_kg and not bad:
            bad = not np.isfinite(entity[h]).all()
        if bad:
            return loss_sum, active_sum, i
    return loss_sum, active_sum, -1


# --- relation ranking -----------------------------------------------------


@_kernel
def _rank_loops(entity, relation, word, heads, rels, tails, moff, mflat, use_kg, use_text):
    n = heads.shape[0]
    n_rel = relation.shape[0]
    d = relation.shape[1]
    ranks = np.empty(n, dtype=np.int64)
    m = np.zeros(d, dtype=np.float64)
    scores = np.empty(n_rel, dtype=np.float64)
    for i in range(n):
        h = heads[i]
        r = rels[i]
        t = tails[i]
        if use_text:
            for q in range(d):
                m[q] = 0.0
            for j in range(moff[i], moff[i + 1]):
                w = mflat[j]
                for q in range(d):
                    m[q] += word[w, q]
        for rp in range(n_rel):
            s = 0.0
            if use_kg:
                acc = 0.0
                for q in range(d):
                    v = entity[h, q] + relation[rp, q] - entity[t, q]
                    acc += v * v
                s += acc
            if use_text:
                acc = 0.0
                for q in range(d):
                    acc -= relation[rp, q] * m[q]
                s += acc
            scores[rp] = s
        s_true = scores[r]
        rank = 1
        for rp in range(n_rel):
            if rp == r:
                continue
            if scores[rp] < s_true or (scores[rp] == s_true and rp < r):
                rank += 1
        ranks[i] = rank
    return ranks


def _rank_numpy(entity, relation, word, heads, rels, tails, moff, mflat, use_kg, use_text):
    n = heads.shape[0]
    n_rel = relation.shape[0]
    ranks = np.empty(n, dtype=np.int64)
    rel_ids = np.arange(n_rel)
    for i in range(n):
        h = int(heads[i])
        r = int(rels[i])
        t = int(tails[i])
        scores = np.zeros(n_rel, dtype=np.float64)
        if use_kg:
            diff = (entity[h] - entity[t])[None, :] + relation
            scores += np.einsum("ij,ij->i", diff, diff)
        if use_text:
            ids = mflat[moff[i] : moff[i + 1]]
            if ids.size:
                scores -= relation @ word[ids].sum(axis=0)
        s_true = scores[r]
        ranks[i] = (
            1
            + int(np.count_nonzero(scores < s_true))
            + int(np.count_nonzero((scores == s_true) & (rel_ids < r)))
        )
    return ranks


# --- dispatchers ----------------------------------------------------------


def run_epoch(
    entity,
    relation,
    word,
    packed: PackedBeliefs,
    order,
    neg_table,
    neg_by_relation: bool,
    lr: float,
    margin: float,
    use_kg: bool,
    use_text: bool,
    normalize: bool,
):
    """One pass of hinge SGD over `order`, mutating the tables in place.

    Returns (loss_sum, active_term_count, bad_index); bad_index is the
    first example whose step produced a non-finite value, -1 when clean.
    """
    impl = _epoch_loops if HAS_NUMBA else _epoch_numpy
    loss, active, bad = impl(
        entity,
        relation,
        word,
        packed.heads,
        packed.relations,
        packed.tails,
        packed.mention_off,
        packed.mention_flat,
        order,
        neg_table,
        neg_by_relation,
        lr,
        margin,
        use_kg,
        use_text,
        normalize,
    )
    return float(loss), int(active), int(bad)


def rank_all(entity, relation, word, heads, rels, tails, moff, mflat, use_kg, use_text):
    """Rank of the true relation for each belief, as an int64 array.

    Rank = 1 + #(strictly better candidates) + #(tied candidates with a
    smaller relation id); raw ranking over all relations.
    """
    impl = _rank_loops if HAS_NUMBA else _rank_numpy
    return impl(entity, relation, word, heads, rels, tails, moff, mflat, use_kg, use_text)


def warmup_jit() -> None:
    """Force-compile both kernels on tiny inputs so timed code never JITs."""
    if not HAS_NUMBA:
        return
    d = 2
    entity = np.zeros((2, d))
    relation = np.zeros((2, d))
    word = np.zeros((1, d))
    heads = np.zeros(1, dtype=np.int64)
    rels = np.zeros(1, dtype=np.int64)
    tails = np.ones(1, dtype=np.int64)
    moff = np.array([0, 1], dtype=np.int64)
    mflat = np.zeros(1, dtype=np.int64)
    order = np.zeros(1, dtype=np.int64)
    negs = enum_negative_table(2)
    _epoch_loops(
        entity, relation, word, heads, rels, tails, moff, mflat,
        order, negs, True, 0.01, 1.0, True, True, True,
    )
    _rank_loops(entity, relation, word, heads, rels, tails, moff, mflat, True, True)
