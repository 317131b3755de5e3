"""Timing comparison: compiled loop kernels vs. the plain-numpy twins.

Runs one training epoch and one full ranking pass on a synthetic
workload with each backend and reports best-of-N wall times.  The
compiled kernels are warmed up before timing so JIT cost never lands
in a measurement.

    python3 benchmarks/bench_kernels.py [--n 20000] [--dim 100] [--relations 200]
"""

import argparse
import time

import numpy as np

from jrme.kernels import (
    HAS_NUMBA,
    PackedBeliefs,
    _epoch_loops,
    _epoch_numpy,
    _rank_loops,
    _rank_numpy,
    enum_negative_table,
    warmup_jit,
)


def build_workload(n, n_entities, n_relations, n_words, dim, seed=0):
    rng = np.random.default_rng(seed)
    bound = 6.0 / np.sqrt(dim)
    entity = rng.uniform(-bound, bound, (n_entities, dim))
    entity /= np.linalg.norm(entity, axis=1, keepdims=True)
    relation = rng.uniform(-bound, bound, (n_relations, dim))
    word = rng.uniform(-bound, bound, (n_words, dim))

    heads = rng.integers(n_entities, size=n).astype(np.int64)
    tails = rng.integers(n_entities, size=n).astype(np.int64)
    rels = rng.integers(n_relations, size=n).astype(np.int64)
    lengths = rng.integers(0, 5, size=n)
    moff = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(lengths, out=moff[1:])
    mflat = rng.integers(n_words, size=int(moff[-1])).astype(np.int64)
    packed = PackedBeliefs(heads, rels, tails, moff, mflat)
    order = rng.permutation(n).astype(np.int64)
    negs = enum_negative_table(n_relations)
    return (entity, relation, word), packed, order, negs


def best_of(fn, repeat=3):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=20000)
    ap.add_argument("--dim", type=int, default=100)
    ap.add_argument("--entities", type=int, default=2000)
    ap.add_argument("--relations", type=int, default=200)
    ap.add_argument("--words", type=int, default=500)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    tables, packed, order, negs = build_workload(
        args.n, args.entities, args.relations, args.words, args.dim
    )
    epoch_args = (
        packed.heads, packed.relations, packed.tails,
        packed.mention_off, packed.mention_flat,
        order, negs, True, 0.01, 1.0, True, True, True,
    )
    rank_args = (
        packed.heads, packed.relations, packed.tails,
        packed.mention_off, packed.mention_flat, True, True,
    )

    def run_epoch_with(impl):
        # epochs mutate, so each timed run gets fresh table copies
        copies = tuple(t.copy() for t in tables)
        return lambda: impl(*copies, *epoch_args)

    rows = []
    if HAS_NUMBA:
        warmup_jit()
        _epoch_loops(*(t.copy() for t in tables), *epoch_args)
        _rank_loops(*tables, *rank_args)
        rows.append(("epoch", "numba", best_of(run_epoch_with(_epoch_loops), args.repeat)))
        rows.append(("rank", "numba", best_of(lambda: _rank_loops(*tables, *rank_args), args.repeat)))
    else:
        print("numba unavailable or disabled; timing the numpy backend only")
    rows.append(("epoch", "numpy", best_of(run_epoch_with(_epoch_numpy), args.repeat)))
    rows.append(("rank", "numpy", best_of(lambda: _rank_numpy(*tables, *rank_args), args.repeat)))

    print(
        f"\nworkload: n={args.n} dim={args.dim} entities={args.entities} "
        f"relations={args.relations} words={args.words} (best of {args.repeat})"
    )
    print(f"{'kernel':<8}{'backend':<9}{'seconds':>10}")
    for kernel, backend, secs in rows:
        print(f"{kernel:<8}{backend:<9}{secs:>10.3f}")
    if HAS_NUMBA:
        for kernel in ("epoch", "rank"):
            t = {backend: secs for k, backend, secs in rows if k == kernel}
            print(f"{kernel}: numba is {t['numpy'] / t['numba']:.1f}x faster")


if __name__ == "__main__":
    main()
