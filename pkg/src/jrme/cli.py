"""Command-line front door: train, eval, grid, predict, stats.

Exit codes: 0 success, 1 usage or configuration error, 2 data error
(unreadable or malformed files, empty effective splits), 3 numeric
abort during training.  The JRME_SEED environment variable, when set,
overrides --seed everywhere a seed is taken.
"""

from __future__ import annotations

import argparse
import datetime
import hashlib
import json
import os
import sys

import numpy as np

from .data import dataset_stats, format_stats, load_dataset, parse_belief_file, tokenize_mention
from .embeddings import ModelConfig, load_model, save_model
from .errors import ConfigError, DataError, TrainingDivergedError
from .evaluation import candidate_scores, evaluate, format_report, write_ranks_tsv
from .kernels import BACKEND
from .training import VARIANTS, grid_search, train


class _Parser(argparse.ArgumentParser):
    """argparse reports usage problems by raising, so main can map them
    to exit code 1 instead of argparse's default 2."""

    def error(self, message):
        raise ConfigError(message)


def _resolve_seed(args) -> int:
    env = os.environ.get("JRME_SEED")
    if env:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"JRME_SEED must be an integer, got {env!r}") from None
    return args.seed


def _resolve_threads(args) -> int:
    if args.threads < 1:
        raise ConfigError(f"--threads must be >= 1, got {args.threads}")
    if args.threads > 1 and not args.nondeterministic_ok:
        raise ConfigError(
            "--threads > 1 gives up bit-reproducibility; pass --nondeterministic-ok to accept"
        )
    return args.threads


def _config_from_args(args) -> ModelConfig:
    return ModelConfig(
        dim=args.dim,
        alpha=args.alpha,
        beta=args.beta,
        gamma=args.gamma,
        learning_rate=args.lr,
        epochs=args.epochs,
        neg_mode=args.neg,
        seed=_resolve_seed(args),
        normalize_entities=not args.no_normalize,
    )


def _file_sha256(paths) -> str:
    h = hashlib.sha256()
    for p in paths:
        if p is None:
            continue
        h.update(os.path.basename(p).encode("utf-8") + b"\0")
        with open(p, "rb") as f:
            for chunk in iter(lambda: f.read(1 << 20), b""):
                h.update(chunk)
        h.update(b"\0")
    return h.hexdigest()


def _write_manifest(out_path, config, variant, inputs, outputs) -> None:
    manifest = {
        "config": {
            "dim": config.dim,
            "alpha": config.alpha,
            "beta": config.beta,
            "gamma": config.gamma,
            "learning_rate": config.learning_rate,
            "epochs": config.epochs,
            "neg_mode": config.neg_mode,
            "seed": config.seed,
            "normalize_entities": config.normalize_entities,
        },
        "variant": variant,
        "inputs": {k: v for k, v in inputs.items() if v is not None},
        "dataset_sha256": _file_sha256(inputs.values()),
        "outputs": outputs,
        "backend": BACKEND,
        "created": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    path = f"{out_path}.manifest.json"
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    os.replace(tmp, path)


def _report_rejections(rejected: dict, log) -> None:
    for split, count in rejected.items():
        if count:
            print(f"warning: {split}: {count} line(s) rejected (unknown symbols)", file=log)


def cmd_train(args) -> int:
    config = _config_from_args(args)
    threads = _resolve_threads(args)
    dataset, vocab, rejected = load_dataset(args.train, args.valid, None)
    _report_rejections(rejected, sys.stderr)
    table, _ = train(dataset, vocab, config, args.variant, n_threads=threads, verbose=True)
    save_model(table, vocab, config, args.out)
    _write_manifest(
        args.out, config, args.variant,
        {"train": args.train, "valid": args.valid},
        {"model": args.out},
    )
    if dataset.valid:
        report = evaluate(table, dataset.valid, args.variant, n_workers=threads)
        print(format_report(report, args.variant.upper()))
    return 0


def cmd_eval(args) -> int:
    table, vocab, _ = load_model(args.model)
    result = parse_belief_file(args.test, vocab, mode="frozen")
    if result.rejected:
        print(
            f"warning: {args.test}: {result.rejected} line(s) rejected (unknown symbols)",
            file=sys.stderr,
        )
    if not result.beliefs:
        raise DataError(f"{args.test}: no evaluable beliefs (all lines rejected)")
    threads = _resolve_threads(args) if args.threads > 1 else 1
    report = evaluate(table, result.beliefs, args.variant, n_workers=threads)
    print(format_report(report, args.variant.upper()))
    if args.ranks_out:
        write_ranks_tsv(report, args.ranks_out)
    return 0


def cmd_grid(args) -> int:
    base = ModelConfig(
        learning_rate=args.lr,
        epochs=args.epochs,
        neg_mode=args.neg,
        seed=_resolve_seed(args),
        normalize_entities=not args.no_normalize,
    )
    threads = _resolve_threads(args)
    dataset, vocab, rejected = load_dataset(args.train, args.valid, None)
    _report_rejections(rejected, sys.stderr)
    result = grid_search(
        dataset, vocab,
        args.dims, args.alphas, args.betas, args.gammas,
        base, args.variant, n_threads=threads,
    )
    for point in result.points:
        c, r = point.config, point.report
        print(
            f"dim={c.dim} alpha={c.alpha} beta={c.beta} gamma={c.gamma} "
            f"avg_rank={r.avg_rank:.4f} hit@10={r.hit_at_10:.4f} hit@1={r.hit_at_1:.4f}"
        )
    b = result.best.config
    print(f"best: dim={b.dim} alpha={b.alpha} beta={b.beta} gamma={b.gamma}")
    if args.out:
        tmp = f"{args.out}.tmp"
        with open(tmp, "w", encoding="utf-8") as f:
            json.dump(
                {
                    "dim": b.dim, "alpha": b.alpha, "beta": b.beta, "gamma": b.gamma,
                    "learning_rate": b.learning_rate, "epochs": b.epochs,
                    "neg_mode": b.neg_mode, "seed": b.seed,
                    "normalize_entities": b.normalize_entities,
                },
                f, indent=2, sort_keys=True,
            )
            f.write("\n")
        os.replace(tmp, args.out)
    return 0


def cmd_predict(args) -> int:
    if args.topk < 1:
        raise ConfigError(f"--topk must be >= 1, got {args.topk}")
    table, vocab, _ = load_model(args.model)
    with open(args.input, encoding="utf-8") as f:
        for line_no, line in enumerate(f, 1):
            line = line.rstrip("\n")
            if line.startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) != 3:
                print(f"{line_no}\tERROR\texpected 3 tab-separated columns, got {len(cols)}")
                continue
            head_s, tail_s, mention_s = cols
            h = vocab.entities.get(head_s)
            t = vocab.entities.get(tail_s)
            if h is None or t is None:
                missing = head_s if h is None else tail_s
                print(f"{line_no}\tERROR\tunknown entity {missing!r}")
                continue
            words = [vocab.words.get(w) for w in tokenize_mention(mention_s)]
            mention = tuple(w for w in words if w is not None)
            scores = candidate_scores(table, h, t, mention, "jrme")
            k = min(args.topk, table.n_relations)
            top = np.argsort(scores, kind="stable")[:k]
            for pos, rid in enumerate(top, 1):
                print(f"{line_no}\t{pos}\t{vocab.relations.name(int(rid))}\t{float(scores[rid])!r}")
    return 0


def cmd_stats(args) -> int:
    dataset, vocab, rejected = load_dataset(args.train, args.valid, args.test)
    _report_rejections(rejected, sys.stderr)
    print(format_stats(dataset_stats(dataset, vocab)))
    return 0


def _add_common_model_flags(p) -> None:
    p.add_argument("--variant", choices=VARIANTS, default="jrme")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument(
        "--nondeterministic-ok", action="store_true",
        help="acknowledge that --threads > 1 is not bit-reproducible",
    )


def _add_train_flags(p) -> None:
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--neg", default="all", help="negative mode: all | sample:K")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument(
        "--no-normalize", action="store_true",
        help="skip entity renormalization after each update",
    )


def _comma_list(kind):
    def parse(text):
        try:
            return [kind(v) for v in text.split(",") if v != ""]
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad list element in {text!r}") from None

    return parse


def build_parser() -> _Parser:
    parser = _Parser(prog="jrme", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model from a belief file", parents=[])
    p.add_argument("--train", required=True)
    p.add_argument("--valid")
    p.add_argument("--out", required=True)
    p.add_argument("--dim", type=int, default=100)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=2.0)
    _add_train_flags(p)
    _add_common_model_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a model on a test file")
    p.add_argument("--model", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--ranks-out", help="write per-example ranks as TSV")
    _add_common_model_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("grid", help="hyperparameter grid search on a validation split")
    p.add_argument("--train", required=True)
    p.add_argument("--valid", required=True)
    p.add_argument("--dims", type=_comma_list(int), default=[10, 20, 50, 100, 200])
    p.add_argument("--alphas", type=_comma_list(float), default=[0.1, 1.0, 2.0, 5.0, 10.0])
    p.add_argument("--betas", type=_comma_list(float), default=[0.1, 1.0, 2.0, 5.0, 10.0])
    p.add_argument("--gammas", type=_comma_list(float), default=[0.1, 1.0, 2.0, 5.0, 10.0])
    p.add_argument("--out", help="write the best configuration as JSON")
    _add_train_flags(p)
    _add_common_model_flags(p)
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("predict", help="rank relations for head/tail/mention lines")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--topk", type=int, default=10)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("stats", help="print dataset statistics")
    p.add_argument("--train", required=True)
    p.add_argument("--valid")
    p.add_argument("--test")
    p.set_defaults(func=cmd_stats)

    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (DataError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except TrainingDivergedError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
