"""Embedding tables, model configuration and model-file persistence.

Model file layout (all integers little-endian):

    bytes 0..5    magic b"JRME1\\n"
    bytes 6..13   uint64 length of the JSON header
    header        UTF-8 JSON: config plus entity/relation/word names in id order
    payload       entity, relation and word tables, row-major float64
"""

from __future__ import annotations

import dataclasses
import json
import os
import struct
from dataclasses import dataclass

import numpy as np

from .data import Vocabulary
from .errors import ConfigError, FormatError

MAGIC = b"JRME1\n"

_SEED_MASK = (1 << 64) - 1


@dataclass(frozen=True)
class ModelConfig:
    """Hyperparameters for training any of the three variants.

    alpha, beta and gamma are the ranking margins of the KRE, TME and
    JRME objectives.  neg_mode is "all" (every wrong relation is a
    negative) or "sample:K" (K wrong relations drawn uniformly without
    replacement per example).
    """

    dim: int = 100
    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 2.0
    learning_rate: float = 0.01
    epochs: int = 100
    neg_mode: str = "all"
    seed: int = 0
    normalize_entities: bool = True

    def __post_init__(self):
        if self.dim <= 0:
            raise ConfigError(f"dim must be positive, got {self.dim}")
        for name in ("alpha", "beta", "gamma"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be nonnegative, got {getattr(self, name)}")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.epochs < 0:
            raise ConfigError(f"epochs must be nonnegative, got {self.epochs}")
        parse_neg_mode(self.neg_mode)


def parse_neg_mode(value: str) -> tuple[str, int]:
    """Split a neg_mode string into ("all", 0) or ("sample", k)."""
    if value == "all":
        return "all", 0
    if value.startswith("sample:"):
        try:
            k = int(value.split(":", 1)[1])
        except ValueError:
            raise ConfigError(f"bad sample count in neg_mode {value!r}") from None
        if k < 1:
            raise ConfigError(f"neg_mode sample count must be >= 1, got {k}")
        return "sample", k
    raise ConfigError(f"neg_mode must be 'all' or 'sample:K', got {value!r}")


@dataclass
class EmbeddingTable:
    """Dense float64 vectors for entities, relations and mention words.

    All three tables share one dimension so relation and mention vectors
    live in the same space.
    """

    entity_vecs: np.ndarray
    relation_vecs: np.ndarray
    word_vecs: np.ndarray

    @property
    def dim(self) -> int:
        return self.relation_vecs.shape[1]

    @property
    def n_entities(self) -> int:
        return self.entity_vecs.shape[0]

    @property
    def n_relations(self) -> int:
        return self.relation_vecs.shape[0]

    @property
    def n_words(self) -> int:
        return self.word_vecs.shape[0]

    def copy(self) -> "EmbeddingTable":
        return EmbeddingTable(
            self.entity_vecs.copy(), self.relation_vecs.copy(), self.word_vecs.copy()
        )

    def all_finite(self) -> bool:
        return bool(
            np.isfinite(self.entity_vecs).all()
            and np.isfinite(self.relation_vecs).all()
            and np.isfinite(self.word_vecs).all()
        )


def init_embeddings(vocab: Vocabulary, config: ModelConfig) -> EmbeddingTable:
    """Draw fresh tables: uniform on [-6/sqrt(d), 6/sqrt(d)] componentwise,
    then entity rows rescaled to unit Euclidean norm.

    A pure function of (seed, vocabulary sizes, dim): equal inputs give
    bit-identical tables.  Generation order is entities, relations, words.
    """
    d = config.dim
    bound = 6.0 / np.sqrt(d)
    rng = np.random.default_rng(config.seed & _SEED_MASK)
    entity = rng.uniform(-bound, bound, (len(vocab.entities), d))
    relation = rng.uniform(-bound, bound, (len(vocab.relations), d))
    word = rng.uniform(-bound, bound, (len(vocab.words), d))
    norms = np.linalg.norm(entity, axis=1, keepdims=True)
    np.maximum(norms, np.finfo(np.float64).tiny, out=norms)
    entity /= norms
    return EmbeddingTable(entity, relation, word)


def _config_to_dict(config: ModelConfig) -> dict:
    return dataclasses.asdict(config)


def _config_from_dict(d: dict) -> ModelConfig:
    fields = {f.name for f in dataclasses.fields(ModelConfig)}
    unknown = set(d) - fields
    if unknown:
        raise FormatError(f"model header has unknown config keys: {sorted(unknown)}")
    try:
        return ModelConfig(**d)
    except (TypeError, ConfigError) as e:
        raise FormatError(f"model header config is invalid: {e}") from None


def save_model(table: EmbeddingTable, vocab: Vocabulary, config: ModelConfig, path) -> None:
    """Write table + vocabulary + config as one self-describing file.

    The write is atomic: the payload goes to a sibling temp file that is
    renamed over the target, so a failed save never leaves a partial model.
    """
    header = {
        "config": _config_to_dict(config),
        "dim": table.dim,
        "entities": vocab.entities.names,
        "relations": vocab.relations.names,
        "words": vocab.words.names,
    }
    blob = json.dumps(header, ensure_ascii=False, sort_keys=True).encode("utf-8")
    tmp = f"{path}.tmp"
    try:
        with open(tmp, "wb") as f:
            f.write(MAGIC)
            f.write(struct.pack("<Q", len(blob)))
            f.write(blob)
            f.write(np.ascontiguousarray(table.entity_vecs, dtype="<f8").tobytes())
            f.write(np.ascontiguousarray(table.relation_vecs, dtype="<f8").tobytes())
            f.write(np.ascontiguousarray(table.word_vecs, dtype="<f8").tobytes())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _read_exact(f, n: int, what: str) -> bytes:
    buf = f.read(n)
    if len(buf) != n:
        raise FormatError(f"{what} truncated: expected {n} bytes, got {len(buf)}")
    return buf


def load_model(path) -> tuple[EmbeddingTable, Vocabulary, ModelConfig]:
    """Exact inverse of save_model."""
    with open(path, "rb") as f:
        magic = f.read(len(MAGIC))
        if magic != MAGIC:
            raise FormatError(f"{path}: not a JRME model file (bad magic)")
        (header_len,) = struct.unpack("<Q", _read_exact(f, 8, "header length"))
        blob = _read_exact(f, header_len, "header")
        try:
            header = json.loads(blob.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as e:
            raise FormatError(f"{path}: unreadable header: {e}") from None
        for key in ("config", "dim", "entities", "relations", "words"):
            if key not in header:
                raise FormatError(f"{path}: header missing {key!r}")
        config = _config_from_dict(header["config"])
        dim = int(header["dim"])
        vocab = Vocabulary.from_names(header["entities"], header["relations"], header["words"])

        def read_table(n_rows: int, what: str) -> np.ndarray:
            raw = _read_exact(f, n_rows * dim * 8, f"{what} table")
            return np.frombuffer(raw, dtype="<f8").reshape(n_rows, dim).astype(np.float64)

        entity = read_table(len(vocab.entities), "entity")
        relation = read_table(len(vocab.relations), "relation")
        word = read_table(len(vocab.words), "word")
        if f.read(1):
            raise FormatError(f"{path}: trailing data after word table")
    return EmbeddingTable(entity, relation, word), vocab, config
