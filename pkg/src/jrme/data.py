"""Belief files, vocabularies and datasets.

A belief file is UTF-8 text with LF line endings, one belief per line,
four TAB-separated columns::

    head_entity <TAB> relation <TAB> tail_entity <TAB> mention

The mention column may be empty.  Lines starting with '#' are comments
and are skipped.  Example line::

    caroline\tcitylocatedinstate\tmaryland\tCounty and State of
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ConfigError, ParseError


class IdMap:
    """Bidirectional symbol <-> dense-id map; ids are contiguous from 0."""

    __slots__ = ("_ids", "_names")

    def __init__(self):
        self._ids: dict[str, int] = {}
        self._names: list[str] = []

    def add(self, name: str) -> int:
        """Return the id for name, registering it if unseen."""
        i = self._ids.get(name)
        if i is None:
            i = len(self._names)
            self._ids[name] = i
            self._names.append(name)
        return i

    def get(self, name: str) -> int | None:
        return self._ids.get(name)

    def name(self, i: int) -> str:
        return self._names[i]

    @property
    def names(self) -> list[str]:
        return list(self._names)

    def __len__(self) -> int:
        return len(self._names)

    def __contains__(self, name: str) -> bool:
        return name in self._ids


class Vocabulary:
    """Entity, relation and mention-word namespaces, each an IdMap."""

    def __init__(self):
        self.entities = IdMap()
        self.relations = IdMap()
        self.words = IdMap()

    @classmethod
    def from_names(cls, entities, relations, words) -> "Vocabulary":
        v = cls()
        for n in entities:
            v.entities.add(n)
        for n in relations:
            v.relations.add(n)
        for n in words:
            v.words.add(n)
        return v


@dataclass(frozen=True)
class Belief:
    """One (head, relation, tail) triple plus its mention word ids."""

    head: int
    relation: int
    tail: int
    mention: tuple[int, ...] = ()


@dataclass
class Dataset:
    train: list[Belief]
    valid: list[Belief] = field(default_factory=list)
    test: list[Belief] = field(default_factory=list)


@dataclass
class ParseResult:
    beliefs: list[Belief]
    rejected: int = 0


def tokenize_mention(raw: str) -> list[str]:
    """Lowercase and split on whitespace runs; duplicates are kept.

    No stemming and no punctuation stripping: the mention is treated as
    a plain bag of surface tokens.
    """
    return raw.lower().split()


def parse_belief_file(path, vocab: Vocabulary, mode: str = "build") -> ParseResult:
    """Read a belief file into id-space beliefs.

    mode="build" registers unseen entities, relations and words.
    mode="frozen" rejects lines whose head, relation or tail is unknown
    (counted in the result) and silently drops unknown mention words.

    Raises ParseError for lines that do not have exactly 4 columns, and
    OSError if the file cannot be read.
    """
    if mode not in ("build", "frozen"):
        raise ConfigError(f"unknown parse mode: {mode!r}")
    build = mode == "build"
    beliefs: list[Belief] = []
    rejected = 0
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, 1):
            line = line.rstrip("\n")
            if line.startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) != 4:
                raise ParseError(path, line_no, f"expected 4 tab-separated columns, got {len(cols)}")
            head_s, rel_s, tail_s, mention_s = cols
            tokens = tokenize_mention(mention_s)
            if build:
                h = vocab.entities.add(head_s)
                r = vocab.relations.add(rel_s)
                t = vocab.entities.add(tail_s)
                m = tuple(vocab.words.add(w) for w in tokens)
            else:
                h = vocab.entities.get(head_s)
                r = vocab.relations.get(rel_s)
                t = vocab.entities.get(tail_s)
                if h is None or r is None or t is None:
                    rejected += 1
                    continue
                ids = (vocab.words.get(w) for w in tokens)
                m = tuple(i for i in ids if i is not None)
            beliefs.append(Belief(h, r, t, m))
    return ParseResult(beliefs, rejected)


def belief_to_line(belief: Belief, vocab: Vocabulary) -> str:
    """Serialize a belief back to its 4-column TSV form (no newline)."""
    return "\t".join(
        (
            vocab.entities.name(belief.head),
            vocab.relations.name(belief.relation),
            vocab.entities.name(belief.tail),
            " ".join(vocab.words.name(w) for w in belief.mention),
        )
    )


def load_dataset(train_path, valid_path=None, test_path=None):
    """Load train/valid/test belief files.

    The vocabulary is built from the training file; validation and test
    files are parsed with the vocabulary frozen, so lines referencing
    unknown entities or relations are dropped and counted.

    Returns (Dataset, Vocabulary, rejected) where rejected maps split
    name to the number of rejected lines.
    """
    vocab = Vocabulary()
    train = parse_belief_file(train_path, vocab, "build")
    rejected = {"train": train.rejected}
    valid = ParseResult([])
    test = ParseResult([])
    if valid_path is not None:
        valid = parse_belief_file(valid_path, vocab, "frozen")
        rejected["valid"] = valid.rejected
    if test_path is not None:
        test = parse_belief_file(test_path, vocab, "frozen")
        rejected["test"] = test.rejected
    return Dataset(train.beliefs, valid.beliefs, test.beliefs), vocab, rejected


@dataclass(frozen=True)
class DatasetStats:
    n_entities: int
    n_relations: int
    n_train: int
    n_valid: int
    n_test: int


def dataset_stats(ds: Dataset, vocab: Vocabulary) -> DatasetStats:
    return DatasetStats(
        n_entities=len(vocab.entities),
        n_relations=len(vocab.relations),
        n_train=len(ds.train),
        n_valid=len(ds.valid),
        n_test=len(ds.test),
    )


def format_stats(stats: DatasetStats) -> str:
    rows = [
        ("#(ENTITIES)", stats.n_entities),
        ("#(RELATIONS)", stats.n_relations),
        ("#(TRAINING EX.)", stats.n_train),
        ("#(VALIDATING EX.)", stats.n_valid),
        ("#(TESTING EX.)", stats.n_test),
    ]
    width = max(len(label) for label, _ in rows)
    return "\n".join(f"{label:<{width}}  {count:>10,}" for label, count in rows)
