import pytest

from jrme.data import (
    Belief,
    DatasetStats,
    IdMap,
    Vocabulary,
    belief_to_line,
    dataset_stats,
    format_stats,
    load_dataset,
    parse_belief_file,
    tokenize_mention,
)
from jrme.errors import ConfigError, ParseError


class TestIdMap:
    def test_ids_are_dense_and_stable(self):
        m = IdMap()
        assert m.add("a") == 0
        assert m.add("b") == 1
        assert m.add("a") == 0
        assert len(m) == 2
        assert m.name(1) == "b"
        assert m.names == ["a", "b"]
        assert "a" in m and "c" not in m
        assert m.get("c") is None

    def test_from_names_round_trip(self):
        v = Vocabulary.from_names(["x", "y"], ["likes"], ["w1", "w2", "w3"])
        assert v.entities.get("y") == 1
        assert v.relations.get("likes") == 0
        assert len(v.words) == 3


class TestTokenize:
    def test_lowercases_and_splits_on_whitespace(self):
        assert tokenize_mention("Is The  Mayor\tOf") == ["is", "the", "mayor", "of"]

    def test_keeps_duplicates(self):
        assert tokenize_mention("very very good") == ["very", "very", "good"]

    def test_empty_and_blank(self):
        assert tokenize_mention("") == []
        assert tokenize_mention("   ") == []


class TestParse:
    def _write(self, tmp_path, text):
        p = tmp_path / "beliefs.tsv"
        p.write_text(text, encoding="utf-8")
        return p

    def test_build_mode_registers_everything(self, tmp_path):
        p = self._write(
            tmp_path,
            "caroline\tatheletePlaysForTeam\tsteelers\tplays linebacker for\n"
            "caroline\tatheleteWonAward\tmvp\t\n",
        )
        vocab = Vocabulary()
        result = parse_belief_file(p, vocab, mode="build")
        assert [b.head for b in result.beliefs] == [0, 0]
        assert result.beliefs[0].mention == (0, 1, 2)
        assert result.beliefs[1].mention == ()
        assert result.rejected == 0
        assert len(vocab.entities) == 3
        assert len(vocab.relations) == 2
        assert len(vocab.words) == 3

    def test_comment_lines_skipped(self, tmp_path):
        p = self._write(tmp_path, "# header\na\tr\tb\tx\n")
        result = parse_belief_file(p, Vocabulary(), mode="build")
        assert len(result.beliefs) == 1

    def test_wrong_column_count_names_the_line(self, tmp_path):
        p = self._write(tmp_path, "a\tr\tb\tx\na\tr\tb\n")
        with pytest.raises(ParseError) as err:
            parse_belief_file(p, Vocabulary(), mode="build")
        assert ":2:" in str(err.value)
        assert "4" in str(err.value)

    def test_frozen_mode_rejects_unknown_symbols(self, tmp_path):
        train = self._write(tmp_path, "a\tr\tb\thello world\n")
        vocab = Vocabulary()
        parse_belief_file(train, vocab, mode="build")
        test = tmp_path / "test.tsv"
        test.write_text(
            "a\tr\tb\thello novel\n"  # unknown word dropped, belief kept
            "a\tUNKNOWN\tb\thello\n"  # unknown relation: rejected
            "ghost\tr\tb\t\n",  # unknown entity: rejected
            encoding="utf-8",
        )
        result = parse_belief_file(test, vocab, mode="frozen")
        assert result.rejected == 2
        assert len(result.beliefs) == 1
        assert result.beliefs[0].mention == (0,)

    def test_frozen_reparse_of_training_file_rejects_nothing(self, tmp_path):
        p = self._write(tmp_path, "a\tr1\tb\tx y\nb\tr2\tc\tz\n")
        vocab = Vocabulary()
        built = parse_belief_file(p, vocab, mode="build")
        frozen = parse_belief_file(p, vocab, mode="frozen")
        assert frozen.rejected == 0
        assert frozen.beliefs == built.beliefs

    def test_unknown_mode_rejected(self, tmp_path):
        p = self._write(tmp_path, "")
        with pytest.raises(ConfigError):
            parse_belief_file(p, Vocabulary(), mode="lenient")

    def test_round_trip_through_serializer(self, tmp_path):
        p = self._write(tmp_path, "a\tr\tb\tword word again\n")
        vocab = Vocabulary()
        result = parse_belief_file(p, vocab, mode="build")
        line = belief_to_line(result.beliefs[0], vocab)
        assert line == "a\tr\tb\tword word again"
        p2 = self._write(tmp_path, line + "\n")
        again = parse_belief_file(p2, vocab, mode="frozen")
        assert again.beliefs == result.beliefs


class TestLoadDataset:
    def test_three_split_load(self, tmp_path):
        (tmp_path / "train.tsv").write_text("a\tr1\tb\tx\nb\tr2\tc\ty\n")
        (tmp_path / "valid.tsv").write_text("a\tr1\tc\tx\n")
        (tmp_path / "test.tsv").write_text("a\tr1\tb\t\nnew\tr1\tb\t\n")
        ds, vocab, rejected = load_dataset(
            tmp_path / "train.tsv", tmp_path / "valid.tsv", tmp_path / "test.tsv"
        )
        assert (len(ds.train), len(ds.valid), len(ds.test)) == (2, 1, 1)
        assert rejected == {"train": 0, "valid": 0, "test": 1}
        stats = dataset_stats(ds, vocab)
        assert stats == DatasetStats(3, 2, 2, 1, 1)

    def test_missing_file_surfaces_as_oserror(self, tmp_path):
        with pytest.raises(OSError):
            load_dataset(tmp_path / "nope.tsv")


class TestStatsFormat:
    def test_counts_are_comma_formatted(self):
        text = format_stats(DatasetStats(29904, 233, 57356, 10710, 10711))
        assert "#(ENTITIES)" in text
        assert "29,904" in text
        assert "233" in text
        assert "57,356" in text
        assert "10,710" in text and "10,711" in text
        assert len(text.splitlines()) == 5
