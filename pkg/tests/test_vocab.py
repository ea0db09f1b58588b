import random

import pytest

from spandecode.vocab import (
    TokenSeq,
    UnknownTokenError,
    Vocabulary,
    VocabularyMismatchError,
    is_token_subsequence,
)


def ids_of(vocab, *pieces):
    return tuple(vocab.piece_id(p) for p in pieces)


class TestEncode:
    def test_empty_input(self, toy_vocab):
        assert toy_vocab.encode("").ids == ()

    def test_subword_boundary_artifact(self, toy_vocab):
        # "(1971)" segments across the digit boundary, "1971" does not.
        assert toy_vocab.encode("(1971)").ids == ids_of(toy_vocab, "▁(19", "71", ")")
        assert toy_vocab.encode("1971").ids == ids_of(toy_vocab, "▁1971")

    def test_longest_match_wins(self):
        vocab = Vocabulary(["a", "aa", "▁", "</s>"], "</s>", [])
        seq = vocab.encode("aa")
        assert [vocab.pieces[i] for i in seq.ids] == ["▁", "aa"]

    def test_deterministic(self, toy_vocab):
        text = "The album released in 1971."
        assert toy_vocab.encode(text).ids == toy_vocab.encode(text).ids

    def test_byte_fallback_covers_unknown_chars(self, toy_vocab):
        seq = toy_vocab.encode("xyz")
        assert all(toy_vocab.is_valid_id(i) for i in seq.ids)
        assert toy_vocab.decode(seq) == "xyz"

    def test_case_sensitive(self, toy_vocab):
        # "the" is a piece, "The" is too; they get different ids.
        assert toy_vocab.encode("the") != toy_vocab.encode("The")


class TestDecode:
    def test_empty(self, toy_vocab):
        assert toy_vocab.decode(toy_vocab.seq([])) == ""

    def test_paper_roundtrip(self, toy_vocab):
        assert toy_vocab.decode(toy_vocab.seq(ids_of(toy_vocab, "▁(19", "71", ")"))) == "(1971)"

    def test_boundary_marker_becomes_space(self, toy_vocab):
        seq = toy_vocab.seq(ids_of(toy_vocab, "▁the", "▁IRA"))
        assert toy_vocab.decode(seq) == "the IRA"

    def test_unknown_id_rejected(self, toy_vocab):
        with pytest.raises(UnknownTokenError):
            toy_vocab.decode([toy_vocab.size + 300])

    def test_vocab_mismatch_rejected(self, toy_vocab):
        other = TokenSeq((0,), "deadbeef")
        with pytest.raises(VocabularyMismatchError):
            toy_vocab.decode(other)


class TestRoundTrip:
    @pytest.mark.parametrize(
        "text",
        ["(1971)", "1971", "the IRA was active", "The album.", "odd☃chars", "a  b"],
    )
    def test_examples(self, toy_vocab, text):
        assert toy_vocab.decode(toy_vocab.encode(text)) == text

    def test_fuzz(self, toy_vocab):
        rng = random.Random(7)
        alphabet = "abcdefgh ()1971.IRAThe☃"
        for _ in range(300):
            text = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 30)))
            decoded = toy_vocab.decode(toy_vocab.encode(text))
            # Differences are confined to the boundary-marker whitespace rule.
            assert decoded.split() == text.split()


class TestSubsequence:
    def test_empty_needle(self, toy_vocab):
        hay = toy_vocab.encode("the IRA")
        assert is_token_subsequence(toy_vocab.encode(""), hay)

    def test_tokenization_mismatch(self, toy_vocab):
        # The answer "1971" is not a token subsequence of "(1971)".
        assert not is_token_subsequence(
            toy_vocab.encode("1971"), toy_vocab.encode("(1971)")
        )

    def test_suffix_match(self, toy_vocab):
        hay = toy_vocab.encode("(1971)")
        needle = toy_vocab.seq(ids_of(toy_vocab, "71", ")"))
        assert is_token_subsequence(needle, hay)

    def test_vocab_mismatch(self, toy_vocab):
        with pytest.raises(VocabularyMismatchError):
            is_token_subsequence(TokenSeq((0,), "deadbeef"), toy_vocab.encode("x"))

    def test_agrees_with_bruteforce(self, toy_vocab):
        rng = random.Random(11)
        for _ in range(200):
            hay = tuple(rng.randrange(toy_vocab.size) for _ in range(rng.randint(0, 12)))
            needle = tuple(rng.randrange(toy_vocab.size) for _ in range(rng.randint(0, 4)))
            expected = any(
                hay[i : i + len(needle)] == needle
                for i in range(len(hay) - len(needle) + 1)
            ) or len(needle) == 0
            got = is_token_subsequence(toy_vocab.seq(needle), toy_vocab.seq(hay))
            assert got == expected


class TestVocabulary:
    def test_special_ids_present(self, toy_vocab):
        assert toy_vocab.pieces[toy_vocab.terminator_id] == "</s>"
        assert [toy_vocab.pieces[i] for i in toy_vocab.sentinel_ids] == [
            "<extra_id_0>",
            "<extra_id_1>",
        ]

    def test_missing_special_rejected(self):
        with pytest.raises(ValueError):
            Vocabulary(["a"], terminator="</s>", sentinels=[])

    def test_duplicate_pieces_rejected(self):
        with pytest.raises(ValueError):
            Vocabulary(["a", "a", "</s>"], "</s>", [])

    def test_file_roundtrip(self, toy_vocab, tmp_path):
        import json

        path = tmp_path / "vocab.json"
        path.write_text(
            json.dumps(
                {
                    "pieces": toy_vocab.pieces,
                    "terminator": "</s>",
                    "sentinels": ["<extra_id_0>", "<extra_id_1>"],
                }
            ),
            encoding="utf-8",
        )
        loaded = Vocabulary.from_file(path)
        assert loaded.vocab_id == toy_vocab.vocab_id
