import json
import math
import random

import pytest

from spandecode.scorer import NEG_INF, ScoreRequest, StepScores, TableLM
from spandecode.vocab import TokenSeq, VocabularyMismatchError

from conftest import bare_vocab, random_distribution


def make_request(vocab, target_ids, prefix_ids=(), source_ids=()):
    return ScoreRequest(
        source=vocab.seq(source_ids),
        forced_target=vocab.seq(target_ids),
        forced_prefix=vocab.seq(prefix_ids),
    )


class TestTeacherForcedPass:
    def test_empty_target_still_scores_terminator(self):
        vocab = bare_vocab(4)
        lm = TableLM.uniform(vocab)
        scores = lm.teacher_forced_pass(make_request(vocab, ()))
        assert scores.gold_logprob == ()
        assert len(scores.term_logprob) == 1
        assert scores.term_logprob[0] == pytest.approx(math.log(0.25))

    def test_table_entries_read_back_exactly(self):
        vocab = bare_vocab(4)
        term = vocab.terminator_id
        lm = TableLM(
            vocab,
            contexts={
                (): {0: 0.5, term: 0.25, 1: 0.25},
                (0,): {term: 1.0},
            },
        )
        scores = lm.teacher_forced_pass(make_request(vocab, (0,)))
        assert scores.gold_logprob == (math.log(0.5),)
        assert scores.term_logprob == (math.log(0.25), 0.0)

    def test_uniform_all_entries_equal(self):
        vocab = bare_vocab(4)
        lm = TableLM.uniform(vocab)
        scores = lm.teacher_forced_pass(make_request(vocab, (0, 1, 2)))
        assert all(g == pytest.approx(math.log(0.25)) for g in scores.gold_logprob)
        assert len(scores.gold_logprob) == 3
        assert len(scores.term_logprob) == 4

    def test_all_entries_nonpositive(self):
        rng = random.Random(3)
        vocab = bare_vocab(6)
        lm = TableLM(vocab, default=random_distribution(rng, 6))
        scores = lm.teacher_forced_pass(make_request(vocab, (1, 2, 3, 4)))
        assert all(g <= 0 for g in scores.gold_logprob)
        assert all(t <= 0 for t in scores.term_logprob)

    def test_vocab_mismatch(self):
        vocab = bare_vocab(4)
        lm = TableLM.uniform(vocab)
        alien = TokenSeq((0,), "deadbeef")
        with pytest.raises(VocabularyMismatchError):
            lm.teacher_forced_pass(ScoreRequest(alien, alien, alien))


class TestNextTokenDistribution:
    def test_uniform(self):
        vocab = bare_vocab(5)
        lm = TableLM.uniform(vocab)
        dist = lm.next_token_distribution(vocab.seq(()), vocab.seq((1, 2)))
        assert all(v == pytest.approx(math.log(0.2)) for v in dist)

    def test_listed_context(self):
        vocab = bare_vocab(4)
        lm = TableLM(vocab, contexts={(): {0: 0.5, 3: 0.25, 1: 0.25}})
        dist = lm.next_token_distribution(vocab.seq(()), vocab.seq(()))
        assert dist[0] == math.log(0.5)
        assert dist[2] == NEG_INF

    def test_unlisted_context_falls_back_to_default(self):
        vocab = bare_vocab(4)
        lm = TableLM(vocab, contexts={(0,): {1: 1.0}})
        dist = lm.next_token_distribution(vocab.seq(()), vocab.seq((3, 3, 3)))
        assert dist == [math.log(0.25)] * 4

    def test_source_pinned_context_beats_wildcard(self):
        vocab = bare_vocab(4)
        lm = TableLM(vocab, contexts={(): {0: 1.0}, (((1,)), ()): {2: 1.0}})
        assert lm.next_token_distribution(vocab.seq((1,)), vocab.seq(()))[2] == 0.0
        assert lm.next_token_distribution(vocab.seq((2,)), vocab.seq(()))[0] == 0.0

    def test_normalization_property(self):
        rng = random.Random(5)
        for _ in range(50):
            size = rng.randint(2, 12)
            vocab = bare_vocab(size)
            lm = TableLM(vocab, default=random_distribution(rng, size))
            dist = lm.next_token_distribution(vocab.seq(()), vocab.seq(()))
            assert sum(math.exp(v) for v in dist) == pytest.approx(1.0, abs=1e-9)


class TestPassAccounting:
    def test_counter_lifecycle(self):
        vocab = bare_vocab(4)
        lm = TableLM.uniform(vocab)
        assert lm.pass_count() == 0
        lm.teacher_forced_pass(make_request(vocab, (0, 1)))
        assert lm.pass_count() == 1
        lm.next_token_distribution(vocab.seq(()), vocab.seq(()))
        assert lm.pass_count() == 2
        lm.reset_passes()
        assert lm.pass_count() == 0

    def test_one_pass_regardless_of_target_length(self):
        vocab = bare_vocab(4)
        lm = TableLM.uniform(vocab)
        lm.teacher_forced_pass(make_request(vocab, tuple([0] * 50)))
        assert lm.pass_count() == 1


class TestTerminatorSet:
    def test_logsum_over_terminator_set(self):
        vocab = bare_vocab(4)
        # Terminate on token 2 or the real terminator: probabilities add.
        lm = TableLM(
            vocab,
            contexts={(): {2: 0.25, 3: 0.25, 0: 0.5}},
            terminator_ids={2, 3},
        )
        scores = lm.teacher_forced_pass(make_request(vocab, ()))
        assert scores.term_logprob[0] == pytest.approx(math.log(0.5))


class TestTableValidation:
    def test_unnormalized_distribution_rejected(self):
        vocab = bare_vocab(4)
        with pytest.raises(ValueError):
            TableLM(vocab, contexts={(): {0: 0.5, 1: 0.4}})

    def test_out_of_range_token_rejected(self):
        vocab = bare_vocab(4)
        with pytest.raises(ValueError):
            TableLM(vocab, contexts={(): {7: 1.0}})


class TestFileFormat:
    def test_load_table_file(self, tmp_path):
        vocab = bare_vocab(4)
        path = tmp_path / "table.json"
        path.write_text(
            json.dumps(
                {
                    "*#": {"0": 0.5, "3": 0.5},
                    "*#0": {"3": 1.0},
                    "1,2#0,1": {"2": 1.0},
                    "default": {"0": 0.25, "1": 0.25, "2": 0.25, "3": 0.25},
                }
            )
        )
        lm = TableLM.from_file(path, vocab)
        assert lm.next_token_distribution(vocab.seq(()), vocab.seq(()))[0] == math.log(0.5)
        assert lm.next_token_distribution(vocab.seq(()), vocab.seq((0,)))[3] == 0.0
        assert lm.next_token_distribution(vocab.seq((1, 2)), vocab.seq((0, 1)))[2] == 0.0
        assert lm.next_token_distribution(vocab.seq(()), vocab.seq((2, 2)))[1] == math.log(0.25)
