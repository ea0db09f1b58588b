"""Teacher-forced scoring interface over a conditional language model.

A scorer answers two questions about P(. | source): the per-step
log-probability of a forced target (plus the terminator log-probability at
every step boundary), and the full next-token log-distribution for a given
decoder prefix. Each interface call counts as exactly one "pass" against
an atomic counter, which is what lets the decoders' pass-complexity claims
be asserted in tests.
"""

from __future__ import annotations

import json
import math
import threading
from dataclasses import dataclass, field
from pathlib import Path

from .vocab import TokenSeq, Vocabulary, VocabularyMismatchError

NEG_INF = float("-inf")

# Probability-space tolerance when validating stored distributions.
DIST_SUM_TOL = 1e-12


class ScorerError(RuntimeError):
    """A scoring request could not be served."""


@dataclass(frozen=True)
class ScoreRequest:
    """One teacher-forced scoring request.

    ``forced_prefix`` is the decoder prefix fed before the target (e.g. the
    opening sentinel); ``forced_target`` is the sequence whose per-step
    scores are wanted.
    """

    source: TokenSeq
    forced_target: TokenSeq
    forced_prefix: TokenSeq

    def __post_init__(self):
        if not (
            self.source.vocab_id
            == self.forced_target.vocab_id
            == self.forced_prefix.vocab_id
        ):
            raise VocabularyMismatchError("request sequences use different vocabularies")


@dataclass(frozen=True)
class StepScores:
    """Per-step scores for a forced target of length m.

    ``gold_logprob[k]`` is log P(target[k] | prefix + target[:k]);
    ``term_logprob[k]`` is the log-probability of terminating after
    ``prefix + target[:k]`` (log-sum over the configured terminator set),
    so it has m + 1 entries.
    """

    gold_logprob: tuple[float, ...]
    term_logprob: tuple[float, ...]


def logsumexp(values) -> float:
    values = [v for v in values]
    hi = max(values, default=NEG_INF)
    if hi == NEG_INF:
        return NEG_INF
    return hi + math.log(sum(math.exp(v - hi) for v in values))


class Scorer:
    """Base class handling vocabulary checks, terminator pooling and pass counting."""

    def __init__(self, vocab: Vocabulary, terminator_ids=None):
        self.vocab = vocab
        if terminator_ids is None:
            terminator_ids = {vocab.terminator_id}
        self.terminator_ids = frozenset(terminator_ids)
        self._passes = 0
        self._lock = threading.Lock()

    # -- pass accounting ------------------------------------------------
    def pass_count(self) -> int:
        with self._lock:
            return self._passes

    def reset_passes(self) -> None:
        with self._lock:
            self._passes = 0

    def _count_pass(self) -> None:
        with self._lock:
            self._passes += 1

    def _check_vocab(self, seq: TokenSeq) -> None:
        if seq.vocab_id != self.vocab.vocab_id:
            raise VocabularyMismatchError(
                "request vocabulary does not match the scorer's"
            )

    # -- public interface -----------------------------------------------
    def teacher_forced_pass(self, req: ScoreRequest) -> StepScores:
        """Score a forced target in one counted pass."""
        self._check_vocab(req.source)
        self._count_pass()
        return self._score_forced(req)

    def next_token_distribution(self, source: TokenSeq, prefix: TokenSeq):
        """Full next-token log-distribution after ``prefix``; one counted pass."""
        self._check_vocab(source)
        self._check_vocab(prefix)
        self._count_pass()
        return self._next_dist(source, prefix)

    # -- implementation hooks -------------------------------------------
    def _score_forced(self, req: ScoreRequest) -> StepScores:
        raise NotImplementedError

    def _next_dist(self, source: TokenSeq, prefix: TokenSeq):
        raise NotImplementedError


class TableLM(Scorer):
    """Deterministic language model backed by explicit probability tables.

    Contexts map a decoder prefix (optionally pinned to a specific source)
    to a full next-token distribution; anything unlisted falls back to a
    single default distribution. All distributions live over the piece
    vocabulary (byte-fallback ids excluded) and must sum to 1 within 1e-12.
    """

    def __init__(self, vocab: Vocabulary, contexts=None, default=None, terminator_ids=None):
        super().__init__(vocab, terminator_ids)
        self._any_source: dict[tuple[int, ...], list[float]] = {}
        self._by_source: dict[tuple[tuple[int, ...], tuple[int, ...]], list[float]] = {}
        if default is None:
            default = {i: 1.0 / vocab.size for i in range(vocab.size)}
        self._default = self._to_logdist(default)
        for key, dist in (contexts or {}).items():
            self.set_context(key, dist)

    # ------------------------------------------------------------------
    def _to_logdist(self, dist: dict[int, float]) -> list[float]:
        total = sum(dist.values())
        if abs(total - 1.0) > DIST_SUM_TOL:
            raise ValueError(f"distribution sums to {total!r}, expected 1.0")
        out = [NEG_INF] * self.vocab.size
        for token_id, prob in dist.items():
            token_id = int(token_id)
            if not 0 <= token_id < self.vocab.size:
                raise ValueError(f"token id {token_id} outside piece vocabulary")
            if prob < 0:
                raise ValueError("negative probability")
            if prob > 0:
                out[token_id] = math.log(prob)
        return out

    def set_context(self, key, dist: dict[int, float]) -> None:
        """Register a context distribution.

        ``key`` is either a prefix id tuple (matches any source) or a
        ``(source_ids, prefix_ids)`` pair.
        """
        key = tuple(key)
        if key and isinstance(key[0], (tuple, list)):
            source_ids, prefix_ids = key
            self._by_source[(tuple(source_ids), tuple(prefix_ids))] = self._to_logdist(dist)
        else:
            self._any_source[tuple(int(t) for t in key)] = self._to_logdist(dist)

    @classmethod
    def uniform(cls, vocab: Vocabulary, terminator_ids=None) -> "TableLM":
        return cls(vocab, terminator_ids=terminator_ids)

    @classmethod
    def from_file(cls, path: str | Path, vocab: Vocabulary, terminator_ids=None) -> "TableLM":
        """Load from a JSON map of "src#p1,p2,..." keys; src "*" matches any source."""
        with open(path, encoding="utf-8") as f:
            raw = json.load(f)
        default = raw.pop("default", None)
        if default is not None:
            default = {int(k): float(v) for k, v in default.items()}
        lm = cls(vocab, default=default, terminator_ids=terminator_ids)
        for key, dist in raw.items():
            src_part, _, prefix_part = key.partition("#")
            prefix = tuple(int(t) for t in prefix_part.split(",") if t != "")
            dist = {int(k): float(v) for k, v in dist.items()}
            if src_part == "*":
                lm.set_context(prefix, dist)
            else:
                source = tuple(int(t) for t in src_part.split(",") if t != "")
                lm.set_context((source, prefix), dist)
        return lm

    # ------------------------------------------------------------------
    def _full_distribution(self, source: TokenSeq, prefix_ids: tuple[int, ...]):
        dist = self._by_source.get((source.ids, prefix_ids))
        if dist is None:
            dist = self._any_source.get(prefix_ids)
        if dist is None:
            dist = self._default
        return dist

    def _term_logprob(self, dist) -> float:
        return logsumexp(dist[t] for t in self.terminator_ids)

    def _score_forced(self, req: ScoreRequest) -> StepScores:
        gold: list[float] = []
        term: list[float] = []
        prefix = req.forced_prefix.ids
        target = req.forced_target.ids
        for k in range(len(target) + 1):
            dist = self._full_distribution(req.source, prefix + target[:k])
            term.append(self._term_logprob(dist))
            if k < len(target):
                # Byte-fallback ids sit outside the piece distribution and
                # are never predicted by a table model.
                token = target[k]
                gold.append(dist[token] if token < len(dist) else NEG_INF)
        return StepScores(tuple(gold), tuple(term))

    def _next_dist(self, source: TokenSeq, prefix: TokenSeq):
        return list(self._full_distribution(source, prefix.ids))
