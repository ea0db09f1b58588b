"""The three decoders: exact span search via dynamic programming, the naive
per-span scorer it is checked against, and greedy autoregressive decoding.

The exact decoder exploits the fact that every passage span of length j
starting at i is the j-th prefix of the suffix starting at i, so one
teacher-forced pass per suffix yields the scores of all its prefixes:
n passes total instead of one pass per span.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .scorer import ScoreRequest, Scorer
from .vocab import TokenSeq

GREEDY = "greedy"
EXACT_EXTRACT = "exact_extract"
NAIVE = "naive"


@dataclass(frozen=True)
class DecodeConfig:
    max_span_len: int | None = None
    max_greedy_steps: int = 64
    allow_empty_span: bool = False

    def __post_init__(self):
        if self.max_greedy_steps < 1:
            raise ValueError("max_greedy_steps must be >= 1")
        if self.max_span_len is not None and self.max_span_len < 1:
            raise ValueError("max_span_len must be >= 1 when set")


@dataclass
class SpanScoreTable:
    """Per-suffix score arrays for a passage of n tokens.

    ``ell[i][k]`` is the log-probability of the k-th token of the suffix
    starting at i given its preceding span tokens; ``eterm[i][k]`` the
    log-probability of terminating after k span tokens; ``L[i][j]`` the
    cumulative span log-probability, built by the recursion
    L(i,0) = 0, L(i,j) = L(i,j-1) + ell(i,j-1).
    """

    n: int
    ell: list[list[float]]
    eterm: list[list[float]]
    L: list[list[float]]

    def span_logprob(self, i: int, j: int) -> float:
        return self.L[i][j] + self.eterm[i][j]


@dataclass(frozen=True)
class DecodeResult:
    start: int | None
    length: int | None
    span_logprob: float
    text: str
    passes_used: int
    algorithm: str
    token_ids: tuple[int, ...] = ()
    extractive: bool = True
    truncated: bool = False

    def to_dict(self) -> dict:
        return {
            "start": self.start,
            "length": self.length,
            "span_logprob": self.span_logprob,
            "text": self.text,
            "passes_used": self.passes_used,
            "algorithm": self.algorithm,
            "token_ids": list(self.token_ids),
            "extractive": self.extractive,
            "truncated": self.truncated,
        }


def build_span_table(
    passage: TokenSeq,
    rendered_prompt: TokenSeq,
    prefix: TokenSeq,
    scorer: Scorer,
) -> SpanScoreTable:
    """Fill the score table with exactly one teacher-forced pass per suffix."""
    n = len(passage)
    if n == 0:
        raise ValueError("passage must contain at least one token")
    ell: list[list[float]] = []
    eterm: list[list[float]] = []
    L: list[list[float]] = []
    for i in range(n):
        scores = scorer.teacher_forced_pass(
            ScoreRequest(rendered_prompt, passage[i:], prefix)
        )
        ell.append(list(scores.gold_logprob))
        eterm.append(list(scores.term_logprob))
        row = [0.0]
        for j in range(1, n - i + 1):
            row.append(row[j - 1] + ell[i][j - 1])
        L.append(row)
    return SpanScoreTable(n=n, ell=ell, eterm=eterm, L=L)


def _span_candidates(n: int, cfg: DecodeConfig):
    min_j = 0 if cfg.allow_empty_span else 1
    for i in range(n):
        limit = n - i
        if cfg.max_span_len is not None:
            limit = min(limit, cfg.max_span_len)
        for j in range(min_j, limit + 1):
            if j == 0 and i > 0:
                continue  # the empty span is one candidate, not n
            yield i, j


def _better(score: float, i: int, j: int, best) -> bool:
    # Highest log-prob wins; ties go to the earliest start, then shortest span.
    if best is None:
        return True
    best_score, best_i, best_j = best
    if score != best_score:
        return score > best_score
    return (i, j) < (best_i, best_j)


def exact_extract(
    passage: TokenSeq,
    rendered_prompt: TokenSeq,
    prefix: TokenSeq,
    scorer: Scorer,
    cfg: DecodeConfig = DecodeConfig(),
) -> DecodeResult:
    """Return the passage span maximizing L(i,j) + e(i,j)."""
    before = scorer.pass_count()
    table = build_span_table(passage, rendered_prompt, prefix, scorer)
    best = None
    for i, j in _span_candidates(table.n, cfg):
        score = table.span_logprob(i, j)
        if _better(score, i, j, best):
            best = (score, i, j)
    score, i, j = best
    return DecodeResult(
        start=i,
        length=j,
        span_logprob=score,
        text=scorer.vocab.decode(passage[i : i + j]),
        passes_used=scorer.pass_count() - before,
        algorithm=EXACT_EXTRACT,
        token_ids=passage.ids[i : i + j],
    )


def naive_exact(
    passage: TokenSeq,
    rendered_prompt: TokenSeq,
    prefix: TokenSeq,
    scorer: Scorer,
    cfg: DecodeConfig = DecodeConfig(),
) -> DecodeResult:
    """Score every candidate span with its own pass; the independent oracle."""
    n = len(passage)
    if n == 0:
        raise ValueError("passage must contain at least one token")
    before = scorer.pass_count()
    best = None
    for i, j in _span_candidates(n, cfg):
        scores = scorer.teacher_forced_pass(
            ScoreRequest(rendered_prompt, passage[i : i + j], prefix)
        )
        total = 0.0
        for step in scores.gold_logprob:
            total += step
        total += scores.term_logprob[j]
        if _better(total, i, j, best):
            best = (total, i, j)
    score, i, j = best
    return DecodeResult(
        start=i,
        length=j,
        span_logprob=score,
        text=scorer.vocab.decode(passage[i : i + j]),
        passes_used=scorer.pass_count() - before,
        algorithm=NAIVE,
        token_ids=passage.ids[i : i + j],
    )


def greedy_decode(
    rendered_prompt: TokenSeq,
    prefix: TokenSeq,
    scorer: Scorer,
    cfg: DecodeConfig = DecodeConfig(),
    passage: TokenSeq | None = None,
) -> DecodeResult:
    """Argmax one token at a time until a terminator token or the step cap.

    When ``passage`` is given, the output is matched back to a passage span
    (token-level, via the span search in the metrics module); outputs with
    no matching span are marked non-extractive.
    """
    from .metrics import find_span

    before = scorer.pass_count()
    vocab = scorer.vocab
    emitted: list[int] = []
    logprob = 0.0
    truncated = True
    for _ in range(cfg.max_greedy_steps):
        dist = scorer.next_token_distribution(
            rendered_prompt, prefix + vocab.seq(emitted)
        )
        token = max(range(len(dist)), key=lambda t: (dist[t], -t))
        logprob += dist[token]
        if token in scorer.terminator_ids:
            truncated = False
            break
        emitted.append(token)
    text = vocab.decode(vocab.seq(emitted))
    start = length = None
    extractive = False
    if passage is not None:
        match = find_span(text, passage, vocab)
        if match is not None:
            start, length = match
            extractive = True
    return DecodeResult(
        start=start,
        length=length,
        span_logprob=logprob,
        text=text,
        passes_used=scorer.pass_count() - before,
        algorithm=GREEDY,
        token_ids=tuple(emitted),
        extractive=extractive,
        truncated=truncated,
    )
