"""Optimal extractive span decoding for conditional language models."""

from .decoding import (
    DecodeConfig,
    DecodeResult,
    SpanScoreTable,
    build_span_table,
    exact_extract,
    greedy_decode,
    naive_exact,
)
from .scorer import ScoreRequest, Scorer, StepScores, TableLM
from .vocab import TokenSeq, Vocabulary, is_token_subsequence

__all__ = [
    "DecodeConfig",
    "DecodeResult",
    "ScoreRequest",
    "Scorer",
    "SpanScoreTable",
    "StepScores",
    "TableLM",
    "TokenSeq",
    "Vocabulary",
    "build_span_table",
    "exact_extract",
    "greedy_decode",
    "is_token_subsequence",
    "naive_exact",
]

__version__ = "0.1.0"
