"""MRQA-style dataset ingestion and few-shot subsampling."""

from __future__ import annotations

import gzip
import hashlib
import json
import random
from dataclasses import dataclass
from pathlib import Path

DEFAULT_SIZES = (16, 32, 64, 128, 256, 512, 1024)
DEFAULT_NUM_SAMPLES = 5


class DataError(ValueError):
    """Input data is missing, malformed, or insufficient."""


@dataclass(frozen=True)
class QAExample:
    id: str
    context: str
    question: str
    answers: tuple[str, ...]

    def __post_init__(self):
        if not self.context:
            raise DataError(f"example {self.id}: empty context")
        if not self.answers:
            raise DataError(f"example {self.id}: empty answer set")


@dataclass(frozen=True)
class FewShotSplit:
    size: int
    sample_index: int
    example_ids: tuple[str, ...]


def _open_text(path: Path):
    if path.suffix == ".gz":
        return gzip.open(path, "rt", encoding="utf-8")
    return open(path, encoding="utf-8")


def load_dataset(path: str | Path) -> list[QAExample]:
    """Parse MRQA JSONL: one paragraph per line, each with its "qas" list.

    Header lines (objects with a "header" key) are skipped. Malformed
    lines are reported with their line number.
    """
    path = Path(path)
    examples: list[QAExample] = []
    with _open_text(path) as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            if "header" in obj:
                continue
            try:
                context = obj["context"]
                qas = obj["qas"]
            except (KeyError, TypeError) as exc:
                raise DataError(f"{path}:{lineno}: missing field {exc}") from exc
            if not isinstance(context, str) or not isinstance(qas, list):
                raise DataError(f"{path}:{lineno}: bad context/qas types")
            for qa in qas:
                try:
                    qid = qa["qid"]
                    question = qa["question"]
                    answers = qa["answers"]
                except (KeyError, TypeError) as exc:
                    raise DataError(f"{path}:{lineno}: missing field {exc}") from exc
                if not isinstance(answers, list) or not answers:
                    raise DataError(f"{path}:{lineno}: qid {qid}: empty answers")
                examples.append(
                    QAExample(
                        id=str(qid),
                        context=context,
                        question=str(question),
                        answers=tuple(str(a) for a in answers),
                    )
                )
    return examples


def passage_hash(context: str) -> str:
    return hashlib.sha1(context.encode("utf-8")).hexdigest()


def subsample(
    dataset: list[QAExample],
    sizes=DEFAULT_SIZES,
    num_samples: int = DEFAULT_NUM_SAMPLES,
    seed: int = 0,
    validation: list[QAExample] | None = None,
) -> list[FewShotSplit]:
    """Deterministic uniform-without-replacement few-shot splits.

    With the defaults this yields the 7 sizes x 5 samples = 35 splits of
    the few-shot benchmark layout. When a validation set is supplied, the
    splits are checked for passage leakage against it (by passage hash).
    """
    sizes = tuple(sizes)
    if not sizes or num_samples < 1:
        raise DataError("need at least one size and one sample per size")
    if len(dataset) < max(sizes):
        raise DataError(
            f"dataset has {len(dataset)} examples, need at least {max(sizes)}"
        )
    splits: list[FewShotSplit] = []
    for size in sizes:
        for k in range(num_samples):
            rng = random.Random(f"{seed}:{size}:{k}")
            chosen = rng.sample(range(len(dataset)), size)
            splits.append(
                FewShotSplit(
                    size=size,
                    sample_index=k,
                    example_ids=tuple(dataset[i].id for i in chosen),
                )
            )
    if validation is not None:
        val_hashes = {passage_hash(ex.context) for ex in validation}
        by_id = {ex.id: ex for ex in dataset}
        for split in splits:
            for ex_id in split.example_ids:
                if passage_hash(by_id[ex_id].context) in val_hashes:
                    raise DataError(
                        f"validation passage leaks into split "
                        f"(size={split.size}, sample={split.sample_index}, id={ex_id})"
                    )
    return splits
