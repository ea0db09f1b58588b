"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data error, 3 scorer transport error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import harness, metrics, rss
from .decoding import (
    EXACT_EXTRACT,
    GREEDY,
    NAIVE,
    DecodeConfig,
    exact_extract,
    greedy_decode,
    naive_exact,
)
from .mrqa import DataError, QAExample, load_dataset, subsample
from .prompting import (
    CLOSE_SENTINEL,
    get_template,
    render_encoder_input,
    render_target_prefix_and_terminator,
)
from .remote import RemoteScorer, StdioScorer, TransportError
from .scorer import ScorerError, TableLM
from .vocab import Vocabulary

SCORER_URL_ENV = "SPANDECODE_SCORER_URL"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_TRANSPORT = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _terminator_ids(vocab: Vocabulary, mode: str) -> frozenset[int]:
    sentinel = vocab.piece_id(CLOSE_SENTINEL) if CLOSE_SENTINEL in vocab.pieces else None
    if mode == "sentinel":
        if sentinel is None:
            raise DataError(f"vocabulary has no {CLOSE_SENTINEL} piece")
        return frozenset({sentinel})
    if mode == "eos":
        return frozenset({vocab.terminator_id})
    ids = {vocab.terminator_id}
    if sentinel is not None:
        ids.add(sentinel)
    return frozenset(ids)


def make_scorer(spec: str, vocab: Vocabulary, terminator_mode: str = "sentinel"):
    """Build a scorer from a "table:FILE", "remote:URL" or "stdio:CMD" spec."""
    term_ids = _terminator_ids(vocab, terminator_mode)
    if spec.startswith("table:"):
        return TableLM.from_file(spec[len("table:"):], vocab, terminator_ids=term_ids)
    if spec.startswith("remote:"):
        return RemoteScorer(spec[len("remote:"):], vocab, terminator_ids=term_ids)
    if spec.startswith(("http://", "https://")):
        return RemoteScorer(spec, vocab, terminator_ids=term_ids)
    if spec.startswith("stdio:"):
        return StdioScorer(spec[len("stdio:"):], vocab, terminator_ids=term_ids)
    raise UsageError(f"unrecognized scorer spec {spec!r}")


def _read_decode_inputs(path: str) -> list[QAExample]:
    """Accept MRQA paragraph lines or flat {"id","context","question"} lines."""
    with open(path, encoding="utf-8") as f:
        first = ""
        for line in f:
            if line.strip():
                first = line
                break
    try:
        obj = json.loads(first) if first else {}
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}:1: invalid JSON: {exc}") from exc
    if "qas" in obj or "header" in obj:
        return load_dataset(path)
    examples = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                examples.append(
                    QAExample(
                        id=str(obj.get("id", lineno)),
                        context=obj["context"],
                        question=obj["question"],
                        answers=tuple(obj.get("answers") or ("",)),
                    )
                )
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from exc
    return examples


def build_parser() -> _Parser:
    parser = _Parser(prog="spandecode", description=__doc__)
    parser.add_argument("--vocab", help="vocabulary JSON file")
    parser.add_argument(
        "--scorer",
        default=os.environ.get(SCORER_URL_ENV),
        help="table:FILE | remote:URL | stdio:CMD "
        f"(default: ${SCORER_URL_ENV})",
    )
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--jobs", type=int, default=1)
    parser.add_argument(
        "--terminator-mode", choices=("sentinel", "eos", "combined"), default="sentinel"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decode", help="decode answers for a JSONL of examples")
    p.add_argument("--algo", choices=(GREEDY, "exact", NAIVE), default="exact")
    p.add_argument("--prompt-id", type=int, default=2)
    p.add_argument("--prompt-file", default=None)
    p.add_argument("--max-span-len", type=int, default=None)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)

    p = sub.add_parser("eval", help="compare greedy and exact decoding on a dataset")
    p.add_argument("--prompt-id", type=int, default=2)
    p.add_argument("--prompt-file", default=None)
    p.add_argument("--max-span-len", type=int, default=None)
    p.add_argument("--input", required=True)
    p.add_argument("--output", default=None, help="write the report JSON here")

    p = sub.add_parser("subsample", help="draw few-shot training splits")
    p.add_argument("--input", required=True)
    p.add_argument("--validation", default=None)
    p.add_argument("--sizes", default="16,32,64,128,256,512,1024")
    p.add_argument("--num-samples", type=int, default=5)
    p.add_argument("--output", required=True)

    p = sub.add_parser("partition", help="classify examples as S_in / S_out")
    p.add_argument("--input", required=True)
    p.add_argument("--output", default=None)

    p = sub.add_parser("select-hp", help="pick the best configuration index")
    p.add_argument("--scores", required=True, help="JSON 3-d array s[i][n][k]")

    p = sub.add_parser("rss-gen", help="generate recurring-span pretraining data")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--limit", type=int, default=100000)
    p.add_argument("--stopwords", default=None)
    p.add_argument("--min-span", type=int, default=1)
    p.add_argument("--max-span", type=int, default=10)

    p = sub.add_parser("report", help="render an EvalReport JSON as a table")
    p.add_argument("--input", required=True)

    return parser


def _require(value, flag: str):
    if value is None:
        raise UsageError(f"{flag} is required for this command")
    return value


def cmd_decode(args) -> int:
    vocab = Vocabulary.from_file(_require(args.vocab, "--vocab"))
    scorer = make_scorer(_require(args.scorer, "--scorer"), vocab, args.terminator_mode)
    template = get_template(args.prompt_id, args.prompt_file)
    cfg = DecodeConfig(max_span_len=args.max_span_len)
    examples = _read_decode_inputs(args.input)
    with open(args.output, "w", encoding="utf-8") as out:
        for example in examples:
            source = vocab.encode(render_encoder_input(template, example.context, example.question))
            prefix_text, _ = render_target_prefix_and_terminator(template)
            prefix = vocab.encode(prefix_text)
            passage = vocab.encode(example.context)
            if args.algo == GREEDY:
                result = greedy_decode(source, prefix, scorer, cfg, passage=passage)
            elif args.algo == NAIVE:
                result = naive_exact(passage, source, prefix, scorer, cfg)
            else:
                result = exact_extract(passage, source, prefix, scorer, cfg)
            record = {"id": example.id, **result.to_dict()}
            out.write(json.dumps(record) + "\n")
    return EXIT_OK


def cmd_eval(args) -> int:
    vocab = Vocabulary.from_file(_require(args.vocab, "--vocab"))
    scorer = make_scorer(_require(args.scorer, "--scorer"), vocab, args.terminator_mode)
    template = get_template(args.prompt_id, args.prompt_file)
    dataset = load_dataset(args.input)
    report = harness.run_eval(
        dataset,
        scorer,
        template,
        vocab,
        DecodeConfig(max_span_len=args.max_span_len),
        jobs=args.jobs,
    )
    if args.output:
        with open(args.output, "w", encoding="utf-8") as f:
            json.dump(report.to_dict(), f, indent=2)
    print(report.render_table())
    return EXIT_OK


def cmd_subsample(args) -> int:
    dataset = load_dataset(args.input)
    validation = load_dataset(args.validation) if args.validation else None
    sizes = tuple(int(s) for s in args.sizes.split(","))
    splits = subsample(dataset, sizes, args.num_samples, args.seed, validation)
    with open(args.output, "w", encoding="utf-8") as f:
        json.dump(
            [
                {
                    "size": s.size,
                    "sample_index": s.sample_index,
                    "example_ids": list(s.example_ids),
                }
                for s in splits
            ],
            f,
            indent=2,
        )
    print(f"wrote {len(splits)} splits")
    return EXIT_OK


def cmd_partition(args) -> int:
    vocab = Vocabulary.from_file(_require(args.vocab, "--vocab"))
    dataset = load_dataset(args.input)
    counts = {metrics.S_IN: 0, metrics.S_OUT: 0}
    records = []
    for example in dataset:
        part = metrics.partition_example(example.answers, example.context, vocab)
        counts[part] += 1
        records.append({"id": example.id, "partition": part})
    if args.output:
        with open(args.output, "w", encoding="utf-8") as f:
            for record in records:
                f.write(json.dumps(record) + "\n")
    total = len(dataset)
    for part in (metrics.S_IN, metrics.S_OUT):
        print(f"{part}: {counts[part]} ({100 * counts[part] / total:.1f}%)")
    return EXIT_OK


def cmd_select_hp(args) -> int:
    table = harness.load_score_table(args.scores)
    try:
        best = harness.select_hyperparameters(table)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    print(best)
    return EXIT_OK


def cmd_rss_gen(args) -> int:
    stopwords = rss.load_stopwords(args.stopwords) if args.stopwords else rss.default_stopwords()
    cfg = rss.RssConfig(
        stopwords=stopwords,
        min_span_words=args.min_span,
        max_span_words=args.max_span,
        rng_seed=args.seed,
    )
    count = 0
    with open(args.output, "w", encoding="utf-8") as out:
        for example in rss.generate_corpus(rss.read_passages(args.input), cfg, args.limit):
            out.write(json.dumps(example.to_dict(), ensure_ascii=False) + "\n")
            count += 1
    print(f"wrote {count} examples")
    return EXIT_OK


def cmd_report(args) -> int:
    with open(args.input, encoding="utf-8") as f:
        report = harness.EvalReport.from_dict(json.load(f))
    print(report.render_table())
    return EXIT_OK


COMMANDS = {
    "decode": cmd_decode,
    "eval": cmd_eval,
    "subsample": cmd_subsample,
    "partition": cmd_partition,
    "select-hp": cmd_select_hp,
    "rss-gen": cmd_rss_gen,
    "report": cmd_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, OSError, json.JSONDecodeError, ValueError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (TransportError, ScorerError) as exc:
        print(f"scorer error: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT


if __name__ == "__main__":
    raise SystemExit(main())
