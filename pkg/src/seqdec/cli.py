"""Command-line interface: decode, compare, train, oracle.

Exit codes: 0 success, 2 bad input/configuration, 3 scorer transport
failure, 4 budget refusal. Output files are written via a temp file and
renamed, so a failed run leaves no partial output behind.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from typing import Sequence

from seqdec.core import (
    DEFAULT_BUDGET,
    BudgetExceededError,
    DecodeConfig,
    DecodeInput,
    ScorerTransportError,
    Vocabulary,
)
from seqdec.decode import decode
from seqdec.metrics import compare_strategies, rows_to_csv
from seqdec.oracle import brute_force_map, enumerate_all
from seqdec.remote import RemoteScorer
from seqdec.scorers import load_model, train_ngram

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_TRANSPORT = 3
EXIT_BUDGET = 4


class UsageError(Exception):
    pass


def _default_budget() -> int:
    env = os.environ.get("SEQDEC_BUDGET")
    return int(env) if env else DEFAULT_BUDGET


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".seqdec-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _read_corpus(path: str) -> list[DecodeInput]:
    inputs = []
    seen = set()
    try:
        with open(path, encoding="utf-8") as f:
            for lineno, line in enumerate(f, 1):
                if not line.strip():
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise UsageError(f"{path}:{lineno}: bad JSON: {exc}") from exc
                if "id" not in obj:
                    raise UsageError(f"{path}:{lineno}: record missing 'id'")
                if obj["id"] in seen:
                    raise UsageError(f"{path}:{lineno}: duplicate id {obj['id']!r}")
                seen.add(obj["id"])
                inputs.append(DecodeInput(id=str(obj["id"]), context=obj.get("context", "")))
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    return inputs


def _make_scorer(args):
    if args.scorer == "remote":
        if not args.endpoint:
            raise UsageError("--endpoint required for remote scorer")
        if not args.model:
            raise UsageError("--model (vocabulary file) required for remote scorer")
        try:
            with open(args.model, encoding="utf-8") as f:
                vocab = Vocabulary.from_tokens(json.load(f)["vocab"])
        except (OSError, KeyError, ValueError) as exc:
            raise UsageError(f"cannot load vocabulary from {args.model}: {exc}") from exc
        host, _, port = args.endpoint.rpartition(":")
        return RemoteScorer(vocab, host, int(port))
    if not args.model:
        raise UsageError("--model required")
    try:
        return load_model(args.scorer, args.model)
    except (OSError, KeyError, ValueError) as exc:
        raise UsageError(f"cannot load model {args.model}: {exc}") from exc


def _json_float(x: float):
    return None if math.isinf(x) else x


def cmd_decode(args) -> int:
    scorer = _make_scorer(args)
    corpus = _read_corpus(args.input)
    config = DecodeConfig(beam_width=args.k, lookahead_depth=args.d,
                          max_len=args.max_len, strategy=args.strategy,
                          mode=args.mode, budget=args.budget)
    lines = []
    for inp in corpus:
        result = decode(scorer, inp, config)
        m = result.metrics
        record = {
            "id": inp.id,
            "tokens": scorer.vocabulary.to_strings(result.best.tokens[1:]),
            "score": _json_float(result.best.cum_logprob),
            "nll": _json_float(m.nll),
            "ppl": _json_float(m.perplexity),
            "uid_error": _json_float(m.uid_error),
            "length": m.length,
            "scorer_calls": m.scorer_calls,
            "wall_time_ms": m.wall_time_ms,
            "strategy": args.strategy,
            "k": args.k,
            "d": args.d,
        }
        lines.append(json.dumps(record))
    _atomic_write(args.output, "\n".join(lines) + "\n")
    return EXIT_OK


def _parse_runs(spec: str) -> list[tuple[str, int]]:
    """'beam,lbs:1,lhbs' -> [('beam', 0), ('lbs', 1), ('lhbs', 0)]."""
    runs = []
    for part in spec.split(","):
        part = part.strip()
        if not part:
            continue
        if ":" in part:
            name, _, d = part.partition(":")
            runs.append((name, int(d)))
        else:
            runs.append((part, 0))
    if not runs:
        raise UsageError("empty --runs specification")
    return runs


def cmd_compare(args) -> int:
    scorer = _make_scorer(args)
    corpus = _read_corpus(args.input)
    if not corpus:
        raise UsageError("empty corpus")
    runs = _parse_runs(args.runs)
    ks = [int(k) for k in args.ks.split(",")]
    configs = []
    for k in ks:
        for strategy, d in runs:
            configs.append(DecodeConfig(beam_width=k, lookahead_depth=d,
                                        max_len=args.max_len, strategy=strategy,
                                        mode=args.mode, budget=args.budget))
    try:
        rows = compare_strategies(scorer, corpus, configs)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    _atomic_write(args.output, rows_to_csv(rows))
    return EXIT_OK


def cmd_train(args) -> int:
    try:
        with open(args.input, encoding="utf-8") as f:
            corpus = f.readlines()
    except OSError as exc:
        raise UsageError(f"cannot read {args.input}: {exc}") from exc
    try:
        model = train_ngram(corpus, args.order, args.alpha)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    text = json.dumps(model.to_json(), sort_keys=True)
    _atomic_write(args.output, text + "\n")
    return EXIT_OK


def cmd_oracle(args) -> int:
    scorer = _make_scorer(args)
    corpus = _read_corpus(args.input)
    lines = []
    for inp in corpus:
        if args.enumerate:
            enum = enumerate_all(scorer, inp, args.max_len, budget=args.budget)
            for tokens, score in enum.all_complete:
                lines.append(json.dumps({
                    "id": inp.id,
                    "tokens": scorer.vocabulary.to_strings(tokens[1:]),
                    "score": _json_float(score),
                }))
        else:
            best = brute_force_map(scorer, inp, args.max_len, budget=args.budget)
            lines.append(json.dumps({
                "id": inp.id,
                "tokens": scorer.vocabulary.to_strings(best.tokens[1:]),
                "score": _json_float(best.cum_logprob),
                "p": math.exp(best.cum_logprob) if best.cum_logprob != float("-inf") else 0.0,
            }))
    _atomic_write(args.output, "\n".join(lines) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="seqdec",
                                     description="Sequence decoding toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, needs_strategy=True):
        p.add_argument("--scorer", choices=["table", "ngram", "remote"], default="table")
        p.add_argument("--model", help="model JSON path (vocabulary file for remote)")
        p.add_argument("--endpoint", help="host:port of a remote scorer")
        p.add_argument("--input", required=True, help="JSONL corpus path")
        p.add_argument("--output", required=True, help="output path")
        p.add_argument("--max-len", dest="max_len", type=int, default=32)
        p.add_argument("--mode", choices=["raw", "practical"], default="practical")
        p.add_argument("--budget", type=int, default=_default_budget())
        if needs_strategy:
            p.add_argument("--strategy", required=True,
                           choices=["greedy", "beam", "lbs", "lhbs", "exhaustive"])
            p.add_argument("--k", type=int, default=1)
            p.add_argument("--d", type=int, default=0)

    p_decode = sub.add_parser("decode", help="decode a JSONL corpus")
    add_common(p_decode)
    p_decode.set_defaults(func=cmd_decode)

    p_compare = sub.add_parser("compare", help="sweep strategies and emit a CSV report")
    add_common(p_compare, needs_strategy=False)
    p_compare.add_argument("--runs", required=True,
                           help="comma list of strategy[:d], e.g. beam,lbs:1,lhbs")
    p_compare.add_argument("--ks", required=True, help="comma list of beam widths")
    p_compare.set_defaults(func=cmd_compare)

    p_train = sub.add_parser("train", help="train an n-gram model from text")
    p_train.add_argument("--input", required=True, help="text corpus path")
    p_train.add_argument("--output", required=True, help="model JSON path")
    p_train.add_argument("--order", type=int, default=2)
    p_train.add_argument("--alpha", type=float, default=1.0)
    p_train.set_defaults(func=cmd_train)

    p_oracle = sub.add_parser("oracle", help="brute-force MAP / full enumeration")
    add_common(p_oracle, needs_strategy=False)
    p_oracle.add_argument("--enumerate", action="store_true",
                          help="emit every complete sequence instead of the argmax")
    p_oracle.set_defaults(func=cmd_oracle)

    parser.add_argument("--seed", type=int, default=0,
                        help="seed for random-model generation (reserved)")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except (UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ScorerTransportError as exc:
        print(f"transport error: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT
    except BudgetExceededError as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET


if __name__ == "__main__":
    sys.exit(main())
