"""Sequence decoding engine: beam search, lookahead beam search (LBS),
lookbehind heuristic beam search (LHBS), exhaustive MAP search, and
brute-force oracles over an abstract autoregressive scoring interface."""

from seqdec.core import (
    DecodeConfig,
    DecodeInput,
    DecodeResult,
    Hypothesis,
    Vocabulary,
    extend,
    kth_max,
)
from seqdec.decode import (
    beam_decode,
    decode,
    eval_lookahead,
    exhaustive_decode,
    greedy_decode,
    lbs_decode,
    lhbs_decode,
)
from seqdec.scorers import CountingScorer, NgramModel, TableModel, UniformModel

__all__ = [
    "Vocabulary",
    "Hypothesis",
    "DecodeInput",
    "DecodeConfig",
    "DecodeResult",
    "kth_max",
    "extend",
    "greedy_decode",
    "beam_decode",
    "exhaustive_decode",
    "lbs_decode",
    "lhbs_decode",
    "eval_lookahead",
    "decode",
    "TableModel",
    "NgramModel",
    "UniformModel",
    "CountingScorer",
]

__version__ = "0.1.0"
