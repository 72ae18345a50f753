"""Domain types and shared primitives used by every decoder.

All probabilities live in natural-log space as double-precision floats.
Zero probability is represented by ``float('-inf')``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

NEG_INF = float("-inf")

#: Default node budget for exhaustive search / enumeration guards.
DEFAULT_BUDGET = 10**7


class BudgetExceededError(Exception):
    """Instance is too large for an exhaustive operation."""


class ScorerTransportError(Exception):
    """A remote scorer failed at the transport/protocol level."""


@dataclass(frozen=True)
class Vocabulary:
    """Token inventory with distinguished BOS/EOS markers.

    Extension tokens (the set usable to grow a hypothesis) are every
    token except BOS; EOS is always a legal extension.
    """

    tokens: tuple[str, ...]
    bos_id: int
    eos_id: int

    def __post_init__(self):
        if self.bos_id == self.eos_id:
            raise ValueError("BOS and EOS must be distinct tokens")
        n = len(self.tokens)
        if not (0 <= self.bos_id < n and 0 <= self.eos_id < n):
            raise ValueError("BOS/EOS ids out of range")
        if len(set(self.tokens)) != n:
            raise ValueError("token strings must be unique")
        if any(not t for t in self.tokens):
            raise ValueError("token strings must be non-empty")

    @classmethod
    def from_tokens(cls, tokens: Sequence[str], bos: str = "<s>", eos: str = "</s>") -> "Vocabulary":
        toks = tuple(tokens)
        return cls(toks, toks.index(bos), toks.index(eos))

    @property
    def extension_ids(self) -> tuple[int, ...]:
        """Token ids legal as hypothesis extensions (everything but BOS)."""
        return tuple(i for i in range(len(self.tokens)) if i != self.bos_id)

    @property
    def core_ids(self) -> tuple[int, ...]:
        """Extension ids excluding EOS."""
        return tuple(i for i in range(len(self.tokens)) if i not in (self.bos_id, self.eos_id))

    def to_strings(self, ids: Sequence[int]) -> list[str]:
        return [self.tokens[i] for i in ids]


@dataclass(frozen=True)
class Hypothesis:
    """A (partial) output sequence with its accumulated log-probability.

    ``cum_logprob`` is always the left-to-right sum of ``step_logprobs``
    in the same accumulation order, so the factorization identity holds
    bit-exactly.
    """

    tokens: tuple[int, ...]
    cum_logprob: float
    step_logprobs: tuple[float, ...]
    complete: bool

    @classmethod
    def initial(cls, vocab: Vocabulary) -> "Hypothesis":
        return cls((vocab.bos_id,), 0.0, (), False)

    def sort_key(self):
        """Canonical total order: score descending, tokens ascending."""
        return (-self.cum_logprob, self.tokens)

    @property
    def length(self) -> int:
        """Generated-token count (BOS excluded, EOS included)."""
        return len(self.tokens) - 1


def extend(h: Hypothesis, token: int, logprob: float, eos_id: int) -> Hypothesis:
    """Append ``token`` to ``h`` with the given extension log-probability."""
    if h.complete:
        raise ValueError("cannot extend a complete hypothesis")
    if logprob > 0.0:
        raise ValueError("extension log-probability must be <= 0")
    return Hypothesis(
        tokens=h.tokens + (token,),
        cum_logprob=h.cum_logprob + logprob,
        step_logprobs=h.step_logprobs + (logprob,),
        complete=(token == eos_id),
    )


def kth_max(scores: Sequence[float], k: int) -> float:
    """k-th largest value (duplicates counted), -inf if fewer than k entries."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if len(scores) < k:
        return NEG_INF
    return sorted(scores, reverse=True)[k - 1]


def canonical_compare(a: Hypothesis, b: Hypothesis) -> int:
    """-1/0/+1 ordering by score descending, token sequence ascending."""
    ka, kb = a.sort_key(), b.sort_key()
    if ka < kb:
        return -1
    if ka > kb:
        return 1
    return 0


def canonical_sorted(hyps: Sequence[Hypothesis]) -> list[Hypothesis]:
    return sorted(hyps, key=Hypothesis.sort_key)


def canonical_best(hyps: Sequence[Hypothesis]) -> Hypothesis:
    return min(hyps, key=Hypothesis.sort_key)


@dataclass(frozen=True)
class DecodeInput:
    """One decoding problem: an id plus an opaque conditioning string."""

    id: str
    context: str = ""


VALID_STRATEGIES = ("greedy", "beam", "lbs", "lhbs", "exhaustive")
VALID_MODES = ("raw", "practical")


@dataclass(frozen=True)
class DecodeConfig:
    beam_width: int = 1
    lookahead_depth: int = 0
    max_len: int = 32
    strategy: str = "beam"
    mode: str = "practical"
    budget: int = DEFAULT_BUDGET

    def __post_init__(self):
        if self.beam_width < 1:
            raise ValueError("beam_width must be >= 1")
        if self.lookahead_depth < 0:
            raise ValueError("lookahead_depth must be >= 0")
        if self.max_len < 1:
            raise ValueError("max_len must be >= 1")
        if self.strategy not in VALID_STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.mode not in VALID_MODES:
            raise ValueError(f"unknown mode {self.mode!r}")


@dataclass(frozen=True)
class MetricsRecord:
    nll: float
    length: int
    perplexity: float
    uid_error: float
    scorer_calls: int
    wall_time_ms: float = 0.0


@dataclass(frozen=True)
class DecodeResult:
    best: Hypothesis
    finished: tuple[Hypothesis, ...]
    final_beam: tuple[Hypothesis, ...]
    scorer_calls: int
    metrics: MetricsRecord = field(compare=False, default=None)
