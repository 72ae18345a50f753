import itertools
import random

import pytest

from seqdec.core import DecodeInput, Hypothesis, Vocabulary, extend
from seqdec.oracle import breadth_first_lookahead
from seqdec.scorers import CountingScorer, TableModel

TINY3_ROWS = {
    "": {"a": 0.5, "b": 0.4, "</s>": 0.1},
    "a": {"a": 0.1, "b": 0.2, "</s>": 0.7},
    "b": {"a": 0.7, "b": 0.2, "</s>": 0.1},
}
TINY3_DEFAULT = {"a": 0.25, "b": 0.25, "</s>": 0.5}


def make_tiny3() -> TableModel:
    vocab = Vocabulary.from_tokens(["<s>", "a", "b", "</s>"])
    return TableModel(vocab, dict(TINY3_ROWS), dict(TINY3_DEFAULT))


@pytest.fixture
def tiny3() -> TableModel:
    return make_tiny3()


@pytest.fixture
def inp() -> DecodeInput:
    return DecodeInput("t0")


def random_table_model(seed: int, n_ext: int, depth: int,
                       allow_zero: bool = False) -> TableModel:
    """Random table model covering every prefix up to `depth` generated
    tokens; n_ext counts extension tokens including EOS."""
    rng = random.Random(seed)
    letters = [chr(ord("a") + i) for i in range(n_ext - 1)]
    vocab = Vocabulary.from_tokens(["<s>"] + letters + ["</s>"])
    ext = [vocab.tokens[i] for i in vocab.extension_ids]

    def row():
        floor = 0.0 if allow_zero else 1e-3
        weights = [rng.random() + floor for _ in ext]
        if allow_zero and rng.random() < 0.3:
            weights[rng.randrange(len(weights) - 1)] = 0.0
        total = sum(weights)
        probs = [w / total for w in weights]
        probs[-1] = 1.0 - sum(probs[:-1])
        return dict(zip(ext, probs))

    rows = {}
    for length in range(depth):
        for combo in itertools.product(letters, repeat=length):
            rows[" ".join(combo)] = row()
    return TableModel(vocab, rows, row())


def one_hot_model(token: str = "a") -> TableModel:
    """Deterministic scorer always emitting `token` with probability 1."""
    vocab = Vocabulary.from_tokens(["<s>", "a", "b", "</s>"])
    row = {t: 0.0 for t in ("a", "b", "</s>")}
    row[token] = 1.0
    return TableModel(vocab, {}, row)


def lbs_reference_step(scorer, context: str, beam, d: int, k: int):
    """Straight-line lookahead beam step using the breadth-first oracle.

    Ranks every candidate by cumulative score plus exact lookahead bonus;
    structurally independent of the branch-and-bound implementation.
    """
    vocab = scorer.vocabulary
    inp = DecodeInput("ref", context)
    cands = []
    for h in beam:
        if h.complete:
            scorer.next_logprobs(context, h.tokens)
            cands.append(h)
        else:
            row = scorer.next_logprobs(context, h.tokens)
            for tid in vocab.extension_ids:
                cands.append(extend(h, tid, row[tid], vocab.eos_id))
    scored = [(c.cum_logprob + breadth_first_lookahead(scorer, inp, c, d), c)
              for c in cands]
    scored.sort(key=lambda fc: (-fc[0],) + fc[1].sort_key())
    return [c for _, c in scored[:k]]


def lbs_reference_decode(scorer, context: str, d: int, k: int, n_max: int):
    """Full raw-mode lookahead decode driven by the breadth-first oracle.

    Returns (final beam, scorer call count).
    """
    counted = CountingScorer(scorer)
    beam = [Hypothesis.initial(scorer.vocabulary)]
    for _ in range(n_max):
        beam = lbs_reference_step(counted, context, beam, d, k)
    return beam, counted.calls
