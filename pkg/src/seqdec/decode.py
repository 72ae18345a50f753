"""Decoding strategies: greedy, beam search, exhaustive MAP search,
lookahead beam search (LBS-d), and lookbehind heuristic beam search (LHBS).

Two execution modes are supported:

* ``raw`` -- the literal fixed-iteration beam recursion. Complete
  hypotheses are carried forward unchanged (their own sole child with
  extension log-probability 0) so the recursion is well-defined past EOS.
  Used for exact equivalence checks between strategies.
* ``practical`` -- per step the top-2k candidates are popped; candidates
  ending in EOS are routed to a finished pool (best k kept) and the beam
  is refilled with the top-k incomplete popped candidates. Decoding stops
  early once the best active score cannot beat the best finished score
  (sound because scores never increase under extension).
"""

from __future__ import annotations

import math
import statistics
import time
from typing import Callable, Optional, Sequence

from seqdec.core import (
    NEG_INF,
    BudgetExceededError,
    DecodeConfig,
    DecodeInput,
    DecodeResult,
    Hypothesis,
    MetricsRecord,
    canonical_best,
    canonical_sorted,
    extend,
    kth_max,
)
from seqdec.scorers import CountingScorer, Scorer


def _children(scorer: Scorer, context: str, h: Hypothesis) -> list[Hypothesis]:
    """All extensions of an incomplete hypothesis; one scorer call."""
    vocab = scorer.vocabulary
    row = scorer.next_logprobs(context, h.tokens)
    return [extend(h, tid, row[tid], vocab.eos_id) for tid in vocab.extension_ids]


def _metrics(best: Hypothesis, calls: int, wall_ms: float) -> MetricsRecord:
    nll = -best.cum_logprob
    length = best.length
    if math.isinf(nll):
        ppl = math.inf
        uid = math.inf
    else:
        ppl = math.exp(nll / length)
        surprisals = [-lp for lp in best.step_logprobs]
        uid = statistics.pstdev(surprisals) if surprisals else 0.0
    return MetricsRecord(nll=nll, length=length, perplexity=ppl,
                         uid_error=uid, scorer_calls=calls, wall_time_ms=wall_ms)


def _result(best: Hypothesis, finished: Sequence[Hypothesis],
            beam: Sequence[Hypothesis], calls: int, t0: float) -> DecodeResult:
    wall_ms = (time.perf_counter() - t0) * 1000.0
    return DecodeResult(
        best=best,
        finished=tuple(canonical_sorted(finished)),
        final_beam=tuple(beam),
        scorer_calls=calls,
        metrics=_metrics(best, calls, wall_ms),
    )


def _pick_raw_best(beam: Sequence[Hypothesis]) -> tuple[Hypothesis, list[Hypothesis]]:
    complete = [h for h in beam if h.complete]
    best = canonical_best(complete) if complete else canonical_best(beam)
    return best, complete


def greedy_decode(scorer: Scorer, inp: DecodeInput, config: DecodeConfig) -> DecodeResult:
    """Pick the single most probable token at every step."""
    t0 = time.perf_counter()
    counted = CountingScorer(scorer)
    vocab = counted.vocabulary
    h = Hypothesis.initial(vocab)
    for _ in range(config.max_len):
        row = counted.next_logprobs(inp.context, h.tokens)
        best_tid = min(vocab.extension_ids, key=lambda tid: (-row[tid], tid))
        h = extend(h, best_tid, row[best_tid], vocab.eos_id)
        if h.complete:
            break
    finished = [h] if h.complete else []
    return _result(h, finished, (h,), counted.calls, t0)


def _practical_loop(counted: CountingScorer, context: str, config: DecodeConfig,
                    select: Callable[[list[Hypothesis], list[Hypothesis], int], list[Hypothesis]],
                    t0: float) -> DecodeResult:
    """Shared practical-mode driver.

    ``select(beam, candidates, n)`` returns the n popped candidates for the
    step, ordered by the strategy's own popping rule.
    """
    k = config.beam_width
    beam = [Hypothesis.initial(counted.vocabulary)]
    finished: list[Hypothesis] = []
    for _ in range(config.max_len):
        popped = select(beam, [], 2 * k)
        new_beam = [h for h in popped if not h.complete][:k]
        for h in popped:
            if h.complete:
                finished.append(h)
        finished = canonical_sorted(finished)[:k]
        beam = new_beam
        if not beam:
            break
        if finished and max(h.cum_logprob for h in beam) <= finished[0].cum_logprob:
            break
    if finished:
        best = finished[0]
    else:
        best = canonical_best(beam)
    return _result(best, finished, tuple(beam), counted.calls, t0)


def beam_decode(scorer: Scorer, inp: DecodeInput, config: DecodeConfig) -> DecodeResult:
    """Top-k beam search."""
    t0 = time.perf_counter()
    counted = CountingScorer(scorer)
    k = config.beam_width

    if config.mode == "raw":
        beam = [Hypothesis.initial(counted.vocabulary)]
        for _ in range(config.max_len):
            cands: list[Hypothesis] = []
            for h in beam:
                if h.complete:
                    # a finished slot still costs one scoring call per
                    # step; it is carried forward as its own sole child
                    counted.next_logprobs(inp.context, h.tokens)
                    cands.append(h)
                else:
                    cands.extend(_children(counted, inp.context, h))
            beam = canonical_sorted(cands)[:k]
        best, complete = _pick_raw_best(beam)
        return _result(best, complete, tuple(beam), counted.calls, t0)

    def select(beam, _pool, n):
        cands: list[Hypothesis] = []
        for h in beam:
            cands.extend(_children(counted, inp.context, h))
        return canonical_sorted(cands)[:n]

    return _practical_loop(counted, inp.context, config, select, t0)


def eval_lookahead(scorer: Scorer, context: str, h: Hypothesis, d: int,
                   f_max: float = NEG_INF) -> float:
    """Best-first branch-and-bound lookahead.

    Returns max(f_max, h.cum_logprob + best d-step continuation increment).
    EOS is absorbing: a complete hypothesis contributes nothing further.
    Branches whose running score already falls below f_max are pruned,
    which is sound because scores never increase under extension.
    """
    if d < 0:
        raise ValueError("lookahead depth must be >= 0")
    if h.complete or d == 0:
        return max(h.cum_logprob, f_max)
    children = _children(scorer, context, h)
    children.sort(key=Hypothesis.sort_key)
    for child in children:
        if child.cum_logprob < f_max:
            break
        f_max = max(f_max, eval_lookahead(scorer, context, child, d - 1, f_max))
    return f_max


def _lbs_select(counted: CountingScorer, context: str, beam: list[Hypothesis],
                d: int, n: int) -> list[tuple[float, Hypothesis]]:
    """Pick the n candidates maximizing current score + lookahead bonus.

    Candidates are visited in descending current score so the scan can
    stop at the first candidate whose current score already falls below
    the running n-th best total. Returns (total, hypothesis) pairs in
    selection order (total descending, canonical tie-break).
    """
    cands: list[Hypothesis] = []
    for h in beam:
        if h.complete:
            counted.next_logprobs(context, h.tokens)  # uniform per-slot cost
            cands.append(h)
        else:
            cands.extend(_children(counted, context, h))
    cands.sort(key=Hypothesis.sort_key)
    scored: list[tuple[float, Hypothesis]] = []
    for cand in cands:
        bar = kth_max([f for f, _ in scored], n)
        if cand.cum_logprob < bar:
            break
        f = eval_lookahead(counted, context, cand, d, bar)
        if f > bar or len(scored) < n:
            scored.append((f, cand))
    scored.sort(key=lambda fc: (-fc[0],) + fc[1].sort_key())
    return scored[:n]


def lbs_decode(scorer: Scorer, inp: DecodeInput, config: DecodeConfig) -> DecodeResult:
    """Lookahead beam search: rank candidates by current score plus the
    best score achievable within ``lookahead_depth`` future steps. The
    lookahead only steers per-step selection; returned hypotheses are
    ranked by their plain cumulative score."""
    t0 = time.perf_counter()
    counted = CountingScorer(scorer)
    k, d = config.beam_width, config.lookahead_depth

    if config.mode == "raw":
        beam = [Hypothesis.initial(counted.vocabulary)]
        for _ in range(config.max_len):
            beam = [h for _, h in _lbs_select(counted, inp.context, beam, d, k)]
        best, complete = _pick_raw_best(beam)
        return _result(best, complete, tuple(beam), counted.calls, t0)

    def select(beam, _pool, n):
        return [h for _, h in _lbs_select(counted, inp.context, beam, d, n)]

    return _practical_loop(counted, inp.context, config, select, t0)


def lhbs_decode(scorer: Scorer, inp: DecodeInput, config: DecodeConfig,
                trace: Optional[list] = None) -> DecodeResult:
    """Lookbehind heuristic beam search.

    Beam slots are processed sequentially in descending previous-step
    score. Slot i pops from the leftover pool of slot i-1 plus the
    children of the i-th previous hypothesis, so previous-step rank
    influences which candidates survive. Raw mode pops one candidate per
    slot; practical mode pops two. When the previous beam holds fewer
    hypotheses than there are slots, the extra slots pop from the
    leftover pool alone.

    If ``trace`` is a list, a per-step record is appended with the sorted
    previous beam and each slot's pool snapshot and popped candidates.
    """
    t0 = time.perf_counter()
    counted = CountingScorer(scorer)
    k = config.beam_width
    raw = config.mode == "raw"
    pops_per_slot = 1 if raw else 2

    def step(beam: list[Hypothesis]) -> list[Hypothesis]:
        prev = canonical_sorted(beam)
        leftover: list[Hypothesis] = []
        popped: list[Hypothesis] = []
        slot_records = []
        for i in range(k):
            pool = list(leftover)
            if i < len(prev):
                h = prev[i]
                if h.complete:
                    if raw:
                        counted.next_logprobs(inp.context, h.tokens)  # uniform per-slot cost
                    pool.append(h)
                else:
                    pool.extend(_children(counted, inp.context, h))
            if not pool:
                break
            pool = canonical_sorted(pool)
            taken, leftover = pool[:pops_per_slot], pool[pops_per_slot:]
            popped.extend(taken)
            if trace is not None:
                slot_records.append({"slot": i, "pool": list(pool), "popped": list(taken)})
        if trace is not None:
            trace.append({"prev": prev, "slots": slot_records})
        return popped

    if raw:
        beam = [Hypothesis.initial(counted.vocabulary)]
        for _ in range(config.max_len):
            beam = step(beam)
        best, complete = _pick_raw_best(beam)
        return _result(best, complete, tuple(beam), counted.calls, t0)

    def select(beam, _pool, n):
        return canonical_sorted(step(beam))

    return _practical_loop(counted, inp.context, config, select, t0)


def exhaustive_decode(scorer: Scorer, inp: DecodeInput, config: DecodeConfig) -> DecodeResult:
    """Exact MAP search by depth-first enumeration with score pruning.

    Any prefix whose score is already strictly below the best complete
    score found so far is discarded; the result is identical to full
    enumeration. Intended for desk-scale instances only: refuses when
    the extension-token count raised to max_len exceeds the budget.
    """
    t0 = time.perf_counter()
    counted = CountingScorer(scorer)
    vocab = counted.vocabulary
    n_ext = len(vocab.extension_ids)
    if n_ext ** config.max_len > config.budget:
        raise BudgetExceededError(
            f"{n_ext}^{config.max_len} exceeds node budget {config.budget}")

    best: Optional[Hypothesis] = None

    def visit(h: Hypothesis) -> None:
        nonlocal best
        if best is not None and h.cum_logprob < best.cum_logprob:
            return
        row = counted.next_logprobs(inp.context, h.tokens)
        for tid in vocab.extension_ids:
            child = extend(h, tid, row[tid], vocab.eos_id)
            if child.complete:
                if best is None or child.sort_key() < best.sort_key():
                    best = child
            elif child.length < config.max_len:
                visit(child)

    root = Hypothesis.initial(vocab)
    visit(root)
    assert best is not None  # [BOS, EOS] is always reachable
    return _result(best, (best,), (best,), counted.calls, t0)


_STRATEGIES = {
    "greedy": greedy_decode,
    "beam": beam_decode,
    "lbs": lbs_decode,
    "lhbs": lhbs_decode,
    "exhaustive": exhaustive_decode,
}


def decode(scorer: Scorer, inp: DecodeInput, config: DecodeConfig) -> DecodeResult:
    """Dispatch to the strategy named in the config."""
    return _STRATEGIES[config.strategy](scorer, inp, config)
