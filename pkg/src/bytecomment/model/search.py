"""Beam search and UNK replacement."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, List, Sequence, Tuple

import torch

from ..retrieval import SEP
from .vocab import END, START

# step(states, last_tokens) -> (log-probs (n, V'), new states, attentions)
StepFn = Callable[[List[Any], List[int]], Tuple[torch.Tensor, List[Any], List[Any]]]


@dataclass
class Hypothesis:
    tokens: List[int]
    logp: float
    state: Any = None
    attentions: List[Any] = field(default_factory=list)
    finished_at: int = -1
    ended: bool = False

    @property
    def score(self) -> float:
        """Length-normalised log-probability."""
        return self.logp / max(len(self.tokens), 1)


def beam_search(
    step: StepFn,
    init_state: Any,
    beam_k: int = 5,
    max_len: int = 50,
    start_id: int = START,
    end_id: int = END,
) -> List[Hypothesis]:
    """Return finalised hypotheses, best first.

    At each step the best ``beam_k - len(finished)`` expansions survive;
    those ending in ``end_id`` are finalised. Search stops when ``beam_k``
    hypotheses are final or after ``max_len`` tokens, when survivors are
    finalised as they are. Ranking is by log-probability divided by length,
    then earlier finalisation, then token ids.
    """
    if beam_k < 1:
        raise ValueError("beam_k must be >= 1")
    alive = [Hypothesis([], 0.0, init_state)]
    finished: List[Hypothesis] = []
    order = 0
    for t in range(max_len):
        last = [h.tokens[-1] if h.tokens else start_id for h in alive]
        logp, states, attns = step([h.state for h in alive], last)
        width = beam_k - len(finished)
        top_lp, top_ix = logp.topk(min(width, logp.shape[1]), dim=1)
        cands = []
        for i, h in enumerate(alive):
            for lp, tok in zip(top_lp[i].tolist(), top_ix[i].tolist()):
                cands.append((h.logp + lp, i, tok))
        cands.sort(key=lambda c: (-c[0], c[1], c[2]))
        next_alive = []
        for total, i, tok in cands[:width]:
            parent = alive[i]
            hyp = Hypothesis(parent.tokens + [tok], total, states[i], parent.attentions + [attns[i]])
            if tok == end_id:
                hyp.finished_at = order
                hyp.ended = True
                order += 1
                finished.append(hyp)
            else:
                next_alive.append(hyp)
        alive = next_alive
        if not alive or len(finished) >= beam_k:
            break
    for h in alive:
        h.finished_at = order
        order += 1
        finished.append(h)
    finished.sort(key=lambda h: (-h.score, h.finished_at, h.tokens))
    return finished


def strip_special(tokens: Sequence[int]) -> List[int]:
    return [t for t in tokens if t not in (START, END)]


def unk_replace(
    tokens: Sequence[str],
    attentions: Sequence[Sequence[float]],
    source: Sequence[str],
    unk: str = "<unk>",
) -> List[str]:
    """Swap every ``unk`` for the source token with the highest attention.

    ``attentions[t]`` is the attention over source positions at output step
    ``t``; PAD and [SEP] positions are never chosen.
    """
    out = list(tokens)
    for t, tok in enumerate(out):
        if tok != unk:
            continue
        best, best_i = None, None
        for i, (w, src_tok) in enumerate(zip(attentions[t], source)):
            if src_tok in (SEP, "<pad>"):
                continue
            w = float(w)
            if best is None or w > best:
                best, best_i = w, i
        if best_i is not None:
            out[t] = source[best_i]
    return out
