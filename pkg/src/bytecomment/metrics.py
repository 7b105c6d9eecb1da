"""Sentence BLEU-1..4 with Smooth2, ROUGE-1/2/L F1, and corpus reports.

All scores are percentages in [0, 100].
"""

from __future__ import annotations

import csv
import io
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

from .exceptions import AlignmentError, UndefinedReference

Tokens = Sequence[str]


def ngrams(tokens: Tokens, n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def _clipped(hyp: Tokens, ref: Tokens, n: int) -> Tuple[int, int]:
    h = ngrams(hyp, n)
    r = ngrams(ref, n)
    return sum(min(c, r[g]) for g, c in h.items()), max(len(hyp) - n + 1, 0)


def _bleu_from_counts(matches: Sequence[int], totals: Sequence[int], hyp_len: int, ref_len: int, k: int) -> float:
    if hyp_len == 0:
        return 0.0
    log_sum = 0.0
    for n in range(1, k + 1):
        m, t = matches[n - 1], totals[n - 1]
        if n >= 2:  # Smooth2
            m, t = m + 1, t + 1
        if m == 0 or t == 0:
            return 0.0
        log_sum += math.log(m / t)
    bp = 1.0 if hyp_len >= ref_len else math.exp(1.0 - ref_len / hyp_len)
    return 100.0 * bp * math.exp(log_sum / k)


def bleu(hyp: Tokens, ref: Tokens, max_n: int = 4) -> List[float]:
    """``[BLEU-1, ..., BLEU-max_n]`` for one hypothesis/reference pair."""
    counts = [_clipped(hyp, ref, n) for n in range(1, max_n + 1)]
    matches = [m for m, _ in counts]
    totals = [t for _, t in counts]
    return [_bleu_from_counts(matches, totals, len(hyp), len(ref), k) for k in range(1, max_n + 1)]


def corpus_bleu(hyps: Sequence[Tokens], refs: Sequence[Tokens], max_n: int = 4) -> List[float]:
    """Pooled-count BLEU (Smooth2 applied to the pooled counts)."""
    _check_aligned(hyps, refs)
    matches = [0] * max_n
    totals = [0] * max_n
    hyp_len = ref_len = 0
    for hyp, ref in zip(hyps, refs):
        hyp_len += len(hyp)
        ref_len += len(ref)
        for n in range(1, max_n + 1):
            m, t = _clipped(hyp, ref, n)
            matches[n - 1] += m
            totals[n - 1] += t
    return [_bleu_from_counts(matches, totals, hyp_len, ref_len, k) for k in range(1, max_n + 1)]


def _f1(overlap: float, hyp_total: int, ref_total: int) -> float:
    if overlap == 0:
        return 0.0
    p = overlap / hyp_total
    r = overlap / ref_total
    return 100.0 * 2 * p * r / (p + r)


def rouge_n(hyp: Tokens, ref: Tokens, n: int = 1) -> float:
    if not ref:
        raise UndefinedReference("ROUGE needs a non-empty reference")
    h, r = ngrams(hyp, n), ngrams(ref, n)
    overlap = sum(min(c, r[g]) for g, c in h.items())
    return _f1(overlap, sum(h.values()), sum(r.values()))


def lcs_length(a: Tokens, b: Tokens) -> int:
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b):
            cur.append(prev[j] + 1 if x == y else max(prev[j + 1], cur[j]))
        prev = cur
    return prev[-1]


def rouge_l(hyp: Tokens, ref: Tokens) -> float:
    if not ref:
        raise UndefinedReference("ROUGE needs a non-empty reference")
    return _f1(lcs_length(hyp, ref), len(hyp), len(ref))


METRICS = ("bleu_1", "bleu_2", "bleu_3", "bleu_4", "rouge_1", "rouge_2", "rouge_l")


def sentence_scores(hyp: Tokens, ref: Tokens) -> Dict[str, float]:
    b = bleu(hyp, ref)
    return {
        "bleu_1": b[0],
        "bleu_2": b[1],
        "bleu_3": b[2],
        "bleu_4": b[3],
        "rouge_1": rouge_n(hyp, ref, 1),
        "rouge_2": rouge_n(hyp, ref, 2),
        "rouge_l": rouge_l(hyp, ref),
    }


@dataclass
class EvalReport:
    bleu_1: float
    bleu_2: float
    bleu_3: float
    bleu_4: float
    rouge_1: float
    rouge_2: float
    rouge_l: float
    examples: List[Dict] = field(default_factory=list)

    def summary(self) -> Dict[str, float]:
        return {m: getattr(self, m) for m in METRICS}

    def to_json(self, **extra) -> str:
        doc = {"corpus": {m: round(v, 2) for m, v in self.summary().items()}, **extra}
        doc["examples"] = self.examples
        return json.dumps(doc, indent=2, sort_keys=True)

    def to_table(self, delimiter: str = "\t") -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, delimiter=delimiter, lineterminator="\n")
        writer.writerow(["id", *METRICS])
        writer.writerow(["corpus", *(f"{getattr(self, m):.2f}" for m in METRICS)])
        for row in self.examples:
            writer.writerow([row.get("id", ""), *(f"{row[m]:.2f}" for m in METRICS)])
        return buf.getvalue()


def _check_aligned(hyps, refs) -> None:
    if len(hyps) != len(refs):
        raise AlignmentError(f"{len(hyps)} outputs vs {len(refs)} references")


def evaluate(
    hyps: Sequence[Tokens],
    refs: Sequence[Tokens],
    ids: Sequence[str] | None = None,
    pooled_bleu: bool = False,
) -> EvalReport:
    """Corpus scores as the mean of sentence scores.

    With ``pooled_bleu`` the BLEU columns use pooled n-gram counts instead.
    """
    _check_aligned(hyps, refs)
    if not refs:
        raise AlignmentError("nothing to evaluate")
    rows = []
    for i, (h, r) in enumerate(zip(hyps, refs)):
        row = {"id": ids[i] if ids is not None else str(i), **sentence_scores(h, r)}
        row["hypothesis"] = " ".join(h)
        row["reference"] = " ".join(r)
        rows.append(row)
    means = {m: sum(row[m] for row in rows) / len(rows) for m in METRICS}
    if pooled_bleu:
        for k, v in enumerate(corpus_bleu(hyps, refs), 1):
            means[f"bleu_{k}"] = v
    return EvalReport(**means, examples=rows)
