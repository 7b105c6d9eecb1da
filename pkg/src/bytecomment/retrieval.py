"""BM25 and bag-of-words retrieval over CFG sequences."""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

from .corpus import CorpusEntry
from .exceptions import EmptyCodebase, FormatError, InputError

SEP = "[SEP]"
INDEX_FORMAT = "bytecomment-bm25"
INDEX_VERSION = 1

Ranked = List[Tuple[str, float]]


@dataclass
class Bm25Index:
    """Inverted index over ``cfg_tokens``; also keeps each document's comment."""

    postings: Dict[str, List[Tuple[str, int]]]
    doc_len: Dict[str, int]
    comments: Dict[str, Tuple[str, ...]]
    k1: float = 1.2
    b: float = 0.75
    doc_tokens: Dict[str, Tuple[str, ...]] = field(default_factory=dict, repr=False)
    meta: Dict = field(default_factory=dict, repr=False)

    @property
    def N(self) -> int:
        return len(self.doc_len)

    @property
    def avgdl(self) -> float:
        return sum(self.doc_len.values()) / self.N if self.N else 0.0

    def idf(self, token: str) -> float:
        n = len(self.postings.get(token, ()))
        return math.log((self.N - n + 0.5) / (n + 0.5) + 1.0)

    def to_json(self) -> Dict:
        return {
            "format": INDEX_FORMAT,
            "version": INDEX_VERSION,
            "k1": self.k1,
            "b": self.b,
            "doc_len": self.doc_len,
            "postings": {t: [[d, tf] for d, tf in ps] for t, ps in sorted(self.postings.items())},
            "comments": {d: " ".join(c) for d, c in self.comments.items()},
            "documents": {d: " ".join(t) for d, t in self.doc_tokens.items()},
            "meta": self.meta,
        }

    @classmethod
    def from_json(cls, data: Dict) -> "Bm25Index":
        if data.get("format") != INDEX_FORMAT or data.get("version") != INDEX_VERSION:
            raise FormatError("not a version-1 BM25 index file")
        return cls(
            postings={t: [(d, int(tf)) for d, tf in ps] for t, ps in data["postings"].items()},
            doc_len={d: int(n) for d, n in data["doc_len"].items()},
            comments={d: tuple(c.split()) for d, c in data["comments"].items()},
            k1=float(data["k1"]),
            b=float(data["b"]),
            doc_tokens={d: tuple(t.split()) for d, t in data.get("documents", {}).items()},
            meta=dict(data.get("meta", {})),
        )

    def save(self, path: Union[str, Path]) -> None:
        Path(path).write_text(json.dumps(self.to_json(), sort_keys=True), encoding="utf-8")

    @classmethod
    def load(cls, path: Union[str, Path]) -> "Bm25Index":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise FormatError(f"cannot read index {path}: {exc}") from None
        return cls.from_json(data)


def build_index(entries: Sequence[CorpusEntry], k1: float = 1.2, b: float = 0.75) -> Bm25Index:
    if not entries:
        raise EmptyCodebase("cannot index an empty codebase")
    postings: Dict[str, List[Tuple[str, int]]] = {}
    doc_len: Dict[str, int] = {}
    comments: Dict[str, Tuple[str, ...]] = {}
    docs: Dict[str, Tuple[str, ...]] = {}
    for entry in entries:
        if entry.entry_id in doc_len:
            continue
        doc_len[entry.entry_id] = len(entry.cfg_tokens)
        comments[entry.entry_id] = tuple(entry.comment_tokens)
        docs[entry.entry_id] = tuple(entry.cfg_tokens)
        for token, tf in Counter(entry.cfg_tokens).items():
            postings.setdefault(token, []).append((entry.entry_id, tf))
    return Bm25Index(postings, doc_len, comments, k1, b, docs)


def _top_k(scores: Dict[str, float], k: int) -> Ranked:
    ranked = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))
    return ranked[:k]


def bm25_scores(index: Bm25Index, query_tokens: Iterable[str]) -> Dict[str, float]:
    """Score every document; repeated query tokens contribute repeatedly."""
    scores = dict.fromkeys(index.doc_len, 0.0)
    avgdl = index.avgdl
    k1, b = index.k1, index.b
    for token in query_tokens:
        plist = index.postings.get(token)
        if not plist:
            continue
        idf = index.idf(token)
        for doc, tf in plist:
            norm = k1 * (1.0 - b + b * index.doc_len[doc] / avgdl)
            scores[doc] += idf * tf * (k1 + 1.0) / (tf + norm)
    return scores


def query(index: Bm25Index, tokens: Sequence[str], k: int = 1) -> Ranked:
    """Top-k ``(entry_id, score)`` by BM25, ties by ascending entry id."""
    if k < 0:
        raise InputError("k must be non-negative")
    if k == 0:
        return []
    return _top_k(bm25_scores(index, tokens), k)


def _cosine(q: Counter, d: Counter) -> float:
    dot = sum(c * d[t] for t, c in q.items() if t in d)
    if not dot:
        return 0.0
    nq = math.sqrt(sum(c * c for c in q.values()))
    nd = math.sqrt(sum(c * c for c in d.values()))
    return dot / (nq * nd)


def bow_cosine_query(entries: Sequence[CorpusEntry], tokens: Sequence[str], k: int = 1) -> Ranked:
    """Cosine similarity of token-count vectors (bag-of-words baseline)."""
    if k < 0:
        raise InputError("k must be non-negative")
    if k == 0:
        return []
    return _bow_rank(((e.entry_id, e.cfg_tokens) for e in entries), tokens, k)


def _bow_rank(docs: Iterable[Tuple[str, Sequence[str]]], tokens: Sequence[str], k: int) -> Ranked:
    q = Counter(tokens)
    scores: Dict[str, float] = {}
    for doc_id, doc in docs:
        scores.setdefault(doc_id, _cosine(q, Counter(doc)))
    return _top_k(scores, k)


def attach_retrieved(
    cfg_tokens: Sequence[str],
    ranked: Ranked,
    comments: Dict[str, Sequence[str]],
    k: int = 1,
    exclude_id: Optional[str] = None,
) -> List[str]:
    """``comment_1 ++ ... ++ comment_k ++ [SEP] ++ cfg_tokens``.

    ``ranked`` must be ordered best-first and contain enough candidates to
    survive the exclusion of ``exclude_id``.
    """
    picked = [doc for doc, _ in ranked if doc != exclude_id][:k]
    out: List[str] = []
    for doc in picked:
        out.extend(comments[doc])
    out.append(SEP)
    out.extend(cfg_tokens)
    return out


def retrieve_input(
    entry: CorpusEntry,
    index: Optional[Bm25Index],
    k: int = 1,
    exclude_self: bool = True,
    method: str = "bm25",
) -> List[str]:
    """Model input for one corpus entry, querying ``index`` for neighbours."""
    if index is None or k == 0 or index.N == 0:
        return attach_retrieved(entry.cfg_tokens, [], {}, 0)
    exclude = entry.entry_id if exclude_self else None
    fetch = k + (1 if exclude is not None and exclude in index.doc_len else 0)
    if method == "bm25":
        ranked = query(index, entry.cfg_tokens, fetch)
    elif method == "bow":
        ranked = _bow_rank(index.doc_tokens.items(), entry.cfg_tokens, fetch)
    else:
        raise InputError(f"unknown retrieval method {method!r}")
    return attach_retrieved(entry.cfg_tokens, ranked, index.comments, k, exclude)
