"""Estimators that chain CFG extraction, retrieval and comment generation."""

from __future__ import annotations

from typing import Callable, Dict, List, Optional, Sequence, Tuple

from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .cfg import function_sequences
from .corpus import CorpusEntry
from .exceptions import InputError
from .model import CommentGenerator
from .retrieval import Bm25Index, Ranked, build_index, query, retrieve_input
from .utils.validation import check_k


class CfgSequencer(TransformerMixin, BaseEstimator):
    """Stateless transformer: hex bytecode -> per-function CFG sequences.

    ``transform`` returns, for each contract, a list of
    ``(selector, tokens)`` with ``selector`` None for the fallback.
    """

    def __init__(self, strip_metadata: bool = True):
        self.strip_metadata = strip_metadata

    def fit(self, X=None, y=None):
        return self

    def transform(self, X: Sequence[str]) -> List[List[Tuple[Optional[int], List[str]]]]:
        if isinstance(X, str):
            raise InputError("CfgSequencer.transform expects a list of hex strings")
        return [
            [(fn.selector, tokens) for fn, tokens in function_sequences(code, self.strip_metadata)]
            for code in X
        ]


def _as_entries(X) -> List[CorpusEntry]:
    out = []
    for item in X:
        if isinstance(item, CorpusEntry):
            out.append(item)
        else:
            tokens = tuple(item.split() if isinstance(item, str) else item)
            if not tokens:
                raise InputError("empty CFG sequence")
            out.append(CorpusEntry("", None, tokens, (), entry_id="query"))
    return out


class Bm25Retriever(BaseEstimator):
    """BM25 (or bag-of-words cosine) retrieval of similar comments.

    ``transform`` builds model inputs ``comments ++ [SEP] ++ cfg``. With
    ``exclude_self`` an entry never retrieves itself (leave-one-out).
    """

    def __init__(self, k1: float = 1.2, b: float = 0.75, topk: int = 1,
                 exclude_self: bool = True, method: str = "bm25"):
        self.k1 = k1
        self.b = b
        self.topk = topk
        self.exclude_self = exclude_self
        self.method = method

    def fit(self, X: Sequence[CorpusEntry], y=None) -> "Bm25Retriever":
        if self.method not in ("bm25", "bow"):
            raise InputError(f"method must be 'bm25' or 'bow', got {self.method!r}")
        check_k(self.topk)
        self.index_ = build_index(list(X), self.k1, self.b) if len(X) else None
        return self

    @classmethod
    def from_index(cls, index: Optional[Bm25Index], **params) -> "Bm25Retriever":
        est = cls(**params)
        if index is not None:
            est.set_params(k1=index.k1, b=index.b)
        est.index_ = index
        return est

    def query(self, tokens: Sequence[str], k: Optional[int] = None) -> Ranked:
        check_is_fitted(self, "index_")
        if self.index_ is None:
            return []
        return query(self.index_, tokens, self.topk if k is None else check_k(k))

    def transform(self, X) -> List[List[str]]:
        check_is_fitted(self, "index_")
        return [
            retrieve_input(e, self.index_, self.topk, self.exclude_self, self.method)
            for e in _as_entries(X)
        ]


class BytecodeCommenter(BaseEstimator):
    """Retriever + generator; the end-to-end model used by the CLI."""

    def __init__(self, retriever: Optional[Bm25Retriever] = None,
                 generator: Optional[CommentGenerator] = None):
        self.retriever = retriever
        self.generator = generator

    def fit(self, X: Sequence[CorpusEntry], y=None, X_val: Optional[Sequence[CorpusEntry]] = None,
            log: Optional[Callable[[Dict], None]] = None) -> "BytecodeCommenter":
        X = list(X)
        self.retriever_ = self.retriever if self.retriever is not None else Bm25Retriever()
        if not hasattr(self.retriever_, "index_"):
            self.retriever_.fit(X)
        self.generator_ = self.generator if self.generator is not None else CommentGenerator()
        inputs = self.retriever_.transform(X)
        targets = [list(e.comment_tokens) for e in X]
        val_in = val_tg = None
        if X_val:
            val_in = self.retriever_.transform(X_val)
            val_tg = [list(e.comment_tokens) for e in X_val]
        self.generator_.fit(inputs, targets, val_in, val_tg, log=log)
        return self

    def predict(self, X) -> List[List[str]]:
        """Comments for corpus entries or raw CFG token sequences."""
        check_is_fitted(self, "generator_")
        return self.generator_.predict(self.retriever_.transform(X))

    def generate(self, bytecode_hex: str, strip_metadata: bool = True) -> List[Tuple[Optional[int], List[str]]]:
        """``(selector, comment tokens)`` for every function of a contract."""
        [functions] = CfgSequencer(strip_metadata).transform([bytecode_hex])
        comments = self.predict([tokens for _, tokens in functions])
        return [(sel, c) for (sel, _), c in zip(functions, comments)]
