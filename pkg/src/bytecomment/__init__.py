"""Comment generation for EVM bytecode: CFG recovery, BM25 retrieval and a
copy/coverage encoder-decoder."""

__version__ = "0.1.0"

from .corpus import CorpusEntry, DatasetSplit, dedup, ingest, split, tokenize_comment
from .metrics import EvalReport, bleu, evaluate, rouge_l, rouge_n
from .model import CommentGenerator, Vocabulary
from .pipeline import Bm25Retriever, BytecodeCommenter, CfgSequencer
from .retrieval import Bm25Index, attach_retrieved, bow_cosine_query, build_index, query

__all__ = [
    "Bm25Index",
    "Bm25Retriever",
    "BytecodeCommenter",
    "CfgSequencer",
    "CommentGenerator",
    "CorpusEntry",
    "DatasetSplit",
    "EvalReport",
    "Vocabulary",
    "attach_retrieved",
    "bleu",
    "bow_cosine_query",
    "build_index",
    "dedup",
    "evaluate",
    "ingest",
    "query",
    "rouge_l",
    "rouge_n",
    "split",
    "tokenize_comment",
]
