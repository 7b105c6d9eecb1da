"""Corpus ingestion, deduplication, splitting and comment tokenisation."""

from __future__ import annotations

import hashlib
import json
import logging
import random
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

from joblib import Parallel, delayed

from .cfg import extract_functions, resolve_jumps, serialize_cfg, split_blocks
from .evm import disassemble, parse_hex, strip_metadata
from .exceptions import BytecommentError, EmptyComment, FormatError, InsufficientData

logger = logging.getLogger(__name__)

MANIFEST_VERSION = 1

_TOKEN_RE = re.compile(r"@\w+|\w+|[^\w\s]", re.UNICODE)
_DECORATION_RE = re.compile(r"^\s*(?:/\*\*+|/\*|///+|//+|\*/|\*)?\s*")


def tokenize_comment(text: str) -> List[str]:
    """Lowercase, split on whitespace and detach punctuation.

    ``@``-prefixed tags such as ``@param`` stay single tokens.

    >>> tokenize_comment("transfer(to, amount)")
    ['transfer', '(', 'to', ',', 'amount', ')']
    """
    tokens = _TOKEN_RE.findall(text.lower())
    if not tokens:
        raise EmptyComment("comment has no tokens")
    return tokens


def first_line(comment: str) -> str:
    """First non-empty line of a comment with comment markers removed."""
    for line in comment.splitlines():
        line = _DECORATION_RE.sub("", line, count=1).replace("*/", "").strip()
        if line:
            return line
    return ""


def entry_hash(cfg_tokens: Sequence[str], comment_tokens: Sequence[str]) -> str:
    payload = json.dumps([list(cfg_tokens), list(comment_tokens)], separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


def format_selector(selector: Optional[int]) -> str:
    return "FALLBACK" if selector is None else f"0x{selector:08x}"


def parse_selector(value: Union[str, int, None]) -> Optional[int]:
    if value is None or isinstance(value, int):
        return value
    if value.upper() == "FALLBACK":
        return None
    return int(value, 16)


@dataclass(frozen=True)
class CorpusEntry:
    contract_id: str
    selector: Optional[int]
    cfg_tokens: Tuple[str, ...]
    comment_tokens: Tuple[str, ...]
    entry_id: str = ""

    def __post_init__(self):
        if not self.entry_id:
            object.__setattr__(self, "entry_id", entry_hash(self.cfg_tokens, self.comment_tokens))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "entry_id": self.entry_id,
            "contract_id": self.contract_id,
            "selector": format_selector(self.selector),
            "cfg_tokens": " ".join(self.cfg_tokens),
            "comment_tokens": " ".join(self.comment_tokens),
        }

    @classmethod
    def from_dict(cls, row: Dict[str, Any]) -> "CorpusEntry":
        cfg = row["cfg_tokens"]
        com = row["comment_tokens"]
        return cls(
            contract_id=str(row.get("contract_id", "")),
            selector=parse_selector(row.get("selector")),
            cfg_tokens=tuple(cfg.split() if isinstance(cfg, str) else cfg),
            comment_tokens=tuple(com.split() if isinstance(com, str) else com),
            entry_id=row.get("entry_id", ""),
        )


@dataclass
class IngestReport:
    entries: List[CorpusEntry] = field(default_factory=list)
    skipped: List[Tuple[int, str]] = field(default_factory=list)
    n_records: int = 0


def _process_record(record: Dict[str, Any]) -> List[CorpusEntry]:
    bytecode = record.get("bytecode_hex")
    comment = record.get("comment")
    if not bytecode or not comment:
        raise FormatError("record needs non-empty bytecode_hex and comment")
    comment_tokens = tuple(tokenize_comment(first_line(comment) or comment))
    raw = strip_metadata(parse_hex(bytecode))
    graph = resolve_jumps(split_blocks(disassemble(raw)))
    functions = extract_functions(graph)
    if "selector" in record and record["selector"] is not None:
        wanted = parse_selector(record["selector"])
        functions = [f for f in functions if f.selector == wanted]
        if not functions:
            raise FormatError(f"selector {record['selector']} not found in dispatcher")
    contract_id = str(record.get("contract_id", ""))
    return [
        CorpusEntry(contract_id, fn.selector, tuple(serialize_cfg(fn)), comment_tokens)
        for fn in functions
    ]


def _safe_process(index: int, record: Any) -> Tuple[int, List[CorpusEntry], Optional[str]]:
    try:
        if not isinstance(record, dict):
            raise FormatError("record is not an object")
        return index, _process_record(record), None
    except (BytecommentError, KeyError, ValueError, TypeError) as exc:
        return index, [], f"{type(exc).__name__}: {exc}"


def ingest(records: Iterable[Any], n_jobs: Optional[int] = None) -> IngestReport:
    """Turn ``{bytecode_hex, comment, contract_id[, selector]}`` records into entries.

    Bad records are skipped with a logged diagnostic; ingestion never aborts.
    """
    records = list(records)
    if n_jobs and n_jobs != 1:
        results = Parallel(n_jobs=n_jobs)(delayed(_safe_process)(i, r) for i, r in enumerate(records))
    else:
        results = [_safe_process(i, r) for i, r in enumerate(records)]
    report = IngestReport(n_records=len(records))
    for index, entries, error in results:
        if error is not None:
            logger.warning("skipping record %d: %s", index, error)
            report.skipped.append((index, error))
        else:
            report.entries.extend(entries)
    return report


def dedup(entries: Iterable[CorpusEntry]) -> List[CorpusEntry]:
    """Keep the first entry per ``entry_id``, preserving order."""
    seen = set()
    out = []
    for entry in entries:
        if entry.entry_id not in seen:
            seen.add(entry.entry_id)
            out.append(entry)
    return out


@dataclass
class DatasetSplit:
    train: List[CorpusEntry]
    valid: List[CorpusEntry]
    test: List[CorpusEntry]
    seed: int

    def manifest(self) -> Dict[str, Any]:
        return {
            "version": MANIFEST_VERSION,
            "seed": self.seed,
            "train": [e.entry_id for e in self.train],
            "valid": [e.entry_id for e in self.valid],
            "test": [e.entry_id for e in self.test],
        }

    @classmethod
    def from_manifest(cls, manifest: Dict[str, Any], entries: Iterable[CorpusEntry]) -> "DatasetSplit":
        by_id = {e.entry_id: e for e in entries}
        try:
            parts = {k: [by_id[i] for i in manifest[k]] for k in ("train", "valid", "test")}
        except KeyError as exc:
            raise FormatError(f"manifest references unknown entry {exc}") from None
        return cls(seed=int(manifest.get("seed", 0)), **parts)


def split(entries: Sequence[CorpusEntry], ratios=(0.8, 0.1, 0.1), seed: int = 0) -> DatasetSplit:
    """Seeded shuffle, then partition into train/valid/test.

    Valid and test sizes are ``floor(n * ratio)`` (at least one each); the
    remainder goes to train.
    """
    n = len(entries)
    if n < 3:
        raise InsufficientData(f"need at least 3 entries to split, got {n}")
    order = list(entries)
    random.Random(seed).shuffle(order)
    n_valid = max(1, int(n * ratios[1]))
    n_test = max(1, int(n * ratios[2]))
    n_train = n - n_valid - n_test
    return DatasetSplit(
        train=order[:n_train],
        valid=order[n_train : n_train + n_valid],
        test=order[n_train + n_valid :],
        seed=seed,
    )


def read_jsonl(path: Union[str, Path]) -> Iterator[Any]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                yield json.loads(line)
            except json.JSONDecodeError as exc:
                logger.warning("%s:%d: unreadable line (%s)", path, lineno, exc)
                yield None


def write_entries(entries: Iterable[CorpusEntry], path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for entry in entries:
            fh.write(json.dumps(entry.to_dict(), sort_keys=True) + "\n")


def read_entries(path: Union[str, Path]) -> List[CorpusEntry]:
    out = []
    for row in read_jsonl(path):
        if row is None:
            raise FormatError(f"{path}: unreadable corpus line")
        out.append(CorpusEntry.from_dict(row))
    return out
