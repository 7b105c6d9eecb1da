from __future__ import annotations

from collections import Counter
from pathlib import Path
from typing import Dict, Iterable, List, Sequence, Tuple, Union

from ..exceptions import FormatError
from ..retrieval import SEP

PAD, UNK, START, END, SEP_ID = 0, 1, 2, 3, 4
SPECIALS = ("<pad>", "<unk>", "<s>", "</s>", SEP)
_HEADER = "#vocab v1 specials=" + ",".join(SPECIALS)


class Vocabulary:
    """Shared token <-> id map. Ids 0..4 are PAD, UNK, START, END, [SEP]."""

    def __init__(self, tokens: Iterable[str] = ()):
        self.itos: List[str] = list(SPECIALS)
        self.stoi: Dict[str, int] = {t: i for i, t in enumerate(self.itos)}
        for tok in tokens:
            if tok not in self.stoi:
                self.stoi[tok] = len(self.itos)
                self.itos.append(tok)

    @classmethod
    def build(cls, sequences: Iterable[Sequence[str]], cap: int = 30000) -> "Vocabulary":
        """Most frequent tokens first (ties alphabetical), at most ``cap`` in total."""
        counts = Counter(t for seq in sequences for t in seq if t not in SPECIALS)
        ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
        keep = max(cap - len(SPECIALS), 0)
        return cls(t for t, _ in ranked[:keep])

    def __len__(self) -> int:
        return len(self.itos)

    def __contains__(self, token: str) -> bool:
        return token in self.stoi

    def id(self, token: str) -> int:
        return self.stoi.get(token, UNK)

    def encode(self, tokens: Sequence[str]) -> List[int]:
        return [self.stoi.get(t, UNK) for t in tokens]

    def extend(self, tokens: Sequence[str]) -> Tuple[List[int], List[str]]:
        """Ids over the vocabulary extended by this sequence's OOV tokens.

        Returns ``(extended_ids, oov_tokens)``; the j-th OOV token gets id
        ``len(self) + j``.
        """
        oov: List[str] = []
        ids = []
        for t in tokens:
            i = self.stoi.get(t)
            if i is None:
                if t not in oov:
                    oov.append(t)
                i = len(self.itos) + oov.index(t)
            ids.append(i)
        return ids, oov

    def decode(self, ids: Sequence[int], oov: Sequence[str] = ()) -> List[str]:
        n = len(self.itos)
        return [self.itos[i] if i < n else oov[i - n] for i in ids]

    def save(self, path: Union[str, Path]) -> None:
        body = self.itos[len(SPECIALS):]
        Path(path).write_text("\n".join([_HEADER, *body]) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: Union[str, Path]) -> "Vocabulary":
        lines = Path(path).read_text(encoding="utf-8").split("\n")
        if not lines or lines[0] != _HEADER:
            raise FormatError(f"{path}: missing vocabulary header")
        return cls(t for t in lines[1:] if t)

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocabulary) and self.itos == other.itos
