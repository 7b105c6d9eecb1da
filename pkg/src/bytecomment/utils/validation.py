"""Input validation helpers shared by the estimators."""

from __future__ import annotations

from numbers import Integral, Real
from typing import Any, List, Optional

from ..exceptions import EmptyInput, InputError


def check_token_sequences(X: Any, name: str = "X", length: Optional[int] = None) -> List[List[str]]:
    """Coerce ``X`` to a list of non-empty token lists.

    A whitespace-joined string is accepted for each sequence.
    """
    if isinstance(X, str):
        raise InputError(f"{name} must be a sequence of token sequences, not a string")
    try:
        out = [seq.split() if isinstance(seq, str) else [str(t) for t in seq] for seq in X]
    except TypeError:
        raise InputError(f"{name} must be iterable") from None
    if not out:
        raise EmptyInput(f"{name} is empty")
    for i, seq in enumerate(out):
        if not seq:
            raise EmptyInput(f"{name}[{i}] has no tokens")
    if length is not None and len(out) != length:
        raise InputError(f"{name} has {len(out)} rows, expected {length}")
    return out


_POSITIVE_INT = (
    "embed_dim", "hidden_dim", "dec_max_len", "batch_size", "epochs",
    "beam_k", "vocab_cap", "warmup", "eval_every", "eval_beam",
)


def check_hyperparams(est: Any) -> None:
    for name in _POSITIVE_INT:
        value = getattr(est, name)
        if not isinstance(value, Integral) or value < 1:
            raise InputError(f"{name} must be a positive integer, got {value!r}")
    if not isinstance(est.enc_max_len, Integral) or est.enc_max_len < 2:
        raise InputError("enc_max_len must be >= 2 to leave room for [SEP]")
    if not 0.0 <= est.dropout < 1.0:
        raise InputError(f"dropout must be in [0, 1), got {est.dropout}")
    for name in ("base_lr", "clip_norm", "init_scale"):
        value = getattr(est, name)
        if not isinstance(value, Real) or value <= 0:
            raise InputError(f"{name} must be positive, got {value!r}")
    if est.coverage_weight < 0:
        raise InputError("coverage_weight must be non-negative")
    if est.dtype not in ("float32", "float64"):
        raise InputError(f"dtype must be float32 or float64, got {est.dtype!r}")


def check_k(k: Any) -> int:
    if not isinstance(k, Integral) or k < 0:
        raise InputError(f"k must be a non-negative integer, got {k!r}")
    return int(k)
