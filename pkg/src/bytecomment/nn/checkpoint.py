"""Named-tensor checkpoint container (``.npz`` with a JSON header)."""

from __future__ import annotations

import json
import zipfile
from pathlib import Path
from typing import Any, Dict, Mapping, Tuple, Union

import numpy as np
import torch

from ..exceptions import FormatError

CHECKPOINT_FORMAT = "bytecomment-checkpoint"
CHECKPOINT_VERSION = 1


def save_checkpoint(
    path: Union[str, Path],
    tensors: Mapping[str, torch.Tensor],
    step: int,
    meta: Mapping[str, Any] | None = None,
) -> None:
    """Write tensors plus a header recording shapes, dtype, step and ``meta``."""
    arrays = {name: t.detach().cpu().numpy() for name, t in tensors.items()}
    dtypes = {str(a.dtype) for a in arrays.values()}
    header = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "step": int(step),
        "dtype": dtypes.pop() if len(dtypes) == 1 else "mixed",
        "shapes": {name: list(a.shape) for name, a in arrays.items()},
        "meta": dict(meta or {}),
    }
    arrays["__header__"] = np.frombuffer(
        json.dumps(header, sort_keys=True).encode("utf-8"), dtype=np.uint8
    )
    # fixed zip timestamps keep identical checkpoints byte-identical
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_STORED) as zf:
        for name in sorted(arrays):
            info = zipfile.ZipInfo(name + ".npy", date_time=(1980, 1, 1, 0, 0, 0))
            with zf.open(info, "w") as fh:
                np.lib.format.write_array(fh, np.ascontiguousarray(arrays[name]), allow_pickle=False)


def load_checkpoint(path: Union[str, Path]) -> Tuple[Dict[str, torch.Tensor], Dict[str, Any]]:
    """Return ``(tensors, header)``; raises :class:`FormatError` on bad files."""
    try:
        with np.load(path, allow_pickle=False) as data:
            header = json.loads(bytes(data["__header__"]).decode("utf-8"))
            tensors = {k: torch.from_numpy(data[k].copy()) for k in data.files if k != "__header__"}
    except (OSError, KeyError, ValueError) as exc:
        raise FormatError(f"cannot read checkpoint {path}: {exc}") from None
    if header.get("format") != CHECKPOINT_FORMAT or header.get("version") != CHECKPOINT_VERSION:
        raise FormatError(f"{path} is not a version-{CHECKPOINT_VERSION} checkpoint")
    for name, shape in header["shapes"].items():
        if list(tensors[name].shape) != shape:
            raise FormatError(f"shape mismatch for {name}")
    return tensors, header
