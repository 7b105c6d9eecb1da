"""Hex parsing, linear-sweep disassembly and metadata trailer stripping."""

from __future__ import annotations

import io
import re
from dataclasses import dataclass
from typing import Iterable, List, Optional

import cbor2

from ..exceptions import MalformedHex
from .opcodes import OPCODES, UNDEFINED

_HEX_RE = re.compile(r"[0-9a-fA-F]*")


@dataclass(frozen=True)
class RawBytecode:
    """Decoded runtime code together with the text it came from."""

    code: bytes
    source_hex: str = ""

    def __len__(self) -> int:
        return len(self.code)


@dataclass(frozen=True)
class Instruction:
    offset: int
    opcode: str
    value: int  # raw byte value, kept so the stream re-encodes exactly
    immediate: Optional[bytes] = None
    valid: bool = True

    @property
    def size(self) -> int:
        return 1 + (len(self.immediate) if self.immediate is not None else 0)

    @property
    def next_offset(self) -> int:
        return self.offset + self.size

    @property
    def operand(self) -> Optional[int]:
        """Immediate as an unsigned big-endian integer (complete PUSH only)."""
        if self.immediate is None or not self.valid:
            return None
        return int.from_bytes(self.immediate, "big")

    def __str__(self) -> str:
        text = f"{self.offset:04x} {self.opcode}"
        if self.immediate is not None:
            text += " 0x" + self.immediate.hex()
        return text


def parse_hex(text: str) -> RawBytecode:
    """Decode optionally ``0x``-prefixed hex text.

    Surrounding whitespace is ignored. Raises :class:`MalformedHex` on an odd
    digit count or a non-hex character.
    """
    source = text
    digits = text.strip()
    if digits[:2] in ("0x", "0X"):
        digits = digits[2:]
    if not _HEX_RE.fullmatch(digits):
        raise MalformedHex(f"non-hex character in bytecode: {source[:40]!r}")
    if len(digits) % 2:
        raise MalformedHex(f"odd number of hex digits ({len(digits)})")
    return RawBytecode(bytes.fromhex(digits), source)


def disassemble(code: RawBytecode | bytes) -> List[Instruction]:
    """Linear sweep over ``code``; never raises.

    Undefined byte values become ``INVALID`` with ``valid=False``. A PUSH
    running past the end keeps the available bytes and is marked invalid.
    """
    data = code.code if isinstance(code, RawBytecode) else bytes(code)
    out: List[Instruction] = []
    pc = 0
    n = len(data)
    while pc < n:
        value = data[pc]
        info = OPCODES.get(value)
        if info is None:
            out.append(Instruction(pc, UNDEFINED.mnemonic, value, None, False))
            pc += 1
            continue
        if info.immediate:
            imm = data[pc + 1 : pc + 1 + info.immediate]
            out.append(
                Instruction(pc, info.mnemonic, value, imm, len(imm) == info.immediate)
            )
            pc += 1 + len(imm)
        else:
            out.append(Instruction(pc, info.mnemonic, value))
            pc += 1
    return out


def assemble(instructions: Iterable[Instruction]) -> bytes:
    """Re-encode an instruction stream; inverse of :func:`disassemble`."""
    buf = bytearray()
    for ins in instructions:
        buf.append(ins.value)
        if ins.immediate is not None:
            buf += ins.immediate
    return bytes(buf)


def _is_cbor_map(window: bytes) -> bool:
    stream = io.BytesIO(window)
    try:
        obj = cbor2.CBORDecoder(stream).decode()
    except Exception:  # any decode failure means "not a trailer"
        return False
    return isinstance(obj, dict) and stream.tell() == len(window)


def strip_metadata(code: RawBytecode) -> RawBytecode:
    """Remove a trailing Solidity CBOR metadata block if one validates."""
    data = code.code
    if len(data) < 2:
        return code
    length = int.from_bytes(data[-2:], "big")
    if length == 0 or len(data) < length + 2:
        return code
    if not _is_cbor_map(data[-2 - length : -2]):
        return code
    return RawBytecode(data[: -2 - length], code.source_hex)


def format_listing(instructions: Iterable[Instruction]) -> str:
    """One instruction per line: ``OFFSET MNEMONIC [IMMEDIATE-HEX]``."""
    return "".join(f"{ins}\n" for ins in instructions)
