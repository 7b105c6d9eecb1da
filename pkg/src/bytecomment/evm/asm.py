"""Tiny mnemonic assembler, used to build fixtures and synthetic contracts."""

from __future__ import annotations

from typing import Dict, List, Union

from .opcodes import BY_MNEMONIC, OPCODES


def _tokens(source: Union[str, List[str]]) -> List[str]:
    return source.split() if isinstance(source, str) else list(source)


def asm(source: Union[str, List[str]]) -> bytes:
    """Assemble whitespace-separated mnemonics; PUSHn takes the next token.

    ``"PUSH1 0x04 JUMP JUMPDEST STOP"`` gives ``60 04 56 5b 00``. ``name:``
    defines a label at the current offset and ``@name`` as a PUSH operand
    refers to it. ``.byte 0xNN`` emits a raw byte.
    """
    toks = _tokens(source)
    labels: Dict[str, int] = {}
    # first pass: offsets only
    pc = 0
    i = 0
    while i < len(toks):
        tok = toks[i]
        if tok.endswith(":"):
            labels[tok[:-1]] = pc
            i += 1
        elif tok == ".byte":
            pc += 1
            i += 2
        else:
            width = OPCODES[BY_MNEMONIC[tok.upper()]].immediate
            pc += 1 + width
            i += 2 if width else 1

    out = bytearray()
    i = 0
    while i < len(toks):
        tok = toks[i]
        if tok.endswith(":"):
            i += 1
            continue
        if tok == ".byte":
            out.append(int(toks[i + 1], 0))
            i += 2
            continue
        value = BY_MNEMONIC[tok.upper()]
        out.append(value)
        width = OPCODES[value].immediate
        if width:
            arg = toks[i + 1]
            operand = labels[arg[1:]] if arg.startswith("@") else int(arg, 0)
            out += operand.to_bytes(width, "big")
            i += 1
        i += 1
    return bytes(out)
