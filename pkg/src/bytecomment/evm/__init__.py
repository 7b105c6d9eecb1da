from .disasm import (
    Instruction,
    RawBytecode,
    assemble,
    disassemble,
    format_listing,
    parse_hex,
    strip_metadata,
)
from .opcodes import OPCODES, TERMINATORS, OpcodeInfo

__all__ = [
    "Instruction",
    "OPCODES",
    "OpcodeInfo",
    "RawBytecode",
    "TERMINATORS",
    "assemble",
    "disassemble",
    "format_listing",
    "parse_hex",
    "strip_metadata",
]
