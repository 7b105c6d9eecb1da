"""EVM opcode table, pinned to the Constantinople instruction set (140 opcodes).

Opcodes introduced after April 2019 (CHAINID, SELFBALANCE, BASEFEE, PUSH0, ...)
are deliberately absent and decode as INVALID.
"""

from __future__ import annotations

from typing import Dict, NamedTuple, Optional


class OpcodeInfo(NamedTuple):
    mnemonic: str
    immediate: int  # number of immediate bytes following the opcode
    pops: int
    pushes: int
    terminator: bool


def _op(mnemonic: str, pops: int, pushes: int, terminator: bool = False) -> OpcodeInfo:
    return OpcodeInfo(mnemonic, 0, pops, pushes, terminator)


_BASE: Dict[int, OpcodeInfo] = {
    0x00: _op("STOP", 0, 0, True),
    0x01: _op("ADD", 2, 1),
    0x02: _op("MUL", 2, 1),
    0x03: _op("SUB", 2, 1),
    0x04: _op("DIV", 2, 1),
    0x05: _op("SDIV", 2, 1),
    0x06: _op("MOD", 2, 1),
    0x07: _op("SMOD", 2, 1),
    0x08: _op("ADDMOD", 3, 1),
    0x09: _op("MULMOD", 3, 1),
    0x0A: _op("EXP", 2, 1),
    0x0B: _op("SIGNEXTEND", 2, 1),
    0x10: _op("LT", 2, 1),
    0x11: _op("GT", 2, 1),
    0x12: _op("SLT", 2, 1),
    0x13: _op("SGT", 2, 1),
    0x14: _op("EQ", 2, 1),
    0x15: _op("ISZERO", 1, 1),
    0x16: _op("AND", 2, 1),
    0x17: _op("OR", 2, 1),
    0x18: _op("XOR", 2, 1),
    0x19: _op("NOT", 1, 1),
    0x1A: _op("BYTE", 2, 1),
    0x1B: _op("SHL", 2, 1),
    0x1C: _op("SHR", 2, 1),
    0x1D: _op("SAR", 2, 1),
    0x20: _op("SHA3", 2, 1),
    0x30: _op("ADDRESS", 0, 1),
    0x31: _op("BALANCE", 1, 1),
    0x32: _op("ORIGIN", 0, 1),
    0x33: _op("CALLER", 0, 1),
    0x34: _op("CALLVALUE", 0, 1),
    0x35: _op("CALLDATALOAD", 1, 1),
    0x36: _op("CALLDATASIZE", 0, 1),
    0x37: _op("CALLDATACOPY", 3, 0),
    0x38: _op("CODESIZE", 0, 1),
    0x39: _op("CODECOPY", 3, 0),
    0x3A: _op("GASPRICE", 0, 1),
    0x3B: _op("EXTCODESIZE", 1, 1),
    0x3C: _op("EXTCODECOPY", 4, 0),
    0x3D: _op("RETURNDATASIZE", 0, 1),
    0x3E: _op("RETURNDATACOPY", 3, 0),
    0x3F: _op("EXTCODEHASH", 1, 1),
    0x40: _op("BLOCKHASH", 1, 1),
    0x41: _op("COINBASE", 0, 1),
    0x42: _op("TIMESTAMP", 0, 1),
    0x43: _op("NUMBER", 0, 1),
    0x44: _op("DIFFICULTY", 0, 1),
    0x45: _op("GASLIMIT", 0, 1),
    0x50: _op("POP", 1, 0),
    0x51: _op("MLOAD", 1, 1),
    0x52: _op("MSTORE", 2, 0),
    0x53: _op("MSTORE8", 2, 0),
    0x54: _op("SLOAD", 1, 1),
    0x55: _op("SSTORE", 2, 0),
    0x56: _op("JUMP", 1, 0, True),
    0x57: _op("JUMPI", 2, 0, True),
    0x58: _op("PC", 0, 1),
    0x59: _op("MSIZE", 0, 1),
    0x5A: _op("GAS", 0, 1),
    0x5B: _op("JUMPDEST", 0, 0),
    0xF0: _op("CREATE", 3, 1),
    0xF1: _op("CALL", 7, 1),
    0xF2: _op("CALLCODE", 7, 1),
    0xF3: _op("RETURN", 2, 0, True),
    0xF4: _op("DELEGATECALL", 6, 1),
    0xF5: _op("CREATE2", 4, 1),
    0xFA: _op("STATICCALL", 6, 1),
    0xFD: _op("REVERT", 2, 0, True),
    0xFE: _op("INVALID", 0, 0, True),
    0xFF: _op("SELFDESTRUCT", 1, 0, True),
}


def _build_table() -> Dict[int, OpcodeInfo]:
    table = dict(_BASE)
    for n in range(1, 33):
        table[0x5F + n] = OpcodeInfo(f"PUSH{n}", n, 0, 1, False)
    for n in range(1, 17):
        table[0x7F + n] = OpcodeInfo(f"DUP{n}", 0, n, n + 1, False)
        table[0x8F + n] = OpcodeInfo(f"SWAP{n}", 0, n + 1, n + 1, False)
    for n in range(0, 5):
        table[0xA0 + n] = OpcodeInfo(f"LOG{n}", 0, n + 2, 0, False)
    return table


OPCODES: Dict[int, OpcodeInfo] = _build_table()

#: Placeholder for byte values outside the table.
UNDEFINED = OpcodeInfo("INVALID", 0, 0, 0, True)

BY_MNEMONIC: Dict[str, int] = {
    info.mnemonic: value for value, info in OPCODES.items()
}

TERMINATORS = frozenset(
    {"JUMP", "JUMPI", "STOP", "RETURN", "REVERT", "SELFDESTRUCT", "INVALID"}
)


def lookup(value: int) -> Optional[OpcodeInfo]:
    """Return the table entry for a byte value, or None when undefined."""
    return OPCODES.get(value)


def is_push(mnemonic: str) -> bool:
    return mnemonic.startswith("PUSH")


def push_width(mnemonic: str) -> int:
    return int(mnemonic[4:]) if is_push(mnemonic) else 0
