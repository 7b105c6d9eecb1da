"""Synthetic ``(bytecode, comment)`` corpora for smoke tests and examples.

Each function body is assembled from an optional guard, an operand snippet
and an action snippet, and its comment is the matching phrase, so the
mapping from CFG sequence to comment is learnable.
"""

from __future__ import annotations

import itertools
import random
from typing import Dict, List, Tuple

import cbor2

from .evm.asm import asm

_ACTIONS: List[Tuple[str, str]] = [
    ("returns the", "PUSH1 0x40 MSTORE PUSH1 0x20 PUSH1 0x40 RETURN"),
    ("sets the", "PUSH1 0x04 CALLDATALOAD SWAP1 POP PUSH1 0x00 SSTORE STOP"),
    ("emits the", "PUSH1 0x40 MSTORE PUSH1 0x20 PUSH1 0x40 LOG1 STOP"),
    ("increments the", "PUSH1 0x01 ADD PUSH1 0x00 SSTORE STOP"),
    ("clears the", "POP PUSH1 0x00 DUP1 SSTORE STOP"),
]

_OPERANDS: List[Tuple[str, str]] = [
    ("owner", "PUSH1 0x00 SLOAD"),
    ("balance of the caller", "CALLER PUSH1 0x00 MSTORE PUSH1 0x20 PUSH1 0x00 SHA3 SLOAD"),
    ("total supply", "PUSH1 0x02 SLOAD DUP1 ISZERO POP"),
    ("token price", "PUSH1 0x03 SLOAD CALLVALUE DIV"),
    ("current fee", "PUSH1 0x04 SLOAD TIMESTAMP MUL"),
    ("allowance of the spender", "CALLER PUSH1 0x04 CALLDATALOAD XOR PUSH1 0x05 SLOAD AND"),
    ("contract balance", "ADDRESS BALANCE"),
    ("block number", "NUMBER"),
]

_GUARDS: List[Tuple[str, str]] = [
    ("", ""),
    ("if the caller is the owner", "CALLER PUSH1 0x00 SLOAD EQ PUSH2 @{ok} JUMPI PUSH1 0x00 DUP1 REVERT {ok}: JUMPDEST"),
    ("when the contract is not paused", "PUSH1 0x06 SLOAD ISZERO PUSH2 @{ok} JUMPI PUSH1 0x00 DUP1 REVERT {ok}: JUMPDEST"),
    ("only when no ether is sent", "CALLVALUE ISZERO PUSH2 @{ok} JUMPI PUSH1 0x00 DUP1 REVERT {ok}: JUMPDEST"),
]


def function_templates() -> List[Tuple[str, str]]:
    """All ``(comment, body-template)`` combinations (160 in total)."""
    out = []
    for (g_text, g_code), (o_text, o_code), (a_text, a_code) in itertools.product(
        _GUARDS, _OPERANDS, _ACTIONS
    ):
        comment = f"{a_text} {o_text}" + (f" {g_text}" if g_text else "")
        out.append((comment, " ".join(filter(None, [g_code, o_code, a_code]))))
    return out


def metadata_trailer(rng: random.Random) -> bytes:
    body = cbor2.dumps({"ipfs": bytes(rng.randrange(256) for _ in range(34)), "solc": bytes([0, 4, 24])})
    return body + len(body).to_bytes(2, "big")


def make_contract(functions: List[Tuple[int, str]], trailer: bytes = b"") -> bytes:
    """Assemble a dispatcher over ``(selector, body)`` pairs plus a fallback."""
    parts = [
        "PUSH1 0x80 PUSH1 0x40 MSTORE",
        "PUSH1 0x04 CALLDATASIZE LT PUSH2 @fallback JUMPI",
        "PUSH1 0x00 CALLDATALOAD PUSH1 0xe0 SHR",
    ]
    for i, (selector, _) in enumerate(functions):
        parts.append(f"DUP1 PUSH4 0x{selector:08x} EQ PUSH2 @fn{i} JUMPI")
    parts.append("fallback: JUMPDEST PUSH1 0x00 DUP1 REVERT")
    for i, (_, body) in enumerate(functions):
        parts.append(f"fn{i}: JUMPDEST " + body.format(ok=f"ok{i}"))
    return asm(" ".join(parts)) + trailer


def make_records(n_functions: int, seed: int = 0, per_contract: int = 2) -> List[Dict]:
    """JSON-lines style records, one per function, each with its selector."""
    rng = random.Random(seed)
    templates = function_templates()
    if n_functions > len(templates):
        raise ValueError(f"at most {len(templates)} distinct functions available")
    chosen = rng.sample(templates, n_functions)
    records = []
    for c, start in enumerate(range(0, n_functions, per_contract)):
        group = chosen[start : start + per_contract]
        selectors = []
        while len(selectors) < len(group):
            s = rng.randrange(0x10000000, 0xFFFFFFFF)
            if s not in selectors:
                selectors.append(s)
        code = make_contract(list(zip(selectors, (body for _, body in group))), metadata_trailer(rng))
        for sel, (comment, _) in zip(selectors, group):
            records.append(
                {
                    "contract_id": f"synthetic-{seed}-{c}",
                    "bytecode_hex": "0x" + code.hex(),
                    "comment": comment[0].upper() + comment[1:] + ".",
                    "selector": f"0x{sel:08x}",
                }
            )
    return records
