"""Control-flow graph recovery and serialisation."""

from typing import List, Tuple

from ..evm.disasm import RawBytecode, disassemble, parse_hex, strip_metadata
from .functions import FALLBACK, FunctionCfg, extract_functions
from .graph import (
    BasicBlock,
    ControlFlowGraph,
    Edge,
    EdgeKind,
    Terminator,
    reachable,
    resolve_jumps,
    split_blocks,
)
from .serialize import ARROW, dfs_order, format_cfg, is_well_formed, serialize_cfg, to_dot


def build_cfg(code: RawBytecode | str, strip: bool = True) -> ControlFlowGraph:
    """Hex text or decoded code to a resolved CFG."""
    raw = parse_hex(code) if isinstance(code, str) else code
    if strip:
        raw = strip_metadata(raw)
    return resolve_jumps(split_blocks(disassemble(raw)))


def function_sequences(code: RawBytecode | str, strip: bool = True) -> List[Tuple[FunctionCfg, List[str]]]:
    """Every extracted function paired with its serialised token sequence."""
    graph = build_cfg(code, strip)
    return [(fn, serialize_cfg(fn)) for fn in extract_functions(graph)]


__all__ = [
    "ARROW",
    "BasicBlock",
    "ControlFlowGraph",
    "Edge",
    "EdgeKind",
    "FALLBACK",
    "FunctionCfg",
    "Terminator",
    "build_cfg",
    "dfs_order",
    "extract_functions",
    "format_cfg",
    "function_sequences",
    "is_well_formed",
    "reachable",
    "resolve_jumps",
    "serialize_cfg",
    "split_blocks",
    "to_dot",
]
