"""Split a contract CFG into per-function subgraphs via its dispatcher."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Dict, FrozenSet, List, Optional, Set

from .graph import BasicBlock, ControlFlowGraph, Edge, EdgeKind, Terminator, reachable

FALLBACK = None


@dataclass(frozen=True)
class FunctionCfg:
    selector: Optional[int]  # None stands for the fallback function
    entry: int
    block_ids: FrozenSet[int]
    graph: ControlFlowGraph

    @property
    def name(self) -> str:
        return "FALLBACK" if self.selector is None else f"0x{self.selector:08x}"

    @property
    def blocks(self) -> List[BasicBlock]:
        return [self.graph.blocks[i] for i in sorted(self.block_ids)]

    @property
    def edges(self) -> Set[Edge]:
        return {
            e for e in self.graph.edges if e.src in self.block_ids and e.dst in self.block_ids
        }


def _selector_check(block: BasicBlock, taken: BasicBlock) -> Optional[int]:
    """Match ``PUSHk s ... EQ ... PUSHn d JUMPI`` (k <= 4) with d == taken."""
    ins = block.instructions
    if block.terminator is not Terminator.JUMPI:
        return None
    eq_at = None
    for i in range(len(ins) - 2, -1, -1):
        if ins[i].opcode == "EQ":
            eq_at = i
            break
    if eq_at is None:
        return None
    dest = [x for x in ins[eq_at + 1 : -1] if x.opcode.startswith("PUSH")]
    if not dest or dest[-1].operand != taken.start_offset:
        return None
    for i in range(eq_at - 1, -1, -1):
        x = ins[i]
        if x.opcode in ("PUSH1", "PUSH2", "PUSH3", "PUSH4") and x.valid:
            return x.operand
    return None


def _has_push4(block: BasicBlock) -> bool:
    return any(x.opcode == "PUSH4" for x in block.instructions)


def extract_functions(graph: ControlFlowGraph) -> List[FunctionCfg]:
    """Find dispatched functions plus the fallback region.

    The dispatcher walk starts at the entry block and follows fall-through
    edges; taken edges are followed only from non-selector blocks that
    compare against a PUSH4 constant (binary-search dispatch). The block
    reached by falling through the last selector check without further
    PUSH4 comparisons becomes FALLBACK. Without any selector check the
    whole reachable graph is one FALLBACK function.
    """
    out_edges: Dict[int, Dict[EdgeKind, int]] = {}
    for e in graph.edges:
        out_edges.setdefault(e.src, {})[e.kind] = e.dst

    found: Dict[int, int] = {}
    fallback_entry: Optional[int] = None
    seen: Set[int] = set()
    todo = deque([graph.entry])
    while todo:
        bid = todo.popleft()
        if bid in seen:
            continue
        seen.add(bid)
        block = graph.blocks[bid]
        succ = out_edges.get(bid, {})
        fall = succ.get(EdgeKind.FALLTHROUGH)
        taken = succ.get(EdgeKind.TAKEN)
        sel = None
        if taken is not None:
            sel = _selector_check(block, graph.blocks[taken])
        if sel is not None:
            found.setdefault(sel, taken)
            if fall is not None:
                if _has_push4(graph.blocks[fall]):
                    todo.append(fall)
                else:
                    fallback_entry = fall
            continue
        if fall is not None:
            todo.append(fall)
        if taken is not None and _has_push4(block):
            todo.append(taken)

    if not found:
        return [FunctionCfg(FALLBACK, graph.entry, frozenset(reachable(graph, graph.entry)), graph)]
    funcs = [
        FunctionCfg(sel, entry, frozenset(reachable(graph, entry)), graph)
        for sel, entry in found.items()
    ]
    if fallback_entry is not None:
        funcs.append(
            FunctionCfg(FALLBACK, fallback_entry, frozenset(reachable(graph, fallback_entry)), graph)
        )
    return funcs
