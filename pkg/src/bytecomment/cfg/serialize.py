"""Depth-first linearisation of function CFGs and textual graph exports."""

from __future__ import annotations

from typing import Dict, List, Sequence

from ..exceptions import EmptyCfg
from .graph import ControlFlowGraph, Edge, EdgeKind
from .functions import FunctionCfg

ARROW = "->"

_KIND_RANK = {EdgeKind.FALLTHROUGH: 0, EdgeKind.TAKEN: 1, EdgeKind.UNCONDITIONAL: 2}


def _children(fn: FunctionCfg) -> Dict[int, List[int]]:
    blocks = fn.graph.blocks
    kids: Dict[int, List[Edge]] = {}
    for e in fn.edges:
        kids.setdefault(e.src, []).append(e)
    return {
        src: [e.dst for e in sorted(es, key=lambda e: (_KIND_RANK[e.kind], blocks[e.dst].start_offset))]
        for src, es in kids.items()
    }


def dfs_order(fn: FunctionCfg) -> List[int]:
    """Pre-order block ids; each block visited once, back-edges ignored."""
    if fn.entry not in fn.block_ids:
        raise EmptyCfg(f"function {fn.name} has no entry block")
    kids = _children(fn)
    order: List[int] = []
    seen = set()
    stack = [fn.entry]
    while stack:
        bid = stack.pop()
        if bid in seen:
            continue
        seen.add(bid)
        order.append(bid)
        # reversed so that the first-ranked child is popped first
        stack.extend(c for c in reversed(kids.get(bid, [])) if c not in seen)
    return order


def serialize_cfg(fn: FunctionCfg) -> List[str]:
    """Mnemonics of each block in DFS order, blocks separated by ``->``.

    PUSH immediates are dropped; only the ``PUSHn`` mnemonic is kept.
    """
    tokens: List[str] = []
    for i, bid in enumerate(dfs_order(fn)):
        if i:
            tokens.append(ARROW)
        tokens.extend(fn.graph.blocks[bid].mnemonics)
    if not tokens:
        raise EmptyCfg(f"function {fn.name} serialised to nothing")
    return tokens


def _sorted_edges(edges) -> List[Edge]:
    return sorted(edges, key=lambda e: (e.src, e.dst, _KIND_RANK[e.kind]))


def format_cfg(graph: ControlFlowGraph) -> str:
    """Line format: ``BLOCK id start..end`` then ``EDGE src dst kind``."""
    lines = [f"BLOCK {b.id} {b.start_offset}..{b.end_offset}" for b in graph.blocks]
    lines += [f"EDGE {e.src} {e.dst} {e.kind.value}" for e in _sorted_edges(graph.edges)]
    return "".join(line + "\n" for line in lines)


def to_dot(graph: ControlFlowGraph, name: str = "cfg") -> str:
    """Graphviz DOT export (node per block, labelled with its mnemonics)."""
    out = [f"digraph {name} {{", "  node [shape=box, fontname=monospace];"]
    for b in graph.blocks:
        body = "\\l".join(str(ins) for ins in b.instructions) + "\\l"
        out.append(f'  b{b.id} [label="{body}"];')
    for e in _sorted_edges(graph.edges):
        out.append(f'  b{e.src} -> b{e.dst} [label="{e.kind.value}"];')
    out.append("}")
    return "\n".join(out) + "\n"


def is_well_formed(tokens: Sequence[str]) -> bool:
    """Check the ``->`` placement rules of a CFG sequence."""
    if not tokens or tokens[0] == ARROW or tokens[-1] == ARROW:
        return False
    return all(not (a == ARROW and b == ARROW) for a, b in zip(tokens, tokens[1:]))
