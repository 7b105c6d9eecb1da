"""Basic blocks and jump resolution by abstract stack emulation."""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Set, Tuple

from ..evm.disasm import Instruction
from ..evm.opcodes import OPCODES, UNDEFINED
from ..exceptions import EmptyCode

#: Tracked stack depth; deeper slots are forgotten (treated as unknown).
STACK_CAP = 32


class Terminator(enum.Enum):
    JUMP = "Jump"
    JUMPI = "JumpI"
    STOP = "Stop"
    RETURN = "Return"
    REVERT = "Revert"
    SELFDESTRUCT = "SelfDestruct"
    INVALID = "Invalid"
    FALLTHROUGH = "FallThrough"


class EdgeKind(enum.Enum):
    TAKEN = "Taken"
    FALLTHROUGH = "FallThrough"
    UNCONDITIONAL = "Unconditional"


_TERMINATOR_OF = {
    "JUMP": Terminator.JUMP,
    "JUMPI": Terminator.JUMPI,
    "STOP": Terminator.STOP,
    "RETURN": Terminator.RETURN,
    "REVERT": Terminator.REVERT,
    "SELFDESTRUCT": Terminator.SELFDESTRUCT,
    "INVALID": Terminator.INVALID,
}


@dataclass(frozen=True)
class BasicBlock:
    id: int
    start_offset: int
    end_offset: int  # offset of the last byte belonging to the block
    instructions: Tuple[Instruction, ...]
    terminator: Terminator

    @property
    def starts_with_jumpdest(self) -> bool:
        return self.instructions[0].opcode == "JUMPDEST"

    @property
    def mnemonics(self) -> List[str]:
        return [ins.opcode for ins in self.instructions]


@dataclass(frozen=True)
class Edge:
    src: int
    dst: int
    kind: EdgeKind

    def __iter__(self):
        return iter((self.src, self.dst, self.kind))


@dataclass
class ControlFlowGraph:
    blocks: List[BasicBlock]
    edges: Set[Edge] = field(default_factory=set)
    entry: int = 0
    diagnostics: List[Tuple[int, str]] = field(default_factory=list)

    def block_at(self, offset: int) -> Optional[BasicBlock]:
        for block in self.blocks:
            if block.start_offset == offset:
                return block
        return None

    def successors(self, block_id: int) -> List[Edge]:
        return [e for e in self.edges if e.src == block_id]

    def edge_triples(self) -> Set[Tuple[int, int, str]]:
        return {(e.src, e.dst, e.kind.value) for e in self.edges}


def split_blocks(instructions: Sequence[Instruction]) -> List[BasicBlock]:
    """Partition an instruction stream into basic blocks.

    Leaders are the first instruction, every JUMPDEST and every instruction
    that follows a terminator.
    """
    if not instructions:
        raise EmptyCode("cannot build blocks from empty code")
    blocks: List[BasicBlock] = []
    current: List[Instruction] = []

    def close(term: Terminator) -> None:
        last = current[-1]
        blocks.append(
            BasicBlock(
                len(blocks),
                current[0].offset,
                last.next_offset - 1,
                tuple(current),
                term,
            )
        )

    for ins in instructions:
        if ins.opcode == "JUMPDEST" and current:
            close(Terminator.FALLTHROUGH)
            current = []
        current.append(ins)
        term = _TERMINATOR_OF.get(ins.opcode)
        if term is not None:
            close(term)
            current = []
    if current:
        close(Terminator.FALLTHROUGH)
    return blocks


# Abstract values: an int is a known constant, None is Unknown. A stack is a
# tuple with the top at the end; everything below the tuple is Unknown.
Stack = Tuple[Optional[int], ...]


def _cap(stack: List[Optional[int]]) -> Stack:
    if len(stack) > STACK_CAP:
        stack = stack[-STACK_CAP:]
    return tuple(stack)


def _pop(stack: List[Optional[int]]) -> Optional[int]:
    return stack.pop() if stack else None


def _step(stack: List[Optional[int]], ins: Instruction) -> None:
    op = ins.opcode
    if op.startswith("PUSH"):
        stack.append(ins.operand)
    elif op.startswith("DUP"):
        n = int(op[3:])
        stack.append(stack[-n] if len(stack) >= n else None)
    elif op.startswith("SWAP"):
        n = int(op[4:])
        if len(stack) < n + 1:
            stack[:0] = [None] * (n + 1 - len(stack))
        stack[-1], stack[-1 - n] = stack[-1 - n], stack[-1]
    else:
        info = OPCODES.get(ins.value, UNDEFINED) if ins.valid else UNDEFINED
        for _ in range(info.pops):
            _pop(stack)
        stack.extend([None] * info.pushes)
    if len(stack) > STACK_CAP:
        del stack[: len(stack) - STACK_CAP]


def _join(a: Stack, b: Stack) -> Stack:
    depth = min(len(a), len(b))
    if depth == 0:
        return ()
    return tuple(
        x if x == y else None for x, y in zip(a[len(a) - depth :], b[len(b) - depth :])
    )


def resolve_jumps(blocks: Sequence[BasicBlock]) -> ControlFlowGraph:
    """Build a CFG by propagating constant PUSH values across blocks.

    Block-entry stacks are joined pointwise (constants that disagree widen to
    Unknown), so iteration reaches a fixpoint. Jumps whose target is not a
    known constant naming a JUMPDEST block get no edge and are reported in
    ``diagnostics``.
    """
    blocks = list(blocks)
    graph = ControlFlowGraph(blocks)
    if not blocks:
        return graph
    by_offset: Dict[int, BasicBlock] = {b.start_offset: b for b in blocks}
    entry_state: Dict[int, Stack] = {0: ()}
    work = deque([0])
    queued = {0}

    def propagate(dst: int, stack: Stack) -> None:
        old = entry_state.get(dst)
        new = stack if old is None else _join(old, stack)
        if old is None or new != old:
            entry_state[dst] = new
            if dst not in queued:
                queued.add(dst)
                work.append(dst)

    while work:
        bid = work.popleft()
        queued.discard(bid)
        block = blocks[bid]
        stack = list(entry_state[bid])
        body = block.instructions
        if block.terminator in (Terminator.JUMP, Terminator.JUMPI):
            body = body[:-1]
        for ins in body:
            _step(stack, ins)

        nxt = bid + 1 if bid + 1 < len(blocks) else None
        if block.terminator is Terminator.JUMP:
            target = _pop(stack)
            dst = by_offset.get(target) if target is not None else None
            if dst is not None and dst.starts_with_jumpdest:
                graph.edges.add(Edge(bid, dst.id, EdgeKind.UNCONDITIONAL))
                propagate(dst.id, _cap(stack))
        elif block.terminator is Terminator.JUMPI:
            target = _pop(stack)
            _pop(stack)
            dst = by_offset.get(target) if target is not None else None
            if dst is not None and dst.starts_with_jumpdest:
                graph.edges.add(Edge(bid, dst.id, EdgeKind.TAKEN))
                propagate(dst.id, _cap(stack))
            if nxt is not None:
                graph.edges.add(Edge(bid, nxt, EdgeKind.FALLTHROUGH))
                propagate(nxt, _cap(stack))
        elif block.terminator is Terminator.FALLTHROUGH and nxt is not None:
            graph.edges.add(Edge(bid, nxt, EdgeKind.FALLTHROUGH))
            propagate(nxt, _cap(stack))

    jumped = {e.src for e in graph.edges if e.kind is not EdgeKind.FALLTHROUGH}
    for bid in sorted(entry_state):
        block = blocks[bid]
        if block.terminator in (Terminator.JUMP, Terminator.JUMPI) and bid not in jumped:
            graph.diagnostics.append(
                (bid, f"unresolved {block.instructions[-1].opcode} at 0x{block.end_offset:x}")
            )
    return graph


def reachable(graph: ControlFlowGraph, start: int) -> Set[int]:
    """Block ids reachable from ``start`` (breadth-first)."""
    adj: Dict[int, List[int]] = {}
    for e in graph.edges:
        adj.setdefault(e.src, []).append(e.dst)
    seen = {start}
    todo = deque([start])
    while todo:
        for dst in adj.get(todo.popleft(), ()):
            if dst not in seen:
                seen.add(dst)
                todo.append(dst)
    return seen
