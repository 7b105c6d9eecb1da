import random
from collections import deque

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cfg_cases import CASES
from bytecomment.cfg import (
    ARROW,
    EdgeKind,
    Terminator,
    build_cfg,
    dfs_order,
    extract_functions,
    format_cfg,
    is_well_formed,
    reachable,
    resolve_jumps,
    serialize_cfg,
    split_blocks,
    to_dot,
)
from bytecomment.evm import disassemble
from bytecomment.evm.asm import asm
from bytecomment.exceptions import EmptyCode


def graph_of(source):
    return resolve_jumps(split_blocks(disassemble(asm(source))))


@pytest.mark.parametrize("name", sorted(CASES))
def test_hand_traced_cases(name):
    case = CASES[name]
    g = graph_of(case["source"])
    assert [(b.start_offset, b.end_offset) for b in g.blocks] == case["blocks"]
    assert g.edge_triples() == case["edges"]
    fns = {f.name: " ".join(serialize_cfg(f)) for f in extract_functions(g)}
    assert fns == case["functions"]
    assert len(g.diagnostics) == case.get("diagnostics", 0)


def test_split_blocks_rules():
    blocks = split_blocks(disassemble(asm("PUSH1 0x70 PUSH1 0x40 ADD")))
    assert len(blocks) == 1 and blocks[0].terminator is Terminator.FALLTHROUGH
    blocks = split_blocks(disassemble(asm("STOP STOP")))
    assert [b.start_offset for b in blocks] == [0, 1]
    with pytest.raises(EmptyCode):
        split_blocks([])


def test_jumpi_edges():
    g = graph_of("PUSH1 0x01 PUSH1 0x08 JUMPI PUSH1 0x00 STOP JUMPDEST STOP")
    kinds = {e.kind for e in g.successors(0)}
    assert kinds == {EdgeKind.TAKEN, EdgeKind.FALLTHROUGH}
    assert g.blocks[2].start_offset == 8


def test_unresolvable_jump_is_diagnosed():
    g = graph_of("CALLDATASIZE JUMP JUMPDEST STOP")
    assert not g.edges
    assert g.diagnostics and g.diagnostics[0][0] == 0


def test_no_dispatcher_gives_whole_graph():
    g = graph_of(CASES["diamond"]["source"])
    [fn] = extract_functions(g)
    assert fn.selector is None and fn.block_ids == frozenset({0, 1, 2, 3})


def test_shared_block_matches_bfs_oracle():
    g = graph_of(CASES["shared_tail"]["source"])
    fns = {f.name: f for f in extract_functions(g)}
    adj = {}
    for s, d, _ in g.edge_triples():
        adj.setdefault(s, []).append(d)
    for fn in fns.values():
        seen, todo = {fn.entry}, deque([fn.entry])
        while todo:
            for d in adj.get(todo.popleft(), []):
                if d not in seen:
                    seen.add(d)
                    todo.append(d)
        assert fn.block_ids == seen
    assert 5 in fns["0xa9059cbb"].block_ids and 5 in fns["0x70a08231"].block_ids


def test_dfs_diamond_visits_join_once_after_left_branch():
    g = graph_of(CASES["diamond"]["source"])
    [fn] = extract_functions(g)
    assert dfs_order(fn) == [0, 1, 3, 2]


def test_sequence_counts():
    g = graph_of(CASES["diamond"]["source"])
    [fn] = extract_functions(g)
    seq = serialize_cfg(fn)
    n_ins = sum(len(g.blocks[b].instructions) for b in fn.block_ids)
    assert len(seq) == n_ins + len(fn.block_ids) - 1
    assert seq.count(ARROW) == len(fn.block_ids) - 1
    assert is_well_formed(seq)


def test_text_and_dot_exports():
    g = graph_of(CASES["conditional"]["source"])
    lines = format_cfg(g).splitlines()
    assert lines[:3] == ["BLOCK 0 0..4", "BLOCK 1 5..7", "BLOCK 2 8..9"]
    assert "EDGE 0 1 FallThrough" in lines and "EDGE 0 2 Taken" in lines
    dot = to_dot(g)
    assert dot.startswith("digraph") and "b0 -> b2" in dot


def test_build_cfg_from_hex():
    g = build_cfg("0x6070604001")
    assert len(g.blocks) == 1


# -- properties over random bytecode ------------------------------------------------

_OPS = ["PUSH1 @{}", "JUMP", "JUMPI", "JUMPDEST", "DUP1", "DUP2", "SWAP1", "POP", "ADD", "STOP",
        "CALLDATALOAD", "ISZERO", "PUSH2 @{}", "MSTORE", "SLOAD"]


def random_program(rng, n):
    """Random code whose PUSH operands point at labelled JUMPDESTs or junk."""
    parts = []
    labels = []
    for i in range(n):
        op = rng.choice(_OPS)
        if op == "JUMPDEST":
            labels.append(f"L{i}")
            parts.append(f"L{i}: JUMPDEST")
        else:
            parts.append(op)
    out = []
    for p in parts:
        if "@{}" in p:
            if labels and rng.random() < 0.8:
                p = p.format(rng.choice(labels))
            else:
                p = p.replace("@{}", str(rng.randrange(0, 200)))
        out.append(p)
    return " ".join(out)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**9), st.integers(1, 60))
def test_random_programs_invariants(seed, n):
    rng = random.Random(seed)
    code = asm(random_program(rng, n))
    ins = disassemble(code)
    blocks = split_blocks(ins)
    # blocks partition the stream; JUMPDEST only leads; terminators only end
    assert [i for b in blocks for i in b.instructions] == ins
    for b in blocks:
        assert all(i.opcode != "JUMPDEST" for i in b.instructions[1:])
        assert all(i.opcode not in ("JUMP", "JUMPI", "STOP") for i in b.instructions[:-1])
    g = resolve_jumps(blocks)
    ids = {b.id for b in g.blocks}
    for e in g.edges:
        assert e.src in ids and e.dst in ids
        if e.kind is not EdgeKind.FALLTHROUGH:
            assert g.blocks[e.dst].starts_with_jumpdest
    live = reachable(g, 0)
    for b in g.blocks:
        out = [e for e in g.edges if e.src == b.id]
        if b.id not in live:
            # blocks the analysis never reaches get no outgoing edges
            assert not out
            continue
        if b.terminator is Terminator.JUMPI:
            assert sum(e.kind is EdgeKind.TAKEN for e in out) <= 1
            assert sum(e.kind is EdgeKind.FALLTHROUGH for e in out) == (1 if b.id + 1 < len(blocks) else 0)
    for fn in extract_functions(g):
        assert fn.block_ids == reachable(g, fn.entry)
        seq = serialize_cfg(fn)
        assert is_well_formed(seq)
        order = dfs_order(fn)
        assert sorted(order) == sorted(fn.block_ids)
        assert len(seq) == sum(len(g.blocks[b].instructions) for b in order) + len(order) - 1
        assert serialize_cfg(fn) == seq
