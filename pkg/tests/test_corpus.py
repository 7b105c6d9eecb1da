import json

import pytest

from cfg_cases import CASES
from bytecomment.corpus import (
    CorpusEntry,
    DatasetSplit,
    dedup,
    entry_hash,
    first_line,
    ingest,
    read_entries,
    split,
    tokenize_comment,
    write_entries,
)
from bytecomment.evm.asm import asm
from bytecomment.exceptions import InsufficientData


@pytest.mark.parametrize(
    "text,tokens",
    [
        ("Returns the owner.", ["returns", "the", "owner", "."]),
        ("sets the creator to DynamicPyramid", ["sets", "the", "creator", "to", "dynamicpyramid"]),
        ("transfer(to, amount)", ["transfer", "(", "to", ",", "amount", ")"]),
    ],
)
def test_tokenize_comment(text, tokens):
    assert tokenize_comment(text) == tokens


def test_first_line_strips_decoration():
    assert first_line("/// @dev Returns the owner.\n/// more") == "@dev Returns the owner."
    assert first_line("\n * Sets x.\n") == "Sets x."


def _entry(cfg, comment, cid="c"):
    return CorpusEntry(cid, None, tuple(cfg.split()), tuple(comment.split()))


def test_entry_hash_covers_both_fields():
    a = _entry("PUSH1 ADD", "adds")
    assert a.entry_id == entry_hash(a.cfg_tokens, a.comment_tokens)
    assert len(a.entry_id) == 16
    assert a.entry_id != _entry("PUSH1 ADD", "sums").entry_id
    assert a.entry_id == _entry("PUSH1 ADD", "adds", cid="other").entry_id


def test_dedup():
    a = _entry("PUSH1 ADD", "adds")
    assert dedup([a, _entry("PUSH1 ADD", "adds")]) == [a]
    b = _entry("PUSH1 ADD", "sums")
    assert dedup([a, b]) == [a, b]


def test_dedup_against_pairwise_oracle():
    items = [_entry("A", "x"), _entry("B", "y"), _entry("A", "x"), _entry("C", "z"), _entry("B", "y")]
    oracle = []
    for e in items:
        if not any(e.cfg_tokens == o.cfg_tokens and e.comment_tokens == o.comment_tokens for o in oracle):
            oracle.append(e)
    assert dedup(items) == oracle and len(oracle) == 3


def _many(n):
    return [_entry(f"OP{i}", f"c{i}") for i in range(n)]


@pytest.mark.parametrize("n,sizes", [(100, (80, 10, 10)), (30742, (24594, 3074, 3074)), (10, (8, 1, 1))])
def test_split_sizes(n, sizes):
    s = split(_many(n), seed=1)
    assert (len(s.train), len(s.valid), len(s.test)) == sizes
    ids = [e.entry_id for e in s.train + s.valid + s.test]
    assert len(set(ids)) == n


def test_split_seeds_and_determinism():
    items = _many(10)
    a, b = split(items, seed=0), split(items, seed=1)
    assert a.manifest() == split(items, seed=0).manifest()
    assert [e.entry_id for e in a.train + a.valid + a.test] != [e.entry_id for e in b.train + b.valid + b.test]
    again = DatasetSplit.from_manifest(a.manifest(), items)
    assert again.manifest() == a.manifest()


def test_split_too_small():
    with pytest.raises(InsufficientData):
        split(_many(2))


def test_ingest_counts():
    two = asm(CASES["dispatcher_two_selectors"]["source"]).hex()
    one = asm("PUSH1 0x70 PUSH1 0x40 ADD STOP").hex()
    rep = ingest([{"bytecode_hex": one, "comment": "Adds.", "contract_id": "a"}])
    assert len(rep.entries) == 1 and not rep.skipped
    rep = ingest([{"bytecode_hex": "0x6z", "comment": "x", "contract_id": "b"}])
    assert rep.entries == [] and len(rep.skipped) == 1
    rep = ingest([{"bytecode_hex": two, "comment": "Does it.", "contract_id": "c"}])
    selected = [e for e in rep.entries if e.selector is not None]
    assert len(selected) == 2
    assert selected[0].comment_tokens == selected[1].comment_tokens


def test_ingest_parallel_matches_serial(synthetic_records):
    assert ingest(synthetic_records, n_jobs=2).entries == ingest(synthetic_records).entries


def test_entries_roundtrip(tmp_path):
    items = _many(5)
    path = tmp_path / "c.jsonl"
    write_entries(items, path)
    assert read_entries(path) == items
    assert json.loads(path.read_text().splitlines()[0])["entry_id"] == items[0].entry_id
