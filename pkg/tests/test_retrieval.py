import math
import random

import pytest

from bytecomment.corpus import CorpusEntry
from bytecomment.exceptions import EmptyCodebase
from bytecomment.retrieval import (
    SEP,
    Bm25Index,
    attach_retrieved,
    bm25_scores,
    bow_cosine_query,
    build_index,
    query,
    retrieve_input,
)


def entry(cfg, comment="c"):
    return CorpusEntry("x", None, tuple(cfg.split()), tuple(comment.split()))


def direct_bm25(docs, q, k1=1.2, b=0.75):
    """Evaluate the formula straight from the documents, no index."""
    n = len(docs)
    avgdl = sum(len(d) for d in docs) / n
    out = []
    for d in docs:
        s = 0.0
        for t in q:
            df = sum(1 for o in docs if t in o)
            if df == 0:
                continue
            idf = math.log((n - df + 0.5) / (df + 0.5) + 1.0)
            tf = d.count(t)
            s += idf * tf * (k1 + 1) / (tf + k1 * (1 - b + b * len(d) / avgdl))
        out.append(s)
    return out


VOCAB = ["PUSH1", "ADD", "MSTORE", "JUMP", "JUMPI", "SLOAD", "->", "STOP", "DUP1"]


def fixture_corpora():
    rng = random.Random(7)
    for _ in range(40):
        n = rng.randint(1, 10)
        docs = [[rng.choice(VOCAB) for _ in range(rng.randint(1, 12))] for _ in range(n)]
        q = [rng.choice(VOCAB + ["UNSEEN"]) for _ in range(rng.randint(1, 8))]
        yield docs, q


def test_index_stats():
    idx = build_index([entry("PUSH1 ADD")])
    assert idx.N == 1 and idx.avgdl == 2
    idx = build_index([entry("PUSH1 PUSH1 ADD")])
    assert idx.postings["PUSH1"] == [(idx.postings["ADD"][0][0], 2)]
    with pytest.raises(EmptyCodebase):
        build_index([])


def test_postings_match_recount():
    docs = ["PUSH1 ADD PUSH1", "MSTORE ADD", "STOP"]
    idx = build_index([entry(d, str(i)) for i, d in enumerate(docs)])
    for token, plist in idx.postings.items():
        assert sum(tf for _, tf in plist) == sum(d.split().count(token) for d in docs)


def test_two_doc_example():
    docs = [entry("PUSH1 ADD", "a"), entry("PUSH1 MSTORE", "b")]
    idx = build_index(docs)
    scores = bm25_scores(idx, ["ADD"])
    want = direct_bm25([d.cfg_tokens for d in docs], ["ADD"])
    assert abs(scores[docs[0].entry_id] - want[0]) <= 1e-9
    assert scores[docs[0].entry_id] > scores[docs[1].entry_id] == 0.0
    assert query(idx, ["ADD"])[0][0] == docs[0].entry_id


@pytest.mark.parametrize("docs,q", list(fixture_corpora()))
def test_bm25_matches_direct_formula(docs, q):
    entries = [entry(" ".join(d), f"c{i}") for i, d in enumerate(docs)]
    idx = build_index(entries)
    scores = bm25_scores(idx, q)
    want = direct_bm25([e.cfg_tokens for e in entries], q)
    for e, w in zip(entries, want):
        # duplicate docs collapse to one id and share one score
        assert abs(scores[e.entry_id] - w) <= 1e-9


def test_unseen_query_ties_are_deterministic():
    entries = [entry("PUSH1", str(i)) for i in range(4)]
    idx = build_index(entries)
    ranked = query(idx, ["NOPE"], k=4)
    assert [s for _, s in ranked] == [0.0] * 4
    assert [d for d, _ in ranked] == sorted(e.entry_id for e in entries)


def test_self_retrieval():
    entries = [entry("PUSH1 ADD STOP", "a"), entry("MSTORE SLOAD", "b"), entry("JUMP", "c")]
    idx = build_index(entries)
    for e in entries:
        assert query(idx, e.cfg_tokens)[0][0] == e.entry_id


def test_more_query_matches_never_lower_score():
    entries = [entry("PUSH1 ADD STOP", "a"), entry("MSTORE SLOAD ADD", "b")]
    idx = build_index(entries)
    base = bm25_scores(idx, ["ADD"])
    more = bm25_scores(idx, ["ADD", "PUSH1"])
    assert all(more[k] >= base[k] for k in base)


def test_bow_cosine():
    same = [entry("a b c", "x")]
    assert bow_cosine_query(same, ["a", "b", "c"])[0][1] == pytest.approx(1.0)
    assert bow_cosine_query(same, ["q"])[0][1] == 0.0
    [(_, s)] = bow_cosine_query([entry("a b b")], ["a", "a", "b"])
    assert s == pytest.approx(0.8, abs=1e-12)


def test_attach_retrieved():
    cfg = ["PUSH1", "ADD"]
    assert attach_retrieved(cfg, [], {}, 0) == [SEP, "PUSH1", "ADD"]
    comments = {"d1": ("returns", "the", "owner"), "d2": ("other",)}
    ranked = [("d1", 3.0), ("d2", 1.0)]
    assert attach_retrieved(cfg, ranked, comments, 1) == ["returns", "the", "owner", SEP, "PUSH1", "ADD"]
    assert attach_retrieved(cfg, ranked, comments, 1, exclude_id="d1") == ["other", SEP, "PUSH1", "ADD"]


def test_retrieve_input_excludes_self():
    entries = [entry("PUSH1 ADD STOP", "mine"), entry("PUSH1 ADD", "neighbour"), entry("JUMP", "far")]
    idx = build_index(entries)
    seq = retrieve_input(entries[0], idx, k=1)
    assert seq[: seq.index(SEP)] == ["neighbour"]
    assert retrieve_input(entries[0], idx, k=1, exclude_self=False)[0] == "mine"
    for k in (0, 1, 2):
        assert retrieve_input(entries[0], idx, k=k).count(SEP) == 1
    assert retrieve_input(entries[0], None, k=3) == [SEP, "PUSH1", "ADD", "STOP"]
    assert retrieve_input(entries[0], idx, k=1, method="bow")[0] == "neighbour"


def test_index_save_load(tmp_path):
    idx = build_index([entry("PUSH1 ADD", "a"), entry("MSTORE", "b")])
    path = tmp_path / "i.json"
    idx.save(path)
    again = Bm25Index.load(path)
    assert bm25_scores(again, ["ADD", "MSTORE"]) == bm25_scores(idx, ["ADD", "MSTORE"])
    assert again.comments == idx.comments
