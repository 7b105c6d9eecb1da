from sklearn.base import clone

from bytecomment.corpus import ingest
from bytecomment.model import CommentGenerator
from bytecomment.pipeline import Bm25Retriever, BytecodeCommenter, CfgSequencer
from bytecomment.retrieval import SEP


def test_estimators_follow_sklearn_conventions():
    gen = CommentGenerator(hidden_dim=16, beam_k=3)
    assert gen.get_params()["hidden_dim"] == 16
    copy = clone(gen)
    assert copy.get_params() == gen.get_params() and copy is not gen
    model = BytecodeCommenter(Bm25Retriever(topk=2), gen)
    params = model.get_params()
    assert params["retriever__topk"] == 2 and params["generator__beam_k"] == 3
    model.set_params(retriever__topk=0)
    assert model.retriever.topk == 0


def test_cfg_sequencer(synthetic_records):
    rec = synthetic_records[0]
    [rows] = CfgSequencer().fit_transform([rec["bytecode_hex"]])
    selectors = [s for s, _ in rows]
    assert int(rec["selector"], 16) in selectors


def test_retriever_transform(synthetic_records):
    entries = ingest(synthetic_records).entries
    r = Bm25Retriever(topk=1).fit(entries)
    X = r.transform(entries)
    assert all(x.count(SEP) == 1 for x in X)
    # leave-one-out: an entry never sees its own comment as the retrieved one
    own = [list(e.comment_tokens) for e in entries]
    assert sum(x[: x.index(SEP)] == o for x, o in zip(X, own)) < len(entries)
    assert Bm25Retriever(topk=0).fit(entries).transform(entries[:1])[0][0] == SEP


def test_end_to_end_estimator(synthetic_records):
    entries = ingest(synthetic_records).entries
    gen = CommentGenerator(embed_dim=8, hidden_dim=8, epochs=1, batch_size=4, beam_k=2, dec_max_len=6)
    model = BytecodeCommenter(Bm25Retriever(), gen).fit(entries)
    out = model.predict(entries[:2])
    assert len(out) == 2 and all(isinstance(t, str) for o in out for t in o)
    rows = model.generate(synthetic_records[0]["bytecode_hex"])
    assert rows and all(len(c) <= 6 for _, c in rows)
