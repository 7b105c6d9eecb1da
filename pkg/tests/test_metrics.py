import math

import pytest

from bytecomment.exceptions import AlignmentError, UndefinedReference
from bytecomment.metrics import bleu, corpus_bleu, evaluate, lcs_length, rouge_l, rouge_n, sentence_scores


def test_identity_scores_100():
    s = "returns the owner of the contract".split()
    assert bleu(s, s)[3] == pytest.approx(100.0)
    assert rouge_l(s, s) == pytest.approx(100.0)
    assert rouge_n(s, s, 2) == pytest.approx(100.0)


def test_disjoint_is_zero():
    assert bleu("a b c d".split(), "w x y z".split()) == [0.0, 0.0, 0.0, 0.0]
    assert rouge_n(["a"], ["b"], 1) == 0.0


def test_hand_bleu_fixture():
    p = [3 / 4, 2 / 4, 1 / 3, 1 / 2]
    want = [100 * math.exp(sum(math.log(x) for x in p[:k]) / k) for k in range(1, 5)]
    got = bleu(list("abcd"), list("abxd"))
    for g, w in zip(got, want):
        assert abs(g - w) <= 1e-9


def test_brevity_penalty():
    got = bleu(["a", "b"], ["a", "b", "c", "d"])
    assert abs(got[0] - 100 * math.exp(1 - 4 / 2)) <= 1e-9


def test_empty_hypothesis_scores_zero():
    assert bleu([], ["a"]) == [0.0] * 4


def test_rouge_fixtures():
    assert abs(rouge_n(list("abc"), list("ac"), 1) - 80.0) <= 1e-9
    assert lcs_length(list("axb"), list("ab")) == 2
    assert abs(rouge_l(list("axb"), list("ab")) - 80.0) <= 1e-9
    assert lcs_length(list("ab"), list("ba")) == 1
    with pytest.raises(UndefinedReference):
        rouge_l(["a"], [])


def test_bleu_non_increasing_without_smoothing_inflation():
    s = "a b c d e f".split()
    assert bleu(s, s) == pytest.approx([100.0] * 4)
    half = bleu("a b c d x y z w".split(), "a b c d e f g h".split())
    assert all(x >= y for x, y in zip(half, half[1:]))


def test_rouge1_recall_monotone():
    ref = "a b c d".split()
    hyp = ["z"]
    prev = 0.0
    for tok in ref:
        hyp = hyp + [tok]
        # F1 mixes in precision, so check recall through the overlap count
        rec = sum(min(hyp.count(t), ref.count(t)) for t in set(ref)) / len(ref)
        assert rec >= prev
        prev = rec


def test_evaluate_is_mean_of_sentences():
    hyps = [list("abcd"), list("abc")]
    refs = [list("abxd"), list("ac")]
    rep = evaluate(hyps, refs)
    per = [sentence_scores(h, r) for h, r in zip(hyps, refs)]
    for key, val in rep.summary().items():
        assert abs(val - sum(p[key] for p in per) / 2) <= 1e-9


def test_evaluate_all_equal():
    refs = [list("abcde"), list("xyzw")]
    assert all(v == pytest.approx(100.0) for v in evaluate(refs, refs).summary().values())


def test_alignment():
    with pytest.raises(AlignmentError):
        evaluate([], [["a"]])


def test_pooled_bleu_differs_from_mean():
    hyps = [list("abcd"), list("xy")]
    refs = [list("abcd"), list("ab")]
    assert corpus_bleu(hyps, refs)[3] != evaluate(hyps, refs).summary()["bleu_4"]


def test_report_serialisation():
    rep = evaluate([list("ab")], [list("ab")], ids=["e1"])
    assert "\"bleu_4\"" in rep.to_json()
    assert rep.to_table().splitlines()[0].startswith("id")
