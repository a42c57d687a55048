import itertools
import json
import math

import numpy as np
import pytest

from nsa import completion as C
from nsa.embeddings import PAD, UNK, Vocabulary
from nsa.errors import EmptyCorpus, EmptyDataset
from nsa.neural.checkpoint import dumps
from nsa.pipeline import CompletionConfig

TOY = CompletionConfig(window=4, embedding=6, hidden=6, epochs=60, lr=1.0, batch=8)


def test_dataset_windows_and_targets():
    vocab = Vocabulary(["<pad>", "<unk>", "a", "=", "b"])
    examples = C.build_dataset([("f", ["a", "=", "b"])], vocab, 4)
    assert [e.input.token_ids for e in examples] == [(0, 0, 0, 2), (0, 0, 2, 3)]
    assert [e.target_ids for e in examples] == [(0, 0, 2, 3), (0, 2, 3, 4)]
    assert [e.next_id for e in examples] == [3, 4]
    assert examples[1].input.lexemes == ("a", "=")


def test_targets_are_inputs_shifted_by_one():
    vocab = Vocabulary(["<pad>", "<unk>", "x", "y"])
    for ex in C.build_dataset([("f", list("xyxxyzyx"))], vocab, 3):
        assert ex.target_ids[:-1] == ex.input.token_ids[1:]


def test_dataset_errors():
    vocab = Vocabulary(["<pad>", "<unk>"])
    with pytest.raises(EmptyCorpus):
        C.build_dataset([("f", [])], vocab, 4)
    with pytest.raises(ValueError):
        C.build_dataset([("f", ["a", "b"])], vocab, 1)
    assert C.build_dataset([("f", ["a"])], vocab, 4) == []


def test_board_context(board_source):
    ctx = C.context_from_text(board_source)
    assert ctx[:6] == ["class", "Board", ":", "def", "mark_point", "("]
    assert "# notify player" not in ctx
    assert ctx[-6:] == ["board", ".", "show_winner", "(", "active_player", ")"]


def test_unigram_baseline():
    vocab = Vocabulary(["<pad>", "<unk>", "a", "b"])
    counts = C.unigram_counts([["a", "a", "b", "zzz"]], vocab)
    assert counts == [0, 1, 2, 1]
    logp = C.unigram_log_probs(counts)
    assert logp[PAD] == -math.inf
    assert np.exp(logp).sum() == pytest.approx(1.0)
    assert np.exp(logp[2]) == pytest.approx(3 / 7)


@pytest.fixture(scope="module")
def ab_model():
    """a is always followed by b, b by c, c by a."""
    vocab = Vocabulary(["<pad>", "<unk>", "a", "b", "c", "d", "e"])
    stream = list("abcabcabcabcabcab")
    examples = C.build_dataset([("f", stream)], vocab, TOY.window)
    return C.train(examples, vocab, TOY, seed=0), examples


def test_learns_a_deterministic_sequence(ab_model):
    ckpt, examples = ab_model
    assert C.top_k(ckpt, ["c", "a"], 1)[0][0] == "b"
    assert C.predict_next(ckpt, ["c", "a"])[3] > 0.9
    curve = json.loads(ckpt.meta["loss_curve"])
    assert curve[-1] < curve[0]


def test_overfits_a_single_example():
    vocab = Vocabulary(["<pad>", "<unk>", "x", "y", "z"])
    examples = C.build_dataset([("f", ["x", "y", "z"])], vocab, 3)[-1:]
    ckpt = C.train(examples, vocab, CompletionConfig(window=3, embedding=4, hidden=4, epochs=300, lr=1.0), seed=0)
    model = C.CompletionModel.from_checkpoint(ckpt)
    X = np.array([examples[0].input.token_ids])
    Y = np.array([examples[0].target_ids])
    loss, _ = model.loss_and_grads(X, Y)
    assert loss < 0.1


def test_training_is_deterministic(ab_model):
    ckpt, examples = ab_model
    vocab = C.CompletionModel.from_checkpoint(ckpt).vocab
    assert dumps(C.train(examples, vocab, TOY, seed=0)) == dumps(ckpt)


def test_training_errors():
    vocab = Vocabulary(["<pad>", "<unk>", "x"])
    with pytest.raises(EmptyDataset):
        C.train([], vocab, TOY)
    examples = C.build_dataset([("f", ["x", "x"])], vocab, 3)
    with pytest.raises(ValueError):
        C.train(examples, vocab, TOY)


def test_top_k_is_consistent_with_the_distribution(ab_model):
    ckpt, _ = ab_model
    probs = C.predict_next(ckpt, ["a"])
    assert probs.sum() == pytest.approx(1.0)
    ranked = C.top_k(ckpt, ["a"], 5)
    assert [p for _, p in ranked] == sorted((p for _, p in ranked), reverse=True)
    assert all(tok not in ("<pad>", "<unk>") for tok, _ in ranked)
    assert C.top_k(ckpt, ["a"], 3) == ranked[:3]
    assert C.top_k(ckpt, ["a"], 0) == []
    with pytest.raises(ValueError):
        C.top_k(ckpt, ["a"], 99)


def test_context_longer_than_the_window_uses_its_tail(ab_model):
    ckpt, _ = ab_model
    assert np.array_equal(C.predict_next(ckpt, list("bcabca")), C.predict_next(ckpt, list("abca")))


def test_beam_of_one_is_greedy(ab_model):
    ckpt, _ = ab_model
    ctx = ["a", "b"]
    greedy, total = [], 0.0
    for _ in range(4):
        probs = C.predict_next(ckpt, ctx + greedy)
        probs[[PAD, UNK]] = -1
        i = int(np.argmax(probs))
        total += math.log(probs[i])
        greedy.append(C.CompletionModel.from_checkpoint(ckpt).vocab.decode(i))
    [(seq, score)] = C.beam_search(ckpt, ctx, 1, 4)
    assert seq == greedy
    assert score == pytest.approx(total, abs=1e-9)


def test_single_step_beam_matches_top_k(ab_model):
    ckpt, _ = ab_model
    beams = C.beam_search(ckpt, ["b"], 4, 1)
    assert [s[0] for s, _ in beams] == [t for t, _ in C.top_k(ckpt, ["b"], 4)]
    assert [lp for _, lp in beams] == pytest.approx([math.log(p) for _, p in C.top_k(ckpt, ["b"], 4)], abs=1e-12)


def _brute_force(ckpt, ctx, steps):
    model = C.CompletionModel.from_checkpoint(ckpt)
    real = [i for i in range(len(model.vocab)) if i not in (PAD, UNK)]
    base = model.encode_context(ctx)
    scored = []
    for seq in itertools.product(real, repeat=steps):
        lp = 0.0
        for t in range(steps):
            lp += float(model.next_log_probs([base + list(seq[:t])])[0][seq[t]])
        scored.append((seq, lp))
    scored.sort(key=lambda c: (-c[1], c[0]))
    return [([model.vocab.decode(i) for i in s], lp) for s, lp in scored]


def test_beam_matches_brute_force_on_a_small_vocabulary(ab_model):
    ckpt, _ = ab_model  # 5 real tokens
    for steps in (1, 2, 3):
        exact = _brute_force(ckpt, ["c"], steps)
        beams = C.beam_search(ckpt, ["c"], 5 ** steps, steps)
        assert [s for s, _ in beams] == [s for s, _ in exact]
        assert np.allclose([lp for _, lp in beams], [lp for _, lp in exact], rtol=0, atol=1e-9)


def test_wider_beam_is_never_worse(ab_model):
    ckpt, _ = ab_model
    best1 = C.beam_search(ckpt, ["e"], 1, 3)[0][1]
    best3 = C.beam_search(ckpt, ["e"], 3, 3)[0][1]
    assert best3 >= best1 - 1e-12


def test_beam_argument_errors(ab_model):
    ckpt, _ = ab_model
    with pytest.raises(ValueError):
        C.beam_search(ckpt, ["a"], 0, 2)
    with pytest.raises(ValueError):
        C.beam_search(ckpt, ["a"], 2, 0)
    with pytest.raises(ValueError):
        C.top_k(ckpt, [], 1)


def test_metrics(ab_model):
    ckpt, examples = ab_model
    vocab = C.CompletionModel.from_checkpoint(ckpt).vocab
    counts = C.unigram_counts([list("abcabcabcabcabcab")], vocab)
    report = C.evaluate(ckpt, examples, counts, receivers=("a",))
    assert report["perplexity"] < report["unigram_perplexity"]
    assert report["top5_hit_rate"] == 1.0
    assert report["planted_examples"] == 0.0
    assert C.perplexity(ckpt, examples) == pytest.approx(report["perplexity"])
    with pytest.raises(EmptyDataset):
        C.perplexity(ckpt, [])


def test_after_receiver_selects_member_accesses():
    vocab = Vocabulary(["<pad>", "<unk>"])
    examples = C.build_dataset([("f", ["board", ".", "show", "canvas", "draw", "."])], vocab, 4)
    picked = C.after_receiver(examples, ("board", "canvas"))
    assert [e.position for e in picked] == [2]
