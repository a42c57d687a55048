import itertools

import numpy as np
import pytest

from nsa import embeddings as E
from nsa.errors import EmptyCorpus
from nsa.minilang import tokenize
from nsa.neural import grad_check


@pytest.mark.parametrize("ident, pieces", [
    ("writeFile", ["write", "file"]),
    ("x", ["x"]),
    ("mark_point2D", ["mark", "point", "2", "d"]),
    ("player_name", ["player", "name"]),
    ("HTTPServer", ["httpserver"]),
    ("getX", ["get", "x"]),
    ("_private", ["private"]),
    ("__init__", ["init"]),
    ("a1b2", ["a", "1", "b", "2"]),
    ("has_three_in_a_row", ["has", "three", "in", "a", "row"]),
    ("snake_Camel", ["snake", "camel"]),
    ("camelCaseName", ["camel", "case", "name"]),
    ("v2", ["v", "2"]),
    ("x_", ["x"]),
    ("show_winner", ["show", "winner"]),
    ("ALLCAPS", ["allcaps"]),
    ("count_items", ["count", "items"]),
    ("utf8Decode", ["utf", "8", "decode"]),
    ("isOK", ["is", "ok"]),
    ("_", ["_"]),
])
def test_split_subwords(ident, pieces):
    assert E.split_subwords(ident) == pieces


def test_vocab_full_fit():
    v = E.build_vocab([["a", "b", "a"]], 4)
    assert v.token_to_index == {"<pad>": 0, "<unk>": 1, "a": 2, "b": 3}


def test_vocab_cap_keeps_most_frequent():
    v = E.build_vocab([["a", "b", "a", "c", "b", "a"]], 3)
    assert v.encode("a") == 2
    assert v.encode("b") == E.UNK and v.encode("c") == E.UNK


def test_vocab_ties_are_lexicographic():
    v = E.build_vocab([["b", "a", "c"]], 10)
    assert v.index_to_token[2:] == ["a", "b", "c"]


def test_vocab_monotone_in_k():
    streams = [list("abracadabra"), list("banana")]
    smaller = set(E.build_vocab(streams, 4).index_to_token)
    for k in range(5, 10):
        larger = set(E.build_vocab(streams, k).index_to_token)
        assert smaller <= larger
        smaller = larger


def test_vocab_unknown_maps_to_unk_and_round_trips():
    v = E.build_vocab([["x"] * 3], 10000, extras=("NONE",))
    assert v.encode("board") == E.UNK
    assert v.encode("NONE") == 2
    assert E.Vocabulary.from_json(v.to_json()).index_to_token == v.index_to_token


def test_vocab_errors():
    with pytest.raises(EmptyCorpus):
        E.build_vocab([[]], 5)
    with pytest.raises(ValueError):
        E.build_vocab([["a"]], 2)


def two_cluster_streams():
    ab = " ".join(["a b"] * 250).split()
    cd = " ".join(["c d"] * 250).split()
    return [ab, cd]


def test_two_cluster_similarity():
    streams = two_cluster_streams()
    vocab = E.build_vocab(streams, 10)
    m = E.train_skipgram(streams, vocab, d=8, window=1, negatives=3, epochs=5, seed=0)
    sim = lambda s, t: E.cosine(E.lookup(vocab, m, s), E.lookup(vocab, m, t))
    assert sim("a", "b") > sim("a", "c")


def test_skipgram_deterministic_and_pad_zero():
    streams = two_cluster_streams()
    vocab = E.build_vocab(streams, 10)
    m1 = E.train_skipgram(streams, vocab, d=8, window=2, negatives=3, epochs=2, seed=5)
    m2 = E.train_skipgram(streams, vocab, d=8, window=2, negatives=3, epochs=2, seed=5)
    assert np.array_equal(m1.weights, m2.weights)
    assert not np.any(m1.weights[E.PAD])
    assert np.all(np.isfinite(m1.weights))


def test_single_token_corpus_keeps_initialization():
    vocab = E.build_vocab([["x"]], 5)
    m = E.train_skipgram([["x"]], vocab, d=4, window=1, negatives=1, epochs=3, seed=0)
    rng = np.random.default_rng(0)
    init = rng.uniform(-0.5 / 4, 0.5 / 4, size=(len(vocab), 4))
    init[E.PAD] = 0.0
    assert np.array_equal(m.in_weights, init)
    assert not np.any(m.out_weights)


def test_skipgram_preconditions():
    vocab = E.build_vocab([["a", "b"]], 5)
    with pytest.raises(ValueError):
        E.train_skipgram([["a", "b"]], vocab, d=1)
    with pytest.raises(EmptyCorpus):
        E.train_skipgram([["zzz"]], vocab, d=4)


def test_sgns_gradient():
    rng = np.random.default_rng(3)
    params = {"v": rng.normal(size=5), "u": rng.normal(size=5), "n": rng.normal(size=(4, 5))}

    def loss(p):
        value, gv, gu, gn = E.sgns_loss(p["v"], p["u"], p["n"])
        return value, {"v": gv, "u": gu, "n": gn}
    report = grad_check(loss, params, eps=1e-5, tol=1e-4)
    assert report.ok, report.lines()


def test_cosine_properties():
    v = np.array([1.0, -2.0, 0.5])
    assert E.cosine(v, v) == pytest.approx(1.0)
    assert E.cosine(v, -v) == pytest.approx(-1.0)
    assert E.cosine(v, np.zeros(3)) == 0.0


def test_lookup_unseen_is_unk_row():
    vocab = E.Vocabulary(["<pad>", "<unk>", "a"])
    m = E.EmbeddingMatrix(np.arange(6.0).reshape(3, 2))
    assert np.array_equal(E.lookup(vocab, m, "nope"), m.weights[E.UNK])


def test_subword_fallback_is_mean():
    vocab = E.Vocabulary(["<pad>", "<unk>", "write", "file"])
    m = E.EmbeddingMatrix(np.array([[0, 0], [9, 9], [1.0, 3.0], [3.0, 5.0]]))
    assert np.array_equal(E.embed_token(vocab, m, "writeFile", subwords=True), [2.0, 4.0])
    assert np.array_equal(E.embed_token(vocab, m, "writeFile"), [9, 9])
    assert np.array_equal(E.embed_token(vocab, m, "zz", subwords=True), [9, 9])


def test_code_stream_folds_literals():
    toks = tokenize('x = f(1, 2.5, "s", True, None)\n# note\n')
    assert E.code_stream(toks) == ["x", "=", "f", "(", "LIT:INT", ",", "LIT:FLOAT", ",", "LIT:STR", ",",
                                   "LIT:BOOL", ",", "LIT:NONE", ")"]
    assert E.code_stream(tokenize("playerName = 1\n"), subwords=True) == ["player", "name", "=", "LIT:INT"]


def test_checkpoint_round_trip(tmp_path):
    from nsa.neural import load, save
    streams = two_cluster_streams()
    vocab = E.build_vocab(streams, 10)
    m = E.train_skipgram(streams, vocab, d=4, window=1, negatives=2, epochs=1, seed=1)
    save(E.to_checkpoint(vocab, m), tmp_path / "e.ckpt")
    v2, m2 = E.from_checkpoint(load(tmp_path / "e.ckpt"))
    assert v2.index_to_token == vocab.index_to_token
    assert np.array_equal(m2.weights, m.weights)


def test_context_pairs_window():
    centers, contexts = E.context_pairs([[2, 3, 4]], 1)
    assert list(zip(centers, contexts)) == [(2, 3), (3, 2), (3, 4), (4, 3)]
    assert len(list(itertools.chain(*E.context_pairs([[2]], 3)))) == 0
