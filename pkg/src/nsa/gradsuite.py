"""Finite-difference checks for every hand-written gradient in the package."""

from __future__ import annotations

from typing import Callable

import numpy as np

from .embeddings import EmbeddingMatrix, Vocabulary, sgns_loss
from .neural.core import DenseLayer, dense_backward, dense_forward, softmax_cross_entropy
from .neural.gradcheck import GradReport, grad_check
from .neural.lstm import LstmCell, bilstm_backward, bilstm_forward, lstm_backward, lstm_forward
from .pipeline.config import CompletionConfig, TypeWriterConfig


def _randomize(params: dict[str, np.ndarray], rng: np.random.Generator, scale: float = 0.7) -> None:
    # large enough weights keep gradients well above finite-difference noise
    for p in params.values():
        p[...] = rng.normal(0.0, scale, p.shape)


def check_dense(rng, **kw) -> GradReport:
    reports = {}
    for act in ("LINEAR", "TANH", "SIGMOID", "RELU"):
        layer = DenseLayer.init(rng, 3, 4, act)
        layer.b[...] = rng.normal(0, 0.5, 4)
        params = {"W": layer.W, "b": layer.b, "x": rng.normal(0, 1, (2, 3))}
        r = rng.normal(0, 1, (2, 4))

        def loss(p, layer=layer, r=r):
            y = dense_forward(layer, p["x"])
            gx, gW, gb = dense_backward(layer, p["x"], r)
            return float(np.sum(y * r)), {"W": gW, "b": gb, "x": gx}
        reports[act] = grad_check(loss, params, **kw)
    return _merge(reports)


def check_softmax_ce(rng, **kw) -> GradReport:
    params = {"logits": rng.normal(0, 2, (3, 5))}
    targets = np.array([0, 3, 4])

    def loss(p):
        value, g = softmax_cross_entropy(p["logits"], targets)
        return value, {"logits": g}
    return grad_check(loss, params, **kw)


def check_lstm(rng, **kw) -> GradReport:
    cell = LstmCell.init(rng, 3, 4)
    params = {"W": cell.W, "U": cell.U, "b": cell.b, "xs": rng.normal(0, 1, (3, 3)),
              "h0": rng.normal(0, 0.5, 4), "c0": rng.normal(0, 0.5, 4)}
    _randomize({"W": cell.W, "U": cell.U, "b": cell.b}, rng)
    r = rng.normal(0, 1, (3, 4))

    def loss(p):
        hs, _, cache = lstm_forward(cell, p["xs"], h0=p["h0"], c0=p["c0"])
        dxs, dh0, dc0, g = lstm_backward(cell, cache, d_hs=r)
        return float(np.sum(hs * r)), {**g, "xs": dxs, "h0": dh0, "c0": dc0}
    return grad_check(loss, params, **kw)


def check_bilstm(rng, **kw) -> GradReport:
    fwd, bwd = LstmCell.init(rng, 3, 2), LstmCell.init(rng, 3, 2)
    params = {**fwd.params("fwd"), **bwd.params("bwd"), "xs": rng.normal(0, 1, (4, 2, 3))}
    _randomize({k: v for k, v in params.items() if k != "xs"}, rng)
    mask = np.array([[0, 1], [1, 1], [1, 1], [1, 0]], dtype=float)
    r_sum, r_states = rng.normal(0, 1, (2, 4)), rng.normal(0, 1, (4, 2, 4))

    def loss(p):
        summary, states, cache = bilstm_forward(fwd, bwd, p["xs"], mask)
        dxs, gf, gb = bilstm_backward(fwd, bwd, cache, r_sum, r_states)
        grads = {"xs": dxs, **{f"fwd.{k}": v for k, v in gf.items()}, **{f"bwd.{k}": v for k, v in gb.items()}}
        return float(np.sum(summary * r_sum) + np.sum(states * r_states)), grads
    return grad_check(loss, params, **kw)


def check_skipgram(rng, **kw) -> GradReport:
    params = {"v": rng.normal(0, 0.5, 6), "u_pos": rng.normal(0, 0.5, 6), "u_negs": rng.normal(0, 0.5, (3, 6))}

    def loss(p):
        value, g_v, g_pos, g_negs = sgns_loss(p["v"], p["u_pos"], p["u_negs"])
        return value, {"v": g_v, "u_pos": g_pos, "u_negs": g_negs}
    return grad_check(loss, params, **kw)


def check_completion(rng, **kw) -> GradReport:
    from . import completion

    vocab = Vocabulary(["<pad>", "<unk>", "a", "b", "c", "d", "e"])
    model = completion.init_model(vocab, CompletionConfig(window=4, embedding=3, hidden=2), 0)
    params = model.params()
    _randomize(params, rng)
    model.emb[0] = 0.0
    examples = completion.build_dataset([("toy", ["a", "b", "c", "a", "b", "d"])], vocab, 4)
    X = np.array([e.input.token_ids for e in examples])
    Y = np.array([e.target_ids for e in examples])
    report = grad_check(lambda p: model.loss_and_grads(X, Y), params, **kw)
    return report


def check_deepbugs(rng, **kw) -> GradReport:
    from .deepbugs import DeepBugsModel

    vocab = Vocabulary(["<pad>", "<unk>", "a"])
    model = DeepBugsModel(vocab, EmbeddingMatrix(rng.normal(0, 1, (3, 2))),
                          DenseLayer.init(rng, 12, 5, "RELU"), DenseLayer.init(rng, 5, 1, "SIGMOID"))
    model.hidden.b[...] = rng.normal(0, 0.5, 5)
    X, y = rng.normal(0, 1, (6, 12)), np.array([0, 1, 1, 0, 1, 0], dtype=float)
    return grad_check(lambda p: model.loss_and_grads(X, y), model.params(), **kw)


def check_typewriter(rng, **kw) -> GradReport:
    from .typewriter import SlotKind, TypeSlot, TypeVocabulary, init_model
    from .typewriter.model import Batch

    vocab = Vocabulary(["<pad>", "<unk>", "count", "name", "return"])
    emb = EmbeddingMatrix(rng.normal(0, 1, (5, 3)))
    types = TypeVocabulary(("int", "str", "bool"))
    hyper = TypeWriterConfig(hidden=2, max_id_words=3, max_code_tokens=3, max_comment_words=2)
    model = init_model(types, vocab, emb, vocab, emb, hyper, 0)
    params = model.params()
    _randomize(params, rng)
    slots = [TypeSlot(SlotKind.PARAM, "f", "count", ("count",), ("return", "count"), ("name",)),
             TypeSlot(SlotKind.RETURN, "g", None, ("name", "return"), (), ("count", "name"))]
    batch: Batch = model.batch(slots)
    targets = np.array([0, 1])
    return grad_check(lambda p: model.loss_and_grads(batch, targets), params, **kw)


SUITE: dict[str, Callable[..., GradReport]] = {
    "dense": check_dense,
    "softmax_cross_entropy": check_softmax_ce,
    "lstm": check_lstm,
    "bilstm": check_bilstm,
    "skipgram": check_skipgram,
    "completion": check_completion,
    "deepbugs": check_deepbugs,
    "typewriter": check_typewriter,
}


def _merge(reports: dict[str, GradReport]) -> GradReport:
    tol = next(iter(reports.values())).tol
    merged = GradReport(tol)
    for prefix, r in reports.items():
        for k, v in r.max_rel_error.items():
            merged.max_rel_error[f"{prefix}.{k}"] = v
            merged.coords_checked[f"{prefix}.{k}"] = r.coords_checked[k]
    return merged


def run_suite(seed: int = 0, eps: float = 1e-5, tol: float = 1e-4, n_coords: int = 64) -> dict[str, GradReport]:
    """Run every check; each gets its own generator derived from ``seed``."""
    out = {}
    for i, (name, check) in enumerate(SUITE.items()):
        out[name] = check(np.random.default_rng([seed, i]), eps=eps, tol=tol, n_coords=n_coords)
    return out
