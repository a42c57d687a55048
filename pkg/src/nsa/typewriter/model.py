"""Hierarchical recurrent type classifier.

Three LSTMs read a slot's identifier words, usage tokens and docstring
words; their final hidden states are concatenated and a dense layer with a
softmax scores the type vocabulary. Input embeddings are pre-trained and
stay frozen.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

import numpy as np

from ..embeddings import (EmbeddingMatrix, Vocabulary, build_vocab, code_stream, embed_token, subword_stream,
                          train_skipgram)
from ..errors import EmptyDataset, NonFiniteLoss
from ..minilang import ast
from ..neural.checkpoint import Checkpoint
from ..neural.core import DenseLayer, dense_backward, dense_forward, sgd_step, softmax, softmax_cross_entropy
from ..neural.lstm import LstmCell, lstm_backward, lstm_forward
from ..pipeline.config import EmbedConfig, TypeWriterConfig
from .slots import TypeSlot, TypeVocabulary, comment_words

MODEL = "typewriter"
ENCODERS = ("id", "code", "comment")


def train_embeddings(files, embed: EmbedConfig = EmbedConfig(), comment_dim: int = 32, seed: int = 0):
    """Code embedding over subword-split token streams and a comment embedding over docstrings only.

    ``files`` are objects with ``tokens`` and ``module`` attributes.
    Returns (code_vocab, code_emb, comment_vocab, comment_emb).
    """
    files = list(files)
    code_streams = [subword_stream(code_stream(f.tokens)) for f in files]
    code_vocab = build_vocab(code_streams, embed.vocab_size)
    code_emb = train_skipgram(code_streams, code_vocab, embed.dim, embed.window, embed.negatives, embed.epochs,
                              embed.lr, seed, embed.min_lr)
    docs = [comment_words(fn.docstring) for f in files for _, fn in ast.walk_functions(f.module)]
    docs = [d for d in docs if d]
    if not docs:
        raise EmptyDataset("no docstrings to train the comment embedding on")
    comment_vocab = build_vocab(docs, embed.vocab_size)
    comment_emb = train_skipgram(docs, comment_vocab, comment_dim, embed.window, embed.negatives, embed.epochs,
                                 embed.lr, seed + 1, embed.min_lr)
    return code_vocab, code_emb, comment_vocab, comment_emb


@dataclass
class Batch:
    xs: dict[str, np.ndarray]  # encoder -> (T, B, d)
    masks: dict[str, np.ndarray]  # encoder -> (T, B)


@dataclass
class TypeWriterModel:
    types: TypeVocabulary
    code_vocab: Vocabulary
    code_emb: EmbeddingMatrix
    comment_vocab: Vocabulary
    comment_emb: EmbeddingMatrix
    cells: dict[str, LstmCell]
    out: DenseLayer
    lengths: tuple[int, int, int]
    meta: dict | None = None

    def _sequence(self, words: Sequence[str], vocab, emb, T: int):
        x = np.zeros((T, emb.dim))
        m = np.zeros(T)
        for t, w in enumerate(list(words)[:T]):
            x[t] = embed_token(vocab, emb, w, subwords=True)
            m[t] = 1.0
        return x, m

    def batch(self, slots: Sequence[TypeSlot]) -> Batch:
        xs, masks = {}, {}
        sources = {
            "id": (lambda s: s.id_words, self.code_vocab, self.code_emb),
            "code": (lambda s: s.code_tokens, self.code_vocab, self.code_emb),
            "comment": (lambda s: s.comment_words, self.comment_vocab, self.comment_emb),
        }
        for name, T in zip(ENCODERS, self.lengths):
            get, vocab, emb = sources[name]
            pairs = [self._sequence(get(s), vocab, emb, T) for s in slots]
            xs[name] = np.stack([p[0] for p in pairs], axis=1)
            masks[name] = np.stack([p[1] for p in pairs], axis=1)
        return Batch(xs, masks)

    def params(self) -> dict[str, np.ndarray]:
        p = {}
        for name in ENCODERS:
            p.update(self.cells[name].params(name))
        p["out.W"], p["out.b"] = self.out.W, self.out.b
        return p

    def forward(self, batch: Batch):
        finals, caches = [], {}
        for name in ENCODERS:
            hs, _, cache = lstm_forward(self.cells[name], batch.xs[name], batch.masks[name])
            finals.append(hs[-1])
            caches[name] = cache
        z = np.concatenate(finals, axis=-1)
        return z, dense_forward(self.out, z), caches

    def probabilities(self, batch: Batch) -> np.ndarray:
        return softmax(self.forward(batch)[1])

    def loss_and_grads(self, batch: Batch, targets: np.ndarray):
        n = len(targets)
        z, logits, caches = self.forward(batch)
        loss, dlogits = softmax_cross_entropy(logits, targets)
        dz, gW, gb = dense_backward(self.out, z, dlogits / n)
        grads = {"out.W": gW, "out.b": gb}
        h = self.cells["id"].hidden
        for k, name in enumerate(ENCODERS):
            _, _, _, g = lstm_backward(self.cells[name], caches[name], d_h_last=dz[:, k * h:(k + 1) * h])
            for key, val in g.items():
                grads[f"{name}.{key}"] = val
        return loss / n, grads

    def to_checkpoint(self) -> Checkpoint:
        tensors = dict(self.params())
        tensors["code_emb.in"], tensors["code_emb.out"] = self.code_emb.in_weights, self.code_emb.out_weights
        tensors["comment_emb.in"] = self.comment_emb.in_weights
        tensors["comment_emb.out"] = self.comment_emb.out_weights
        meta = {"types": self.types.to_json(), "code_vocab": self.code_vocab.to_json(),
                "comment_vocab": self.comment_vocab.to_json(), "lengths": json.dumps(list(self.lengths))}
        meta.update(self.meta or {})
        return Checkpoint(MODEL, meta, tensors)

    @classmethod
    def from_checkpoint(cls, ckpt: Checkpoint) -> "TypeWriterModel":
        ckpt.expect(MODEL)
        t = ckpt.tensors
        reserved = ("types", "code_vocab", "comment_vocab", "lengths")
        return cls(
            TypeVocabulary.from_json(ckpt.meta["types"]),
            Vocabulary.from_json(ckpt.meta["code_vocab"]),
            EmbeddingMatrix(t["code_emb.in"], t["code_emb.out"]),
            Vocabulary.from_json(ckpt.meta["comment_vocab"]),
            EmbeddingMatrix(t["comment_emb.in"], t["comment_emb.out"]),
            {name: LstmCell.from_params(t, name) for name in ENCODERS},
            DenseLayer(t["out.W"], t["out.b"], "LINEAR"),
            tuple(json.loads(ckpt.meta["lengths"])),
            {k: v for k, v in ckpt.meta.items() if k not in reserved},
        )


def init_model(types: TypeVocabulary, code_vocab: Vocabulary, code_emb: EmbeddingMatrix,
               comment_vocab: Vocabulary, comment_emb: EmbeddingMatrix,
               hyper: TypeWriterConfig = TypeWriterConfig(), seed: int = 0) -> TypeWriterModel:
    rng = np.random.default_rng(seed)
    dims = {"id": code_emb.dim, "code": code_emb.dim, "comment": comment_emb.dim}
    cells = {name: LstmCell.init(rng, dims[name], hyper.hidden) for name in ENCODERS}
    out = DenseLayer.init(rng, 3 * hyper.hidden, len(types), "LINEAR")
    return TypeWriterModel(types, code_vocab, code_emb, comment_vocab, comment_emb, cells, out,
                           (hyper.max_id_words, hyper.max_code_tokens, hyper.max_comment_words))


def train(slots: Iterable[TypeSlot], types: TypeVocabulary, code_vocab: Vocabulary, code_emb: EmbeddingMatrix,
          comment_vocab: Vocabulary, comment_emb: EmbeddingMatrix,
          hyper: TypeWriterConfig = TypeWriterConfig(), seed: int = 0,
          extra_meta: dict[str, str] | None = None) -> Checkpoint:
    """Fit the classifier on slots whose ground truth is in ``types``; others are skipped."""
    data = [s for s in slots if s.ground_truth is not None and s.ground_truth in types]
    if not data:
        raise EmptyDataset("no slots with a ground-truth type in the type vocabulary")
    model = init_model(types, code_vocab, code_emb, comment_vocab, comment_emb, hyper, seed)
    rng = np.random.default_rng(seed + 1)
    full = model.batch(data)
    targets = np.array([types.index(s.ground_truth) for s in data])
    params = model.params()
    curve = []
    for epoch in range(hyper.epochs):
        order = rng.permutation(len(data))
        total = 0.0
        for start in range(0, len(order), hyper.batch):
            idx = order[start:start + hyper.batch]
            batch = Batch({k: v[:, idx] for k, v in full.xs.items()}, {k: v[:, idx] for k, v in full.masks.items()})
            loss, grads = model.loss_and_grads(batch, targets[idx])
            if not np.isfinite(loss):
                raise NonFiniteLoss(f"loss became non-finite in epoch {epoch}")
            total += loss * len(idx)
            sgd_step(params, grads, hyper.lr, hyper.clip)
        curve.append(total / len(data))
    model.meta = {"hyper": json.dumps(asdict(hyper), sort_keys=True), "seed": str(seed),
                  "loss_curve": json.dumps(curve), **(extra_meta or {})}
    return model.to_checkpoint()


def _model(checkpoint) -> TypeWriterModel:
    return checkpoint if isinstance(checkpoint, TypeWriterModel) else TypeWriterModel.from_checkpoint(checkpoint)


def rank(probs: np.ndarray, types: TypeVocabulary, k: int) -> list[tuple[str, float]]:
    order = np.argsort(-probs, kind="stable")[:k]
    return [(types.types[i], float(probs[i])) for i in order]


def predict_distributions(checkpoint, slots: Sequence[TypeSlot]) -> np.ndarray:
    model = _model(checkpoint)
    if not slots:
        return np.zeros((0, len(model.types)))
    return model.probabilities(model.batch(slots))


def predict(checkpoint, slot: TypeSlot, k: int) -> list[tuple[str, float]]:
    """Top-``k`` (type, probability) pairs, most probable first (ties by vocabulary order)."""
    model = _model(checkpoint)
    if not 0 <= k <= len(model.types):
        raise ValueError(f"k must lie in [0, {len(model.types)}], got {k}")
    return rank(predict_distributions(model, [slot])[0], model.types, k)


def predict_many(checkpoint, slots: Sequence[TypeSlot], k: int) -> list[list[tuple[str, float]]]:
    model = _model(checkpoint)
    if not 0 <= k <= len(model.types):
        raise ValueError(f"k must lie in [0, {len(model.types)}], got {k}")
    return [rank(p, model.types, k) for p in predict_distributions(model, slots)]
