"""Swapped-argument bug detection trained on artificially injected bugs.

Calls with two or more arguments are taken as correct examples; swapping
their first two arguments yields buggy ones. A feedforward network over the
concatenated embeddings of [callee, arg1, arg2, base, param1, param2]
predicts the probability that a call is buggy.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from .embeddings import EmbeddingMatrix, Vocabulary, embed_token
from .errors import EmptyDataset, MutateLabeled, NonFiniteLoss
from .minilang import ast, extract_calls
from .neural.checkpoint import Checkpoint
from .neural.core import DenseLayer, binary_cross_entropy_with_logits, dense_backward, dense_forward, sgd_step, sigmoid
from .pipeline.config import DeepBugsConfig

MODEL = "deepbugs"
NONE = "NONE"
FEATURE_FIELDS = ("callee", "arg1", "arg2", "base", "param1", "param2")


@dataclass(frozen=True)
class CallExample:
    callee: str
    arg1: str
    arg2: str
    base: str
    param1: str
    param2: str
    label: float = 0.0
    file: str = ""
    line: int = 0

    @property
    def degenerate(self) -> bool:
        return self.arg1 == self.arg2

    def to_json(self) -> str:
        d = asdict(self)
        return json.dumps({k: d[k] for k in ("file", "line", "callee", "base", "arg1", "arg2",
                                              "param1", "param2", "label")})

    @classmethod
    def from_json(cls, line: str) -> "CallExample":
        d = json.loads(line)
        return cls(d["callee"], d["arg1"], d["arg2"], d["base"], d["param1"], d["param2"],
                   float(d["label"]), d["file"], int(d["line"]))


@dataclass(frozen=True)
class Warning:
    file: str
    line: int
    callee: str
    p: float
    message: str

    def to_json(self) -> str:
        return json.dumps({"file": self.file, "line": self.line, "callee": self.callee,
                           "p": self.p, "message": self.message})


def extract_correct(modules: Iterable[tuple[str, ast.Module]]) -> list[CallExample]:
    """One label-0 example per call with at least two arguments; modules are (path, Module) pairs."""
    out = []
    for path, module in modules:
        for site in extract_calls(module, file=path):
            params = site.resolved_param_names or ()
            out.append(CallExample(
                callee=site.callee_name,
                arg1=site.arg_names[0],
                arg2=site.arg_names[1],
                base=site.base_name if site.base_name is not None else NONE,
                param1=params[0] if len(params) > 0 else NONE,
                param2=params[1] if len(params) > 1 else NONE,
                label=0.0,
                file=site.file,
                line=site.line,
            ))
    return out


def mutate(example: CallExample) -> CallExample:
    """Swap the first two arguments and label the result buggy."""
    if example.label != 0.0:
        raise MutateLabeled("only correct (label 0) examples can be mutated")
    return replace(example, arg1=example.arg2, arg2=example.arg1, label=1.0)


def balanced(examples: Iterable[CallExample]) -> list[CallExample]:
    """Each non-degenerate correct example followed by its mutation."""
    out = []
    for ex in examples:
        if ex.label == 0.0 and not ex.degenerate:
            out += [ex, mutate(ex)]
    return out


def featurize(example: CallExample, vocab: Vocabulary, embeddings: EmbeddingMatrix,
              subwords: bool = False) -> np.ndarray:
    return np.concatenate([embed_token(vocab, embeddings, getattr(example, f), subwords)
                           for f in FEATURE_FIELDS])


@dataclass
class DeepBugsModel:
    vocab: Vocabulary
    embeddings: EmbeddingMatrix
    hidden: DenseLayer
    out: DenseLayer
    subwords: bool = False
    meta: dict | None = None

    def features(self, examples: Sequence[CallExample]) -> np.ndarray:
        return np.stack([featurize(e, self.vocab, self.embeddings, self.subwords) for e in examples])

    def logits(self, X: np.ndarray) -> np.ndarray:
        h = dense_forward(self.hidden, X)
        return (h @ self.out.W.T + self.out.b)[..., 0]

    def predict_features(self, X: np.ndarray) -> np.ndarray:
        return sigmoid(self.logits(X))

    def params(self) -> dict[str, np.ndarray]:
        return {"hidden.W": self.hidden.W, "hidden.b": self.hidden.b, "out.W": self.out.W, "out.b": self.out.b}

    def loss_and_grads(self, X: np.ndarray, y: np.ndarray):
        """Mean binary cross-entropy over the batch and its parameter gradients."""
        n = len(y)
        h = dense_forward(self.hidden, X)
        z = (h @ self.out.W.T + self.out.b)[:, 0]
        loss, dz = binary_cross_entropy_with_logits(z, y)
        dz = dz[:, None] / n
        dh, gW2, gb2 = dense_backward(DenseLayer(self.out.W, self.out.b, "LINEAR"), h, dz)
        _, gW1, gb1 = dense_backward(self.hidden, X, dh)
        return loss / n, {"hidden.W": gW1, "hidden.b": gb1, "out.W": gW2, "out.b": gb2}

    def to_checkpoint(self) -> Checkpoint:
        meta = {"vocab": self.vocab.to_json(), "dim": str(self.embeddings.dim),
                "subwords": json.dumps(self.subwords)}
        meta.update(self.meta or {})
        tensors = dict(self.params())
        tensors["emb"] = self.embeddings.weights
        return Checkpoint(MODEL, meta, tensors)

    @classmethod
    def from_checkpoint(cls, ckpt: Checkpoint) -> "DeepBugsModel":
        ckpt.expect(MODEL)
        t = ckpt.tensors
        return cls(Vocabulary.from_json(ckpt.meta["vocab"]), EmbeddingMatrix(t["emb"]),
                   DenseLayer(t["hidden.W"], t["hidden.b"], "RELU"),
                   DenseLayer(t["out.W"], t["out.b"], "SIGMOID"),
                   subwords=json.loads(ckpt.meta.get("subwords", "false")),
                   meta={k: v for k, v in ckpt.meta.items() if k not in ("vocab", "dim", "subwords")})


def train(examples: Sequence[CallExample], vocab: Vocabulary, embeddings: EmbeddingMatrix,
          hyper: DeepBugsConfig = DeepBugsConfig(), seed: int = 0, subwords: bool = False,
          extra_meta: dict[str, str] | None = None) -> Checkpoint:
    """Train the 6d -> hidden (ReLU) -> 1 (sigmoid) classifier with frozen embeddings.

    ``examples`` must already contain both labels (see ``balanced``).
    Degenerate swaps are dropped.
    """
    data = [e for e in examples if not e.degenerate]
    labels = {e.label for e in data}
    if not data or labels != {0.0, 1.0}:
        raise EmptyDataset("training needs non-degenerate examples with both labels")
    rng = np.random.default_rng(seed)
    d6 = 6 * embeddings.dim
    model = DeepBugsModel(vocab, embeddings, DenseLayer.init(rng, d6, hyper.hidden, "RELU"),
                          DenseLayer.init(rng, hyper.hidden, 1, "SIGMOID"), subwords)
    X = model.features(data)
    y = np.array([e.label for e in data])
    params = model.params()
    curve = []
    for epoch in range(hyper.epochs):
        order = rng.permutation(len(data))
        total = 0.0
        for start in range(0, len(order), hyper.batch):
            idx = order[start:start + hyper.batch]
            loss, grads = model.loss_and_grads(X[idx], y[idx])
            if not np.isfinite(loss):
                raise NonFiniteLoss(f"loss became non-finite in epoch {epoch}")
            total += loss * len(idx)
            sgd_step(params, grads, hyper.lr, hyper.clip)
        curve.append(total / len(data))
    model.meta = {"hyper": json.dumps(asdict(hyper), sort_keys=True), "seed": str(seed),
                  "loss_curve": json.dumps(curve), **(extra_meta or {})}
    return model.to_checkpoint()


def predict(checkpoint: Checkpoint | DeepBugsModel, example: CallExample) -> float:
    model = checkpoint if isinstance(checkpoint, DeepBugsModel) else DeepBugsModel.from_checkpoint(checkpoint)
    return float(model.predict_features(model.features([example]))[0])


def predict_many(checkpoint: Checkpoint | DeepBugsModel, examples: Sequence[CallExample]) -> np.ndarray:
    model = checkpoint if isinstance(checkpoint, DeepBugsModel) else DeepBugsModel.from_checkpoint(checkpoint)
    if not examples:
        return np.zeros(0)
    return model.predict_features(model.features(examples))


def scan(checkpoint: Checkpoint | DeepBugsModel, modules: Iterable[tuple[str, ast.Module]],
         threshold: float) -> list[Warning]:
    """Warnings for calls whose predicted bug probability is at least ``threshold``."""
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"threshold must lie in [0, 1], got {threshold}")
    examples = [e for e in extract_correct(modules) if not e.degenerate]
    probs = predict_many(checkpoint, examples)
    warnings = [
        Warning(e.file, e.line, e.callee, float(p),
                f"arguments '{e.arg1}' and '{e.arg2}' of call to '{e.callee}' may be swapped")
        for e, p in zip(examples, probs) if p >= threshold
    ]
    warnings.sort(key=lambda w: (-w.p, w.file, w.line))
    return warnings


def evaluate(checkpoint: Checkpoint | DeepBugsModel, modules: Iterable[tuple[str, ast.Module]],
             threshold: float = 0.5) -> dict[str, float]:
    """Classification and ranking quality on correct calls paired with their mutations."""
    data = balanced(extract_correct(modules))
    if not data:
        raise EmptyDataset("no non-degenerate calls to evaluate on")
    p = predict_many(checkpoint, data)
    y = np.array([e.label for e in data])
    pred = p >= threshold
    tp = float(np.sum(pred & (y == 1)))
    fp = float(np.sum(pred & (y == 0)))
    fn = float(np.sum(~pred & (y == 1)))
    order = np.lexsort((np.arange(len(p)), -p))
    top = order[: len(order) // 2]
    return {
        "examples": float(len(data)),
        "threshold": threshold,
        "accuracy": float(np.mean(pred == (y == 1))),
        "precision": tp / (tp + fp) if tp + fp else 0.0,
        "recall": tp / (tp + fn) if tp + fn else 0.0,
        "mean_p_mutated": float(p[y == 1].mean()),
        "mean_p_unmutated": float(p[y == 0].mean()),
        "top_half_mutated_fraction": float(np.mean(y[top] == 1)) if len(top) else 0.0,
    }
