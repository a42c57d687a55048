"""Token vocabularies, convention-based subword splitting and skip-gram embeddings."""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numba
import numpy as np

from .errors import EmptyCorpus, NonFiniteLoss
from .neural.checkpoint import Checkpoint
from .neural.core import sigmoid

PAD, UNK = 0, 1
PAD_TOKEN, UNK_TOKEN = "<pad>", "<unk>"

_BOUNDARY = re.compile(r"(?<=[a-z])(?=[A-Z])|(?<=[A-Za-z])(?=[0-9])|(?<=[0-9])(?=[A-Za-z])")


def split_subwords(identifier: str) -> list[str]:
    """Split at underscores, lower-to-upper camelCase and digit/letter boundaries; lowercase."""
    pieces = []
    for part in identifier.split("_"):
        pieces.extend(p.lower() for p in _BOUNDARY.split(part) if p)
    return pieces or [identifier.lower()]


@dataclass
class Vocabulary:
    index_to_token: list[str]
    token_to_index: dict[str, int] = field(init=False)

    def __post_init__(self) -> None:
        self.token_to_index = {tok: i for i, tok in enumerate(self.index_to_token)}

    def __len__(self) -> int:
        return len(self.index_to_token)

    def __contains__(self, token: str) -> bool:
        return token in self.token_to_index

    def encode(self, token: str) -> int:
        return self.token_to_index.get(token, UNK)

    def encode_all(self, tokens: Iterable[str]) -> list[int]:
        return [self.token_to_index.get(t, UNK) for t in tokens]

    def decode(self, index: int) -> str:
        return self.index_to_token[index]

    def to_json(self) -> str:
        return json.dumps(self.index_to_token)

    @classmethod
    def from_json(cls, text: str) -> "Vocabulary":
        return cls(json.loads(text))


def build_vocab(token_streams: Iterable[Sequence[str]], K: int,
                extras: Sequence[str] = ()) -> Vocabulary:
    """PAD, UNK, any ``extras``, then the most frequent tokens (ties lexicographic), K entries max."""
    if K < 3:
        raise ValueError("vocabulary size K must be at least 3")
    counts = Counter()
    for stream in token_streams:
        counts.update(stream)
    if not counts:
        raise EmptyCorpus("no tokens to build a vocabulary from")
    reserved = [PAD_TOKEN, UNK_TOKEN] + [e for e in dict.fromkeys(extras) if e not in (PAD_TOKEN, UNK_TOKEN)]
    taken = set(reserved)
    ranked = sorted((t for t in counts if t not in taken), key=lambda t: (-counts[t], t))
    return Vocabulary((reserved + ranked)[:K])


@dataclass
class EmbeddingMatrix:
    """Trained token vectors.

    ``in_weights`` and ``out_weights`` are the center- and context-side
    matrices. Lookups use their sum, so tokens that predict each other end up
    close together, not only tokens that share contexts.
    """

    in_weights: np.ndarray  # (K, d)
    out_weights: np.ndarray | None = None  # (K, d)
    weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if self.out_weights is None:
            self.out_weights = np.zeros_like(self.in_weights)
        self.weights = self.in_weights + self.out_weights

    @property
    def dim(self) -> int:
        return self.weights.shape[1]


def lookup(vocab: Vocabulary, matrix: EmbeddingMatrix, token: str) -> np.ndarray:
    return matrix.weights[vocab.encode(token)]


def embed_token(vocab: Vocabulary, matrix: EmbeddingMatrix, token: str, subwords: bool = False) -> np.ndarray:
    """Row for ``token``; with ``subwords`` an OOV identifier becomes the mean of its known subwords."""
    idx = vocab.encode(token)
    if idx == UNK and subwords:
        parts = [vocab.encode(p) for p in split_subwords(token)] if re.fullmatch(r"[A-Za-z_]\w*", token) else []
        parts = [p for p in parts if p != UNK]
        if parts:
            return matrix.weights[parts].mean(axis=0)
    return matrix.weights[idx]


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    nu, nv = float(np.linalg.norm(u)), float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))


def subword_stream(tokens: Iterable[str]) -> list[str]:
    """Replace identifier-like tokens by their subword pieces."""
    out = []
    for tok in tokens:
        if re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", tok):
            out.extend(split_subwords(tok))
        else:
            out.append(tok)
    return out


# -- skip-gram with negative sampling ------------------------------------------


def sgns_loss(v: np.ndarray, u_pos: np.ndarray, u_negs: np.ndarray):
    """Loss -log s(u_pos.v) - sum log s(-u_neg.v) and its gradients (v, u_pos, u_negs)."""
    sp = sigmoid(np.array([u_pos @ v]))[0]
    sn = sigmoid(u_negs @ v)
    loss = -np.log(sp) - np.sum(np.log1p(-sn))
    g_v = (sp - 1.0) * u_pos + sn @ u_negs
    g_pos = (sp - 1.0) * v
    g_negs = sn[:, None] * v[None, :]
    return float(loss), g_v, g_pos, g_negs


@numba.njit(cache=False)
def _sgns_epoch(w_in, w_out, centers, contexts, negs, lrs):  # pragma: no cover - compiled
    d = w_in.shape[1]
    total = 0.0
    grad_in = np.empty(d)
    for p in range(centers.shape[0]):
        c = centers[p]
        lr = lrs[p]
        for k in range(d):
            grad_in[k] = 0.0
        for j in range(negs.shape[1] + 1):
            if j == 0:
                o = contexts[p]
                label = 1.0
            else:
                o = negs[p, j - 1]
                if o == contexts[p]:
                    continue
                label = 0.0
            score = 0.0
            for k in range(d):
                score += w_in[c, k] * w_out[o, k]
            if score >= 0:
                s = 1.0 / (1.0 + np.exp(-score))
            else:
                e = np.exp(score)
                s = e / (1.0 + e)
            if label == 1.0:
                total -= np.log(max(s, 1e-300))
            else:
                total -= np.log(max(1.0 - s, 1e-300))
            g = lr * (label - s)
            for k in range(d):
                grad_in[k] += g * w_out[o, k]
                w_out[o, k] += g * w_in[c, k]
        for k in range(d):
            w_in[c, k] += grad_in[k]
    return total


def context_pairs(encoded: Sequence[Sequence[int]], window: int) -> tuple[np.ndarray, np.ndarray]:
    """(center, context) index pairs within ``window`` positions, in stream order."""
    centers, contexts = [], []
    for stream in encoded:
        n = len(stream)
        for i in range(n):
            for j in range(max(0, i - window), min(n, i + window + 1)):
                if j != i:
                    centers.append(stream[i])
                    contexts.append(stream[j])
    return np.asarray(centers, dtype=np.int64), np.asarray(contexts, dtype=np.int64)


def train_skipgram(token_streams: Sequence[Sequence[str]], vocab: Vocabulary, d: int = 50,
                   window: int = 5, negatives: int = 5, epochs: int = 5, lr: float = 0.025,
                   seed: int = 0, min_lr: float = 0.0001) -> EmbeddingMatrix:
    """Sequential SGD over every (center, context) pair, negatives ~ unigram^0.75.

    For each pair the context word is the positive target and ``negatives``
    draws are negative targets; a draw equal to the context is skipped.

    Tokens outside the vocabulary are dropped before windowing; PAD never
    takes part. The learning rate decays linearly from ``lr`` to ``min_lr``.
    """
    if d < 2 or window < 1 or negatives < 1:
        raise ValueError("need d >= 2, window >= 1, negatives >= 1")
    encoded = [[i for i in vocab.encode_all(s) if i > UNK] for s in token_streams]
    if not any(encoded):
        raise EmptyCorpus("no in-vocabulary tokens to train on")
    rng = np.random.default_rng(seed)
    K = len(vocab)
    w_in = rng.uniform(-0.5 / d, 0.5 / d, size=(K, d))
    w_in[PAD] = 0.0
    w_out = np.zeros((K, d))
    counts = np.zeros(K)
    for s in encoded:
        np.add.at(counts, s, 1.0)
    probs = counts ** 0.75
    probs /= probs.sum()
    centers, contexts = context_pairs(encoded, window)
    n = len(centers)
    if n == 0:
        return EmbeddingMatrix(w_in, w_out)
    total_steps = n * epochs
    for epoch in range(epochs):
        negs = rng.choice(K, size=(n, negatives), p=probs)
        step = np.arange(epoch * n, (epoch + 1) * n, dtype=np.float64)
        lrs = np.maximum(lr - (lr - min_lr) * step / total_steps, min_lr)
        loss = _sgns_epoch(w_in, w_out, centers, contexts, negs, lrs)
        if not np.isfinite(loss) or not np.all(np.isfinite(w_in)):
            raise NonFiniteLoss(f"skip-gram loss became non-finite in epoch {epoch}")
    return EmbeddingMatrix(w_in, w_out)


def to_checkpoint(vocab: Vocabulary, matrix: EmbeddingMatrix, meta: dict[str, str] | None = None) -> Checkpoint:
    m = {"vocab": vocab.to_json(), "dim": str(matrix.dim)}
    m.update(meta or {})
    return Checkpoint("skipgram", m, {"emb_in": matrix.in_weights, "emb_out": matrix.out_weights})


def from_checkpoint(ckpt: Checkpoint) -> tuple[Vocabulary, EmbeddingMatrix]:
    ckpt.expect("skipgram")
    return Vocabulary.from_json(ckpt.meta["vocab"]), EmbeddingMatrix(ckpt.tensors["emb_in"], ckpt.tensors["emb_out"])


_LITERAL_NAMES = {"INT_LIT": "LIT:INT", "FLOAT_LIT": "LIT:FLOAT", "STR_LIT": "LIT:STR"}
_KEYWORD_LITERALS = {"True": "LIT:BOOL", "False": "LIT:BOOL", "None": "LIT:NONE", "...": "LIT:NONE"}


def code_stream(tokens, subwords: bool = False) -> list[str]:
    """Significant lexemes of a tokenized file, literals folded to their LIT:kind names.

    The literal names match what argument naming produces for literal
    arguments, so both share embedding rows.
    """
    out = []
    for tok in tokens:
        kind = tok.kind.name
        if kind in ("NEWLINE", "INDENT", "DEDENT", "COMMENT", "EOF"):
            continue
        if kind in _LITERAL_NAMES:
            out.append(_LITERAL_NAMES[kind])
        elif tok.lexeme in _KEYWORD_LITERALS:
            out.append(_KEYWORD_LITERALS[tok.lexeme])
        else:
            out.append(tok.lexeme)
    return subword_stream(out) if subwords else out
