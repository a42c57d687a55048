"""Next-token code completion with a bi-LSTM encoder and an LSTM decoder.

Training windows are fixed-length, left-padded token sequences; the decoder
reads the window (teacher forcing) and learns to emit it shifted by one, so
its final position predicts the token after the cursor.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

import numpy as np

from .embeddings import PAD, UNK, Vocabulary, build_vocab
from .errors import EmptyCorpus, EmptyDataset, NonFiniteLoss
from .minilang import Token, tokenize
from .neural.checkpoint import Checkpoint
from .neural.core import DenseLayer, dense_backward, dense_forward, log_softmax, sgd_step, softmax_cross_entropy
from .neural.lstm import LstmCell, bilstm_backward, bilstm_forward, lstm_backward, lstm_forward
from .pipeline.config import CompletionConfig

MODEL = "completion"
SKIPPED_KINDS = ("COMMENT", "NEWLINE", "INDENT", "DEDENT", "EOF")


def token_stream(tokens: Iterable[Token]) -> list[str]:
    """Significant lexemes only: comments and layout tokens are dropped."""
    return [t.lexeme for t in tokens if t.kind.name not in SKIPPED_KINDS]


def context_from_text(text: str) -> list[str]:
    return token_stream(tokenize(text))


@dataclass(frozen=True)
class ContextWindow:
    token_ids: tuple[int, ...]
    lexemes: tuple[str, ...]


@dataclass(frozen=True)
class CompletionExample:
    input: ContextWindow
    target_ids: tuple[int, ...]
    file: str = ""
    position: int = 0

    @property
    def next_id(self) -> int:
        return self.target_ids[-1]


def window(ids: Sequence[int], L: int) -> tuple[int, ...]:
    """The last ``L`` ids, left-padded with PAD."""
    ids = list(ids)[-L:]
    return tuple([PAD] * (L - len(ids)) + ids)


def build_dataset(streams: Iterable[tuple[str, Sequence[str]]], vocab: Vocabulary, L: int) -> list[CompletionExample]:
    """One example per position i >= 1 of each (path, lexemes) stream, in stream order."""
    if L < 2:
        raise ValueError("window length L must be at least 2")
    out = []
    seen = False
    for path, lexemes in streams:
        seen = seen or bool(lexemes)
        ids = vocab.encode_all(lexemes)
        for i in range(1, len(ids)):
            inp = window(ids[:i], L)
            out.append(CompletionExample(
                ContextWindow(inp, tuple(lexemes[max(0, i - L):i])),
                inp[1:] + (ids[i],), path, i))
    if not seen:
        raise EmptyCorpus("no tokens to build completion windows from")
    return out


@dataclass
class CompletionModel:
    vocab: Vocabulary
    emb: np.ndarray  # (K, e); row PAD stays zero
    enc_f: LstmCell
    enc_b: LstmCell
    dec: LstmCell  # hidden = 2 * encoder hidden
    out: DenseLayer
    L: int
    meta: dict | None = None

    def params(self) -> dict[str, np.ndarray]:
        p = {"emb": self.emb, "out.W": self.out.W, "out.b": self.out.b}
        for prefix, cell in (("enc_f", self.enc_f), ("enc_b", self.enc_b), ("dec", self.dec)):
            p.update(cell.params(prefix))
        return p

    def forward(self, ids: np.ndarray):
        """ids (B, L) -> logits (L, B, K) and the caches needed for backprop."""
        ids_t = ids.T  # (L, B)
        mask = (ids_t != PAD).astype(np.float64)
        xs = self.emb[ids_t]
        summary, _, enc_cache = bilstm_forward(self.enc_f, self.enc_b, xs, mask)
        hs, _, dec_cache = lstm_forward(self.dec, xs, mask, h0=summary)
        logits = dense_forward(self.out, hs)
        return logits, (ids_t, xs, hs, enc_cache, dec_cache)

    def loss_and_grads(self, ids: np.ndarray, targets: np.ndarray):
        """Mean negative log-likelihood over non-PAD targets and all parameter gradients."""
        logits, (ids_t, xs, hs, enc_cache, dec_cache) = self.forward(ids)
        L, B, K = logits.shape
        tg = targets.T.reshape(-1)
        count = int(np.sum(tg != PAD))
        if count == 0:
            raise EmptyDataset("batch has no non-padding targets")
        loss, dlogits = softmax_cross_entropy(logits.reshape(-1, K), tg, ignore_index=PAD)
        dlogits = (dlogits / count).reshape(L, B, K)
        d_hs, gW, gb = dense_backward(self.out, hs, dlogits)
        dx_dec, dh0, _, g_dec = lstm_backward(self.dec, dec_cache, d_hs)
        dx_enc, g_f, g_b = bilstm_backward(self.enc_f, self.enc_b, enc_cache, d_summary=dh0)
        g_emb = np.zeros_like(self.emb)
        np.add.at(g_emb, ids_t, dx_dec + dx_enc)
        g_emb[PAD] = 0.0
        grads = {"emb": g_emb, "out.W": gW, "out.b": gb}
        for prefix, g in (("enc_f", g_f), ("enc_b", g_b), ("dec", g_dec)):
            for k, v in g.items():
                grads[f"{prefix}.{k}"] = v
        return loss / count, grads

    def next_log_probs(self, contexts: Sequence[Sequence[int]]) -> np.ndarray:
        """Final-position log-distribution for each context of vocabulary ids."""
        ids = np.array([window(c, self.L) for c in contexts], dtype=np.int64)
        logits, _ = self.forward(ids)
        return log_softmax(logits[-1])

    def encode_context(self, lexemes: Sequence[str]) -> list[int]:
        ids = self.vocab.encode_all(lexemes)
        if not ids:
            raise ValueError("context is empty after filtering")
        return ids

    def to_checkpoint(self) -> Checkpoint:
        meta = {"vocab": self.vocab.to_json(), "window": str(self.L)}
        meta.update(self.meta or {})
        return Checkpoint(MODEL, meta, dict(self.params()))

    @classmethod
    def from_checkpoint(cls, ckpt: Checkpoint) -> "CompletionModel":
        ckpt.expect(MODEL)
        t = ckpt.tensors
        return cls(Vocabulary.from_json(ckpt.meta["vocab"]), t["emb"], LstmCell.from_params(t, "enc_f"),
                   LstmCell.from_params(t, "enc_b"), LstmCell.from_params(t, "dec"),
                   DenseLayer(t["out.W"], t["out.b"], "LINEAR"), int(ckpt.meta["window"]),
                   {k: v for k, v in ckpt.meta.items() if k not in ("vocab", "window")})


def init_model(vocab: Vocabulary, hyper: CompletionConfig = CompletionConfig(), seed: int = 0) -> CompletionModel:
    rng = np.random.default_rng(seed)
    K, e, h = len(vocab), hyper.embedding, hyper.hidden
    emb = rng.uniform(-0.1, 0.1, size=(K, e))
    emb[PAD] = 0.0
    return CompletionModel(vocab, emb, LstmCell.init(rng, e, h), LstmCell.init(rng, e, h),
                           LstmCell.init(rng, e, 2 * h), DenseLayer.init(rng, 2 * h, K, "LINEAR"), hyper.window)


def _model(checkpoint) -> CompletionModel:
    return checkpoint if isinstance(checkpoint, CompletionModel) else CompletionModel.from_checkpoint(checkpoint)


def train(examples: Sequence[CompletionExample], vocab: Vocabulary, hyper: CompletionConfig = CompletionConfig(),
          seed: int = 0, extra_meta: dict[str, str] | None = None) -> Checkpoint:
    if not examples:
        raise EmptyDataset("no completion examples to train on")
    if any(len(ex.input.token_ids) != hyper.window for ex in examples):
        raise ValueError(f"examples must have window length {hyper.window}")
    model = init_model(vocab, hyper, seed)
    rng = np.random.default_rng(seed + 1)
    X = np.array([ex.input.token_ids for ex in examples], dtype=np.int64)
    Y = np.array([ex.target_ids for ex in examples], dtype=np.int64)
    params = model.params()
    curve = []
    for epoch in range(hyper.epochs):
        order = rng.permutation(len(examples))
        total, batches = 0.0, 0
        for start in range(0, len(order), hyper.batch):
            idx = order[start:start + hyper.batch]
            loss, grads = model.loss_and_grads(X[idx], Y[idx])
            if not np.isfinite(loss):
                raise NonFiniteLoss(f"loss became non-finite in epoch {epoch}")
            total += loss
            batches += 1
            sgd_step(params, grads, hyper.lr, hyper.clip)
        curve.append(total / batches)
    model.meta = {"hyper": json.dumps(asdict(hyper), sort_keys=True), "seed": str(seed),
                  "loss_curve": json.dumps(curve), **(extra_meta or {})}
    return model.to_checkpoint()


def predict_next(checkpoint, context: Sequence[str]) -> np.ndarray:
    """Probability of every vocabulary entry being the next token after ``context``."""
    model = _model(checkpoint)
    return np.exp(model.next_log_probs([model.encode_context(context)])[0])


def _ranked(scores: np.ndarray) -> np.ndarray:
    """Indices by score descending (ties: lower index first), PAD and UNK excluded."""
    order = np.argsort(-scores, kind="stable")
    return order[(order != PAD) & (order != UNK)]


def top_k(checkpoint, context: Sequence[str], k: int) -> list[tuple[str, float]]:
    model = _model(checkpoint)
    if not 0 <= k <= len(model.vocab):
        raise ValueError(f"k must lie in [0, {len(model.vocab)}], got {k}")
    probs = predict_next(model, context)
    return [(model.vocab.decode(int(i)), float(probs[i])) for i in _ranked(probs)[:k]]


def beam_search(checkpoint, context: Sequence[str], k: int, steps: int) -> list[tuple[list[str], float]]:
    """The ``k`` most probable ``steps``-token continuations with their cumulative log-probabilities.

    Each extension re-reads context plus the tokens chosen so far, so a beam of
    width 1 reproduces repeated greedy ``predict_next``.
    """
    if k < 1 or steps < 1:
        raise ValueError("beam width and steps must be at least 1")
    model = _model(checkpoint)
    base = model.encode_context(context)
    beams: list[tuple[tuple[int, ...], float]] = [((), 0.0)]
    for _ in range(steps):
        logp = model.next_log_probs([base + list(seq) for seq, _ in beams])
        candidates = []
        for (seq, score), row in zip(beams, logp):
            for i in _ranked(row)[:k]:
                candidates.append((seq + (int(i),), score + float(row[i])))
        candidates.sort(key=lambda c: (-c[1], c[0]))
        beams = candidates[:k]
    return [([model.vocab.decode(i) for i in seq], score) for seq, score in beams]


def unigram_counts(streams: Iterable[Sequence[str]], vocab: Vocabulary) -> list[int]:
    """Occurrences of every vocabulary index (OOV counted as UNK)."""
    counts = Counter(i for s in streams for i in vocab.encode_all(s))
    return [counts.get(i, 0) for i in range(len(vocab))]


def unigram_log_probs(counts: Sequence[int]) -> np.ndarray:
    """Add-one smoothed unigram log-distribution over non-PAD vocabulary entries."""
    c = np.asarray(counts, dtype=np.float64) + 1.0
    c[PAD] = 0.0
    with np.errstate(divide="ignore"):
        return np.log(c / c.sum())


def perplexity(checkpoint, examples: Sequence[CompletionExample], batch: int = 256) -> float:
    """exp of the mean negative log-likelihood of each example's next token."""
    model = _model(checkpoint)
    if not examples:
        raise EmptyDataset("no examples to measure perplexity on")
    nll = 0.0
    for start in range(0, len(examples), batch):
        chunk = examples[start:start + batch]
        ids = np.array([ex.input.token_ids for ex in chunk], dtype=np.int64)
        logits, _ = model.forward(ids)
        logp = log_softmax(logits[-1])
        nll -= float(logp[np.arange(len(chunk)), [ex.next_id for ex in chunk]].sum())
    return math.exp(nll / len(examples))


def unigram_perplexity(log_probs: np.ndarray, examples: Sequence[CompletionExample]) -> float:
    if not examples:
        raise EmptyDataset("no examples to measure perplexity on")
    return math.exp(-float(np.mean([log_probs[ex.next_id] for ex in examples])))


def hit_rate(checkpoint, examples: Sequence[CompletionExample], k: int = 5, batch: int = 256) -> float:
    """Fraction of examples whose next token is among the ``k`` best displayable predictions."""
    model = _model(checkpoint)
    if not examples:
        return 0.0
    hits = 0
    for start in range(0, len(examples), batch):
        chunk = examples[start:start + batch]
        ids = np.array([ex.input.token_ids for ex in chunk], dtype=np.int64)
        logits, _ = model.forward(ids)
        for ex, row in zip(chunk, logits[-1]):
            hits += ex.next_id in set(_ranked(row)[:k].tolist())
    return hits / len(examples)


def after_receiver(examples: Sequence[CompletionExample], receivers: Iterable[str]) -> list[CompletionExample]:
    """Examples whose context ends in ``<receiver> .``."""
    heads = set(receivers)
    return [ex for ex in examples if len(ex.input.lexemes) >= 2 and ex.input.lexemes[-1] == "."
            and ex.input.lexemes[-2] in heads]


def evaluate(checkpoint, examples: Sequence[CompletionExample], counts: Sequence[int] | None = None,
             receivers: Iterable[str] = ("board", "canvas", "link")) -> dict[str, float]:
    """Perplexity against the counted unigram baseline and top-5 hit rates.

    ``counts`` are training-set unigram counts; by default those stored in
    the checkpoint at training time.
    """
    model = _model(checkpoint)
    if counts is None:
        counts = json.loads((model.meta or {})["unigram_counts"])
    planted = after_receiver(examples, receivers)
    return {
        "examples": float(len(examples)),
        "perplexity": perplexity(model, examples),
        "unigram_perplexity": unigram_perplexity(unigram_log_probs(counts), examples),
        "top5_hit_rate": hit_rate(model, examples, 5),
        "planted_examples": float(len(planted)),
        "planted_top5_hit_rate": hit_rate(model, planted, 5),
    }


def build_completion_vocab(streams: Iterable[Sequence[str]], K: int) -> Vocabulary:
    return build_vocab(streams, K)
