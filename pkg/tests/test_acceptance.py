"""End-to-end acceptance checks, one test per criterion.

Each test prints a single PASS/FAIL line with its measurements; the lines are
repeated in the pytest terminal summary.
"""

import io
import itertools
import json
import math
import random
import time
from contextlib import redirect_stdout

import numpy as np

from nsa import completion as C
from nsa import deepbugs as D
from nsa import embeddings as E
from nsa import typewriter as T
from nsa.cli import main
from nsa.embeddings import PAD, UNK, Vocabulary
from nsa.gradsuite import run_suite
from nsa.minilang import parse, parse_source, pretty_print, tokenize
from nsa.pipeline import CompletionConfig, Config, from_sources, synth_sources, write_corpus

RESULTS: list[str] = []


def verdict(n: int, title: str, checks: dict[str, tuple[object, bool]], elapsed: float, limit: float) -> None:
    checks = {**checks, "runtime_s": (round(elapsed, 1), elapsed < limit)}
    ok = all(passed for _, passed in checks.values())
    detail = ", ".join(f"{k}={v}{'' if passed else ' (!)'}" for k, (v, passed) in checks.items())
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {n} {title}: {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


def _modules(files):
    return [(f.path, f.module) for f in files]


def test_criterion_1_gradient_suite():
    t = time.perf_counter()
    reports = run_suite(seed=0, eps=1e-5, tol=1e-4)
    worst = {name: max(r.max_rel_error.values()) for name, r in reports.items()}
    checks = {name: (f"{err:.2e}", err <= 1e-4) for name, err in worst.items()}
    verdict(1, "gradient checks", checks, time.perf_counter() - t, 60)


def test_criterion_2_parser(board_source):
    t = time.perf_counter()
    board = parse_source(board_source)
    sources = list(synth_sources(7, 2600).values())[:500]
    modules = [parse_source(s) for s in sources]
    round_trips = sum(parse(tokenize(pretty_print(m))) == m for m in modules)
    verdict(2, "parser", {
        "board_parses": (len(board.body) == 2, len(board.body) == 2),
        "modules": (len(modules), len(modules) == 500),
        "round_trips": (round_trips, round_trips == len(modules)),
    }, time.perf_counter() - t, 30)


def test_criterion_3_deepbugs(corpus7_split, board_module):
    t = time.perf_counter()
    train, held = corpus7_split
    cfg = Config()
    streams = [E.code_stream(f.tokens) for f in train]
    vocab = E.build_vocab(streams, cfg.embed.vocab_size, extras=(D.NONE,))
    emb = E.train_skipgram(streams, vocab, cfg.embed.dim, cfg.embed.window, cfg.embed.negatives,
                           cfg.embed.epochs, cfg.embed.lr, 0, cfg.embed.min_lr)
    data = D.balanced(D.extract_correct(_modules(train)))
    ckpt = D.train(data, vocab, emb, cfg.deepbugs, seed=0)
    report = D.evaluate(ckpt, _modules(held))
    [swapped] = D.extract_correct([("board.mini", board_module)])  # mark_point(y, x, ...)
    twin = D.CallExample(swapped.callee, swapped.arg2, swapped.arg1, swapped.base, swapped.param1,
                         swapped.param2)
    p_swapped, p_twin = D.predict(ckpt, swapped), D.predict(ckpt, twin)
    gap = report["mean_p_mutated"] - report["mean_p_unmutated"]
    verdict(3, "deepbugs", {
        "train_examples": (len(data), len(data) > 1000),
        "heldout_examples": (int(report["examples"]), report["examples"] > 0),
        "accuracy": (round(report["accuracy"], 4), report["accuracy"] >= 0.85),
        "p_gap": (round(gap, 4), gap >= 0.2),
        "board_swapped_vs_twin": (f"{p_swapped:.3f}>{p_twin:.3f}", p_swapped > p_twin),
    }, time.perf_counter() - t, 600)


def test_criterion_4_typewriter(corpus7_split):
    t = time.perf_counter()
    train, held = corpus7_split
    cfg = Config().typewriter
    embs = T.train_embeddings(train, Config().embed, cfg.comment_dim, seed=0)
    slots = T.extract_slots(_modules(train))
    types = T.build_type_vocab(slots, cfg.n_types)
    ckpt = T.train(slots, types, *embs, cfg, seed=0)

    labelled = [s for s in T.extract_slots(_modules(held)) if s.ground_truth is not None]
    ranked = T.predict_many(ckpt, labelled, 3)
    top1 = float(np.mean([r[0][0] == s.ground_truth for s, r in zip(labelled, ranked)]))
    top3 = float(np.mean([s.ground_truth in [ty for ty, _ in r] for s, r in zip(labelled, ranked)]))

    # validation on unannotated held-out slots must never add type errors
    pending = [s for s in T.extract_slots(_modules(held)) if s.ground_truth is None]
    preds = {s.key: r for s, r in zip(pending, T.predict_many(ckpt, pending, 3))}
    annotated, report = T.validate_and_assign(_modules(held), preds, 3)
    rechecked = len(T.typecheck(annotated))

    oracle_files = from_sources(synth_sources(7, 500, annotate_fraction=1.0))
    mods = _modules(oracle_files)
    truth = {s.key: [(s.ground_truth, 1.0)] for s in T.extract_slots(mods)}
    _, oracle = T.validate_and_assign([(p, T.strip_annotations(m)) for p, m in mods], truth, 3)
    verdict(4, "typewriter", {
        "heldout_slots": (len(labelled), len(labelled) > 0),
        "top1": (round(top1, 4), top1 >= 0.9),
        "top3": (round(top3, 4), top3 >= 0.95),
        "errors_before_after": (f"{report.errors_before}->{report.errors_after}",
                                report.errors_after <= report.errors_before and rechecked == report.errors_after),
        "predicted_assigned": (f"{report.assigned}/{len(report.outcomes)}", True),
        "oracle_rate": (oracle.rate, oracle.rate == 1.0),
        "oracle_delta": (oracle.errors_after - oracle.errors_before, oracle.errors_after == oracle.errors_before),
    }, time.perf_counter() - t, 600)


def _tiny_completion_model():
    vocab = Vocabulary(["<pad>", "<unk>", "a", "b", "c", "d"])
    stream = [random.Random(0).choice("abcd") for _ in range(60)]
    examples = C.build_dataset([("toy", stream)], vocab, 4)
    hyper = CompletionConfig(window=4, embedding=6, hidden=6, epochs=5, lr=1.0, batch=8)
    return C.train(examples, vocab, hyper, seed=0)


def _brute_force(model, context, steps):
    real = [i for i in range(len(model.vocab)) if i not in (PAD, UNK)]
    base = model.encode_context(context)
    scored = []
    for seq in itertools.product(real, repeat=steps):
        lp = sum(float(model.next_log_probs([base + list(seq[:i])])[0][seq[i]]) for i in range(steps))
        scored.append((seq, lp))
    scored.sort(key=lambda c: (-c[1], c[0]))
    return [([model.vocab.decode(i) for i in s], lp) for s, lp in scored]


def _greedy(model, context, steps):
    seq, total = [], 0.0
    for _ in range(steps):
        logp = model.next_log_probs([model.encode_context(context + seq)])[0]
        logp[[PAD, UNK]] = -math.inf
        i = int(np.argmax(logp))
        seq.append(model.vocab.decode(i))
        total += float(logp[i])
    return seq, total


def test_criterion_5_completion(corpus7_split):
    t = time.perf_counter()
    train, held = corpus7_split
    hyper = Config().completion
    tr = [(f.path, C.token_stream(f.tokens)) for f in train]
    te = [(f.path, C.token_stream(f.tokens)) for f in held]
    vocab = C.build_completion_vocab([s for _, s in tr], hyper.vocab_size)
    ckpt = C.train(C.build_dataset(tr, vocab, hyper.window), vocab, hyper, seed=0)
    report = C.evaluate(ckpt, C.build_dataset(te, vocab, hyper.window), C.unigram_counts([s for _, s in tr], vocab))
    model = C.CompletionModel.from_checkpoint(ckpt)

    tiny = C.CompletionModel.from_checkpoint(_tiny_completion_model())
    exact = True
    for steps in (1, 2, 3):
        beams = C.beam_search(tiny, ["a", "b"], 4 ** steps, steps)
        brute = _brute_force(tiny, ["a", "b"], steps)
        exact &= [s for s, _ in beams] == [s for s, _ in brute]
        exact &= all(abs(x - y) <= 1e-9 for (_, x), (_, y) in zip(beams, brute))
    greedy_ok = True
    for m, ctx in ((tiny, ["a", "b"]), (model, ["board", "."]), (model, ["x", "="])):
        [(seq, lp)] = C.beam_search(m, ctx, 1, 3)
        g_seq, g_lp = _greedy(m, ctx, 3)
        greedy_ok &= seq == g_seq and lp == g_lp
    verdict(5, "completion", {
        "perplexity": (round(report["perplexity"], 3), report["perplexity"] < report["unigram_perplexity"]),
        "unigram_perplexity": (round(report["unigram_perplexity"], 3), True),
        "planted_examples": (int(report["planted_examples"]), report["planted_examples"] > 0),
        "planted_top5": (round(report["planted_top5_hit_rate"], 4), report["planted_top5_hit_rate"] >= 0.8),
        "beam_equals_brute_force": (exact, exact),
        "beam1_equals_greedy": (greedy_ok, greedy_ok),
    }, time.perf_counter() - t, 600)


FAST = {
    "embed": {"dim": 8, "epochs": 1},
    "deepbugs": {"hidden": 16, "epochs": 3},
    "typewriter": {"hidden": 8, "epochs": 2, "comment_dim": 8},
    "completion": {"window": 8, "embedding": 8, "hidden": 8, "epochs": 1, "batch": 64},
}


def _cli(*argv) -> tuple[int, str]:
    buf = io.StringIO()
    with redirect_stdout(buf):
        code = main([str(a) for a in argv])
    return code, buf.getvalue()


def test_criterion_6_determinism(tmp_path):
    t = time.perf_counter()
    corpus = tmp_path / "corpus"
    write_corpus(synth_sources(7, 40), corpus)
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(FAST))
    common = ("--config", cfg, "--seed", 3)
    trainings = {
        "embed": ("embed", "train", "--dir", corpus),
        "deepbugs": ("deepbugs", "train", "--dir", corpus, "--embeddings", tmp_path / "embed-0.ckpt"),
        "typewriter": ("typewriter", "train", "--dir", corpus),
        "complete": ("complete", "train", "--dir", corpus),
    }
    checks = {}
    for name, argv in trainings.items():
        blobs = []
        for run in range(2):
            out = tmp_path / f"{name}-{run}.ckpt"
            code, _ = _cli(*argv, *common, "--out", out)
            blobs.append(out.read_bytes() if code == 0 else None)
        same = blobs[0] is not None and blobs[0] == blobs[1]
        checks[f"{name}_checkpoint"] = ("identical" if same else "differs", same)
    evals = {
        "deepbugs": ("deepbugs", "eval", "--dir", corpus, "--model", tmp_path / "deepbugs-0.ckpt"),
        "typewriter": ("typewriter", "eval", "--dir", corpus, "--model", tmp_path / "typewriter-0.ckpt"),
        "complete": ("complete", "eval", "--dir", corpus, "--model", tmp_path / "complete-0.ckpt"),
        "scan": ("deepbugs", "scan", "--dir", corpus, "--model", tmp_path / "deepbugs-0.ckpt", "--threshold", 0.3),
    }
    for name, argv in evals.items():
        first, second = _cli(*argv, *common), _cli(*argv, *common)
        same = first[0] == 0 and first == second
        checks[f"{name}_report"] = ("identical" if same else "differs", same)
    verdict(6, "determinism", checks, time.perf_counter() - t, 600)


def test_criterion_7_embedding_clusters():
    t = time.perf_counter()
    rng = random.Random(0)
    clusters = [[f"a{i}" for i in range(5)], [f"b{i}" for i in range(5)]]
    streams = [[rng.choice(c) for _ in range(60)] for c in clusters * 20]
    vocab = E.build_vocab(streams, 100)
    m = E.train_skipgram(streams, vocab, d=16, window=2, negatives=5, epochs=5, seed=0)

    def cos(s, u):
        return E.cosine(E.lookup(vocab, m, s), E.lookup(vocab, m, u))
    within = float(np.mean([cos(s, u) for c in clusters for s, u in itertools.combinations(c, 2)]))
    cross = float(np.mean([cos(s, u) for s in clusters[0] for u in clusters[1]]))
    verdict(7, "embedding clusters", {
        "within": (round(within, 4), True),
        "cross": (round(cross, 4), True),
        "gap": (round(within - cross, 4), within - cross >= 0.3),
    }, time.perf_counter() - t, 60)
