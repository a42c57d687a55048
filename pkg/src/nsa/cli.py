"""Command-line interface: ``nsa <group> <command> [options]``.

Exit status is 0 on success, 1 on a domain error (message on stderr) and 2
on a usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path
from typing import Sequence

import numpy as np

from . import completion, deepbugs, embeddings, typewriter
from .errors import ConfigError, IoError, NsaError
from .gradsuite import run_suite
from .minilang import pretty_print
from .neural.checkpoint import Checkpoint, load, save
from .pipeline.config import Config, load_config
from .pipeline.corpus import SourceFile, SplitSpec, load_files, scan, split
from .pipeline.synth import synth_sources, write_corpus

log = logging.getLogger("nsa")


# -- helpers ------------------------------------------------------------------


def _config(args) -> Config:
    overrides = {} if args.seed is None else {"seed": args.seed}
    return load_config(args.config, **overrides)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _emit(text: str, out: str | None) -> None:
    """Write ``text`` to ``out`` if given, else to standard output."""
    if out is None:
        sys.stdout.write(text)
        return
    try:
        path = Path(out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write {out}: {exc}") from exc


def _jsonl(lines: Sequence[str]) -> str:
    return "".join(line + "\n" for line in lines)


def _read_lines(path: str) -> list[str]:
    try:
        return [ln for ln in Path(path).read_text(encoding="utf-8").splitlines() if ln.strip()]
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc


def _require_out(args) -> str:
    if not args.out:
        raise ConfigError("--out is required for this command")
    return args.out


def _files(args) -> list[SourceFile]:
    """Parsed files under --dir, optionally restricted to one part of a --split file."""
    manifest = scan(args.dir)
    paths = None
    if getattr(args, "split", None):
        try:
            parts = json.loads(Path(args.split).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise IoError(f"cannot read split file {args.split}: {exc}") from exc
        if args.part not in parts:
            raise ConfigError(f"split file has no part {args.part!r}")
        paths = parts[args.part]
    return load_files(manifest, paths)


def _modules(files: Sequence[SourceFile]):
    return [(f.path, f.module) for f in files]


def _config_meta(cfg: Config) -> dict[str, str]:
    return {"config": cfg.to_json()}


# -- corpus -------------------------------------------------------------------


def cmd_corpus_scan(args, cfg: Config) -> int:
    manifest = scan(args.dir)
    _emit(manifest.to_json(), args.out)
    if args.out:
        print(_dump(manifest.counts), end="")
    return 0


def cmd_corpus_synth(args, cfg: Config) -> int:
    out = _require_out(args)
    fraction = args.annotate_fraction
    if not 0.0 <= fraction <= 1.0:
        raise ConfigError("--annotate-fraction must lie in [0, 1]")
    try:
        write_corpus(synth_sources(cfg.seed, args.functions, fraction), out)
    except OSError as exc:
        raise IoError(f"cannot write corpus to {out}: {exc}") from exc
    print(_dump(scan(out).counts), end="")
    return 0


def cmd_corpus_split(args, cfg: Config) -> int:
    s = cfg.split
    parts = split(scan(args.dir), SplitSpec(s.train, s.valid, s.test, cfg.seed))
    _emit(_dump(parts), args.out)
    return 0


# -- embeddings ---------------------------------------------------------------


def cmd_embed_train(args, cfg: Config) -> int:
    out = _require_out(args)
    e = cfg.embed
    subwords = e.subwords or args.subwords
    streams = [embeddings.code_stream(f.tokens, subwords) for f in _files(args)]
    vocab = embeddings.build_vocab(streams, e.vocab_size, extras=(deepbugs.NONE,))
    matrix = embeddings.train_skipgram(streams, vocab, e.dim, e.window, e.negatives, e.epochs, e.lr, cfg.seed,
                                       e.min_lr)
    meta = {"subwords": json.dumps(subwords), "seed": str(cfg.seed), **_config_meta(cfg)}
    save(embeddings.to_checkpoint(vocab, matrix, meta), out)
    print(f"vocabulary {len(vocab)} tokens, dim {matrix.dim}")
    return 0


# -- deepbugs -----------------------------------------------------------------


def cmd_deepbugs_extract(args, cfg: Config) -> int:
    examples = deepbugs.extract_correct(_modules(_files(args)))
    if args.balanced:
        examples = deepbugs.balanced(examples)
    _emit(_jsonl([e.to_json() for e in examples]), args.out)
    return 0


def cmd_deepbugs_train(args, cfg: Config) -> int:
    out = _require_out(args)
    if args.examples:
        examples = [deepbugs.CallExample.from_json(ln) for ln in _read_lines(args.examples)]
    elif args.dir:
        examples = deepbugs.extract_correct(_modules(_files(args)))
    else:
        raise ConfigError("deepbugs train needs --examples or --dir")
    if {e.label for e in examples} == {0.0}:
        examples = deepbugs.balanced(examples)
    emb_ckpt = load(args.embeddings).expect("skipgram")
    vocab, matrix = embeddings.from_checkpoint(emb_ckpt)
    subwords = json.loads(emb_ckpt.meta.get("subwords", "false"))
    ckpt = deepbugs.train(examples, vocab, matrix, cfg.deepbugs, cfg.seed, subwords, _config_meta(cfg))
    save(ckpt, out)
    curve = json.loads(ckpt.meta["loss_curve"])
    print(f"trained on {sum(not e.degenerate for e in examples)} examples, final loss {curve[-1]:.4f}")
    return 0


def cmd_deepbugs_scan(args, cfg: Config) -> int:
    threshold = cfg.deepbugs.threshold if args.threshold is None else args.threshold
    if not 0.0 <= threshold <= 1.0:
        raise ConfigError("--threshold must lie in [0, 1]")
    model = deepbugs.DeepBugsModel.from_checkpoint(load(args.model))
    warnings = deepbugs.scan(model, _modules(_files(args)), threshold)
    if args.out:
        _emit(_jsonl([w.to_json() for w in warnings]), args.out)
    print(f"{'p':>6}  {'location':<32} {'callee':<20} message")
    for w in warnings:
        print(f"{w.p:6.3f}  {f'{w.file}:{w.line}':<32} {w.callee:<20} {w.message}")
    print(f"{len(warnings)} warning(s) at threshold {threshold}")
    return 0


def cmd_deepbugs_eval(args, cfg: Config) -> int:
    model = deepbugs.DeepBugsModel.from_checkpoint(load(args.model))
    threshold = 0.5 if args.threshold is None else args.threshold
    _emit(_dump(deepbugs.evaluate(model, _modules(_files(args)), threshold)), args.out)
    return 0


# -- typewriter ---------------------------------------------------------------


def _tw_slots(files, cfg: Config):
    t = cfg.typewriter
    return typewriter.extract_slots(_modules(files), t.max_id_words, t.max_code_tokens, t.max_comment_words)


def cmd_typewriter_extract(args, cfg: Config) -> int:
    _emit(_jsonl([s.to_json() for s in _tw_slots(_files(args), cfg)]), args.out)
    return 0


def cmd_typewriter_train(args, cfg: Config) -> int:
    out = _require_out(args)
    files = _files(args)
    t = cfg.typewriter
    code_vocab, code_emb, comment_vocab, comment_emb = typewriter.train_embeddings(files, cfg.embed, t.comment_dim,
                                                                                   cfg.seed)
    slots = _tw_slots(files, cfg)
    types = typewriter.build_type_vocab(slots, t.n_types)
    ckpt = typewriter.train(slots, types, code_vocab, code_emb, comment_vocab, comment_emb, t, cfg.seed,
                            _config_meta(cfg))
    save(ckpt, out)
    curve = json.loads(ckpt.meta["loss_curve"])
    print(f"trained on {sum(s.ground_truth in types for s in slots)} slots over {len(types)} types, "
          f"final loss {curve[-1]:.4f}")
    return 0


def _tw_predictions(model, slots, k: int):
    pending = [s for s in slots if s.ground_truth is None]
    ranked = typewriter.predict_many(model, pending, k)
    return {s.key: r for s, r in zip(pending, ranked)}


def cmd_typewriter_infer(args, cfg: Config) -> int:
    out = Path(_require_out(args))
    model = typewriter.TypeWriterModel.from_checkpoint(load(args.model))
    k = cfg.typewriter.top_k if args.k is None else args.k
    files = _files(args)
    modules = _modules(files)
    predictions = _tw_predictions(model, _tw_slots(files, cfg), min(k, len(model.types)))
    annotated, report = typewriter.validate_and_assign(modules, predictions, k)
    for path, module in annotated:
        _emit(pretty_print(module), str(out / path))
    _emit(_jsonl([o.to_json() for o in report.outcomes]), str(out / "assignments.jsonl"))
    print(f"assigned {report.assigned}/{len(report.outcomes)} slots; "
          f"type errors {report.errors_before} -> {report.errors_after}")
    return 0


def cmd_typewriter_check(args, cfg: Config) -> int:
    errors = typewriter.typecheck(_modules(_files(args)))
    _emit(_jsonl([e.to_json() for e in errors]), args.out)
    if args.out:
        print(f"{len(errors)} type error(s)")
    return 0


def typewriter_report(model, files, cfg: Config, k: int) -> dict:
    """Prediction accuracy on annotated slots plus the outcome of validating the unannotated ones."""
    slots = _tw_slots(files, cfg)
    k = min(k, len(model.types))
    labelled = [s for s in slots if s.ground_truth is not None]
    ranked = typewriter.predict_many(model, labelled, k)
    hits1 = [r[0][0] == s.ground_truth if r else False for s, r in zip(labelled, ranked)]
    hitsk = [s.ground_truth in [t for t, _ in r] for s, r in zip(labelled, ranked)]
    per_class: dict[str, list[bool]] = {}
    for s, h in zip(labelled, hits1):
        per_class.setdefault(s.ground_truth, []).append(h)
    _, report = typewriter.validate_and_assign(_modules(files), _tw_predictions(model, slots, k), k)
    return {
        "labelled_slots": len(labelled),
        "top1_accuracy": float(np.mean(hits1)) if labelled else 0.0,
        f"top{k}_accuracy": float(np.mean(hitsk)) if labelled else 0.0,
        "per_class_top1": {t: float(np.mean(v)) for t, v in sorted(per_class.items())},
        "unannotated_slots": len(report.outcomes),
        "annotation_rate": report.rate,
        "errors_before": report.errors_before,
        "errors_after": report.errors_after,
        "error_delta": report.errors_after - report.errors_before,
    }


def cmd_typewriter_eval(args, cfg: Config) -> int:
    model = typewriter.TypeWriterModel.from_checkpoint(load(args.model))
    k = cfg.typewriter.top_k if args.k is None else args.k
    _emit(_dump(typewriter_report(model, _files(args), cfg, k)), args.out)
    return 0


# -- completion ---------------------------------------------------------------


def _streams(files):
    return [(f.path, completion.token_stream(f.tokens)) for f in files]


def cmd_complete_build(args, cfg: Config) -> int:
    streams = _streams(_files(args))
    vocab = completion.build_completion_vocab([s for _, s in streams], cfg.completion.vocab_size)
    examples = completion.build_dataset(streams, vocab, cfg.completion.window)
    header = json.dumps({"vocab": vocab.index_to_token, "window": cfg.completion.window,
                         "unigram": completion.unigram_counts([s for _, s in streams], vocab)})
    lines = [header] + [json.dumps({"file": e.file, "position": e.position, "input": list(e.input.token_ids),
                                    "target": list(e.target_ids), "context": list(e.input.lexemes)})
                        for e in examples]
    _emit(_jsonl(lines), args.out)
    return 0


def _read_dataset(path: str):
    lines = _read_lines(path)
    if not lines:
        raise IoError(f"{path} is empty")
    header = json.loads(lines[0])
    examples = []
    for ln in lines[1:]:
        d = json.loads(ln)
        examples.append(completion.CompletionExample(
            completion.ContextWindow(tuple(d["input"]), tuple(d["context"])), tuple(d["target"]),
            d["file"], d["position"]))
    return embeddings.Vocabulary(header["vocab"]), header["window"], header["unigram"], examples


def cmd_complete_train(args, cfg: Config) -> int:
    out = _require_out(args)
    hyper = cfg.completion
    if args.data:
        vocab, window, unigram, examples = _read_dataset(args.data)
        if window != hyper.window:
            raise ConfigError(f"dataset window {window} differs from configured window {hyper.window}")
    elif args.dir:
        streams = _streams(_files(args))
        vocab = completion.build_completion_vocab([s for _, s in streams], hyper.vocab_size)
        unigram = completion.unigram_counts([s for _, s in streams], vocab)
        examples = completion.build_dataset(streams, vocab, hyper.window)
    else:
        raise ConfigError("complete train needs --data or --dir")
    meta = {"unigram_counts": json.dumps(unigram), **_config_meta(cfg)}
    ckpt = completion.train(examples, vocab, hyper, cfg.seed, meta)
    save(ckpt, out)
    curve = json.loads(ckpt.meta["loss_curve"])
    print(f"trained on {len(examples)} windows, vocabulary {len(vocab)}, final loss {curve[-1]:.4f}")
    return 0


def cmd_complete_query(args, cfg: Config) -> int:
    model = completion.CompletionModel.from_checkpoint(load(args.model))
    for line in sys.stdin:
        if not line.strip():
            continue
        context = completion.context_from_text(line)
        if not context:
            continue
        if args.beam:
            for seq, score in completion.beam_search(model, context, args.beam, args.steps):
                print(f"{' '.join(seq)}\t{score!r}")
        else:
            for lexeme, p in completion.top_k(model, context, min(5, len(model.vocab))):
                print(f"{lexeme}\t{p!r}")
        sys.stdout.flush()
    return 0


def cmd_complete_eval(args, cfg: Config) -> int:
    model = completion.CompletionModel.from_checkpoint(load(args.model))
    examples = completion.build_dataset(_streams(_files(args)), model.vocab, model.L)
    report = completion.evaluate(model, examples)
    _emit(_dump(report), args.out)
    return 0


# -- gradcheck ----------------------------------------------------------------


def cmd_gradcheck(args, cfg: Config) -> int:
    reports = run_suite(cfg.seed)
    ok = True
    for name, report in reports.items():
        print(f"[{'PASS' if report.ok else 'FAIL'}] {name}")
        for line in report.lines():
            print("    " + line)
        ok = ok and report.ok
    if not ok:
        print("gradient check failed", file=sys.stderr)
    return 0 if ok else 1


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with configuration overrides")
    common.add_argument("--seed", type=int, help="random seed (overrides the configuration)")
    common.add_argument("--out", help="output file or directory")

    corpus_in = argparse.ArgumentParser(add_help=False)
    corpus_in.add_argument("--dir", required=True, help="corpus root with .mini files")
    corpus_in.add_argument("--split", help="split JSON written by 'corpus split'")
    corpus_in.add_argument("--part", default="train", choices=("train", "valid", "test"))

    parser = argparse.ArgumentParser(prog="nsa", description="Neural analyses for MiniLang code.")
    groups = parser.add_subparsers(dest="group", required=True, metavar="COMMAND")

    def command(group, name, fn, help_text, parents=(common,)):
        p = group.add_parser(name, parents=list(parents), help=help_text)
        p.set_defaults(fn=fn)
        return p

    corpus = groups.add_parser("corpus", help="discover, generate and split corpora").add_subparsers(
        dest="command", required=True, metavar="ACTION")
    p = command(corpus, "scan", cmd_corpus_scan, "list .mini files and their parse status")
    p.add_argument("--dir", required=True)
    p = command(corpus, "synth", cmd_corpus_synth, "generate a synthetic corpus")
    p.add_argument("--functions", type=int, required=True)
    p.add_argument("--annotate-fraction", type=float, default=0.5)
    p = command(corpus, "split", cmd_corpus_split, "assign files to train/valid/test")
    p.add_argument("--dir", required=True)

    embed = groups.add_parser("embed", help="token embeddings").add_subparsers(
        dest="command", required=True, metavar="ACTION")
    p = command(embed, "train", cmd_embed_train, "train skip-gram embeddings", (common, corpus_in))
    p.add_argument("--subwords", action="store_true")

    db = groups.add_parser("deepbugs", help="swapped-argument bug detection").add_subparsers(
        dest="command", required=True, metavar="ACTION")
    p = command(db, "extract", cmd_deepbugs_extract, "extract call examples", (common, corpus_in))
    p.add_argument("--balanced", action="store_true", help="pair every example with its mutation")
    p = command(db, "train", cmd_deepbugs_train, "train the bug classifier")
    p.add_argument("--examples")
    p.add_argument("--dir")
    p.add_argument("--split")
    p.add_argument("--part", default="train", choices=("train", "valid", "test"))
    p.add_argument("--embeddings", required=True)
    p = command(db, "scan", cmd_deepbugs_scan, "report likely swapped arguments", (common, corpus_in))
    p.add_argument("--model", required=True)
    p.add_argument("--threshold", type=float)
    p = command(db, "eval", cmd_deepbugs_eval, "evaluate on correct calls and their mutations",
                (common, corpus_in))
    p.add_argument("--model", required=True)
    p.add_argument("--threshold", type=float)

    tw = groups.add_parser("typewriter", help="type prediction").add_subparsers(
        dest="command", required=True, metavar="ACTION")
    command(tw, "extract", cmd_typewriter_extract, "extract type slots", (common, corpus_in))
    command(tw, "train", cmd_typewriter_train, "train the type classifier", (common, corpus_in))
    p = command(tw, "infer", cmd_typewriter_infer, "predict, validate and write annotated code",
                (common, corpus_in))
    p.add_argument("--model", required=True)
    p.add_argument("--k", type=int)
    command(tw, "check", cmd_typewriter_check, "run the gradual type checker", (common, corpus_in))
    p = command(tw, "eval", cmd_typewriter_eval, "accuracy and validation report", (common, corpus_in))
    p.add_argument("--model", required=True)
    p.add_argument("--k", type=int)

    cp = groups.add_parser("complete", help="next-token completion").add_subparsers(
        dest="command", required=True, metavar="ACTION")
    command(cp, "build", cmd_complete_build, "build the windowed dataset", (common, corpus_in))
    p = command(cp, "train", cmd_complete_train, "train the completion model")
    p.add_argument("--data")
    p.add_argument("--dir")
    p.add_argument("--split")
    p.add_argument("--part", default="train", choices=("train", "valid", "test"))
    p = command(cp, "query", cmd_complete_query, "complete contexts read from standard input")
    p.add_argument("--model", required=True)
    p.add_argument("--beam", type=int, help="beam width; switches to sequence output")
    p.add_argument("--steps", type=int, default=1)
    p = command(cp, "eval", cmd_complete_eval, "perplexity and top-5 hit rate", (common, corpus_in))
    p.add_argument("--model", required=True)

    p = groups.add_parser("gradcheck", parents=[common], help="run the finite-difference gradient suite")
    p.set_defaults(fn=cmd_gradcheck)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = _config(args)
        if getattr(args, "steps", 1) is not None and getattr(args, "beam", None) is not None:
            if args.beam < 1 or args.steps < 1:
                raise ConfigError("--beam and --steps must be at least 1")
        return args.fn(args, cfg)
    except (NsaError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
