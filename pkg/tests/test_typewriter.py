import json

import numpy as np
import pytest

from nsa import typewriter as T
from nsa.embeddings import EmbeddingMatrix, Vocabulary
from nsa.errors import EmptyDataset
from nsa.minilang import ast, parse_source, pretty_print
from nsa.neural.checkpoint import dumps
from nsa.pipeline import EmbedConfig, TypeWriterConfig, from_sources, synth_sources
from nsa.typewriter import ErrorCategory, SlotKind

SMALL = TypeWriterConfig(hidden=8, epochs=3, max_code_tokens=12, max_comment_words=8)


def _mods(src, path="m.mini"):
    return [(path, parse_source(src))]


def _errors(src):
    return [(e.line, e.category) for e in T.typecheck(_mods(src))]


# -- slots -------------------------------------------------------------------

def test_board_slots_skip_self(board_module):
    slots = T.extract_slots([("b", board_module)])
    assert [(s.function, s.kind, s.param_name) for s in slots] == [
        ("mark_point", SlotKind.PARAM, "x"), ("mark_point", SlotKind.PARAM, "y"),
        ("mark_point", SlotKind.PARAM, "player_name"), ("mark_point", SlotKind.RETURN, None),
        ("show_winner", SlotKind.PARAM, "player_name"), ("show_winner", SlotKind.RETURN, None),
    ]
    assert all(s.ground_truth is None for s in slots)
    assert slots[3].code_tokens == ("return", "has_three_in_a_row")
    assert "whether" in slots[3].comment_words
    assert slots[2].id_words == ("mark", "point", "player", "name")


def test_annotated_slots_carry_ground_truth():
    [a, ret] = T.extract_slots(_mods('def f(a: int) -> bool:\n  """Checks A."""\n  return a > 0\n'))
    assert (a.ground_truth, ret.ground_truth) == ("int", "bool")
    assert a.code_tokens == ("return", "a", ">", "LIT:INT")
    assert a.comment_words == ("checks", "a")
    assert a.key == ("m.mini", 1, "PARAM", "a") and ret.key == ("m.mini", 1, "RETURN", "")


def test_alias_spellings_are_canonical():
    [a, _] = T.extract_slots(_mods("def f(flag: Boolean):\n  pass\n"))
    assert a.ground_truth == "bool"
    assert T.canonical_type("String") == "str" and T.canonical_type("Point") == "Point"


def test_slot_count_is_params_plus_one_per_function(small_corpus):
    for f in small_corpus:
        expected = 0
        for cls, fn in ast.walk_functions(f.module):
            expected += len(fn.params) - (cls is not None) + 1
        assert len(T.extract_slots([(f.path, f.module)])) == expected


def test_slot_json_round_trip(board_module):
    for s in T.extract_slots([("b", board_module)]):
        assert T.TypeSlot.from_json(s.to_json()) == s


def test_type_vocabulary():
    slots = [T.TypeSlot(SlotKind.PARAM, "f", "p", (), (), (), t) for t in ["Point"] * 3 + ["str"] * 5 + ["Grid"]]
    vocab = T.build_type_vocab(slots, 8)
    assert set(T.BASE_TYPES) <= set(vocab.types)
    assert vocab.types[:2] == ("str", "Point")
    assert "Grid" not in vocab and len(vocab) == 8
    assert T.TypeVocabulary.from_json(vocab.to_json()) == vocab
    with pytest.raises(ValueError):
        T.build_type_vocab(slots, 6)


# -- checker -----------------------------------------------------------------

def test_unannotated_code_has_no_errors(board_source):
    assert _errors(board_source) == []


def test_checker_categories():
    src = 'def f(a: int) -> str:\n  return a + 1.5\nf("s")\nx = "a" - 1\n'
    assert _errors(src) == [(2, ErrorCategory.RETURN_MISMATCH), (3, ErrorCategory.ARG_MISMATCH),
                            (4, ErrorCategory.OP_MISMATCH)]


@pytest.mark.parametrize("src", [
    "def f(a: float) -> float:\n  return a\nf(1)\n",                    # int is accepted as float
    "def f(a: int) -> float:\n  return a / 2\n",                         # division gives float
    "def f(a: int) -> bool:\n  return a > 0 and not a == 3\n",
    "def f(a) -> int:\n  return a\n",                                    # unannotated is Any
    "def f(a: str):\n  pass\nf(...)\n",                                  # ellipsis is Any
    "class P:\n  def m(self, n: int) -> int:\n    return n\nP().m(1)\n",
    "def f() -> list:\n  return [1, 2]\n",
])
def test_checker_accepts(src):
    assert _errors(src) == []


@pytest.mark.parametrize("src,cat", [
    ("def f(a: int) -> int:\n  return a / 2\n", ErrorCategory.RETURN_MISMATCH),
    ("def f(a: float) -> int:\n  return a\n", ErrorCategory.RETURN_MISMATCH),
    ("def f(a: str) -> str:\n  return a + a\n", ErrorCategory.OP_MISMATCH),
    ("class P:\n  def m(self, n: int) -> int:\n    return n\nP().m('x')\n", ErrorCategory.ARG_MISMATCH),
    ("class P:\n  pass\ndef f(p: P):\n  pass\nf(3)\n", ErrorCategory.ARG_MISMATCH),
    ("def f(a: int) -> None:\n  return a\n", ErrorCategory.RETURN_MISMATCH),
])
def test_checker_rejects(src, cat):
    assert [c for _, c in _errors(src)] == [cat]


def test_report_json():
    [e] = T.typecheck(_mods("x = 'a' - 1\n"))
    assert json.loads(e.to_json()) == {"file": "m.mini", "line": 1, "category": "OP_MISMATCH",
                                       "message": e.message}


# -- validation search -------------------------------------------------------

SEARCH_SRC = """\
def area(width, height):
  return width * height

def label(name):
  return name

x = area(3, 4)
s = label("a")
"""


def _preds(mapping, src=SEARCH_SRC):
    slots = T.extract_slots(_mods(src))
    return {s.key: mapping[s.name] for s in slots}


def test_validation_never_adds_errors():
    bad = {"width": [("str", 0.9), ("int", 0.1)], "height": [("str", 0.8), ("int", 0.2)],
           "area": [("int", 0.7)], "name": [("int", 0.99), ("str", 0.01)], "label": [("str", 0.6)]}
    annotated, report = T.validate_and_assign(_mods(SEARCH_SRC), _preds(bad), 2)
    assert report.errors_before == 0 and report.errors_after == 0
    assert len(T.typecheck(annotated)) == 0
    got = {o.name: o.assigned for o in report.outcomes}
    assert got == {"width": "int", "height": "int", "area": "int", "name": "str", "label": "str"}
    assert {o.name: o.rank for o in report.outcomes}["name"] == 2
    assert report.rate == 1.0


def test_adversarial_predictions_stay_unassigned():
    wrong = {"width": [("str", 0.9)], "height": [("str", 0.9)], "area": [("str", 0.9)],
             "name": [("int", 0.9)], "label": [("int", 0.9)]}
    annotated, report = T.validate_and_assign(_mods(SEARCH_SRC), _preds(wrong), 1)
    got = {o.name: o.assigned for o in report.outcomes}
    assert got["width"] is None and got["name"] is None
    assert report.errors_after <= report.errors_before
    assert len(T.typecheck(annotated)) == report.errors_after


def test_k_zero_changes_nothing():
    mods = _mods(SEARCH_SRC)
    preds = _preds({n: [("int", 1.0)] for n in ("width", "height", "area", "name", "label")})
    annotated, report = T.validate_and_assign(mods, preds, 0)
    assert annotated == mods and report.assigned == 0


def test_search_stops_at_a_fixpoint_and_is_repeatable():
    preds = _preds({"width": [("int", 0.5)], "height": [("int", 0.4)], "area": [("int", 0.9)],
                    "name": [("str", 0.9)], "label": [("str", 0.9)]})
    _, report = T.validate_and_assign(_mods(SEARCH_SRC), preds, 1)
    assert report.rate == 1.0 and report.passes >= 1
    _, report2 = T.validate_and_assign(_mods(SEARCH_SRC), preds, 1)
    assert report2 == report


def test_existing_annotations_are_kept():
    src = "def f(a: int, b) -> int:\n  return a\n"
    preds = {s.key: [("str", 1.0)] for s in T.extract_slots(_mods(src))}
    annotated, report = T.validate_and_assign(_mods(src), preds, 1)
    assert [o.name for o in report.outcomes] == ["b"]
    assert "a: int" in pretty_print(annotated[0][1])


def test_oracle_annotates_everything_with_zero_delta():
    files = from_sources(synth_sources(5, 60, annotate_fraction=1.0))
    mods = [(f.path, f.module) for f in files]
    truth = {s.key: [(s.ground_truth, 1.0)] for s in T.extract_slots(mods)}
    stripped = [(p, T.strip_annotations(m)) for p, m in mods]
    annotated, report = T.validate_and_assign(stripped, truth, 3)
    assert report.rate == 1.0
    assert report.errors_after == report.errors_before == len(T.typecheck(mods))


# -- model -------------------------------------------------------------------

@pytest.fixture(scope="module")
def small_model(small_corpus):
    cv, ce, mv, me = T.train_embeddings(small_corpus, EmbedConfig(dim=8, epochs=1), comment_dim=8, seed=0)
    slots = T.extract_slots([(f.path, f.module) for f in small_corpus])
    types = T.build_type_vocab(slots, 10)
    return slots, types, (cv, ce, mv, me)


def test_predictions_are_distributions(small_model):
    slots, types, embs = small_model
    ckpt = T.train(slots, types, *embs, SMALL, seed=0)
    probs = T.predict_distributions(ckpt, slots[:20])
    assert probs.shape == (20, len(types))
    assert np.allclose(probs.sum(axis=1), 1.0)
    full = T.predict(ckpt, slots[0], len(types))
    assert T.predict(ckpt, slots[0], 3) == full[:3]
    assert [p for _, p in full] == sorted((p for _, p in full), reverse=True)
    assert T.predict(ckpt, slots[0], 0) == []
    with pytest.raises(ValueError):
        T.predict(ckpt, slots[0], len(types) + 1)


def test_training_is_deterministic_and_round_trips(small_model):
    slots, types, embs = small_model
    a = T.train(slots, types, *embs, SMALL, seed=1)
    assert dumps(a) == dumps(T.train(slots, types, *embs, SMALL, seed=1))
    assert dumps(T.TypeWriterModel.from_checkpoint(a).to_checkpoint()) == dumps(a)


def test_untrained_model_is_well_formed(small_model):
    slots, types, embs = small_model
    model = T.init_model(types, *embs, SMALL, seed=0)
    probs = T.predict_distributions(model, slots[:5])
    assert np.all(probs > 0) and np.allclose(probs.sum(axis=1), 1.0)


def test_training_needs_labelled_slots(small_model):
    slots, types, embs = small_model
    with pytest.raises(EmptyDataset):
        T.train([s for s in slots if s.ground_truth is None], types, *embs, SMALL)


def test_overfits_a_single_slot():
    vocab = Vocabulary(["<pad>", "<unk>", "count", "total"])
    emb = EmbeddingMatrix(np.random.default_rng(0).normal(0, 1, (4, 3)))
    types = T.TypeVocabulary(T.BASE_TYPES)
    slot = T.TypeSlot(SlotKind.PARAM, "f", "count", ("count",), ("total",), ("count",), "int")
    ckpt = T.train([slot], types, vocab, emb, vocab, emb,
                   TypeWriterConfig(hidden=4, epochs=100, lr=0.5), seed=0)
    assert T.predict(ckpt, slot, 1)[0][0] == "int"
    assert T.predict(ckpt, slot, 1)[0][1] > 0.9
