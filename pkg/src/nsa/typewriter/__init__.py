"""Type prediction for parameters and returns, validated by a gradual type checker."""

from .checker import ErrorCategory, TypeErrorReport, check_module, compatible, typecheck
from .model import TypeWriterModel, init_model, predict, predict_distributions, predict_many, train, train_embeddings
from .search import AssignmentReport, SlotOutcome, annotate, strip_annotations, validate_and_assign
from .slots import (BASE_TYPES, SlotKind, TypeSlot, TypeVocabulary, build_type_vocab, canonical_type,
                    comment_words, extract_slots)

__all__ = [
    "ErrorCategory", "TypeErrorReport", "check_module", "compatible", "typecheck", "TypeWriterModel",
    "init_model", "predict", "predict_distributions", "predict_many", "train", "train_embeddings",
    "AssignmentReport", "SlotOutcome", "annotate", "strip_annotations", "validate_and_assign", "BASE_TYPES",
    "SlotKind", "TypeSlot", "TypeVocabulary", "build_type_vocab", "canonical_type", "comment_words",
    "extract_slots",
]
