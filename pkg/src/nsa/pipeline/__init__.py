"""Corpus management, synthetic corpora, splitting and configuration."""

from .config import (CompletionConfig, Config, DeepBugsConfig, EmbedConfig, SplitConfig, TypeWriterConfig,
                     load_config, merge)
from .corpus import (CorpusManifest, ParseStatus, SourceFile, SplitSpec, assign_split, from_sources, load_dir,
                     load_files, scan, split)
from .synth import synth_sources, write_corpus

__all__ = [
    "CompletionConfig", "Config", "DeepBugsConfig", "EmbedConfig", "SplitConfig", "TypeWriterConfig",
    "load_config", "merge", "CorpusManifest", "ParseStatus", "SourceFile", "SplitSpec", "assign_split",
    "from_sources", "load_dir", "load_files", "scan", "split", "synth_sources", "write_corpus",
]
