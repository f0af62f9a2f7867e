"""Aspect-based sentiment classification with left-center-right separated
Bi-LSTMs and rotatory attention, on a minimal reverse-mode autodiff engine."""

from .corpus import Example, corpus_stats, load_examples, parse_corpus, split_sentence, tokenize
from .embeddings import EmbeddingTable, load_pretrained
from .model import (AttentionRecord, Dimensions, ModelParams, Variant,
                    VariantConfig, forward, init_params)
from .training import Hyperparams, load_checkpoint, save_checkpoint, train

__all__ = [
    "AttentionRecord", "Dimensions", "EmbeddingTable", "Example", "Hyperparams",
    "ModelParams", "Variant", "VariantConfig", "corpus_stats", "forward",
    "init_params", "load_checkpoint", "load_examples", "load_pretrained",
    "parse_corpus", "save_checkpoint", "split_sentence", "tokenize", "train",
]
