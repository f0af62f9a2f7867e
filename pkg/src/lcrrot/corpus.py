"""Corpus parsing, left/target/right segmentation and dataset statistics.

Corpus file format: UTF-8 text, records of exactly 3 lines:

    sentence containing exactly one ``$T$`` placeholder
    target string
    label: -1 (negative), 0 (neutral) or 1 (positive)

The placeholder marks where the target phrase sits, so a sentence with k
aspect terms becomes k records.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from typing import IO

from .errors import DomainError, FormatError

LABELS = ("negative", "neutral", "positive")
LABEL_INDEX = {name: i for i, name in enumerate(LABELS)}

_LABEL_MAP = {"-1": "negative", "0": "neutral", "1": "positive"}
_PLACEHOLDER = "$T$"

# a token is a run of word characters or a single punctuation character
_TOKEN_RE = re.compile(r"\w+|[^\w\s]")


@dataclass(frozen=True)
class Example:
    """One (left context, target phrase, right context, label) unit."""
    left: tuple[str, ...]
    target: tuple[str, ...]
    right: tuple[str, ...]
    label: str

    def __post_init__(self):
        if len(self.target) < 1:
            raise FormatError("target phrase must contain at least one token")
        if self.label not in LABELS:
            raise FormatError(f"unknown label {self.label!r}")

    @property
    def label_index(self) -> int:
        return LABEL_INDEX[self.label]


@dataclass(frozen=True)
class Record:
    """A parsed corpus triple before segmentation."""
    sentence: str  # contains exactly one $T$
    target: str
    label: str


@dataclass
class CorpusStats:
    class_counts: Counter = field(default_factory=Counter)
    target_len_counts: Counter = field(default_factory=Counter)  # keys 1, 2, '>2'

    @property
    def size(self) -> int:
        return sum(self.class_counts.values())

    def target_len_percentages(self) -> dict:
        n = self.size
        return {k: round(100.0 * v / n, 1) for k, v in self.target_len_counts.items()}


def tokenize(text: str) -> list[str]:
    """Lowercase and split on whitespace, with punctuation as standalone tokens."""
    return _TOKEN_RE.findall(text.lower())


def parse_corpus(source: IO[str]) -> list[Record]:
    lines = [line.rstrip("\n") for line in source]
    if lines and lines[-1] == "":
        lines.pop()
    if len(lines) % 3 != 0:
        raise FormatError(
            f"corpus must be a multiple of 3 lines, got {len(lines)}")
    records = []
    for idx in range(len(lines) // 3):
        sentence, target, raw_label = lines[3 * idx: 3 * idx + 3]
        n_placeholders = sentence.count(_PLACEHOLDER)
        if n_placeholders == 0:
            raise FormatError(f"record {idx}: missing {_PLACEHOLDER} placeholder")
        if n_placeholders > 1:
            raise FormatError(f"record {idx}: multiple {_PLACEHOLDER} placeholders")
        label = _LABEL_MAP.get(raw_label.strip())
        if label is None:
            raise FormatError(
                f"record {idx}: label must be one of -1/0/1, got {raw_label.strip()!r}")
        records.append(Record(sentence=sentence, target=target, label=label))
    return records


def split_sentence(record: Record) -> Example:
    """Segment a record into tokenized left / target / right parts."""
    before, after = record.sentence.split(_PLACEHOLDER)
    target = tokenize(record.target)
    if not target:
        raise FormatError(f"target {record.target!r} is empty after tokenization")
    return Example(
        left=tuple(tokenize(before)),
        target=tuple(target),
        right=tuple(tokenize(after)),
        label=record.label,
    )


def load_examples(source: IO[str]) -> list[Example]:
    return [split_sentence(r) for r in parse_corpus(source)]


def corpus_stats(examples) -> CorpusStats:
    examples = list(examples)
    if not examples:
        raise DomainError("statistics of an empty corpus")
    stats = CorpusStats()
    for ex in examples:
        stats.class_counts[ex.label] += 1
        m = len(ex.target)
        stats.target_len_counts[m if m <= 2 else ">2"] += 1
    return stats


def format_stats(stats: CorpusStats) -> str:
    lines = ["class counts:"]
    for label in LABELS:
        lines.append(f"  {label}\t{stats.class_counts.get(label, 0)}")
    pct = stats.target_len_percentages()
    lines.append("target lengths (count/percentage):")
    for key, title in ((1, "single-word (len=1)"), (2, "multi-word (len=2)"),
                       (">2", "multi-word (len>2)")):
        c = stats.target_len_counts.get(key, 0)
        lines.append(f"  {title}\t{c}/{pct.get(key, 0.0)}%")
    return "\n".join(lines)
