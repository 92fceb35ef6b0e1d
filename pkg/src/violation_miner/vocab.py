"""Token/id vocabulary with corpus frequencies, and the keyword catalog.

Ids are dense 0..V-1, assigned by descending frequency with lexicographic
tie-break, which keeps frequency-rank-based sampling tables cheap to build.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import IO, Iterable

import numpy as np

from .errors import DataError
from .preprocess import TokenStream


@dataclass
class Vocabulary:
    token_to_id: dict[str, int]
    id_to_token: list[str]
    id_to_freq: np.ndarray  # int64, aligned with id_to_token
    total_token_count: int  # all corpus tokens, including those below min_count

    def __len__(self) -> int:
        return len(self.id_to_token)

    def __contains__(self, token: str) -> bool:
        return token in self.token_to_id

    def id_of(self, token: str) -> int:
        return self.token_to_id[token]

    def freq_of(self, token: str) -> int:
        return int(self.id_to_freq[self.token_to_id[token]])

    @classmethod
    def from_tokens(cls, tokens: Iterable[str], freqs: Iterable[int] | None = None) -> "Vocabulary":
        """Build directly from an id-ordered token list (e.g. a model file);
        frequencies default to zero when unknown."""
        id_to_token = list(tokens)
        if len(set(id_to_token)) != len(id_to_token):
            raise DataError("duplicate token in vocabulary listing")
        id_to_freq = (
            np.zeros(len(id_to_token), dtype=np.int64)
            if freqs is None
            else np.asarray(list(freqs), dtype=np.int64)
        )
        if len(id_to_freq) != len(id_to_token):
            raise DataError("vocabulary token and frequency counts differ")
        return cls(
            token_to_id={t: i for i, t in enumerate(id_to_token)},
            id_to_token=id_to_token,
            id_to_freq=id_to_freq,
            total_token_count=int(id_to_freq.sum()),
        )


def build_vocabulary(streams: Iterable[TokenStream], min_count: int = 1) -> Vocabulary:
    """Exact frequency counts over all streams; tokens seen fewer than
    min_count times are excluded (their mass still counts toward
    total_token_count)."""
    if min_count < 1:
        raise ValueError(f"min_count must be >= 1, got {min_count}")
    counts: Counter[str] = Counter()
    for stream in streams:
        counts.update(stream.tokens)
    total = sum(counts.values())
    kept = sorted(
        ((t, c) for t, c in counts.items() if c >= min_count),
        key=lambda tc: (-tc[1], tc[0]),
    )
    if not kept:
        raise DataError("empty corpus: nothing to embed")
    return Vocabulary(
        token_to_id={t: i for i, (t, _) in enumerate(kept)},
        id_to_token=[t for t, _ in kept],
        id_to_freq=np.array([c for _, c in kept], dtype=np.int64),
        total_token_count=total,
    )


def top_frequent(vocab: Vocabulary, n: int) -> list[tuple[str, int]]:
    """The n most frequent tokens; ids are already frequency-ordered."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return [(t, int(f)) for t, f in zip(vocab.id_to_token[:n], vocab.id_to_freq[:n])]


def dump_vocabulary(vocab: Vocabulary, sink: str | Path | IO[str]) -> None:
    """Write "token<TAB>frequency" lines in id order."""
    own = isinstance(sink, (str, Path))
    stream = open(sink, "w", encoding="utf-8") if own else sink
    try:
        for token, freq in zip(vocab.id_to_token, vocab.id_to_freq):
            stream.write(f"{token}\t{int(freq)}\n")
    finally:
        if own:
            stream.close()


def load_vocabulary_dump(source: str | Path) -> Vocabulary:
    tokens: list[str] = []
    freqs: list[int] = []
    for lineno, raw in enumerate(Path(source).read_text("utf-8").splitlines(), 1):
        if not raw.strip():
            continue
        parts = raw.split("\t")
        if len(parts) != 2:
            raise DataError(f"{source}:{lineno}: expected 'token<TAB>frequency', got {raw!r}")
        try:
            freq = int(parts[1])
        except ValueError:
            raise DataError(f"{source}:{lineno}: bad frequency {parts[1]!r}") from None
        tokens.append(parts[0])
        freqs.append(freq)
    if not tokens:
        raise DataError(f"{source}: empty vocabulary dump")
    return Vocabulary.from_tokens(tokens, freqs)


class KeywordCategory(Enum):
    CONTAMINANT = "Contaminant"
    LOCATION = "Location"
    OPERATION = "Operation"


@dataclass(frozen=True)
class KeywordRejection:
    category: KeywordCategory
    keyword: str
    reason: str


@dataclass
class KeywordCatalog:
    """The three keyword categories with their observed corpus frequencies,
    each ordered by descending frequency (ties lexicographic)."""

    categories: dict[KeywordCategory, list[tuple[str, int]]] = field(default_factory=dict)

    def keywords(self, category: KeywordCategory) -> list[str]:
        return [t for t, _ in self.categories.get(category, [])]


@dataclass
class CatalogLoad:
    catalog: KeywordCatalog
    rejections: list[KeywordRejection]


def default_catalog_lines() -> list[str]:
    text = resources.files("violation_miner").joinpath("data/keyword_catalog.tsv").read_text("utf-8")
    return text.splitlines()


def _parse_catalog_lines(lines: Iterable[str], origin: str) -> list[tuple[KeywordCategory, str]]:
    by_name = {c.value.lower(): c for c in KeywordCategory}
    entries: list[tuple[KeywordCategory, str]] = []
    seen: dict[str, KeywordCategory] = {}
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = [p.strip() for p in line.split("\t") if p.strip()]
        if len(parts) != 2:
            raise DataError(f"{origin}:{lineno}: expected 'category<TAB>keyword', got {raw!r}")
        category = by_name.get(parts[0].lower())
        if category is None:
            raise DataError(f"{origin}:{lineno}: unknown category {parts[0]!r}")
        keyword = parts[1]
        if keyword in seen:
            raise DataError(
                f"{origin}:{lineno}: keyword {keyword!r} already listed under "
                f"{seen[keyword].value}; categories must be disjoint"
            )
        seen[keyword] = category
        entries.append((category, keyword))
    return entries


def load_keyword_catalog(
    source: str | Path | Iterable[str] | None,
    vocab: Vocabulary,
    threshold: int = 30,
) -> CatalogLoad:
    """Load a catalog file and attach corpus frequencies.

    Keywords missing from the vocabulary, or whose frequency is not strictly
    above the threshold, are rejected with a reason instead of kept.
    None loads the bundled default catalog.
    """
    if threshold < 1:
        raise ValueError(f"threshold must be >= 1, got {threshold}")
    if source is None:
        lines, origin = default_catalog_lines(), "<default catalog>"
    elif isinstance(source, (str, Path)):
        lines, origin = Path(source).read_text("utf-8").splitlines(), str(source)
    else:
        lines, origin = list(source), "<catalog>"
    entries = _parse_catalog_lines(lines, origin)

    kept: dict[KeywordCategory, list[tuple[str, int]]] = {c: [] for c in KeywordCategory}
    rejections: list[KeywordRejection] = []
    for category, keyword in entries:
        if keyword not in vocab:
            rejections.append(KeywordRejection(category, keyword, "out of vocabulary"))
            continue
        freq = vocab.freq_of(keyword)
        if freq <= threshold:
            rejections.append(
                KeywordRejection(category, keyword, f"frequency {freq} not above threshold {threshold}")
            )
            continue
        kept[category].append((keyword, freq))
    for category in kept:
        kept[category].sort(key=lambda tf: (-tf[1], tf[0]))
    return CatalogLoad(KeywordCatalog(kept), rejections)
