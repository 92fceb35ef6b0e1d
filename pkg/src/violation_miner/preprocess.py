"""Inspection-comment normalization: tokenize, drop stopwords, lemmatize, stem.

The stages compose into `preprocess`; each is usable on its own. All
transformations are pure and total: they never raise on text input and never
turn a non-empty token into an empty one.
"""

from __future__ import annotations

import string
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterator

from .errors import ConfigError
from .porter import _ends_cvc, _ends_double_consonant, _has_vowel
from .porter import stem  # noqa: F401  (re-exported as the stemming operation)

ASCII_PUNCTUATION = string.punctuation

# doubled finals that stay doubled when -ed/-ing is stripped (spilling -> spill)
_KEEP_DOUBLE = ("ll", "ss", "zz", "ff")


def _read_data_text(name: str) -> str:
    return resources.files("violation_miner").joinpath(f"data/{name}").read_text("utf-8")


def load_stopwords(source: str | Path) -> frozenset[str]:
    """Read a stopword file: one token per line, blank lines ignored."""
    text = Path(source).read_text("utf-8")
    return frozenset(line.strip() for line in text.splitlines() if line.strip())


def load_lemma_lexicon(source: str | Path) -> dict[str, str]:
    """Read a lemma exception lexicon: lines of "surface<TAB>lemma"."""
    lexicon: dict[str, str] = {}
    for lineno, raw in enumerate(Path(source).read_text("utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2 or not parts[0] or not parts[1]:
            raise ConfigError(f"{source}:{lineno}: expected 'surface<TAB>lemma', got {raw!r}")
        lexicon[parts[0]] = parts[1]
    return lexicon


def default_stopwords() -> frozenset[str]:
    text = _read_data_text("stopwords.txt")
    return frozenset(line.strip() for line in text.splitlines() if line.strip())


def default_lemma_lexicon() -> dict[str, str]:
    lexicon: dict[str, str] = {}
    for raw in _read_data_text("lemma_lexicon.tsv").splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        surface, lemma = line.split("\t")
        lexicon[surface] = lemma
    return lexicon


@dataclass(frozen=True)
class PreprocessConfig:
    """Settings for the normalization chain.

    Stage toggles skip individual steps; `lemmatize_before_stem` flips the
    order of the last two stages for pipelines that prefer stem-first.
    """

    stopwords: frozenset[str] = field(default_factory=default_stopwords)
    lemma_lexicon: dict[str, str] = field(default_factory=default_lemma_lexicon)
    strip_chars: str = ASCII_PUNCTUATION
    remove_stopwords: bool = True
    lemmatize: bool = True
    stem: bool = True
    lemmatize_before_stem: bool = True
    drop_numeric: bool = False

    def __post_init__(self) -> None:
        stripset = set(self.strip_chars)
        for word in self.stopwords:
            if word != word.lower() or any(ch in stripset for ch in word) or any(ch.isspace() for ch in word):
                raise ConfigError(f"stopword entry {word!r} is not lowercase and punctuation-free")


@dataclass
class TokenStream:
    """Ordered lowercase tokens plus the id of the record they came from."""

    tokens: list[str]
    source_id: str | None = None

    def __iter__(self) -> Iterator[str]:
        return iter(self.tokens)

    def __len__(self) -> int:
        return len(self.tokens)


def tokenize(text: str, config: PreprocessConfig | None = None, source_id: str | None = None) -> TokenStream:
    """Strip punctuation, lowercase, and split on whitespace runs.

    Punctuation characters are deleted in place ("E&S" -> "es"), not turned
    into split points; digits pass through unless `drop_numeric` is set.
    """
    strip_chars = config.strip_chars if config is not None else ASCII_PUNCTUATION
    drop_numeric = config.drop_numeric if config is not None else False
    table = str.maketrans("", "", strip_chars)
    tokens = text.translate(table).lower().split()
    if drop_numeric:
        tokens = [t for t in tokens if not t.isdigit()]
    return TokenStream(tokens, source_id)


def remove_stopwords(stream: TokenStream, config: PreprocessConfig) -> TokenStream:
    kept = [t for t in stream.tokens if t not in config.stopwords]
    return TokenStream(kept, stream.source_id)


def _adjust_stripped(base: str, original: str) -> str:
    # shared fixups after removing -ed/-ing
    if not _has_vowel(base):
        return original
    if _ends_double_consonant(base) and not base.endswith(_KEEP_DOUBLE):
        return base[:-1]
    if _ends_cvc(base):
        return base + "e"
    return base


def _strip_plural(token: str) -> str:
    if token.endswith("sses"):
        return token[:-2]
    if token.endswith("ies"):
        if len(token) > 4:
            return token[:-3] + "y"
        if len(token) == 4:
            return token[:-1]
        return token
    if token.endswith(("xes", "zes", "ches", "shes")):
        return token[:-2]
    if token.endswith("oes") and len(token) >= 5:
        return token[:-2]
    if token.endswith("s") and not token.endswith(("ss", "us", "is")) and len(token) > 3:
        return token[:-1]
    return token


def _strip_inflection(token: str) -> str:
    if token.endswith("ied"):
        if len(token) > 4:
            return token[:-3] + "y"
        if len(token) == 4:
            return token[:-1]
        return token
    if token.endswith("eed"):
        return token[:-1] if len(token) >= 5 else token
    if token.endswith("ed") and len(token) >= 5:
        return _adjust_stripped(token[:-2], token)
    if token.endswith("ing") and len(token) >= 6:
        return _adjust_stripped(token[:-3], token)
    return token


def lemmatize(token: str, config: PreprocessConfig) -> str:
    """Reduce a token to a base form: exception lexicon first, then plural
    stripping, then -ed/-ing stripping. Unknown shapes pass through."""
    mapped = config.lemma_lexicon.get(token)
    if mapped is not None:
        return mapped
    reduced = _strip_plural(token)
    if reduced != token:
        return reduced
    return _strip_inflection(token)


def preprocess(text: str, config: PreprocessConfig | None = None, source_id: str | None = None) -> TokenStream:
    """Full normalization chain with stages toggled per config."""
    if config is None:
        config = PreprocessConfig()
    stream = tokenize(text, config, source_id)
    if config.remove_stopwords:
        stream = remove_stopwords(stream, config)
    stages = []
    if config.lemmatize:
        stages.append(lambda t: lemmatize(t, config))
    if config.stem:
        stages.append(stem)
    if not config.lemmatize_before_stem:
        stages.reverse()
    tokens = stream.tokens
    for stage in stages:
        tokens = [stage(t) for t in tokens]
    return TokenStream(tokens, stream.source_id)
