"""Keyword assembly for relevant articles.

Two sources are concatenated: exact matches against a curated keyword
dictionary, and salient terms picked out by a capitalized-run heuristic
(runs of capitalized tokens that cannot be explained by sentence-initial
capitalization). The combined list keeps first-seen order and original
casing while deduplicating case-insensitively.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from ..corpus import Article
from ..evaluation import match_keywords
from ..features.tokenizer import Tokenizer

_SENTENCES = re.compile(r"[.!?]+")
_TOKEN = re.compile(r"[A-Za-z][A-Za-z0-9'\-]*")
_MIN_SINGLE_OCCURRENCES = 3


@dataclass(frozen=True)
class KeywordSet:
    """Keywords attached to one article, by source."""

    article_id: str
    dictionary_hits: tuple[str, ...]
    salient_terms: tuple[str, ...]
    combined: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "dictionary_hits", tuple(self.dictionary_hits))
        object.__setattr__(self, "salient_terms", tuple(self.salient_terms))
        object.__setattr__(self, "combined", tuple(self.combined))

    def normalized(self) -> frozenset[str]:
        """Lowercased combined keywords, the comparison form."""
        return frozenset(keyword.lower() for keyword in self.combined)


def _salient_terms(article: Article) -> list[str]:
    """Capitalized runs that sentence position cannot explain.

    A maximal run of >= 2 capitalized tokens counts unless it opens a
    sentence; a single capitalized token counts once it has appeared
    mid-sentence at least three times.
    """
    runs: list[str] = []
    single_counts: dict[str, int] = {}
    single_display: dict[str, str] = {}
    single_order: list[str] = []
    for field in (article.title, article.description, article.content):
        for sentence in _SENTENCES.split(field):
            tokens = _TOKEN.findall(sentence)
            i = 0
            while i < len(tokens):
                if not tokens[i][0].isupper():
                    i += 1
                    continue
                j = i
                while j < len(tokens) and tokens[j][0].isupper():
                    j += 1
                if j - i >= 2:
                    if i > 0:
                        runs.append(" ".join(tokens[i:j]))
                elif i > 0:
                    key = tokens[i].lower()
                    single_counts[key] = single_counts.get(key, 0) + 1
                    if key not in single_display:
                        single_display[key] = tokens[i]
                        single_order.append(key)
                i = j
    singles = [
        single_display[key]
        for key in single_order
        if single_counts[key] >= _MIN_SINGLE_OCCURRENCES
    ]
    return runs + singles


def load_keyword_list(path: str | Path) -> list[str]:
    """Read a keyword dictionary: one phrase per line, UTF-8.

    Blank lines and ``#`` comment lines are skipped; phrase order is
    preserved because it decides hit order downstream.
    """
    entries: list[str] = []
    for line in Path(path).read_text("utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            entries.append(line)
    return entries


def extract_keywords(
    article: Article,
    dictionary: Iterable[str],
    tokenizer: Tokenizer | None = None,
) -> KeywordSet:
    """Dictionary hits plus salient terms, combined without duplicates."""
    hits = match_keywords(article, dictionary, tokenizer)
    salient: list[str] = []
    seen: set[str] = set()
    for term in _salient_terms(article):
        key = term.lower()
        if key not in seen:
            seen.add(key)
            salient.append(term)
    combined = list(hits)
    seen = {hit.lower() for hit in hits}
    for term in salient:
        key = term.lower()
        if key not in seen:
            seen.add(key)
            combined.append(term)
    return KeywordSet(
        article_id=article.id,
        dictionary_hits=tuple(hits),
        salient_terms=tuple(salient),
        combined=tuple(combined),
    )
