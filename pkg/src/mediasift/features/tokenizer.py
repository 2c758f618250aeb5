"""Deterministic word tokenizer shared by all feature extractors."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

# Alphabetic runs of length >= 2; digits, underscores, and punctuation split.
_TOKEN_RE = re.compile(r"[^\W\d_]{2,}", re.UNICODE)


@lru_cache(maxsize=1)
def bundled_stopwords() -> frozenset[str]:
    text = resources.files("mediasift.data").joinpath("stopwords.txt").read_text("utf-8")
    return frozenset(
        line.strip() for line in text.splitlines()
        if line.strip() and not line.startswith("#")
    )


@dataclass(frozen=True)
class Tokenizer:
    lowercase: bool = True
    drop_stopwords: bool = True
    stopwords: frozenset[str] = field(default_factory=bundled_stopwords)

    def tokenize(self, text: str) -> list[str]:
        tokens = _TOKEN_RE.findall(text or "")
        if self.lowercase:
            tokens = [t.lower() for t in tokens]
        if self.drop_stopwords:
            tokens = [t for t in tokens if t not in self.stopwords]
        return tokens
