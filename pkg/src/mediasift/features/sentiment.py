"""Lexicon-based sentiment scores for the three article text fields."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np

from ..corpus import Article
from .tokenizer import Tokenizer


class LexiconError(ValueError):
    pass


def _parse_lexicon(text: str, origin: str) -> dict[str, float]:
    polarity: dict[str, float] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise LexiconError(f"{origin}:{lineno}: expected token<TAB>polarity")
        token, value = parts
        try:
            score = float(value)
        except ValueError as exc:
            raise LexiconError(f"{origin}:{lineno}: bad polarity {value!r}") from exc
        if not -1.0 <= score <= 1.0:
            raise LexiconError(f"{origin}:{lineno}: polarity {score} outside [-1, 1]")
        polarity[token.lower()] = score
    return polarity


@lru_cache(maxsize=1)
def _bundled_polarity() -> dict[str, float]:
    text = resources.files("mediasift.data").joinpath("sentiment_lexicon.tsv").read_text("utf-8")
    return _parse_lexicon(text, "sentiment_lexicon.tsv")


@dataclass(frozen=True)
class SentimentLexicon:
    """Token polarities in [-1, 1]; unknown tokens score zero.

    Field scores are the mean polarity over all tokens in the field
    (stopwords included, since negators and intensifiers live there).
    """

    polarity: dict[str, float] = field(default_factory=_bundled_polarity)
    tokenizer: Tokenizer = field(default_factory=lambda: Tokenizer(drop_stopwords=False))

    @classmethod
    def bundled(cls) -> "SentimentLexicon":
        return cls()

    @classmethod
    def load(cls, path: str | Path) -> "SentimentLexicon":
        path = Path(path)
        return cls(polarity=_parse_lexicon(path.read_text("utf-8"), str(path)))

    def score_text(self, text: str) -> float:
        tokens = self.tokenizer.tokenize(text)
        if not tokens:
            return 0.0
        total = sum(self.polarity.get(tok, 0.0) for tok in tokens)
        score = total / len(tokens)
        # token polarities are bounded so the mean already is; clamp guards fp drift
        return min(1.0, max(-1.0, score))

    def score_article(self, article: Article) -> np.ndarray:
        return np.array(
            [
                self.score_text(article.title),
                self.score_text(article.description),
                self.score_text(article.content),
            ],
            dtype=np.float64,
        )
