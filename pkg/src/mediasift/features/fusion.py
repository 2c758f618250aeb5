"""Fused article representation: text vector, sentiment scores, topic mix."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from ..corpus import Article, Corpus
from .sentiment import SentimentLexicon
from .tokenizer import Tokenizer
from .topics import TopicModel, fit_lda, infer_topics
from .vectorizer import TextVectorizer, fit_vectorizer


class FeaturizerError(ValueError):
    pass


@dataclass(frozen=True)
class FeatureVector:
    """One article's features, kept in named blocks until stacking time."""

    article_id: str
    text: np.ndarray
    sentiment: np.ndarray
    topics: np.ndarray

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate([self.text, self.sentiment, self.topics])

    @property
    def dim(self) -> int:
        return self.text.shape[0] + self.sentiment.shape[0] + self.topics.shape[0]


@dataclass
class Featurizer:
    """Fitted feature extractors, applied as a unit."""

    vectorizer: TextVectorizer
    lexicon: SentimentLexicon
    topic_model: TopicModel
    fold_in_sweeps: int = 50

    @property
    def dim(self) -> int:
        return self.vectorizer.dim + 3 + self.topic_model.k

    def featurize(self, article: Article) -> FeatureVector:
        return FeatureVector(
            article_id=article.id,
            text=self.vectorizer.transform(article.text),
            sentiment=self.lexicon.score_article(article),
            topics=infer_topics(self.topic_model, article, sweeps=self.fold_in_sweeps),
        )

    def featurize_corpus(self, corpus: Corpus) -> np.ndarray:
        if len(corpus) == 0:
            raise FeaturizerError("cannot featurize an empty corpus")
        return np.stack([self.featurize(a).vector for a in corpus])

    def save_dir(self, directory: str | Path) -> Path:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        self.vectorizer.save(directory / "vectorizer.txt")
        self.topic_model.save(directory / "topics.txt")
        with (directory / "lexicon.tsv").open("w", encoding="utf-8") as fh:
            for token in sorted(self.lexicon.polarity):
                fh.write(f"{token}\t{self.lexicon.polarity[token]!r}\n")
        (directory / "fold_in_sweeps.txt").write_text(f"{self.fold_in_sweeps}\n", "utf-8")
        return directory

    @classmethod
    def load_dir(cls, directory: str | Path, tokenizer: Optional[Tokenizer] = None) -> "Featurizer":
        directory = Path(directory)
        for name in ("vectorizer.txt", "topics.txt", "lexicon.tsv", "fold_in_sweeps.txt"):
            if not (directory / name).exists():
                raise FeaturizerError(f"{directory}: missing {name}")
        return cls(
            vectorizer=TextVectorizer.load(directory / "vectorizer.txt", tokenizer=tokenizer),
            lexicon=SentimentLexicon.load(directory / "lexicon.tsv"),
            topic_model=TopicModel.load(directory / "topics.txt", tokenizer=tokenizer),
            fold_in_sweeps=int((directory / "fold_in_sweeps.txt").read_text("utf-8").strip()),
        )


def fit_featurizer(corpus: Corpus, text_mode: str = "hashed", text_dim: int = 256,
                   k: int = 50, fit_sweeps: int = 200, fold_in_sweeps: int = 50,
                   seed: int = 0, lexicon: Optional[SentimentLexicon] = None,
                   tokenizer: Optional[Tokenizer] = None) -> Featurizer:
    if len(corpus) == 0:
        raise FeaturizerError("cannot fit a featurizer on an empty corpus")
    tokenizer = tokenizer or Tokenizer()
    return Featurizer(
        vectorizer=fit_vectorizer(corpus, mode=text_mode, dim=text_dim, tokenizer=tokenizer),
        lexicon=lexicon or SentimentLexicon.bundled(),
        topic_model=fit_lda(corpus, k=k, sweeps=fit_sweeps, seed=seed, tokenizer=tokenizer),
        fold_in_sweeps=fold_in_sweeps,
    )
