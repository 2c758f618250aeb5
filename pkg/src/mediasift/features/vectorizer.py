"""Text block of the fused feature vector: TF-IDF or feature hashing.

Both modes are pure functions of the fitted state and produce
L2-normalized bag-of-words vectors, so token order never matters.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from ..corpus import Corpus
from .tokenizer import Tokenizer


class VectorizerError(ValueError):
    pass


@dataclass
class TextVectorizer:
    mode: str = "hashed"
    dim: int = 256
    tokenizer: Tokenizer = field(default_factory=Tokenizer)
    vocabulary: dict[str, int] = field(default_factory=dict)
    idf: Optional[np.ndarray] = None
    fitted: bool = False

    def fit(self, documents: Iterable[str]) -> "TextVectorizer":
        if self.mode == "hashed":
            # hashing needs no corpus statistics; fit only fixes the dimension
            self.fitted = True
            return self
        if self.mode != "tfidf":
            raise VectorizerError(f"unknown vectorizer mode {self.mode!r}")
        df: dict[str, int] = {}
        n_docs = 0
        for doc in documents:
            n_docs += 1
            for tok in set(self.tokenizer.tokenize(doc)):
                df[tok] = df.get(tok, 0) + 1
        if n_docs == 0:
            raise VectorizerError("tfidf mode requires a nonempty corpus")
        # vocabulary: tokens seen in at least two documents, alphabetical
        vocab = sorted(tok for tok, count in df.items() if count >= 2)
        self.vocabulary = {tok: i for i, tok in enumerate(vocab)}
        self.idf = np.array(
            [math.log((1 + n_docs) / (1 + df[tok])) + 1.0 for tok in vocab],
            dtype=np.float64,
        )
        self.dim = len(vocab)
        self.fitted = True
        return self

    def transform_tokens(self, tokens: list[str]) -> np.ndarray:
        if not self.fitted:
            raise VectorizerError("vectorizer not fitted")
        vec = np.zeros(self.dim, dtype=np.float64)
        if self.mode == "tfidf":
            for tok in tokens:
                idx = self.vocabulary.get(tok)
                if idx is not None:
                    vec[idx] += self.idf[idx]
        else:
            for tok in tokens:
                h = zlib.crc32(tok.encode("utf-8"))
                sign = 1.0 if (h >> 16) & 1 == 0 else -1.0
                vec[h % self.dim] += sign
        norm = np.linalg.norm(vec)
        if norm > 0.0:
            vec /= norm
        return vec

    def transform(self, text: str) -> np.ndarray:
        return self.transform_tokens(self.tokenizer.tokenize(text))

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        with path.open("w", encoding="utf-8") as fh:
            fh.write("mediasift-vectorizer 1\n")
            fh.write(f"mode {self.mode}\n")
            fh.write(f"dim {self.dim}\n")
            if self.mode == "tfidf":
                for tok, i in sorted(self.vocabulary.items(), key=lambda kv: kv[1]):
                    fh.write(f"{tok}\t{float(self.idf[i])!r}\n")
        return path

    @classmethod
    def load(cls, path: str | Path, tokenizer: Optional[Tokenizer] = None) -> "TextVectorizer":
        lines = Path(path).read_text("utf-8").splitlines()
        if not lines or lines[0] != "mediasift-vectorizer 1":
            raise VectorizerError(f"{path}: not a vectorizer checkpoint")
        mode = lines[1].split(" ", 1)[1]
        dim = int(lines[2].split(" ", 1)[1])
        vec = cls(mode=mode, dim=dim, tokenizer=tokenizer or Tokenizer())
        if mode == "tfidf":
            vocab, idf = {}, []
            for row in lines[3:]:
                tok, value = row.split("\t")
                vocab[tok] = len(idf)
                idf.append(float(value))
            vec.vocabulary = vocab
            vec.idf = np.array(idf, dtype=np.float64)
        vec.fitted = True
        return vec


def fit_vectorizer(corpus: Corpus, mode: str = "hashed", dim: int = 256,
                   tokenizer: Optional[Tokenizer] = None) -> TextVectorizer:
    vec = TextVectorizer(mode=mode, dim=dim, tokenizer=tokenizer or Tokenizer())
    return vec.fit(article.text for article in corpus)
