"""Topic proportions via latent Dirichlet allocation with collapsed Gibbs sampling.

Fitting alternates full sweeps over every token; fold-in for new documents
re-runs the sampler with the topic-word counts frozen, so inference never
perturbs the fitted model. All randomness is drawn outside the sampling
kernel, which keeps the numba and pure-numpy backends bit-identical.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .._kernels import gibbs_sweeps
from ..corpus import Article, Corpus
from .tokenizer import Tokenizer


class TopicModelError(ValueError):
    pass


# sweeps per kernel call during fitting; bounds the uniforms buffer without
# changing the draw stream (the generator is consumed row-by-row either way)
_SWEEP_CHUNK = 25


@dataclass
class GibbsState:
    """Mutable sampler state over a tokenized corpus.

    Exposed so callers can step sweep-by-sweep and inspect the count
    tables between sweeps; ``fit_lda`` drives it to completion.
    """

    doc_ids: np.ndarray
    word_ids: np.ndarray
    z: np.ndarray
    doc_topic: np.ndarray
    topic_word: np.ndarray
    topic_totals: np.ndarray
    alpha: float
    beta: float
    rng: np.random.Generator
    sweeps_done: int = 0

    @property
    def k(self) -> int:
        return self.topic_word.shape[0]

    def sweep(self, n: int = 1, update_topic_counts: bool = True) -> None:
        if n <= 0:
            return
        uniforms = self.rng.random((n, self.z.shape[0]))
        gibbs_sweeps(
            self.doc_ids, self.word_ids, self.z,
            self.doc_topic, self.topic_word, self.topic_totals,
            self.alpha, self.beta, uniforms, update_topic_counts,
        )
        self.sweeps_done += n


def _init_state(doc_ids: np.ndarray, word_ids: np.ndarray, n_docs: int,
                k: int, vocab_size: int, alpha: float, beta: float,
                rng: np.random.Generator) -> GibbsState:
    n_tokens = word_ids.shape[0]
    z = rng.integers(0, k, size=n_tokens, dtype=np.int32)
    doc_topic = np.zeros((n_docs, k), dtype=np.int64)
    topic_word = np.zeros((k, vocab_size), dtype=np.int64)
    topic_totals = np.zeros(k, dtype=np.int64)
    np.add.at(doc_topic, (doc_ids, z), 1)
    np.add.at(topic_word, (z, word_ids), 1)
    np.add.at(topic_totals, z, 1)
    return GibbsState(doc_ids=doc_ids, word_ids=word_ids, z=z,
                      doc_topic=doc_topic, topic_word=topic_word,
                      topic_totals=topic_totals, alpha=alpha, beta=beta,
                      rng=rng)


@dataclass
class TopicModel:
    """Fitted topic-word counts plus the priors and seed used to fit them."""

    vocabulary: dict[str, int]
    topic_word: np.ndarray
    topic_totals: np.ndarray
    alpha: float
    beta: float
    seed: int
    fit_sweeps: int
    tokenizer: Tokenizer = field(default_factory=Tokenizer)

    @property
    def k(self) -> int:
        return self.topic_word.shape[0]

    @property
    def vocab_size(self) -> int:
        return self.topic_word.shape[1]

    def token_ids(self, tokens: Iterable[str]) -> np.ndarray:
        ids = [self.vocabulary[t] for t in tokens if t in self.vocabulary]
        return np.array(ids, dtype=np.int32)

    def top_words(self, topic: int, n: int = 10) -> list[str]:
        if not 0 <= topic < self.k:
            raise TopicModelError(f"topic {topic} out of range for k={self.k}")
        inverse = sorted(self.vocabulary, key=self.vocabulary.__getitem__)
        order = np.argsort(-self.topic_word[topic], kind="stable")[:n]
        return [inverse[i] for i in order]

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        inverse = sorted(self.vocabulary, key=self.vocabulary.__getitem__)
        with path.open("w", encoding="utf-8") as fh:
            fh.write("mediasift-topics 1\n")
            fh.write(f"k {self.k}\n")
            fh.write(f"vocab {self.vocab_size}\n")
            fh.write(f"alpha {float(self.alpha)!r}\n")
            fh.write(f"beta {float(self.beta)!r}\n")
            fh.write(f"seed {self.seed}\n")
            fh.write(f"sweeps {self.fit_sweeps}\n")
            for token in inverse:
                fh.write(f"{token}\n")
            for row in self.topic_word:
                fh.write(" ".join(str(int(c)) for c in row) + "\n")
        return path

    @classmethod
    def load(cls, path: str | Path, tokenizer: Optional[Tokenizer] = None) -> "TopicModel":
        lines = Path(path).read_text("utf-8").splitlines()
        if not lines or lines[0] != "mediasift-topics 1":
            raise TopicModelError(f"{path}: not a topic model checkpoint")
        header = dict(line.split(" ", 1) for line in lines[1:7])
        k = int(header["k"])
        vocab_size = int(header["vocab"])
        vocab_lines = lines[7:7 + vocab_size]
        vocabulary = {tok: i for i, tok in enumerate(vocab_lines)}
        rows = lines[7 + vocab_size:7 + vocab_size + k]
        topic_word = np.array([[int(c) for c in row.split(" ")] for row in rows],
                              dtype=np.int64)
        if topic_word.shape != (k, vocab_size):
            raise TopicModelError(f"{path}: count table shape mismatch")
        return cls(
            vocabulary=vocabulary,
            topic_word=topic_word,
            topic_totals=topic_word.sum(axis=1),
            alpha=float(header["alpha"]),
            beta=float(header["beta"]),
            seed=int(header["seed"]),
            fit_sweeps=int(header["sweeps"]),
            tokenizer=tokenizer or Tokenizer(),
        )


def _tokenize_corpus(texts: Sequence[str], tokenizer: Tokenizer) -> tuple[dict[str, int], np.ndarray, np.ndarray]:
    docs = [tokenizer.tokenize(text) for text in texts]
    vocab = {tok: i for i, tok in enumerate(sorted({t for doc in docs for t in doc}))}
    doc_ids, word_ids = [], []
    for d, doc in enumerate(docs):
        for tok in doc:
            doc_ids.append(d)
            word_ids.append(vocab[tok])
    return vocab, np.array(doc_ids, dtype=np.int32), np.array(word_ids, dtype=np.int32)


def fit_lda(corpus: Corpus | Sequence[str], k: int = 50, sweeps: int = 200,
            alpha: Optional[float] = None, beta: Optional[float] = None,
            seed: int = 0, tokenizer: Optional[Tokenizer] = None) -> TopicModel:
    """Fit a topic model by collapsed Gibbs sampling.

    Priors default to 1/k. The sampler state after the final sweep is the
    model; no averaging over sweeps is done.
    """
    if k < 2:
        raise TopicModelError(f"k must be at least 2, got {k}")
    if sweeps < 1:
        raise TopicModelError(f"sweeps must be positive, got {sweeps}")
    tokenizer = tokenizer or Tokenizer()
    texts = [a.text for a in corpus] if isinstance(corpus, Corpus) else list(corpus)
    vocab, doc_ids, word_ids = _tokenize_corpus(texts, tokenizer)
    if not vocab:
        raise TopicModelError("corpus produced an empty vocabulary")
    alpha = 1.0 / k if alpha is None else alpha
    beta = 1.0 / k if beta is None else beta
    if alpha <= 0.0 or beta <= 0.0:
        raise TopicModelError("priors must be positive")
    rng = np.random.default_rng(seed)
    state = _init_state(doc_ids, word_ids, len(texts), k, len(vocab), alpha, beta, rng)
    remaining = sweeps
    while remaining > 0:
        step = min(_SWEEP_CHUNK, remaining)
        state.sweep(step)
        remaining -= step
    return TopicModel(
        vocabulary=vocab,
        topic_word=state.topic_word,
        topic_totals=state.topic_totals,
        alpha=alpha,
        beta=beta,
        seed=seed,
        fit_sweeps=sweeps,
        tokenizer=tokenizer,
    )


def infer_topics(model: TopicModel, item: Article | str | Sequence[str],
                 sweeps: int = 50) -> np.ndarray:
    """Fold a single document into a fitted model; returns smoothed proportions.

    Topic-word counts stay frozen, so repeated calls are independent. The
    fold-in seed mixes the model seed with a digest of the document's known
    token ids, making the result a pure function of model and document.
    A document with no in-vocabulary tokens gets the uniform distribution.
    """
    if sweeps < 1:
        raise TopicModelError(f"sweeps must be positive, got {sweeps}")
    if isinstance(item, Article):
        tokens: Sequence[str] = model.tokenizer.tokenize(item.text)
    elif isinstance(item, str):
        tokens = model.tokenizer.tokenize(item)
    else:
        tokens = item
    word_ids = model.token_ids(tokens)
    n = word_ids.shape[0]
    if n == 0:
        return np.full(model.k, 1.0 / model.k, dtype=np.float64)
    digest = zlib.crc32(word_ids.tobytes())
    rng = np.random.default_rng([model.seed, digest])
    doc_ids = np.zeros(n, dtype=np.int32)
    z = rng.integers(0, model.k, size=n, dtype=np.int32)
    doc_topic = np.zeros((1, model.k), dtype=np.int64)
    np.add.at(doc_topic, (doc_ids, z), 1)
    # frozen mode never writes the topic-word tables, so the model's own
    # arrays are passed straight through
    state = GibbsState(doc_ids=doc_ids, word_ids=word_ids, z=z,
                       doc_topic=doc_topic, topic_word=model.topic_word,
                       topic_totals=model.topic_totals, alpha=model.alpha,
                       beta=model.beta, rng=rng)
    state.sweep(sweeps, update_topic_counts=False)
    counts = doc_topic[0].astype(np.float64)
    return (counts + model.alpha) / (n + model.k * model.alpha)
