"""Confidence-based acquisition of unlabeled articles for annotation.

``select`` ranks a pool of predictions by how unsure the classifier is
(softmax closest to 0.5) and returns the ids worth labeling next;
``acquisition_experiment`` measures what that buys over random sampling
by replaying the label-then-retrain loop across seeds.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .classifier import Prediction, TrainingConfig, train
from .corpus import Corpus
from .evaluation import ComparisonReport, MetricsReport, compare_arms, compute_metrics
from .features import Featurizer, fit_featurizer


class SelectionError(ValueError):
    pass


STRATEGIES = ("least_confident", "random")

# Experiment-harness constants. The test split is fixed once per corpus so
# every seed's models answer the same exam; labeling noise, pool order, and
# training randomness all re-draw per seed.
_TEST_FRACTION = 0.25
_TEST_SPLIT_TAG = 101
_NOISE_TAG = 777
_RANDOM_ARM_TAG = 42
_INITIAL_SLICE = 400
_HARNESS_LEARNING_RATE = 0.3
_TEXT_DIM = 256
_TOPIC_COUNT = 8
_FIT_SWEEPS = 80
_FOLD_IN_SWEEPS = 25


@dataclass(frozen=True)
class SelectionRequest:
    """A pool of predictions over unlabeled articles and an annotation budget."""

    pool: tuple[Prediction, ...]
    budget: int
    strategy: str
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "pool", tuple(self.pool))
        if self.strategy not in STRATEGIES:
            raise SelectionError(
                f"unknown strategy {self.strategy!r}; expected one of {STRATEGIES}"
            )
        if self.budget < 0:
            raise SelectionError(f"budget must be nonnegative, got {self.budget}")
        if self.budget > len(self.pool):
            raise SelectionError(
                f"budget {self.budget} exceeds pool size {len(self.pool)}"
            )


def select(request: SelectionRequest) -> list[str]:
    """Article ids to annotate next, ``budget`` of them.

    ``least_confident`` returns ids in ascending order of |p - 0.5|, ties
    broken by ascending article id. ``random`` draws a seeded uniform
    sample without replacement; the pool is canonicalized by id first, so
    both strategies are pure functions of (pool, budget, strategy, seed)
    regardless of pool ordering.
    """
    if request.strategy == "least_confident":
        ranked = sorted(request.pool, key=lambda p: (p.confidence, p.article_id))
        return [p.article_id for p in ranked[: request.budget]]
    ids = sorted(p.article_id for p in request.pool)
    rng = np.random.default_rng(request.seed)
    chosen = rng.choice(len(ids), size=request.budget, replace=False)
    return [ids[i] for i in chosen]


def acquisition_experiment(
    corpus: Corpus,
    budget: int,
    seeds: Sequence[int],
    *,
    noise_rate: float = 0.05,
    featurizer: Optional[Featurizer] = None,
) -> ComparisonReport:
    """Compare least-confident against random acquisition across seeds.

    Per seed: annotation noise is drawn over the gold labels, a preliminary
    cross-entropy model is trained on an initial noisily-labeled slice, each
    strategy then spends ``budget`` on pool articles whose gold labels are
    revealed, the model is retrained on the union, and both arms are scored
    on a fixed held-out test split against gold labels.
    """
    seeds = [int(s) for s in seeds]
    if len(seeds) < 2:
        raise SelectionError(
            f"need at least 2 seeds for a variance estimate, got {len(seeds)}"
        )
    if featurizer is None:
        featurizer = fit_featurizer(
            corpus,
            text_mode="hashed",
            text_dim=_TEXT_DIM,
            k=_TOPIC_COUNT,
            fit_sweeps=_FIT_SWEEPS,
            fold_in_sweeps=_FOLD_IN_SWEEPS,
            seed=0,
        )
    features = featurizer.featurize_corpus(corpus)
    ids = [article.id for article in corpus]
    gold_map = corpus.label_map()
    gold = np.array([gold_map[article_id] for article_id in ids])
    n = len(ids)

    split = np.random.default_rng([0, _TEST_SPLIT_TAG]).permutation(n)
    test_size = max(1, int(round(n * _TEST_FRACTION)))
    test_idx = split[:test_size]
    rest = split[test_size:]
    if rest.size < 2:
        raise SelectionError(f"corpus too small to split: {n} articles")
    initial_size = min(_INITIAL_SLICE, max(1, rest.size // 2))
    index_of = {ids[i]: i for i in range(n)}

    results: dict[str, list[MetricsReport]] = {arm: [] for arm in STRATEGIES}
    for seed in seeds:
        rng = np.random.default_rng([seed, _NOISE_TAG])
        noisy = gold ^ (rng.random(n) < noise_rate)
        order = rng.permutation(rest)
        initial = order[:initial_size]
        pool_idx = order[initial_size:]

        config = TrainingConfig(
            loss="ce", learning_rate=_HARNESS_LEARNING_RATE, seed=seed
        )
        preliminary = train(features[initial], noisy[initial], config)
        proba = preliminary.predict_proba(features[pool_idx])[:, 1]
        pool = tuple(
            Prediction(
                article_id=ids[i],
                p_positive=float(p),
                label=int(p >= 0.5),
                confidence=abs(float(p) - 0.5),
            )
            for i, p in zip(pool_idx, proba)
        )
        random_seed = int(
            np.random.SeedSequence([seed, _RANDOM_ARM_TAG]).generate_state(1)[0]
        )
        for arm in STRATEGIES:
            chosen = select(
                SelectionRequest(pool=pool, budget=budget, strategy=arm, seed=random_seed)
            )
            acquired = np.array([index_of[i] for i in chosen], dtype=int)
            train_idx = np.concatenate([initial, acquired])
            labels = np.concatenate([noisy[initial], gold[acquired]])
            model = train(features[train_idx], labels, config)
            predicted = (model.predict_proba(features[test_idx])[:, 1] >= 0.5).astype(int)
            results[arm].append(compute_metrics(predicted, gold[test_idx]))

    return compare_arms(
        name="acquisition experiment",
        arms=STRATEGIES,
        seeds=seeds,
        results=[results[arm] for arm in STRATEGIES],
    )
