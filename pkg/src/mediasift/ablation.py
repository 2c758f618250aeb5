"""Ablation suites: loss functions under label noise, and acquisition
strategies. Each suite replays a seeded experiment per arm and reports
mean/stddev metrics plus pairwise paired t-tests as CSV and text.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from .active import acquisition_experiment
from .classifier import TrainingConfig, train
from .corpus import SyntheticSpec, generate_synthetic
from .evaluation import (
    ComparisonReport,
    EvaluationError,
    compare_arms,
    compute_metrics,
)
from .features import fit_featurizer

SUITES = ("losses", "acquisition")
LOSS_ARMS = ("ce", "peer", "cores")

# Losses-suite harness constants, tuned so 20% symmetric label noise
# separates the arms: a text-heavy feature space and a learning rate in the
# regime where cross-entropy is still recall-limited at the final epoch.
_TEST_SPLIT_TAG = 101
_NOISE_TAG = 777
_TEXT_DIM = 512
_TOPIC_COUNT = 8
_FIT_SWEEPS = 80
_FOLD_IN_SWEEPS = 25
_LEARNING_RATE = 0.012
_TEST_FRACTION = 0.25

_ACQUISITION_BUDGET = 300


def _losses_suite(
    spec: SyntheticSpec, seeds: Sequence[int], arms: Sequence[str]
) -> ComparisonReport:
    corpus = generate_synthetic(spec)
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
    gold_map = corpus.label_map()
    gold = np.array([gold_map[article.id] for article in corpus])
    n = len(gold)

    split = np.random.default_rng([0, _TEST_SPLIT_TAG]).permutation(n)
    test_size = max(1, int(round(n * _TEST_FRACTION)))
    test_idx, train_idx = split[:test_size], split[test_size:]

    results = [[] for _ in arms]
    for seed in seeds:
        rng = np.random.default_rng([seed, _NOISE_TAG])
        noisy = gold ^ (rng.random(n) < spec.noise_rate)
        for i, arm in enumerate(arms):
            config = TrainingConfig(loss=arm, learning_rate=_LEARNING_RATE, seed=seed)
            model = train(features[train_idx], noisy[train_idx], config)
            predicted = (model.predict_proba(features[test_idx])[:, 1] >= 0.5).astype(int)
            results[i].append(compute_metrics(predicted, gold[test_idx]))

    return compare_arms(
        name="losses suite", arms=arms, seeds=seeds, results=results
    )


def run_ablation(
    suite: str,
    spec: SyntheticSpec,
    seeds: Sequence[int],
    *,
    arms: Optional[Sequence[str]] = None,
    budget: int = _ACQUISITION_BUDGET,
) -> ComparisonReport:
    """Run one ablation suite over the given synthetic spec and seeds.

    ``losses`` trains each loss arm on a shared noisily-labeled corpus;
    ``acquisition`` compares least-confident against random selection.
    ``arms`` overrides the losses-suite arm list (degenerate duplicates
    allowed, for harness self-tests); ``budget`` applies to acquisition.
    """
    seeds = [int(s) for s in seeds]
    if len(seeds) < 2:
        raise EvaluationError(
            f"need at least 2 seeds for a variance estimate, got {len(seeds)}"
        )
    if suite == "losses":
        chosen = tuple(arms) if arms is not None else LOSS_ARMS
        for arm in chosen:
            if arm not in LOSS_ARMS:
                raise EvaluationError(f"unknown loss arm {arm!r}; expected {LOSS_ARMS}")
        return _losses_suite(spec, seeds, chosen)
    if suite == "acquisition":
        if arms is not None:
            raise EvaluationError("the acquisition suite has fixed arms")
        corpus = generate_synthetic(spec)
        report = acquisition_experiment(
            corpus, budget, seeds, noise_rate=spec.noise_rate
        )
        return ComparisonReport(
            name="acquisition suite",
            arms=report.arms,
            seeds=report.seeds,
            results=report.results,
            comparisons=report.comparisons,
        )
    raise EvaluationError(f"unknown suite {suite!r}; expected one of {SUITES}")
