"""Selection rules and the acquisition-comparison harness."""

import numpy as np
import pytest

from mediasift.active import (
    SelectionError,
    SelectionRequest,
    acquisition_experiment,
    select,
)
from mediasift.classifier import Prediction
from mediasift.corpus import SyntheticSpec, generate_synthetic
from mediasift.features import fit_featurizer


def _prediction(article_id, p):
    return Prediction(
        article_id=article_id,
        p_positive=p,
        label=int(p >= 0.5),
        confidence=abs(p - 0.5),
    )


def _pool(scores):
    return tuple(_prediction(article_id, p) for article_id, p in scores.items())


class TestSelect:
    def test_least_confident_picks_closest_to_half(self):
        pool = _pool({"a": 0.9, "b": 0.55, "c": 0.1, "d": 0.48})
        request = SelectionRequest(pool=pool, budget=2, strategy="least_confident")
        assert select(request) == ["d", "b"]

    def test_budget_equal_to_pool_returns_everything_sorted(self):
        pool = _pool({"a": 0.9, "b": 0.55, "c": 0.1, "d": 0.48})
        request = SelectionRequest(pool=pool, budget=4, strategy="least_confident")
        assert select(request) == ["d", "b", "a", "c"]

    def test_equal_confidence_breaks_ties_by_id(self):
        pool = _pool({"z": 0.6, "m": 0.4, "a": 0.9})
        request = SelectionRequest(pool=pool, budget=2, strategy="least_confident")
        assert select(request) == ["m", "z"]

    def test_confidences_non_decreasing(self):
        rng = np.random.default_rng(5)
        pool = _pool({f"id-{i:03d}": float(p) for i, p in enumerate(rng.random(40))})
        request = SelectionRequest(pool=pool, budget=40, strategy="least_confident")
        by_id = {p.article_id: p.confidence for p in pool}
        confidences = [by_id[i] for i in select(request)]
        assert confidences == sorted(confidences)

    def test_budget_above_pool_rejected(self):
        pool = _pool({"a": 0.9, "b": 0.55})
        with pytest.raises(SelectionError, match="exceeds pool size"):
            SelectionRequest(pool=pool, budget=3, strategy="least_confident")

    def test_negative_budget_rejected(self):
        with pytest.raises(SelectionError, match="nonnegative"):
            SelectionRequest(pool=_pool({"a": 0.5}), budget=-1, strategy="random")

    def test_unknown_strategy_rejected(self):
        with pytest.raises(SelectionError, match="unknown strategy"):
            SelectionRequest(pool=_pool({"a": 0.5}), budget=1, strategy="entropy")

    def test_random_draws_without_replacement(self):
        pool = _pool({f"id-{i:02d}": 0.5 + i / 100 for i in range(20)})
        request = SelectionRequest(pool=pool, budget=8, strategy="random", seed=3)
        chosen = select(request)
        assert len(chosen) == 8
        assert len(set(chosen)) == 8
        assert set(chosen) <= {p.article_id for p in pool}

    def test_pure_function_of_pool_contents(self):
        scores = {f"id-{i:02d}": float(p) for i, p in
                  enumerate(np.random.default_rng(7).random(12))}
        pool = _pool(scores)
        shuffled = tuple(reversed(pool))
        for strategy in ("least_confident", "random"):
            a = select(SelectionRequest(pool=pool, budget=5, strategy=strategy, seed=9))
            b = select(SelectionRequest(pool=shuffled, budget=5, strategy=strategy, seed=9))
            assert a == b

    def test_random_same_seed_reproduces(self):
        pool = _pool({f"id-{i:02d}": 0.3 for i in range(15)})
        request = SelectionRequest(pool=pool, budget=6, strategy="random", seed=11)
        assert select(request) == select(request)

    def test_budget_zero_selects_nothing(self):
        pool = _pool({"a": 0.5, "b": 0.7})
        for strategy in ("least_confident", "random"):
            assert select(SelectionRequest(pool=pool, budget=0, strategy=strategy)) == []


@pytest.fixture(scope="module")
def small_corpus():
    spec = SyntheticSpec(
        n_articles=120, relevance_rate=0.4, vocab_size=120, topic_count=2, seed=31
    )
    return generate_synthetic(spec)


@pytest.fixture(scope="module")
def small_featurizer(small_corpus):
    return fit_featurizer(
        small_corpus, text_mode="hashed", text_dim=32, k=2,
        fit_sweeps=20, fold_in_sweeps=5, seed=4,
    )


class TestAcquisitionExperiment:
    def test_budget_zero_arms_identical(self, small_corpus, small_featurizer):
        report = acquisition_experiment(
            small_corpus, 0, [1, 2], featurizer=small_featurizer
        )
        assert report.mean(0, "f1") == report.mean(1, "f1")
        assert report.results[0] == report.results[1]
        assert report.comparisons[0].p_value == 1.0

    def test_single_seed_rejected(self, small_corpus, small_featurizer):
        with pytest.raises(SelectionError, match="at least 2 seeds"):
            acquisition_experiment(small_corpus, 5, [1], featurizer=small_featurizer)

    def test_same_seeds_reproduce_report(self, small_corpus, small_featurizer):
        first = acquisition_experiment(
            small_corpus, 10, [1, 2, 3], featurizer=small_featurizer
        )
        second = acquisition_experiment(
            small_corpus, 10, [1, 2, 3], featurizer=small_featurizer
        )
        assert first.to_csv() == second.to_csv()
        assert first == second

    def test_budget_beyond_pool_rejected(self, small_corpus, small_featurizer):
        with pytest.raises(SelectionError, match="exceeds pool size"):
            acquisition_experiment(
                small_corpus, 10_000, [1, 2], featurizer=small_featurizer
            )

    def test_csv_lists_every_seed_and_arm(self, small_corpus, small_featurizer):
        report = acquisition_experiment(
            small_corpus, 10, [1, 2, 3], featurizer=small_featurizer
        )
        lines = report.to_csv().strip().splitlines()
        assert lines[0] == "seed,strategy,accuracy,precision,recall,f1"
        assert len(lines) == 1 + 3 * 2
        strategies = {line.split(",")[1] for line in lines[1:]}
        assert strategies == {"least_confident", "random"}
