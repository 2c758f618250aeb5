"""Regenerate the bundled fixture models from the checked-in fixture data.

Run from the repository root:

    python3 tools/build_fixture_bundle.py

The corpus, labels, gazetteer, keyword dictionary, and config are source
files; only the featurizer directory and the two classifier heads are
(re)built here. The script refuses to write models that do not reproduce
the planted labels exactly and with a comfortable margin, trying training
seeds in order until one qualifies, so the committed bundle is always a
working demonstration of the two-stage classifier.
"""

from __future__ import annotations

import sys
from pathlib import Path

from mediasift.classifier import ModelError, TrainingConfig, predict, train
from mediasift.corpus import Corpus, load_corpus, load_labels
from mediasift.features import Featurizer, fit_featurizer
from mediasift.pipeline import (
    CONSERVATION_MODEL_FILE,
    FEATURIZER_DIR,
    INFRASTRUCTURE_MODEL_FILE,
)

FIXTURE = Path(__file__).resolve().parents[1] / "src" / "mediasift" / "data" / "fixture"
MARGIN = 0.1  # positives must score >= 0.5 + MARGIN, negatives <= 0.5 - MARGIN


def _fit_head(features, labels, ids) -> tuple:
    """Scan training seeds and keep the head with the widest worst-case margin.

    The best-validation-F1 checkpoint lands at the first epoch where the
    validation split is classified perfectly, so margins depend on how
    the seeded split falls; scanning seeds buys a comfortable one.
    """
    planted = {article_id for article_id, y in zip(ids, labels) if y == 1}
    best = None
    for seed in range(80):
        try:
            model = train(
                features,
                labels,
                TrainingConfig(
                    loss="ce", learning_rate=2.0, epochs=200, batch_size=4, seed=seed
                ),
            )
        except ModelError:
            continue  # split left one class empty; try the next seed
        scores = {p.article_id: p.p_positive for p in predict(model, features)}
        margin = min(
            min(scores[a] - 0.5 for a in planted),
            min(0.5 - scores[a] for a in ids if a not in planted),
        )
        if best is None or margin > best[0]:
            best = (margin, seed, model)
    if best is None or best[0] < MARGIN:
        raise SystemExit(
            f"no training seed below 80 separated the fixture corpus by {MARGIN}"
        )
    margin, seed, model = best
    return model, seed, margin


def main() -> int:
    corpus = load_corpus(FIXTURE / "corpus" / "articles.jsonl")
    if corpus.skip_count:
        raise SystemExit(f"fixture corpus has malformed lines: {corpus.skipped}")
    corpus = Corpus(articles=corpus.articles, labels=load_labels(FIXTURE / "labels.csv"))
    models_dir = FIXTURE / "models"

    featurizer = fit_featurizer(
        corpus, text_dim=64, k=4, fit_sweeps=40, fold_in_sweeps=10, seed=0
    )
    featurizer.save_dir(models_dir / FEATURIZER_DIR)
    # train against the exact artifact that ships, not the in-memory copy
    featurizer = Featurizer.load_dir(models_dir / FEATURIZER_DIR)
    features = [featurizer.featurize(article) for article in corpus]
    ids = [article.id for article in corpus]

    conservation = corpus.label_map(dimension="conservation", gold=True)
    model_c, seed_c, margin_c = _fit_head(features, [conservation[a] for a in ids], ids)
    model_c.save(models_dir / CONSERVATION_MODEL_FILE)

    infrastructure = corpus.label_map(dimension="infrastructure", gold=True)
    model_i, seed_i, margin_i = _fit_head(features, [infrastructure[a] for a in ids], ids)
    model_i.save(models_dir / INFRASTRUCTURE_MODEL_FILE)

    positives = sorted(a for a in ids if conservation[a] == 1)
    infra_positives = sorted(a for a in ids if infrastructure[a] == 1)
    print(f"conservation head: seed {seed_c}, margin {margin_c:.3f}, positives {positives}")
    print(f"infrastructure head: seed {seed_i}, margin {margin_i:.3f}, positives {infra_positives}")
    print(f"bundle written under {models_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
