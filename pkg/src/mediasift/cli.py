"""Command-line interface: one subcommand per pipeline operation.

Every subcommand takes ``--config`` pointing at the flat key=value file
described in the README. Exit codes: 0 on success, 2 on any stage or
configuration failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from .ablation import SUITES, run_ablation
from .active import STRATEGIES, SelectionRequest, select
from .classifier import Prediction, TrainingConfig, train
from .corpus import Corpus, SyntheticSpec, load_labels, save_corpus
from .evaluation import compute_metrics
from .features import Featurizer, fit_featurizer
from .ingest import ingest_local
from .pipeline import (
    PipelineConfig,
    PipelineError,
    corpus_events,
    predict_corpus,
    run_pipeline,
)
from .postprocess import geolocate, load_gazetteer


def parse_seeds(text: str) -> list[int]:
    """Seed lists come as ``1..10`` (inclusive range), ``1,2,5``, or ``7``."""
    text = text.strip()
    if ".." in text:
        lo, _, hi = text.partition("..")
        try:
            lo_i, hi_i = int(lo), int(hi)
        except ValueError:
            raise PipelineError(f"bad seed range {text!r}") from None
        if hi_i < lo_i:
            raise PipelineError(f"seed range {text!r} is empty")
        return list(range(lo_i, hi_i + 1))
    try:
        seeds = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise PipelineError(f"bad seeds {text!r}") from None
    if not seeds:
        raise PipelineError("no seeds given")
    return seeds


def _load_config(args) -> PipelineConfig:
    config = PipelineConfig.from_file(args.config)
    if getattr(args, "out_dir", None):
        config = dataclasses.replace(config, output_dir=Path(args.out_dir))
    return config


def _read_predictions(path: Path) -> list[Prediction]:
    pool: list[Prediction] = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        required = {"id", "conservation_score"}
        if reader.fieldnames is None or not required <= set(reader.fieldnames):
            raise PipelineError(f"{path}: expected columns {sorted(required)}")
        for row in reader:
            p = float(row["conservation_score"])
            pool.append(
                Prediction(
                    article_id=row["id"],
                    p_positive=p,
                    label=int(p >= 0.5),
                    confidence=abs(p - 0.5),
                )
            )
    return pool


def _cmd_ingest(args) -> int:
    config = _load_config(args)
    articles = ingest_local(config.corpus_dir)
    out = Path(args.out) if args.out else config.output_dir / "articles.jsonl"
    out.parent.mkdir(parents=True, exist_ok=True)
    save_corpus(Corpus(articles=articles), out)
    print(f"ingested {len(articles)} articles -> {out}")
    return 0


def _cmd_train(args) -> int:
    config = _load_config(args)
    if config.labels is None:
        raise PipelineError("training needs a 'labels' path in the config")
    articles = ingest_local(config.corpus_dir)
    corpus = Corpus(articles=articles, labels=load_labels(config.labels))
    label_map = corpus.label_map(dimension=args.dimension, gold=True)
    if not label_map:
        label_map = corpus.label_map(dimension=args.dimension, gold=False)
    if not label_map:
        raise PipelineError(f"no {args.dimension} labels found in {config.labels}")

    if config.featurizer_dir.exists():
        featurizer = Featurizer.load_dir(config.featurizer_dir)
    else:
        featurizer = fit_featurizer(corpus, seed=config.seed)
        featurizer.save_dir(config.featurizer_dir)

    labeled = [a for a in corpus if a.id in label_map]
    features = [featurizer.featurize(a) for a in labeled]
    labels = [label_map[a.id] for a in labeled]
    seed = args.seed if args.seed is not None else config.seed
    model = train(
        features,
        labels,
        TrainingConfig(
            loss=args.loss,
            learning_rate=args.learning_rate,
            epochs=args.epochs,
            seed=seed,
        ),
    )
    out = Path(args.out) if args.out else config.models_dir / f"{args.dimension}.model"
    out.parent.mkdir(parents=True, exist_ok=True)
    model.save(out)
    print(
        f"trained {args.dimension} head on {len(labels)} examples "
        f"(best epoch {model.best_epoch}, val F1 {model.best_val_f1:.4f}) -> {out}"
    )
    return 0


def _cmd_predict(args) -> int:
    config = _load_config(args)
    path = predict_corpus(config)
    print(f"wrote {path}")
    return 0


def _cmd_select(args) -> int:
    if args.predictions:
        predictions_path = Path(args.predictions)
    elif args.config:
        predictions_path = _load_config(args).output_dir / "predictions.csv"
    else:
        raise PipelineError("select needs --predictions or --config")
    pool = _read_predictions(predictions_path)
    request = SelectionRequest(
        pool=pool, budget=args.budget, strategy=args.strategy, seed=args.seed
    )
    chosen = select(request)
    text = "".join(article_id + "\n" for article_id in chosen)
    if args.out:
        Path(args.out).write_text(text, "utf-8")
        print(f"selected {len(chosen)} articles -> {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_events(args) -> int:
    config = _load_config(args)
    path = corpus_events(config)
    print(f"wrote {path}")
    return 0


def _cmd_geolocate(args) -> int:
    config = _load_config(args)
    articles = ingest_local(config.corpus_dir)
    gazetteer = load_gazetteer(config.gazetteer)
    out = Path(args.out) if args.out else config.output_dir / "geolocations.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    resolved = 0
    with out.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "site_id", "resolved_site", "lat", "lon", "method"])
        for article in articles:
            resolution = geolocate(article, gazetteer)
            if resolution is None:
                writer.writerow([article.id, article.site_id, "", "", "", ""])
            else:
                resolved += 1
                writer.writerow(
                    [
                        article.id,
                        article.site_id,
                        resolution.site_id,
                        repr(resolution.latitude),
                        repr(resolution.longitude),
                        resolution.method,
                    ]
                )
    print(f"resolved {resolved}/{len(articles)} articles -> {out}")
    return 0


def _cmd_eval(args) -> int:
    config = _load_config(args)
    if config.labels is None:
        raise PipelineError("eval needs a 'labels' path in the config")
    predictions_path = (
        Path(args.predictions) if args.predictions else config.output_dir / "predictions.csv"
    )
    gold: dict[str, int] = {}
    for example in load_labels(config.labels):
        if not example.is_gold or example.article_id in gold:
            continue
        if args.dimension == "conservation":
            gold[example.article_id] = example.conservation_label
        elif example.infrastructure_label is not None:
            gold[example.article_id] = example.infrastructure_label
    label_column = f"{args.dimension}_label"
    predicted: dict[str, int] = {}
    with predictions_path.open(newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            if row.get(label_column, "") != "":
                predicted[row["id"]] = int(row[label_column])
    shared = [article_id for article_id in predicted if article_id in gold]
    if not shared:
        raise PipelineError(
            f"no articles have both a {args.dimension} prediction and a gold label"
        )
    report = compute_metrics(
        [predicted[a] for a in shared], [gold[a] for a in shared]
    )
    print(f"{args.dimension}: {len(shared)} articles")
    for metric in ("accuracy", "precision", "recall", "f1"):
        print(f"  {metric:<10} {getattr(report, metric):.4f}")
    print(f"  tp={report.tp} fp={report.fp} tn={report.tn} fn={report.fn}")
    return 0


def _cmd_ablate(args) -> int:
    spec = SyntheticSpec.from_json(json.loads(Path(args.spec).read_text("utf-8")))
    seeds = parse_seeds(args.seeds)
    report = run_ablation(args.suite, spec, seeds)
    if args.out:
        out = Path(args.out)
    elif args.config:
        out = _load_config(args).output_dir / "ablation.csv"
    else:
        raise PipelineError("ablate needs --out or --config")
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(report.to_csv(), "utf-8")
    sys.stdout.write(report.to_text())
    print(f"wrote {out}")
    return 0


def _cmd_run(args) -> int:
    config = _load_config(args)
    manifest = run_pipeline(config)
    for stage in manifest["stages"]:
        print(f"{stage['name']:<12} {stage['status']}")
    if manifest["status"] != "ok":
        failed = manifest["failed_stage"]
        error = next(s["error"] for s in manifest["stages"] if s["name"] == failed)
        print(f"error: stage {failed!r} failed: {error}", file=sys.stderr)
        return 2
    print(f"manifest: {config.output_dir / 'manifest.json'}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mediasift",
        description="Classify conservation news and post-process it into "
        "keywords, event chains, and geolocated outputs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name: str, help_text: str, handler, config_required: bool = True):
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument(
            "--config",
            required=config_required,
            help="path to the flat key=value config file",
        )
        p.set_defaults(handler=handler)
        return p

    p = command("ingest", "load article drops and write one deduplicated corpus file", _cmd_ingest)
    p.add_argument("--out", help="output JSONL path (default: <output_dir>/articles.jsonl)")

    p = command("train", "fit a classifier head on the labeled corpus", _cmd_train)
    p.add_argument("--dimension", choices=("conservation", "infrastructure"),
                   default="conservation")
    p.add_argument("--loss", choices=("ce", "peer", "cores"), default="ce")
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--learning-rate", type=float, default=0.01)
    p.add_argument("--seed", type=int, default=None,
                   help="training seed (default: the config seed)")
    p.add_argument("--out", help="model path (default: <models_dir>/<dimension>.model)")

    p = command("predict", "classify the corpus and write the predictions CSV", _cmd_predict)
    p.add_argument("--out-dir", help="override the configured output directory")

    p = command("select", "pick articles for annotation from a predictions CSV",
                _cmd_select, config_required=False)
    p.add_argument("--predictions", help="predictions CSV (default: <output_dir>/predictions.csv)")
    p.add_argument("--budget", type=int, required=True)
    p.add_argument("--strategy", choices=STRATEGIES, default="least_confident")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write selected ids here instead of stdout")

    p = command("events", "extract event clusters for relevant articles", _cmd_events)
    p.add_argument("--out-dir", help="override the configured output directory")

    p = command("geolocate", "resolve every corpus article against the gazetteer", _cmd_geolocate)
    p.add_argument("--out", help="output CSV path (default: <output_dir>/geolocations.csv)")

    p = command("eval", "score a predictions CSV against gold labels", _cmd_eval)
    p.add_argument("--predictions", help="predictions CSV (default: <output_dir>/predictions.csv)")
    p.add_argument("--dimension", choices=("conservation", "infrastructure"),
                   default="conservation")

    p = command("ablate", "run a loss or acquisition comparison on synthetic data",
                _cmd_ablate, config_required=False)
    p.add_argument("--suite", choices=SUITES, required=True)
    p.add_argument("--spec", required=True, help="synthetic corpus spec JSON")
    p.add_argument("--seeds", required=True, help="e.g. 1..10 or 3,5,8")
    p.add_argument("--out", help="report CSV path")

    p = command("run", "execute the full weekly pipeline", _cmd_run)
    p.add_argument("--out-dir", help="override the configured output directory")

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
