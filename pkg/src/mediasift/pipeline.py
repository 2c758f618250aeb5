"""Weekly-run orchestration: load → featurize → classify → postprocess → emit.

A single flat config file drives the whole run. Every artifact lands in
the configured output directory and is listed, with a content hash, in a
run manifest so successive weekly runs can be diffed and audited. The
run is deterministic for fixed inputs and seed: the manifest contains no
timestamps and artifact paths are recorded relative to the output
directory.
"""

from __future__ import annotations

import csv
import dataclasses
import datetime as dt
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping, Optional, Sequence

from .classifier import TrainedModel, predict
from .corpus import Article, Corpus, save_predictions
from .features import FeatureVector, Featurizer, SentimentLexicon
from .ingest import ingest_local
from .postprocess import (
    EventCluster,
    EventGraph,
    GeoResolution,
    KeywordSet,
    build_event_graph,
    events_to_json,
    extract_events,
    extract_keywords,
    geolocate,
    load_gazetteer,
    load_keyword_list,
)

MANIFEST_FORMAT = "mediasift-run-manifest 1"
TWEET_LIMIT = 280
MAX_HASHTAGS = 3

FEATURIZER_DIR = "featurizer"
CONSERVATION_MODEL_FILE = "conservation.model"
INFRASTRUCTURE_MODEL_FILE = "infrastructure.model"

STAGES = ("ingest", "featurize", "classify", "postprocess", "emit")


class PipelineError(ValueError):
    """Raised on configuration and orchestration contract violations."""


# Config file keys. Path values are resolved relative to the config file
# itself, except output_dir, which defaults relative to the working
# directory so a bundled read-only config stays runnable.
_REQUIRED_KEYS = ("corpus_dir", "gazetteer", "dictionary", "models_dir", "run_date")
_OPTIONAL_KEYS = (
    "output_dir",
    "lexicon",
    "labels",
    "seed",
    "classification_threshold",
    "event_overlap",
    "emit_events",
    "emit_geojson",
    "emit_tweets",
    "gate_infrastructure",
)
CONFIG_KEYS = _REQUIRED_KEYS + _OPTIONAL_KEYS

_TRUE_WORDS = frozenset({"true", "yes", "1", "on"})
_FALSE_WORDS = frozenset({"false", "no", "0", "off"})


def _parse_bool(key: str, value: str) -> bool:
    word = value.strip().lower()
    if word in _TRUE_WORDS:
        return True
    if word in _FALSE_WORDS:
        return False
    raise PipelineError(f"config key {key!r}: expected true/false, got {value!r}")


@dataclass(frozen=True)
class PipelineConfig:
    """Everything one weekly run needs, resolved to concrete paths."""

    corpus_dir: Path
    gazetteer: Path
    dictionary: Path
    models_dir: Path
    run_date: dt.date
    output_dir: Path = Path("mediasift-run")
    lexicon: Optional[Path] = None
    labels: Optional[Path] = None
    seed: int = 0
    classification_threshold: float = 0.5
    event_overlap: int = 3
    emit_events: bool = True
    emit_geojson: bool = True
    emit_tweets: bool = True
    gate_infrastructure: bool = True

    def __post_init__(self) -> None:
        for name in ("corpus_dir", "gazetteer", "dictionary", "models_dir", "output_dir"):
            object.__setattr__(self, name, Path(getattr(self, name)))
        for name in ("lexicon", "labels"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, Path(value))
        if not isinstance(self.run_date, dt.date):
            raise PipelineError(f"run_date must be a date, got {self.run_date!r}")
        if not 0.0 < self.classification_threshold < 1.0:
            raise PipelineError(
                f"classification_threshold must lie in (0, 1), got {self.classification_threshold}"
            )
        if self.event_overlap < 1:
            raise PipelineError(f"event_overlap must be at least 1, got {self.event_overlap}")

    @property
    def featurizer_dir(self) -> Path:
        return self.models_dir / FEATURIZER_DIR

    @property
    def conservation_model(self) -> Path:
        return self.models_dir / CONSERVATION_MODEL_FILE

    @property
    def infrastructure_model(self) -> Path:
        return self.models_dir / INFRASTRUCTURE_MODEL_FILE

    @classmethod
    def from_mapping(cls, raw: Mapping[str, str], base: Path = Path(".")) -> "PipelineConfig":
        unknown = sorted(set(raw) - set(CONFIG_KEYS))
        if unknown:
            raise PipelineError(f"unknown config keys: {', '.join(unknown)}")
        missing = [key for key in _REQUIRED_KEYS if key not in raw]
        if missing:
            raise PipelineError(f"missing required config keys: {', '.join(missing)}")
        try:
            run_date = dt.date.fromisoformat(raw["run_date"])
        except ValueError:
            raise PipelineError(
                f"config key 'run_date': expected an ISO date, got {raw['run_date']!r}"
            ) from None

        def path_of(key: str) -> Path:
            return base / raw[key]

        def number(key: str, kind: Callable, default):
            if key not in raw:
                return default
            try:
                return kind(raw[key])
            except ValueError:
                raise PipelineError(
                    f"config key {key!r}: expected a {kind.__name__}, got {raw[key]!r}"
                ) from None

        fields = dataclasses.fields(cls)
        defaults = {f.name: f.default for f in fields}
        return cls(
            corpus_dir=path_of("corpus_dir"),
            gazetteer=path_of("gazetteer"),
            dictionary=path_of("dictionary"),
            models_dir=path_of("models_dir"),
            run_date=run_date,
            output_dir=Path(raw["output_dir"]) if "output_dir" in raw else defaults["output_dir"],
            lexicon=path_of("lexicon") if "lexicon" in raw else None,
            labels=path_of("labels") if "labels" in raw else None,
            seed=number("seed", int, defaults["seed"]),
            classification_threshold=number(
                "classification_threshold", float, defaults["classification_threshold"]
            ),
            event_overlap=number("event_overlap", int, defaults["event_overlap"]),
            emit_events=_parse_bool("emit_events", raw["emit_events"])
            if "emit_events" in raw else defaults["emit_events"],
            emit_geojson=_parse_bool("emit_geojson", raw["emit_geojson"])
            if "emit_geojson" in raw else defaults["emit_geojson"],
            emit_tweets=_parse_bool("emit_tweets", raw["emit_tweets"])
            if "emit_tweets" in raw else defaults["emit_tweets"],
            gate_infrastructure=_parse_bool("gate_infrastructure", raw["gate_infrastructure"])
            if "gate_infrastructure" in raw else defaults["gate_infrastructure"],
        )

    @classmethod
    def from_file(cls, path: str | Path) -> "PipelineConfig":
        """Parse the flat ``key = value`` config format."""
        path = Path(path)
        if not path.is_file():
            raise PipelineError(f"config file not found: {path}")
        raw: dict[str, str] = {}
        for lineno, line in enumerate(path.read_text("utf-8").splitlines(), start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise PipelineError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
            key, _, value = stripped.partition("=")
            key, value = key.strip(), value.strip()
            if key in raw:
                raise PipelineError(f"{path}:{lineno}: duplicate config key {key!r}")
            raw[key] = value
        try:
            return cls.from_mapping(raw, base=path.parent)
        except PipelineError as exc:
            raise PipelineError(f"{path}: {exc}") from None


@dataclass(frozen=True)
class RelevantArticle:
    """A conservation-positive article bundled with everything emitters need."""

    article: Article
    conservation_score: float
    infrastructure_score: Optional[float]
    keywords: KeywordSet
    resolution: Optional[GeoResolution]


@dataclass(frozen=True)
class TweetDraft:
    """One composed social-media draft, never posted anywhere."""

    text: str
    source_article_id: str
    hashtags: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "hashtags", tuple(self.hashtags))
        if len(self.text) > TWEET_LIMIT:
            raise PipelineError(
                f"draft for {self.source_article_id!r} is {len(self.text)} characters"
            )
        if len(self.hashtags) > MAX_HASHTAGS:
            raise PipelineError(f"draft for {self.source_article_id!r} has too many hashtags")


def hashtag(keyword: str) -> Optional[str]:
    """CamelCase hashtag from a keyword: alphanumerics kept, words capitalized."""
    parts = []
    for word in keyword.split():
        kept = "".join(ch for ch in word if ch.isalnum())
        if kept:
            parts.append(kept[:1].upper() + kept[1:])
    return "#" + "".join(parts) if parts else None


def compose_tweet(article: Article, keywords: KeywordSet) -> TweetDraft:
    """Title plus URL plus up to three keyword hashtags, within the length cap.

    The URL counts at its literal length; the title absorbs any overflow
    by truncation with an ellipsis. Hashtags are dropped (last first)
    only if even an ellipsis-only title cannot fit.
    """
    tags: list[str] = []
    for keyword in keywords.combined:
        tag = hashtag(keyword)
        if tag and tag not in tags:
            tags.append(tag)
        if len(tags) == MAX_HASHTAGS:
            break
    title = " ".join(article.title.split())
    while True:
        tag_part = " " + " ".join(tags) if tags else ""
        room = TWEET_LIMIT - len(article.url) - 1 - len(tag_part)
        if room >= 1 or not tags:
            break
        tags.pop()
    if room < 1:
        raise PipelineError(f"article {article.id!r}: url alone exceeds the tweet limit")
    if len(title) > room:
        title = title[: room - 1] + "…"
    return TweetDraft(
        text=f"{title} {article.url}{tag_part}",
        source_article_id=article.id,
        hashtags=tuple(tags),
    )


def emit_tweets(records: Sequence[RelevantArticle], path: str | Path) -> list[TweetDraft]:
    """Write one draft per relevant article, one per line; returns the drafts."""
    drafts = [compose_tweet(record.article, record.keywords) for record in records]
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for draft in drafts:
            fh.write(draft.text + "\n")
    return drafts


def emit_geojson(
    records: Sequence[RelevantArticle],
    path: str | Path,
    sidecar_path: str | Path,
) -> dict:
    """Write resolved articles as a GeoJSON FeatureCollection.

    Coordinates follow GeoJSON axis order (longitude first). Articles
    without a geolocation go to a sidecar CSV instead of the collection.
    """
    features = []
    unresolved = []
    for record in records:
        if record.resolution is None:
            unresolved.append(record.article)
            continue
        infrastructure = record.infrastructure_score
        features.append(
            {
                "type": "Feature",
                "geometry": {
                    "type": "Point",
                    "coordinates": [record.resolution.longitude, record.resolution.latitude],
                },
                "properties": {
                    "id": record.article.id,
                    "title": record.article.title,
                    "url": record.article.url,
                    "published_at": record.article.published_at.isoformat(),
                    "conservation_score": round(record.conservation_score, 4),
                    "infrastructure_score": None
                    if infrastructure is None
                    else round(infrastructure, 4),
                    "keywords": list(record.keywords.combined),
                },
            }
        )
    collection = {"type": "FeatureCollection", "features": features}
    Path(path).write_text(json.dumps(collection, indent=2) + "\n", "utf-8")
    with Path(sidecar_path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "site_id", "title", "published_at"])
        for article in unresolved:
            writer.writerow(
                [article.id, article.site_id, article.title, article.published_at.isoformat()]
            )
    return collection


def _distinct_clusters(graph: EventGraph) -> list[EventCluster]:
    """Every maximal clique in the graph, one cluster each.

    Anchors are visited earliest-date first, so each clique is recorded
    with its earliest member as the anchor; the final order matches the
    per-anchor contract (largest first, then earliest, then members).
    """

    def member_order(article_id: str):
        return (graph.dates.get(article_id, dt.date.min), article_id)

    found: dict[tuple[str, ...], EventCluster] = {}
    for anchor in sorted(graph.nodes, key=member_order):
        for cluster in extract_events(graph, anchor):
            found.setdefault(cluster.members, cluster)
    clusters = list(found.values())
    clusters.sort(key=lambda c: (-len(c.members), member_order(c.members[0]), c.members))
    return clusters


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def check_inputs(config: PipelineConfig) -> None:
    """Every referenced input, including the trained models, must exist."""
    paths = {
        "corpus_dir": config.corpus_dir,
        "gazetteer": config.gazetteer,
        "dictionary": config.dictionary,
        "models_dir": config.models_dir,
        "featurizer": config.featurizer_dir,
        "conservation model": config.conservation_model,
        "infrastructure model": config.infrastructure_model,
    }
    if config.lexicon is not None:
        paths["lexicon"] = config.lexicon
    missing = [f"{name} ({path})" for name, path in paths.items() if not path.exists()]
    if missing:
        raise PipelineError("missing inputs: " + "; ".join(missing))


class _Run:
    """Mutable state threaded through the five stages of one run."""

    def __init__(self, config: PipelineConfig):
        self.config = config
        self.corpus: Corpus = Corpus()
        self.features: list[FeatureVector] = []
        self.conservation: dict[str, tuple[float, int]] = {}
        self.infrastructure: dict[str, tuple[float, int]] = {}
        self.positives: list[Article] = []
        self.records: list[RelevantArticle] = []
        self.events_payload: list[dict] = []

    def ingest(self) -> tuple[dict, list[Path]]:
        articles = ingest_local(self.config.corpus_dir)
        if not articles:
            raise PipelineError(f"no articles found under {self.config.corpus_dir}")
        self.corpus = Corpus(articles=articles, provenance=str(self.config.corpus_dir))
        return {"articles": len(self.corpus)}, []

    def featurize(self) -> tuple[dict, list[Path]]:
        featurizer = Featurizer.load_dir(self.config.featurizer_dir)
        if self.config.lexicon is not None:
            featurizer = dataclasses.replace(
                featurizer, lexicon=SentimentLexicon.load(self.config.lexicon)
            )
        self.features = [featurizer.featurize(article) for article in self.corpus]
        return {"articles": len(self.features), "dim": featurizer.dim}, []

    def classify(self) -> tuple[dict, list[Path]]:
        config = self.config
        conservation_model = TrainedModel.load(config.conservation_model)
        infrastructure_model = TrainedModel.load(config.infrastructure_model)
        threshold = config.classification_threshold

        predictions = predict(conservation_model, self.features, threshold=threshold)
        self.conservation = {p.article_id: (p.p_positive, p.label) for p in predictions}
        self.positives = [a for a in self.corpus if self.conservation[a.id][1] == 1]

        if config.gate_infrastructure:
            target_ids = {a.id for a in self.positives}
        else:
            target_ids = {a.id for a in self.corpus}
        target_features = [fv for fv in self.features if fv.article_id in target_ids]
        self.infrastructure = {}
        if target_features:
            infra = predict(infrastructure_model, target_features, threshold=threshold)
            self.infrastructure = {p.article_id: (p.p_positive, p.label) for p in infra}

        config.output_dir.mkdir(parents=True, exist_ok=True)
        out = save_predictions(
            self.corpus,
            self.conservation,
            config.output_dir / "predictions.csv",
            infrastructure=self.infrastructure,
        )
        detail = {
            "articles": len(self.corpus),
            "positives": len(self.positives),
            "gated": config.gate_infrastructure,
        }
        return detail, [out]

    def postprocess(self) -> tuple[dict, list[Path]]:
        config = self.config
        dictionary = load_keyword_list(config.dictionary)
        gazetteer = load_gazetteer(config.gazetteer)

        keyword_sets: dict[str, KeywordSet] = {}
        resolutions: dict[str, Optional[GeoResolution]] = {}
        for article in self.positives:
            keyword_sets[article.id] = extract_keywords(article, dictionary)
            resolutions[article.id] = geolocate(article, gazetteer)

        by_site: dict[str, list[Article]] = {}
        for article in self.positives:
            by_site.setdefault(article.site_id, []).append(article)
        articles_by_id = {a.id: a for a in self.positives}
        self.events_payload = []
        for site_id in sorted(by_site):
            site_articles = by_site[site_id]
            graph = build_event_graph(
                site_articles,
                [keyword_sets[a.id] for a in site_articles],
                k=config.event_overlap,
            )
            clusters = _distinct_clusters(graph)
            self.events_payload.extend(
                json.loads(events_to_json(clusters, articles_by_id, site_id))
            )

        self.records = [
            RelevantArticle(
                article=article,
                conservation_score=self.conservation[article.id][0],
                infrastructure_score=(
                    self.infrastructure[article.id][0]
                    if article.id in self.infrastructure
                    else None
                ),
                keywords=keyword_sets[article.id],
                resolution=resolutions[article.id],
            )
            for article in self.positives
        ]
        resolved = sum(1 for r in self.records if r.resolution is not None)
        detail = {
            "relevant": len(self.records),
            "events": len(self.events_payload),
            "resolved": resolved,
            "unresolved": len(self.records) - resolved,
        }
        return detail, []

    def emit(self) -> tuple[dict, list[Path]]:
        config = self.config
        out_dir = config.output_dir
        out_dir.mkdir(parents=True, exist_ok=True)
        artifacts: list[Path] = []
        if config.emit_events:
            events_path = out_dir / "events.json"
            events_path.write_text(
                json.dumps(self.events_payload, indent=2, sort_keys=True) + "\n", "utf-8"
            )
            artifacts.append(events_path)
        if config.emit_geojson:
            geojson_path = out_dir / "articles.geojson"
            sidecar_path = out_dir / "unresolved.csv"
            emit_geojson(self.records, geojson_path, sidecar_path)
            artifacts.extend([geojson_path, sidecar_path])
        if config.emit_tweets:
            tweets_path = out_dir / "tweets.txt"
            emit_tweets(self.records, tweets_path)
            artifacts.append(tweets_path)
        detail = {
            "events": config.emit_events,
            "geojson": config.emit_geojson,
            "tweets": config.emit_tweets,
        }
        return detail, artifacts


def run_pipeline(config: PipelineConfig) -> dict:
    """Execute all five stages and write the run manifest.

    A stage failure stops the run: the manifest records the failing
    stage and its error, artifacts already written stay on disk, and the
    manifest is still produced. The caller decides how to surface the
    failure (the CLI maps it to exit code 2).
    """
    check_inputs(config)
    out_dir = config.output_dir
    out_dir.mkdir(parents=True, exist_ok=True)

    run = _Run(config)
    steps = [
        ("ingest", run.ingest),
        ("featurize", run.featurize),
        ("classify", run.classify),
        ("postprocess", run.postprocess),
        ("emit", run.emit),
    ]
    stages: list[dict] = []
    failed: Optional[str] = None
    for name, step in steps:
        try:
            detail, artifacts = step()
        except Exception as exc:  # noqa: BLE001 — the manifest must record any stage failure
            failed = name
            stages.append(
                {
                    "name": name,
                    "status": "failed",
                    "error": f"{type(exc).__name__}: {exc}",
                    "artifacts": [],
                }
            )
            break
        stages.append(
            {
                "name": name,
                "status": "ok",
                "detail": detail,
                "artifacts": [
                    {"path": path.relative_to(out_dir).as_posix(), "sha256": _sha256(path)}
                    for path in artifacts
                ],
            }
        )

    manifest: dict = {
        "format": MANIFEST_FORMAT,
        "run_date": config.run_date.isoformat(),
        "seed": config.seed,
        "status": "failed" if failed else "ok",
        "stages": stages,
    }
    if failed:
        manifest["failed_stage"] = failed
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", "utf-8"
    )
    return manifest


def predict_corpus(config: PipelineConfig) -> Path:
    """Stages 1–3 only: load, featurize, classify; returns the predictions CSV."""
    check_inputs(config)
    run = _Run(config)
    run.ingest()
    run.featurize()
    _, artifacts = run.classify()
    return artifacts[0]


def corpus_events(config: PipelineConfig) -> Path:
    """Stages 1–4 plus the events file alone; returns its path."""
    check_inputs(config)
    run = _Run(config)
    run.ingest()
    run.featurize()
    run.classify()
    run.postprocess()
    config.output_dir.mkdir(parents=True, exist_ok=True)
    path = config.output_dir / "events.json"
    path.write_text(json.dumps(run.events_payload, indent=2, sort_keys=True) + "\n", "utf-8")
    return path
