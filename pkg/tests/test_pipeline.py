"""Pipeline orchestration: config parsing, emitters, manifests, reruns."""

import dataclasses
import datetime as dt
import json
from pathlib import Path

import pytest

import mediasift
from mediasift.corpus import Article
from mediasift.pipeline import (
    PipelineConfig,
    PipelineError,
    RelevantArticle,
    TweetDraft,
    check_inputs,
    compose_tweet,
    emit_geojson,
    emit_tweets,
    hashtag,
    run_pipeline,
)
from mediasift.postprocess import GeoResolution, KeywordSet

FIXTURE = Path(mediasift.__file__).resolve().parent / "data" / "fixture"


def fixture_config(out_dir: Path, **overrides) -> PipelineConfig:
    config = PipelineConfig.from_file(FIXTURE / "pipeline.cfg")
    return dataclasses.replace(config, output_dir=out_dir, **overrides)


class TestPipelineConfig:
    def test_bundled_config_parses_with_defaults(self):
        config = PipelineConfig.from_file(FIXTURE / "pipeline.cfg")
        assert config.corpus_dir == FIXTURE / "corpus"
        assert config.gazetteer == FIXTURE / "gazetteer.csv"
        assert config.run_date == dt.date(2022, 6, 6)
        assert config.seed == 7
        assert config.classification_threshold == 0.5
        assert config.event_overlap == 3
        assert config.emit_events and config.emit_geojson and config.emit_tweets
        assert config.gate_infrastructure

    def test_unknown_key_rejected(self, tmp_path):
        bad = tmp_path / "bad.cfg"
        bad.write_text(
            "corpus_dir = c\ngazetteer = g\ndictionary = d\nmodels_dir = m\n"
            "run_date = 2022-06-06\nfrobnicate = yes\n"
        )
        with pytest.raises(PipelineError, match="unknown config keys: frobnicate"):
            PipelineConfig.from_file(bad)

    def test_missing_required_keys_rejected(self, tmp_path):
        bad = tmp_path / "bad.cfg"
        bad.write_text("corpus_dir = c\n")
        with pytest.raises(PipelineError, match="missing required config keys"):
            PipelineConfig.from_file(bad)

    def test_duplicate_key_rejected(self, tmp_path):
        bad = tmp_path / "bad.cfg"
        bad.write_text("corpus_dir = a\ncorpus_dir = b\n")
        with pytest.raises(PipelineError, match="duplicate config key"):
            PipelineConfig.from_file(bad)

    def test_line_without_equals_rejected(self, tmp_path):
        bad = tmp_path / "bad.cfg"
        bad.write_text("corpus_dir\n")
        with pytest.raises(PipelineError, match="expected 'key = value'"):
            PipelineConfig.from_file(bad)

    def test_bad_run_date_rejected(self, tmp_path):
        bad = tmp_path / "bad.cfg"
        bad.write_text(
            "corpus_dir = c\ngazetteer = g\ndictionary = d\nmodels_dir = m\n"
            "run_date = not-a-date\n"
        )
        with pytest.raises(PipelineError, match="run_date"):
            PipelineConfig.from_file(bad)

    def test_bad_boolean_rejected(self, tmp_path):
        bad = tmp_path / "bad.cfg"
        bad.write_text(
            "corpus_dir = c\ngazetteer = g\ndictionary = d\nmodels_dir = m\n"
            "run_date = 2022-06-06\nemit_tweets = maybe\n"
        )
        with pytest.raises(PipelineError, match="expected true/false"):
            PipelineConfig.from_file(bad)

    def test_relative_paths_resolve_against_config_file(self, tmp_path):
        cfg = tmp_path / "nested" / "run.cfg"
        cfg.parent.mkdir()
        cfg.write_text(
            "corpus_dir = drops\ngazetteer = geo.csv\ndictionary = words.txt\n"
            "models_dir = models\nrun_date = 2022-06-06\n"
        )
        config = PipelineConfig.from_file(cfg)
        assert config.corpus_dir == tmp_path / "nested" / "drops"
        assert config.gazetteer == tmp_path / "nested" / "geo.csv"

    def test_threshold_outside_unit_interval_rejected(self):
        with pytest.raises(PipelineError, match="classification_threshold"):
            fixture_config(Path("out"), classification_threshold=1.0)

    def test_zero_event_overlap_rejected(self):
        with pytest.raises(PipelineError, match="event_overlap"):
            fixture_config(Path("out"), event_overlap=0)

    def test_missing_input_reported_before_any_stage(self, tmp_path):
        config = fixture_config(tmp_path / "out", gazetteer=tmp_path / "absent.csv")
        with pytest.raises(PipelineError, match="missing inputs"):
            check_inputs(config)


def _article(article_id="a1", title="Dam protest grows", url="https://x.test/a1",
             site_id="site-a"):
    return Article(
        id=article_id, site_id=site_id, title=title, url=url,
        source="src", published_at=dt.date(2022, 6, 1),
    )


def _keywords(article_id="a1", combined=("tiger reserve", "national park")):
    return KeywordSet(
        article_id=article_id, dictionary_hits=combined, salient_terms=(),
        combined=combined,
    )


def _record(article=None, keywords=None, resolution=None, conservation=0.9,
            infrastructure=0.8):
    article = article or _article()
    return RelevantArticle(
        article=article,
        conservation_score=conservation,
        infrastructure_score=infrastructure,
        keywords=keywords or _keywords(article.id),
        resolution=resolution,
    )


class TestHashtags:
    def test_two_word_keyword_camelcases(self):
        assert hashtag("tiger reserve") == "#TigerReserve"

    def test_non_alphanumerics_dropped(self):
        assert hashtag("NH-44 corridor") == "#NH44Corridor"

    def test_existing_capitals_survive(self):
        assert hashtag("WWF report") == "#WWFReport"

    def test_no_alphanumerics_gives_nothing(self):
        assert hashtag("!!! ---") is None


class TestComposeTweet:
    def test_no_keywords_gives_zero_hashtags(self):
        draft = compose_tweet(_article(), _keywords(combined=()))
        assert draft.hashtags == ()
        assert draft.text == "Dam protest grows https://x.test/a1"

    def test_overlong_title_truncated_to_exact_limit(self):
        article = _article(title="x" * 300)
        draft = compose_tweet(article, _keywords(combined=()))
        assert len(draft.text) == 280
        assert "…" in draft.text
        assert draft.text.endswith(article.url)

    def test_at_most_three_hashtags(self):
        keywords = _keywords(combined=("a b", "c d", "e f", "g h", "i j"))
        draft = compose_tweet(_article(), keywords)
        assert draft.hashtags == ("#AB", "#CD", "#EF")

    def test_case_duplicate_keywords_collapse_to_one_tag(self):
        keywords = _keywords(combined=("Tiger Reserve", "tiger reserve", "poaching"))
        draft = compose_tweet(_article(), keywords)
        assert draft.hashtags == ("#TigerReserve", "#Poaching")

    def test_hashtags_dropped_when_url_leaves_no_room(self):
        article = _article(url="https://x.test/" + "p" * 255)  # 270-char url
        draft = compose_tweet(article, _keywords(combined=("tiger reserve",)))
        assert len(draft.text) <= 280
        assert draft.hashtags == ()

    def test_draft_over_limit_rejected_at_construction(self):
        with pytest.raises(PipelineError, match="characters"):
            TweetDraft(text="x" * 281, source_article_id="a1", hashtags=())


class TestEmitGeojson:
    def test_longitude_comes_first(self, tmp_path):
        resolution = GeoResolution(site_id="s", latitude=27.5, longitude=84.3,
                                   method="directory")
        collection = emit_geojson(
            [_record(resolution=resolution)], tmp_path / "a.geojson", tmp_path / "side.csv"
        )
        assert collection["features"][0]["geometry"]["coordinates"] == [84.3, 27.5]

    def test_zero_articles_gives_valid_empty_collection(self, tmp_path):
        emit_geojson([], tmp_path / "a.geojson", tmp_path / "side.csv")
        payload = json.loads((tmp_path / "a.geojson").read_text())
        assert payload == {"type": "FeatureCollection", "features": []}
        assert (tmp_path / "side.csv").read_text().splitlines() == [
            "id,site_id,title,published_at"
        ]

    def test_unresolved_articles_go_to_sidecar(self, tmp_path):
        resolution = GeoResolution(site_id="s", latitude=1.0, longitude=2.0, method="alias")
        records = [
            _record(_article("a1", url="https://x.test/a1"), resolution=resolution),
            _record(_article("a2", url="https://x.test/a2"), resolution=resolution),
            _record(_article("a3", url="https://x.test/a3"), resolution=None),
        ]
        collection = emit_geojson(records, tmp_path / "a.geojson", tmp_path / "side.csv")
        assert len(collection["features"]) == 2
        lines = (tmp_path / "side.csv").read_text().splitlines()
        assert len(lines) == 2 and lines[1].startswith("a3,")

    def test_feature_properties_schema(self, tmp_path):
        resolution = GeoResolution(site_id="s", latitude=1.0, longitude=2.0, method="alias")
        collection = emit_geojson(
            [_record(resolution=resolution)], tmp_path / "a.geojson", tmp_path / "side.csv"
        )
        properties = collection["features"][0]["properties"]
        assert list(properties) == [
            "id", "title", "url", "published_at",
            "conservation_score", "infrastructure_score", "keywords",
        ]
        assert properties["keywords"] == ["tiger reserve", "national park"]


class TestEmitTweets:
    def test_one_line_per_record(self, tmp_path):
        records = [
            _record(_article("a1", url="https://x.test/a1")),
            _record(_article("a2", url="https://x.test/a2")),
        ]
        drafts = emit_tweets(records, tmp_path / "tweets.txt")
        lines = (tmp_path / "tweets.txt").read_text().splitlines()
        assert [d.text for d in drafts] == lines

    def test_zero_records_writes_empty_file(self, tmp_path):
        assert emit_tweets([], tmp_path / "tweets.txt") == []
        assert (tmp_path / "tweets.txt").read_text() == ""


@pytest.fixture(scope="module")
def fixture_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    config = fixture_config(out)
    manifest = run_pipeline(config)
    return config, manifest


class TestRunPipeline:
    def test_five_stages_all_ok(self, fixture_run):
        _, manifest = fixture_run
        assert [s["name"] for s in manifest["stages"]] == [
            "ingest", "featurize", "classify", "postprocess", "emit",
        ]
        assert all(s["status"] == "ok" for s in manifest["stages"])
        assert manifest["status"] == "ok"

    def test_exactly_three_positives_and_gated_infrastructure(self, fixture_run):
        config, manifest = fixture_run
        classify = manifest["stages"][2]
        assert classify["detail"]["positives"] == 3
        rows = (config.output_dir / "predictions.csv").read_text().splitlines()[1:]
        infra_rows = [r.split(",")[0] for r in rows if r.split(",")[5] != ""]
        positive_rows = [r.split(",")[0] for r in rows if r.split(",")[4] == "1"]
        assert infra_rows == positive_rows == ["fix-0001", "fix-0002", "fix-0003"]

    def test_event_clusters_match_planted_structure(self, fixture_run):
        config, _ = fixture_run
        events = json.loads((config.output_dir / "events.json").read_text())
        by_site = {e["site_id"]: e for e in events}
        assert [m["id"] for m in by_site["chitwan-np"]["members"]] == [
            "fix-0001", "fix-0002",
        ]
        assert by_site["chitwan-np"]["anchor"] == "fix-0001"
        assert [m["id"] for m in by_site["bardiya-np"]["members"]] == ["fix-0003"]

    def test_two_resolved_one_sidecar(self, fixture_run):
        config, _ = fixture_run
        geojson = json.loads((config.output_dir / "articles.geojson").read_text())
        assert len(geojson["features"]) == 2
        sidecar = (config.output_dir / "unresolved.csv").read_text().splitlines()
        assert len(sidecar) == 2 and sidecar[1].startswith("fix-0003,")

    def test_rerun_reproduces_identical_bytes(self, fixture_run, tmp_path):
        config, manifest = fixture_run
        again = run_pipeline(dataclasses.replace(config, output_dir=tmp_path / "other"))
        assert again == manifest
        for name in ("manifest.json", "predictions.csv", "events.json",
                     "articles.geojson", "tweets.txt", "unresolved.csv"):
            assert (tmp_path / "other" / name).read_bytes() == (
                config.output_dir / name
            ).read_bytes()

    def test_all_emitters_off_lists_classification_outputs_only(self, tmp_path):
        config = fixture_config(
            tmp_path / "out", emit_events=False, emit_geojson=False, emit_tweets=False
        )
        manifest = run_pipeline(config)
        artifacts = [a["path"] for s in manifest["stages"] for a in s["artifacts"]]
        assert artifacts == ["predictions.csv"]
        assert not (tmp_path / "out" / "events.json").exists()

    def test_ungated_mode_scores_every_article(self, tmp_path):
        config = fixture_config(tmp_path / "out", gate_infrastructure=False)
        run_pipeline(config)
        rows = (config.output_dir / "predictions.csv").read_text().splitlines()[1:]
        assert all(row.split(",")[5] != "" for row in rows)

    def test_zero_positives_still_emits_valid_empty_files(self, tmp_path):
        drops = tmp_path / "drops"
        drops.mkdir()
        lines = (FIXTURE / "corpus" / "articles.jsonl").read_text().splitlines()
        negatives = [l for l in lines if json.loads(l)["id"] not in
                     {"fix-0001", "fix-0002", "fix-0003"}]
        (drops / "articles.jsonl").write_text("\n".join(negatives) + "\n")
        config = fixture_config(tmp_path / "out", corpus_dir=drops)
        manifest = run_pipeline(config)
        assert manifest["status"] == "ok"
        assert manifest["stages"][2]["detail"]["positives"] == 0
        out = config.output_dir
        assert json.loads((out / "events.json").read_text()) == []
        assert json.loads((out / "articles.geojson").read_text())["features"] == []
        assert (out / "tweets.txt").read_text() == ""
        assert (out / "unresolved.csv").read_text().splitlines() == [
            "id,site_id,title,published_at"
        ]

    def test_stage_failure_recorded_and_prior_outputs_retained(self, tmp_path):
        bad_gazetteer = tmp_path / "gazetteer.csv"
        bad_gazetteer.write_text("site_id,canonical_name,aliases,lat,lon\nx,X,,91.5,0\n")
        config = fixture_config(tmp_path / "out", gazetteer=bad_gazetteer)
        manifest = run_pipeline(config)
        assert manifest["status"] == "failed"
        assert manifest["failed_stage"] == "postprocess"
        statuses = {s["name"]: s["status"] for s in manifest["stages"]}
        assert statuses == {
            "ingest": "ok", "featurize": "ok", "classify": "ok", "postprocess": "failed",
        }
        # the classify artifact survived the failure
        assert (tmp_path / "out" / "predictions.csv").exists()
        written = json.loads((tmp_path / "out" / "manifest.json").read_text())
        assert written == manifest
