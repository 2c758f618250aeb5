"""Ingestion: wire behavior with a fake session, thresholds, dedupe."""

import datetime as dt
import json

import pytest

from mediasift.corpus import Article
from mediasift.ingest import (
    IngestConfig,
    IngestError,
    TermFailed,
    apply_thresholds,
    article_id_for,
    dedupe_by_url,
    fetch_term,
    ingest_local,
    normalize_url,
    run_ingest,
)


def _config(**overrides):
    fields = dict(
        endpoint_url="https://api.example.test/v2/everything",
        search_terms=(("chitwan", "Chitwan National Park"), ("gir", "Gir Forest")),
        date_from=dt.date(2022, 6, 1),
        date_to=dt.date(2022, 6, 8),
        max_retries=3,
    )
    fields.update(overrides)
    return IngestConfig(**fields)


def _item(url, title="A headline", published="2022-06-03T10:00:00Z"):
    return {
        "title": title,
        "description": "desc",
        "content": "body",
        "url": url,
        "source": {"name": "The Wire"},
        "publishedAt": published,
    }


class FakeSession:
    """Scripted responses: each entry is (status, body) or an exception."""

    def __init__(self, script):
        self.script = list(script)
        self.calls = []

    def get(self, url, params, timeout):
        self.calls.append((url, dict(params), timeout))
        action = self.script.pop(0)
        if isinstance(action, Exception):
            raise action
        return action


class TestFetchTerm:
    def test_parses_items_and_attaches_site(self):
        body = json.dumps([_item("https://x.test/a"), _item("https://x.test/b")])
        session = FakeSession([(200, body)])
        articles = fetch_term(_config(), "Gir Forest", session=session, sleeper=lambda s: None)
        assert len(articles) == 2
        assert all(a.site_id == "gir" for a in articles)
        assert articles[0].id == article_id_for("https://x.test/a")
        assert articles[0].published_at == dt.date(2022, 6, 3)
        assert articles[0].source == "The Wire"

    def test_sends_query_window_params(self):
        session = FakeSession([(200, "[]")])
        fetch_term(_config(), "Gir Forest", session=session, sleeper=lambda s: None)
        _, params, timeout = session.calls[0]
        assert params["q"] == "Gir Forest"
        assert params["from"] == "2022-06-01"
        assert params["to"] == "2022-06-08"
        assert timeout == 30.0

    def test_api_key_from_named_env_var(self, monkeypatch):
        monkeypatch.setenv("MEDIASIFT_API_KEY", "sekrit")
        session = FakeSession([(200, "[]")])
        fetch_term(_config(), "Gir Forest", session=session, sleeper=lambda s: None)
        assert session.calls[0][1]["apiKey"] == "sekrit"

    def test_retries_5xx_with_doubling_backoff(self):
        body = json.dumps([_item("https://x.test/a")])
        session = FakeSession([(500, "boom"), (500, "boom"), (200, body)])
        sleeps = []
        articles = fetch_term(_config(), "Gir Forest", session=session, sleeper=sleeps.append)
        assert len(articles) == 1
        assert sleeps == [1.0, 2.0]

    def test_retries_timeouts(self):
        session = FakeSession([TimeoutError("slow"), (200, "[]")])
        sleeps = []
        articles = fetch_term(_config(), "Gir Forest", session=session, sleeper=sleeps.append)
        assert articles == []
        assert sleeps == [1.0]

    def test_404_fails_immediately_without_retry(self):
        session = FakeSession([(404, "nope")])
        sleeps = []
        with pytest.raises(TermFailed, match="HTTP 404"):
            fetch_term(_config(), "Gir Forest", session=session, sleeper=sleeps.append)
        assert sleeps == []
        assert len(session.calls) == 1

    def test_persistent_5xx_exhausts_retries(self):
        session = FakeSession([(503, "x")] * 4)
        sleeps = []
        with pytest.raises(TermFailed, match="after 4 attempts"):
            fetch_term(_config(), "Gir Forest", session=session, sleeper=sleeps.append)
        assert sleeps == [1.0, 2.0, 4.0]

    def test_malformed_json_fails_term(self):
        session = FakeSession([(200, "{not json")])
        with pytest.raises(TermFailed, match="malformed"):
            fetch_term(_config(), "Gir Forest", session=session, sleeper=lambda s: None)

    def test_non_array_payload_fails_term(self):
        session = FakeSession([(200, '{"articles": []}')])
        with pytest.raises(TermFailed, match="expected a JSON array"):
            fetch_term(_config(), "Gir Forest", session=session, sleeper=lambda s: None)

    def test_item_missing_fields_fails_term(self):
        session = FakeSession([(200, json.dumps([{"title": "x"}]))])
        with pytest.raises(TermFailed, match="malformed"):
            fetch_term(_config(), "Gir Forest", session=session, sleeper=lambda s: None)

    def test_unknown_term_rejected(self):
        with pytest.raises(IngestError, match="not in the configured"):
            fetch_term(_config(), "Atlantis", session=FakeSession([]), sleeper=lambda s: None)


class TestConfigValidation:
    def test_min_above_max_rejected(self):
        with pytest.raises(IngestError, match="exceeds max_results"):
            _config(min_results=200, max_results=100)

    def test_nonpositive_timeout_rejected(self):
        with pytest.raises(IngestError, match="timeout"):
            _config(timeout=0)

    def test_unbounded_max_allows_any_min(self):
        config = _config(min_results=10_000, max_results=None)
        assert config.max_results is None


def _articles(n, prefix="https://x.test/p"):
    return [
        Article(
            id=article_id_for(f"{prefix}{i}"), site_id="s", title=f"t{i}",
            url=f"{prefix}{i}", source="src", published_at=dt.date(2022, 6, 1),
        )
        for i in range(n)
    ]


class TestApplyThresholds:
    def test_drops_terms_outside_bounds(self):
        config = _config(min_results=1, max_results=100)
        results = {"A": [], "B": _articles(5), "C": _articles(500)}
        kept, report = apply_thresholds(results, config)
        assert set(kept) == {"B"}
        assert report.removed == (("A", 0, "below"), ("C", 500, "above"))

    def test_identity_when_all_within_bounds(self):
        config = _config(min_results=1, max_results=100)
        results = {"A": _articles(1), "B": _articles(100)}
        kept, report = apply_thresholds(results, config)
        assert set(kept) == {"A", "B"}
        assert report.removed == ()

    def test_sentinel_bounds_keep_everything(self):
        config = _config(min_results=0, max_results=None)
        results = {"A": [], "B": _articles(500)}
        kept, report = apply_thresholds(results, config)
        assert set(kept) == {"A", "B"}
        assert report.removed == ()

    def test_kept_counts_lie_within_bounds(self):
        config = _config(min_results=2, max_results=4)
        results = {t: _articles(i, prefix=f"https://{t}.test/") for i, t in enumerate("abcdef")}
        kept, _ = apply_thresholds(results, config)
        assert all(2 <= len(v) <= 4 for v in kept.values())


def _one(url):
    return Article(id=article_id_for(url), site_id="s", title="t", url=url,
                   source="src", published_at=dt.date(2022, 6, 1))


class TestDedupeByUrl:
    def test_identical_urls_keep_earlier(self):
        a, b = _one("https://x.test/a"), _one("https://x.test/a")
        assert dedupe_by_url([a, b]) == [a]

    def test_trailing_slash_is_ignored(self):
        a, b = _one("https://x.test/a/"), _one("https://x.test/a")
        assert dedupe_by_url([a, b]) == [a]

    def test_query_string_is_ignored(self):
        a, b = _one("https://x.test/a?utm=1"), _one("https://x.test/a?utm=2")
        assert dedupe_by_url([a, b]) == [a]

    def test_host_case_is_ignored(self):
        a, b = _one("https://X.TEST/a"), _one("https://x.test/a")
        assert dedupe_by_url([a, b]) == [a]

    def test_disjoint_urls_pass_through(self):
        items = [_one("https://x.test/a"), _one("https://x.test/b")]
        assert dedupe_by_url(items) == items

    def test_idempotent(self):
        items = [_one("https://x.test/a"), _one("https://x.test/a/"), _one("https://x.test/b")]
        once = dedupe_by_url(items)
        assert dedupe_by_url(once) == once

    def test_normalize_url_examples(self):
        assert normalize_url("https://X.test/a/?q=1") == "https://x.test/a"


class ScriptedByTerm:
    """Routes each GET to a per-term script, keyed by the q parameter."""

    def __init__(self, scripts):
        self.scripts = {term: list(script) for term, script in scripts.items()}

    def get(self, url, params, timeout):
        return self.scripts[params["q"]].pop(0)


class TestRunIngest:
    def test_failed_term_recorded_and_run_continues(self):
        body = json.dumps([_item("https://x.test/a")])
        session = ScriptedByTerm({
            "Chitwan National Park": [(404, "gone")],
            "Gir Forest": [(200, body)],
        })
        articles, report = run_ingest(_config(), session=session, sleeper=lambda s: None)
        assert len(articles) == 1
        assert report.failed == (("Chitwan National Park", "HTTP 404"),)
        assert report.kept_articles == 1

    def test_merges_in_configured_term_order(self):
        session = ScriptedByTerm({
            "Chitwan National Park": [(200, json.dumps([_item("https://x.test/c")]))],
            "Gir Forest": [(200, json.dumps([_item("https://x.test/g")]))],
        })
        articles, _ = run_ingest(_config(), session=session, sleeper=lambda s: None)
        assert [a.url for a in articles] == ["https://x.test/c", "https://x.test/g"]

    def test_cross_term_duplicates_collapse(self):
        body = json.dumps([_item("https://x.test/same")])
        session = ScriptedByTerm({
            "Chitwan National Park": [(200, body)],
            "Gir Forest": [(200, body)],
        })
        articles, report = run_ingest(_config(), session=session, sleeper=lambda s: None)
        assert len(articles) == 1
        assert report.fetched == (("Chitwan National Park", 1), ("Gir Forest", 1))


class TestIngestLocal:
    def test_reads_jsonl_drops_sorted(self, tmp_path):
        a = _one("https://x.test/a").to_json()
        b = _one("https://x.test/b").to_json()
        (tmp_path / "b.jsonl").write_text(json.dumps(b) + "\n")
        (tmp_path / "a.jsonl").write_text(json.dumps(a) + "\n")
        articles = ingest_local(tmp_path)
        assert [article.url for article in articles] == ["https://x.test/a", "https://x.test/b"]

    def test_dedupes_across_files(self, tmp_path):
        a = _one("https://x.test/a").to_json()
        (tmp_path / "one.jsonl").write_text(json.dumps(a) + "\n")
        (tmp_path / "two.jsonl").write_text(json.dumps(a) + "\n")
        assert len(ingest_local(tmp_path)) == 1

    def test_bad_line_reports_location(self, tmp_path):
        (tmp_path / "bad.jsonl").write_text("{broken\n")
        with pytest.raises(IngestError, match="bad.jsonl:1"):
            ingest_local(tmp_path)

    def test_missing_directory_rejected(self, tmp_path):
        with pytest.raises(IngestError, match="not a directory"):
            ingest_local(tmp_path / "absent")
