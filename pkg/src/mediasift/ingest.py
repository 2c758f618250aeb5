"""Article retrieval by conservation-site search terms.

Fetches a NewsAPI-shaped JSON endpoint per search term with retry and
backoff, applies per-term result-count thresholds, deduplicates by
normalized URL, and also reads local JSONL drops for offline runs. The
HTTP session and the backoff sleeper are injectable, so every wire
behavior is testable without a network.
"""

from __future__ import annotations

import datetime as dt
import hashlib
import json
import os
import time
import urllib.error
import urllib.parse
import urllib.request
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Optional, Sequence

from .corpus import Article, CorpusError

_BACKOFF_BASE_SECONDS = 1.0


class IngestError(ValueError):
    pass


class TermFailed(IngestError):
    """One search term could not be fetched; the run records it and goes on."""

    def __init__(self, term: str, reason: str) -> None:
        super().__init__(f"term {term!r} failed: {reason}")
        self.term = term
        self.reason = reason


@dataclass(frozen=True)
class IngestConfig:
    """Endpoint, credentials source, search terms, and run thresholds."""

    endpoint_url: str
    search_terms: tuple[tuple[str, str], ...]  # (site_id, term) pairs
    date_from: dt.date
    date_to: dt.date
    api_key_env: str = "MEDIASIFT_API_KEY"
    min_results: int = 1
    max_results: Optional[int] = 100  # None lifts the upper bound
    timeout: float = 30.0
    max_retries: int = 3
    parallelism: int = 4

    def __post_init__(self) -> None:
        object.__setattr__(
            self,
            "search_terms",
            tuple((str(s), str(t)) for s, t in self.search_terms),
        )
        if self.max_results is not None and self.min_results > self.max_results:
            raise IngestError(
                f"min_results {self.min_results} exceeds max_results {self.max_results}"
            )
        if self.min_results < 0:
            raise IngestError("min_results must be nonnegative")
        if self.timeout <= 0:
            raise IngestError("timeout must be positive")
        if self.max_retries < 0:
            raise IngestError("max_retries must be nonnegative")
        if self.parallelism < 1:
            raise IngestError("parallelism must be at least 1")

    def site_for(self, term: str) -> str:
        for site_id, candidate in self.search_terms:
            if candidate == term:
                return site_id
        raise IngestError(f"term {term!r} is not in the configured search terms")

    def api_key(self) -> Optional[str]:
        return os.environ.get(self.api_key_env)


class UrllibSession:
    """Minimal GET client over the standard library."""

    def get(self, url: str, params: Mapping[str, str], timeout: float) -> tuple[int, str]:
        full = url + "?" + urllib.parse.urlencode(params)
        try:
            with urllib.request.urlopen(full, timeout=timeout) as response:
                return response.status, response.read().decode("utf-8")
        except urllib.error.HTTPError as exc:
            return exc.code, exc.read().decode("utf-8", errors="replace")


def article_id_for(url: str) -> str:
    return hashlib.sha1(url.encode("utf-8")).hexdigest()[:16]


def _adapt_item(obj: Mapping, site_id: str) -> Article:
    """One NewsAPI-shaped item -> Article. Raises KeyError/ValueError on
    structurally broken items; the caller converts that to a term failure."""
    url = str(obj["url"])
    published = str(obj["publishedAt"])
    date = dt.datetime.fromisoformat(published.replace("Z", "+00:00")).date()
    return Article(
        id=article_id_for(url),
        site_id=site_id,
        title=str(obj["title"]),
        url=url,
        source=str(obj.get("source", {}).get("name", "unknown")),
        published_at=date,
        description=str(obj.get("description") or ""),
        content=str(obj.get("content") or ""),
    )


def fetch_term(
    config: IngestConfig,
    term: str,
    *,
    session=None,
    sleeper: Callable[[float], None] = time.sleep,
) -> list[Article]:
    """GET articles for one term, retrying 5xx/timeouts with doubling backoff.

    4xx responses, malformed payloads, and retry exhaustion raise
    TermFailed; a multi-term run records those and continues.
    """
    session = session or UrllibSession()
    site_id = config.site_for(term)
    params = {
        "q": term,
        "from": config.date_from.isoformat(),
        "to": config.date_to.isoformat(),
    }
    key = config.api_key()
    if key:
        params["apiKey"] = key

    attempts = config.max_retries + 1
    for attempt in range(attempts):
        try:
            status, body = session.get(config.endpoint_url, params, config.timeout)
        except (TimeoutError, urllib.error.URLError) as exc:
            if attempt + 1 == attempts:
                raise TermFailed(term, f"gave up after {attempts} attempts: {exc}")
            sleeper(_BACKOFF_BASE_SECONDS * 2**attempt)
            continue
        if 400 <= status < 500:
            raise TermFailed(term, f"HTTP {status}")
        if status >= 500:
            if attempt + 1 == attempts:
                raise TermFailed(term, f"HTTP {status} after {attempts} attempts")
            sleeper(_BACKOFF_BASE_SECONDS * 2**attempt)
            continue
        try:
            payload = json.loads(body)
            if not isinstance(payload, list):
                raise ValueError(f"expected a JSON array, got {type(payload).__name__}")
            return [_adapt_item(item, site_id) for item in payload]
        except (ValueError, KeyError, TypeError, CorpusError) as exc:
            raise TermFailed(term, f"malformed response: {exc}") from None
    raise TermFailed(term, "unreachable")  # pragma: no cover


@dataclass(frozen=True)
class ThresholdReport:
    """Terms dropped by the result-count bounds, and why."""

    removed: tuple[tuple[str, int, str], ...]  # (term, count, "below"|"above")


def apply_thresholds(
    results: Mapping[str, Sequence[Article]], config: IngestConfig
) -> tuple[dict[str, list[Article]], ThresholdReport]:
    """Drop terms whose result count falls outside [min_results, max_results]."""
    kept: dict[str, list[Article]] = {}
    removed: list[tuple[str, int, str]] = []
    for term, articles in results.items():
        count = len(articles)
        if count < config.min_results:
            removed.append((term, count, "below"))
        elif config.max_results is not None and count > config.max_results:
            removed.append((term, count, "above"))
        else:
            kept[term] = list(articles)
    return kept, ThresholdReport(removed=tuple(removed))


def normalize_url(url: str) -> str:
    parts = urllib.parse.urlsplit(url)
    return f"{parts.scheme}://{parts.netloc.lower()}{parts.path.rstrip('/')}"


def dedupe_by_url(articles: Sequence[Article]) -> list[Article]:
    """Keep the first article per normalized URL, preserving order."""
    seen: set[str] = set()
    out: list[Article] = []
    for article in articles:
        key = normalize_url(article.url)
        if key not in seen:
            seen.add(key)
            out.append(article)
    return out


@dataclass(frozen=True)
class IngestReport:
    """Outcome of one multi-term run."""

    fetched: tuple[tuple[str, int], ...]  # (term, article count), in term order
    failed: tuple[tuple[str, str], ...]  # (term, reason)
    thresholds: ThresholdReport
    kept_articles: int


def run_ingest(
    config: IngestConfig,
    *,
    session=None,
    sleeper: Callable[[float], None] = time.sleep,
) -> tuple[list[Article], IngestReport]:
    """Fetch every configured term, filter, and merge.

    Terms run concurrently up to the parallelism bound, but results merge
    in configured term order, so output never depends on scheduling.
    """
    session = session or UrllibSession()
    terms = [term for _, term in config.search_terms]

    def one(term: str):
        try:
            return term, fetch_term(config, term, session=session, sleeper=sleeper), None
        except TermFailed as exc:
            return term, [], exc.reason

    with ThreadPoolExecutor(max_workers=config.parallelism) as pool:
        outcomes = list(pool.map(one, terms))

    results: dict[str, list[Article]] = {}
    failed: list[tuple[str, str]] = []
    for term, articles, reason in outcomes:
        if reason is None:
            results[term] = articles
        else:
            failed.append((term, reason))
    kept, report = apply_thresholds(results, config)
    merged: list[Article] = []
    for term in terms:
        merged.extend(kept.get(term, []))
    articles = dedupe_by_url(merged)
    return articles, IngestReport(
        fetched=tuple((term, len(results.get(term, []))) for term in terms),
        failed=tuple(failed),
        thresholds=report,
        kept_articles=len(articles),
    )


def ingest_local(directory: str | Path) -> list[Article]:
    """Offline mode: read every *.jsonl drop (sorted) and dedupe by URL."""
    directory = Path(directory)
    if not directory.is_dir():
        raise IngestError(f"{directory} is not a directory")
    articles: list[Article] = []
    for path in sorted(directory.glob("*.jsonl")):
        with path.open(encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    articles.append(Article.from_json(json.loads(line)))
                except (json.JSONDecodeError, KeyError, CorpusError) as exc:
                    raise IngestError(f"{path}:{line_no}: {exc}") from None
    return dedupe_by_url(articles)
