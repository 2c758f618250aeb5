"""Event-chain extraction: same-site articles become a keyword-overlap
graph, and the events around an anchor article are the maximal cliques
containing it.
"""

from __future__ import annotations

import datetime as dt
import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from ..corpus import Article
from .keywords import KeywordSet


class EventError(ValueError):
    pass


DEFAULT_OVERLAP = 3


@dataclass(frozen=True)
class EventGraph:
    """Keyword-overlap graph over one conservation site's articles.

    An edge joins two articles whose combined keyword sets share at least
    ``k`` entries under lowercase normalization.
    """

    site_id: str
    nodes: tuple[str, ...]
    edges: frozenset[tuple[str, str]]
    k: int
    dates: Mapping[str, dt.date] = field(default_factory=dict)

    def neighbors(self, node: str) -> frozenset[str]:
        out = set()
        for a, b in self.edges:
            if a == node:
                out.add(b)
            elif b == node:
                out.add(a)
        return frozenset(out)


@dataclass(frozen=True)
class EventCluster:
    """One event: a maximal clique around the anchor, oldest article first."""

    anchor: str
    members: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "members", tuple(self.members))
        if self.anchor not in self.members:
            raise EventError(f"anchor {self.anchor!r} missing from its own cluster")


def build_event_graph(
    articles: Sequence[Article],
    keyword_sets: Iterable[KeywordSet],
    k: int = DEFAULT_OVERLAP,
) -> EventGraph:
    """Connect same-site articles sharing at least ``k`` keywords."""
    if not articles:
        raise EventError("cannot build an event graph from zero articles")
    if k < 1:
        raise EventError(f"overlap threshold must be at least 1, got {k}")
    site_ids = {article.site_id for article in articles}
    if len(site_ids) > 1:
        raise EventError(f"articles span multiple sites: {sorted(site_ids)}")
    by_id = {ks.article_id: ks for ks in keyword_sets}
    missing = [article.id for article in articles if article.id not in by_id]
    if missing:
        raise EventError(f"articles without keyword sets: {missing}")

    nodes = tuple(article.id for article in articles)
    normalized = {article.id: by_id[article.id].normalized() for article in articles}
    edges = set()
    for i, a in enumerate(nodes):
        for b in nodes[i + 1 :]:
            if len(normalized[a] & normalized[b]) >= k:
                edges.add((a, b) if a <= b else (b, a))
    dates = {article.id: article.published_at for article in articles}
    return EventGraph(
        site_id=articles[0].site_id,
        nodes=nodes,
        edges=frozenset(edges),
        k=k,
        dates=dates,
    )


def _maximal_cliques(adjacency: Mapping[str, frozenset[str]],
                     r: frozenset[str], p: frozenset[str], x: frozenset[str],
                     out: list[frozenset[str]]) -> None:
    # branch and bound with a max-degree pivot: only non-neighbors of the
    # pivot branch, since any clique missing all of them must include it
    if not p and not x:
        out.append(r)
        return
    pivot = max(p | x, key=lambda v: (len(adjacency[v] & p), v))
    for v in sorted(p - adjacency[pivot]):
        _maximal_cliques(adjacency, r | {v}, p & adjacency[v], x & adjacency[v], out)
        p = p - {v}
        x = x | {v}


def extract_events(graph: EventGraph, anchor: str) -> list[EventCluster]:
    """All events involving the anchor article.

    Every maximal clique containing the anchor lies inside its closed
    neighborhood, so enumeration is restricted there. Clusters come back
    largest first, ties broken by earliest member date, then by members.
    """
    if anchor not in graph.nodes:
        raise EventError(f"anchor {anchor!r} is not in the graph")
    neighborhood = graph.neighbors(anchor) | {anchor}
    adjacency = {
        node: graph.neighbors(node) & neighborhood for node in neighborhood
    }
    cliques: list[frozenset[str]] = []
    _maximal_cliques(
        adjacency,
        r=frozenset([anchor]),
        p=frozenset(adjacency[anchor]),
        x=frozenset(),
        out=cliques,
    )

    def member_order(article_id: str):
        return (graph.dates.get(article_id, dt.date.min), article_id)

    clusters = [
        EventCluster(anchor=anchor, members=tuple(sorted(clique, key=member_order)))
        for clique in cliques
    ]
    clusters.sort(key=lambda c: (-len(c.members), member_order(c.members[0]), c.members))
    return clusters


def events_to_json(
    clusters: Sequence[EventCluster],
    articles_by_id: Mapping[str, Article],
    site_id: str,
) -> str:
    """The events interchange format: one object per cluster."""
    payload = []
    for cluster in clusters:
        members = []
        for article_id in cluster.members:
            article = articles_by_id[article_id]
            members.append(
                {
                    "id": article.id,
                    "date": article.published_at.isoformat(),
                    "title": article.title,
                }
            )
        payload.append(
            {"anchor": cluster.anchor, "members": members, "site_id": site_id}
        )
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"
