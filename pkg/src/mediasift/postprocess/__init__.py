"""Post-classification enrichment: keywords, event chains, geolocation."""

from .events import (
    DEFAULT_OVERLAP,
    EventCluster,
    EventError,
    EventGraph,
    build_event_graph,
    events_to_json,
    extract_events,
)
from .geo import GazetteerError, GeoResolution, SiteRecord, geolocate, load_gazetteer
from .keywords import KeywordSet, extract_keywords, load_keyword_list

__all__ = [
    "DEFAULT_OVERLAP",
    "EventCluster",
    "EventError",
    "EventGraph",
    "GazetteerError",
    "GeoResolution",
    "KeywordSet",
    "SiteRecord",
    "build_event_graph",
    "events_to_json",
    "extract_events",
    "extract_keywords",
    "geolocate",
    "load_gazetteer",
    "load_keyword_list",
]
