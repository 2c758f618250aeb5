"""Gazetteer-backed geolocation of articles to conservation sites.

Coordinates only ever come from gazetteer rows: an article resolves by
its site id, by a name/alias appearing in its title, or not at all.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from ..corpus import Article


class GazetteerError(ValueError):
    pass


@dataclass(frozen=True)
class SiteRecord:
    """One conservation site: identifiers, names, and coordinates."""

    site_id: str
    canonical_name: str
    aliases: tuple[str, ...]
    latitude: float
    longitude: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "aliases", tuple(self.aliases))
        if not self.site_id:
            raise GazetteerError("site_id must be nonempty")
        if not -90.0 <= self.latitude <= 90.0:
            raise GazetteerError(
                f"site {self.site_id!r}: latitude {self.latitude} outside [-90, 90]"
            )
        if not -180.0 <= self.longitude <= 180.0:
            raise GazetteerError(
                f"site {self.site_id!r}: longitude {self.longitude} outside [-180, 180]"
            )

    def names(self) -> tuple[str, ...]:
        return (self.canonical_name, *self.aliases)


@dataclass(frozen=True)
class GeoResolution:
    """Where an article resolved to, and by which rule."""

    site_id: str
    latitude: float
    longitude: float
    method: str  # "directory" (site id lookup) or "alias" (title match)


def load_gazetteer(path: str | Path) -> list[SiteRecord]:
    """Read ``site_id,canonical_name,aliases,lat,lon`` rows; aliases are
    |-separated."""
    path = Path(path)
    records: list[SiteRecord] = []
    seen: set[str] = set()
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        required = {"site_id", "canonical_name", "aliases", "lat", "lon"}
        if reader.fieldnames is None or not required <= set(reader.fieldnames):
            raise GazetteerError(
                f"{path}: expected columns {sorted(required)}, got {reader.fieldnames}"
            )
        for line, row in enumerate(reader, start=2):
            site_id = row["site_id"].strip()
            if site_id in seen:
                raise GazetteerError(f"{path}:{line}: duplicate site_id {site_id!r}")
            seen.add(site_id)
            aliases = tuple(a.strip() for a in row["aliases"].split("|") if a.strip())
            try:
                latitude = float(row["lat"])
                longitude = float(row["lon"])
            except ValueError as exc:
                raise GazetteerError(f"{path}:{line}: bad coordinates: {exc}") from None
            records.append(
                SiteRecord(
                    site_id=site_id,
                    canonical_name=row["canonical_name"].strip(),
                    aliases=aliases,
                    latitude=latitude,
                    longitude=longitude,
                )
            )
    return records


def geolocate(
    article: Article, gazetteer: Sequence[SiteRecord]
) -> Optional[GeoResolution]:
    """Resolve an article to coordinates, or None when nothing matches.

    The site id lookup wins; otherwise the first gazetteer record whose
    canonical name or alias appears (case-insensitively) in the article
    title is used.
    """
    for record in gazetteer:
        if record.site_id == article.site_id:
            return GeoResolution(
                site_id=record.site_id,
                latitude=record.latitude,
                longitude=record.longitude,
                method="directory",
            )
    title = article.title.lower()
    for record in gazetteer:
        if any(name and name.lower() in title for name in record.names()):
            return GeoResolution(
                site_id=record.site_id,
                latitude=record.latitude,
                longitude=record.longitude,
                method="alias",
            )
    return None
