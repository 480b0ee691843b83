"""Optional Overpass fetch client with record/replay.

The pipeline never needs the network: by default `fetch` replays a recorded
response byte-for-byte. Live fetching runs only when explicitly requested,
converts the Overpass JSON to the same GeoJSON FeatureCollection layout the
parsers consume, and records it for later replay.
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

from .ioutil import atomic_write_bytes

QUERY_TEMPLATE_RESOURCE = "overpass_queries.txt"


def query_template() -> str:
    """The shipped Overpass query template for POIs and parking polygons."""
    return resources.files("lotrank.resources").joinpath(QUERY_TEMPLATE_RESOURCE).read_text("utf-8")


def overpass_to_geojson(overpass_doc: dict) -> bytes:
    """Convert an Overpass `out geom` JSON response to a FeatureCollection.

    Nodes become Point features; closed ways become Polygon features. Tags map
    to properties unchanged.
    """
    features = []
    for element in overpass_doc.get("elements", []):
        tags = element.get("tags", {})
        etype = element.get("type")
        if etype == "node":
            geometry = {"type": "Point", "coordinates": [element["lon"], element["lat"]]}
        elif etype == "way" and element.get("geometry"):
            ring = [[p["lon"], p["lat"]] for p in element["geometry"]]
            if len(ring) < 4 or ring[0] != ring[-1]:
                continue
            geometry = {"type": "Polygon", "coordinates": [ring]}
        else:
            continue
        features.append(
            {
                "type": "Feature",
                "id": f"{etype}/{element.get('id')}",
                "properties": tags,
                "geometry": geometry,
            }
        )
    doc = {"type": "FeatureCollection", "features": features}
    return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode("utf-8")


def fetch(
    query: str,
    recording: Path | str,
    live: bool = False,
    endpoint: str = "https://overpass-api.de/api/interpreter",
    timeout_s: float = 120.0,
) -> bytes:
    """Return GeoJSON bytes for a query: replay the recording unless live.

    In live mode the response is converted to GeoJSON and written to the
    recording path so subsequent runs replay it unchanged.
    """
    recording = Path(recording)
    if not live:
        if not recording.exists():
            raise FileNotFoundError(
                f"no recorded response at {recording}; run with live fetching to create one"
            )
        return recording.read_bytes()

    from urllib.request import Request, urlopen

    request = Request(endpoint, data=("data=" + query).encode("utf-8"))
    with urlopen(request, timeout=timeout_s) as response:
        payload = json.loads(response.read().decode("utf-8"))
    geojson = overpass_to_geojson(payload)
    atomic_write_bytes(recording, geojson)
    return geojson
