"""GeoJSON subset: a FeatureCollection of Polygon / MultiPolygon features.

Coordinates are taken to be projected meters; a ``crs`` member is rejected.
Properties must be flat (string, number or boolean values).

Emission is canonical: one feature per line, properties in sorted key order,
floats with 17 significant digits and rings explicitly closed, so
``emit(parse(emit(x))) == emit(x)`` byte for byte.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from ..errors import GeoJsonError, InvalidPolygon, JsonSyntaxError
from ..geo_core import MultiPolygon, Polygon

Properties = dict[str, "str | int | float | bool"]


@dataclass(frozen=True)
class FeatureRecord:
    geometry: Polygon | MultiPolygon
    properties: Properties = field(default_factory=dict)


def _reject_constant(name):
    raise ValueError(f"non-standard JSON constant {name}")


def _parse_int(text: str):
    # keep the sign of "-0" so re-emission is stable
    return -0.0 if text == "-0" else int(text)


def _no_duplicates(pairs):
    obj = {}
    for k, v in pairs:
        if k in obj:
            raise ValueError(f"duplicate key {k!r}")
        obj[k] = v
    return obj


def _load_json(raw: bytes | str):
    if isinstance(raw, bytes):
        try:
            text = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            line = raw[: exc.start].count(b"\n") + 1
            col = exc.start - (raw.rfind(b"\n", 0, exc.start) + 1) + 1
            raise JsonSyntaxError("invalid UTF-8", exc.start, line, col) from None
    else:
        text = raw
    try:
        return json.loads(text, parse_constant=_reject_constant, parse_int=_parse_int,
                          object_pairs_hook=_no_duplicates)
    except json.JSONDecodeError as exc:
        raise JsonSyntaxError(exc.msg, exc.pos, exc.lineno, exc.colno) from None
    except (ValueError, RecursionError) as exc:
        # hooks fire after a value is scanned; only the message is known
        raise JsonSyntaxError(str(exc) or type(exc).__name__, 0, 1, 1) from None


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _ring(coords, path: str, index: int | None):
    if not isinstance(coords, list):
        raise GeoJsonError("ring must be an array of positions", path, index)
    if len(coords) < 4:
        raise GeoJsonError(f"ring needs at least 4 positions, got {len(coords)}", path, index)
    pts = []
    for j, pos in enumerate(coords):
        if not isinstance(pos, list) or len(pos) != 2 or not all(_is_number(v) for v in pos):
            raise GeoJsonError("position must be [x, y] with numeric values", f"{path}[{j}]", index)
        try:
            x, y = float(pos[0]), float(pos[1])
        except OverflowError:  # integers too large for a double
            x = y = math.inf
        if not (math.isfinite(x) and math.isfinite(y)):
            raise GeoJsonError("coordinate is not finite", f"{path}[{j}]", index)
        pts.append((x, y))
    if pts[0] != pts[-1]:
        raise GeoJsonError("ring is not closed (first position differs from last)", path, index)
    return tuple(pts[:-1])


def _polygon(coords, path: str, index: int | None) -> Polygon:
    if not isinstance(coords, list) or not coords:
        raise GeoJsonError("Polygon coordinates must be a non-empty array of rings", path, index)
    rings = [_ring(r, f"{path}[{k}]", index) for k, r in enumerate(coords)]
    try:
        return Polygon(rings[0], tuple(rings[1:]))
    except InvalidPolygon as exc:
        raise GeoJsonError(f"invalid polygon: {exc.message}", path, index) from None


def parse_geometry(geom, path: str, index: int | None = None) -> Polygon | MultiPolygon:
    if not isinstance(geom, dict):
        raise GeoJsonError("geometry must be an object", path, index)
    gtype = geom.get("type")
    if gtype not in ("Polygon", "MultiPolygon"):
        raise GeoJsonError(f"unsupported geometry type {gtype!r} (Polygon or MultiPolygon only)", path, index)
    extra = set(geom) - {"type", "coordinates", "bbox"}
    if extra:
        raise GeoJsonError(f"unexpected geometry members {sorted(extra)}", path, index)
    if "coordinates" not in geom:
        raise GeoJsonError("geometry has no coordinates", path, index)
    coords = geom["coordinates"]
    cpath = f"{path}.coordinates"
    if gtype == "Polygon":
        return _polygon(coords, cpath, index)
    if not isinstance(coords, list) or not coords:
        raise GeoJsonError("MultiPolygon coordinates must be a non-empty array", cpath, index)
    return MultiPolygon(tuple(_polygon(c, f"{cpath}[{k}]", index) for k, c in enumerate(coords)))


def _properties(props, path: str, index: int) -> Properties:
    if props is None:
        return {}
    if not isinstance(props, dict):
        raise GeoJsonError("properties must be an object or null", path, index)
    for k, v in props.items():
        if isinstance(v, bool) or isinstance(v, str):
            continue
        if _is_number(v):
            if isinstance(v, float) and not math.isfinite(v):
                raise GeoJsonError(f"property {k!r} is not finite", f"{path}.{k}", index)
            continue
        raise GeoJsonError(f"property {k!r} must be a string, number or boolean", f"{path}.{k}", index)
    return dict(props)


def parse_geojson(raw: bytes | str) -> list[FeatureRecord]:
    doc = _load_json(raw)
    if not isinstance(doc, dict) or doc.get("type") != "FeatureCollection":
        raise GeoJsonError("top level must be a FeatureCollection object", "$")
    if "crs" in doc:
        raise GeoJsonError("crs member not supported (coordinates must already be projected)", "$.crs")
    features = doc.get("features")
    if not isinstance(features, list):
        raise GeoJsonError("features must be an array", "$.features")
    records = []
    for i, feat in enumerate(features):
        path = f"$.features[{i}]"
        if not isinstance(feat, dict) or feat.get("type") != "Feature":
            raise GeoJsonError("feature must be an object with type 'Feature'", path, i)
        if "geometry" not in feat or feat["geometry"] is None:
            raise GeoJsonError("feature has no geometry", f"{path}.geometry", i)
        geometry = parse_geometry(feat["geometry"], f"{path}.geometry", i)
        records.append(FeatureRecord(geometry, _properties(feat.get("properties"), f"{path}.properties", i)))
    return records


# -- emission -------------------------------------------------------------------

def format_number(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if not math.isfinite(v):
        raise ValueError(f"cannot emit non-finite number {v!r}")
    return format(v, ".17g")


def _value(v) -> str:
    if isinstance(v, str):
        return json.dumps(v)
    return format_number(v)


def _ring_text(ring) -> str:
    closed = list(ring) + [ring[0]]
    return "[" + ",".join(f"[{format_number(float(x))},{format_number(float(y))}]" for x, y in closed) + "]"


def _polygon_text(p: Polygon) -> str:
    return "[" + ",".join(_ring_text(r) for r in p.rings()) + "]"


def geometry_text(g: Polygon | MultiPolygon) -> str:
    if isinstance(g, MultiPolygon):
        return '{"type":"MultiPolygon","coordinates":[' + ",".join(_polygon_text(p) for p in g.polygons) + "]}"
    return '{"type":"Polygon","coordinates":' + _polygon_text(g) + "}"


def emit_geojson(records) -> bytes:
    feats = []
    for rec in records:
        props = ",".join(f"{json.dumps(k)}:{_value(rec.properties[k])}" for k in sorted(rec.properties))
        feats.append('{"type":"Feature","properties":{' + props + '},"geometry":' + geometry_text(rec.geometry) + "}")
    if not feats:
        return b'{"type":"FeatureCollection","features":[]}\n'
    return ('{"type":"FeatureCollection","features":[\n' + ",\n".join(feats) + "\n]}\n").encode("utf-8")
