"""Stage 1: building footprints from a mask or from imported polygons."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .errors import GeoJsonError, InvalidParams
from .geo_core import Footprint, FootprintSource, MultiPolygon, merge_contiguous, simplify
from .io.geojson import FeatureRecord, parse_geojson
from .raster_ingest import Connectivity, GeoGrid, component_cells, connected_components, polygonize_cells


@dataclass(frozen=True)
class IdentificationConfig:
    min_area_m2: float = 25.0
    # None means half a pixel
    simplify_tolerance_m: float | None = None
    connectivity: Connectivity = Connectivity.EIGHT
    merge_gap_m: float = 0.0

    def __post_init__(self):
        for name in ("min_area_m2", "merge_gap_m", "simplify_tolerance_m"):
            v = getattr(self, name)
            if v is not None and not (v >= 0 and math.isfinite(v)):
                raise InvalidParams(f"{name} must be finite and >= 0, got {v}")

    def tolerance_for(self, g: GeoGrid) -> float:
        if self.simplify_tolerance_m is None:
            return 0.5 * g.pixel_size
        return self.simplify_tolerance_m


def identify_buildings(g: GeoGrid, cfg: IdentificationConfig = IdentificationConfig(),
                       threads: int = 1) -> list[Footprint]:
    """Label, polygonize, simplify, drop small structures, merge contiguous footprints.

    Footprint ids are component labels (row-major scan order). Small
    structures are removed before merging so a shed cannot weld two houses.
    """
    labeling = connected_components(g, cfg.connectivity)
    cells = component_cells(labeling)
    tol = cfg.tolerance_for(g)

    def build(c):
        poly = simplify(polygonize_cells(g, cells[c], cfg.connectivity), tol)
        return Footprint(c, poly, FootprintSource.MASK_DERIVED)

    ids = range(1, labeling.count + 1)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            fps = list(pool.map(build, ids))
    else:
        fps = [build(c) for c in ids]
    kept = [f for f in fps if f.area_m2 >= cfg.min_area_m2]
    return merge_contiguous(kept, cfg.merge_gap_m)


def footprints_from_records(records: list[FeatureRecord], id_property: str | None = None) -> list[Footprint]:
    """One footprint per polygon part.

    Without ``id_property`` ids count parts in document order starting at 1.
    With it, each feature must carry a unique non-negative integer under that
    key and be a single polygon.
    """
    out = []
    seen: set[int] = set()
    next_id = 1
    for i, rec in enumerate(records):
        parts = rec.geometry.polygons if isinstance(rec.geometry, MultiPolygon) else (rec.geometry,)
        if id_property is None:
            for part in parts:
                out.append(Footprint(next_id, part, FootprintSource.IMPORTED))
                next_id += 1
            continue
        path = f"$.features[{i}]"
        fid = rec.properties.get(id_property)
        if isinstance(fid, float) and fid.is_integer():
            fid = int(fid)
        if not isinstance(fid, int) or isinstance(fid, bool) or fid < 0:
            raise GeoJsonError(f"property {id_property!r} must be a non-negative integer", f"{path}.properties", i)
        if fid in seen:
            raise GeoJsonError(f"duplicate footprint id {fid}", f"{path}.properties", i)
        if len(parts) != 1:
            raise GeoJsonError("a feature with an explicit id must be a single polygon", f"{path}.geometry", i)
        seen.add(fid)
        source = FootprintSource.MASK_DERIVED if rec.properties.get("source") == "mask" else FootprintSource.IMPORTED
        out.append(Footprint(fid, parts[0], source))
    out.sort(key=lambda f: f.id)
    return out


def import_footprints(geojson: bytes | str, id_property: str | None = None) -> list[Footprint]:
    return footprints_from_records(parse_geojson(geojson), id_property)


def footprint_records(fps: list[Footprint], extra: dict[int, dict] | None = None) -> list[FeatureRecord]:
    recs = []
    for f in fps:
        props = {"id": f.id, "area_m2": f.area_m2, "source": f.source.value}
        if extra and f.id in extra:
            props.update(extra[f.id])
        recs.append(FeatureRecord(f.geometry, props))
    return recs
