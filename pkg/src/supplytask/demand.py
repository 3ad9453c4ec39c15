"""Stage 3: per-building annual demand, zone totals and deviation from a reference."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .errors import InvalidParams
from .geo_core import Footprint, MultiPolygon, Polygon, point_in_polygon, polygon_centroid
from .typology import ResidentialBuildingType, TypeAssignment

UNASSIGNED = "unassigned"


@dataclass(frozen=True)
class DemandParams:
    household_annual_kwh: float

    def __post_init__(self):
        v = self.household_annual_kwh
        if not (v > 0 and math.isfinite(v)):
            raise InvalidParams(f"household_annual_kwh must be positive and finite, got {v!r}")


@dataclass(frozen=True)
class BuildingDemand:
    footprint_id: int
    area_m2: float
    type_id: str
    reference_area_m2: float
    households: int
    annual_kwh: float


def building_demand(area_m2: float, rbt: ResidentialBuildingType, params: DemandParams) -> float:
    """Annual demand: floor-area share of the reference building times its households' consumption."""
    if not (rbt.reference_area_m2 > 0):
        raise InvalidParams(f"reference area of {rbt.type_id!r} must be > 0")
    if not (area_m2 >= 0 and math.isfinite(area_m2)):
        raise InvalidParams(f"building area must be finite and >= 0, got {area_m2!r}")
    return (area_m2 / rbt.reference_area_m2) * rbt.households * params.household_annual_kwh


def compute_demands(fps: Sequence[Footprint], types: Sequence[TypeAssignment],
                    params: DemandParams) -> list[BuildingDemand]:
    by_id = {t.footprint_id: t for t in types}
    out = []
    for fp in sorted(fps, key=lambda f: f.id):
        if fp.id not in by_id:
            raise InvalidParams(f"footprint {fp.id} has no building type assigned")
        rbt = by_id[fp.id].building_type
        out.append(BuildingDemand(fp.id, fp.area_m2, rbt.type_id, rbt.reference_area_m2, rbt.households,
                                  building_demand(fp.area_m2, rbt, params)))
    return out


@dataclass(frozen=True)
class Zone:
    zone_id: str
    geometry: Polygon | MultiPolygon


@dataclass(frozen=True)
class ZoneDemand:
    zone_id: str
    building_count: int
    total_kwh: float
    # exact sum of the member demands; total_kwh is its correctly rounded value
    exact_total: Fraction = field(default=Fraction(0), compare=False, repr=False)


@dataclass(frozen=True)
class ZoneAggregation:
    zones: list[ZoneDemand]
    unassigned: ZoneDemand
    assignment: dict[int, str | None]

    def exact_grand_total(self) -> Fraction:
        return sum((z.exact_total for z in self.zones), self.unassigned.exact_total)


def _zone_total(zone_id: str, values: list[float]) -> ZoneDemand:
    exact = sum((Fraction(v) for v in values), Fraction(0))
    return ZoneDemand(zone_id, len(values), float(exact), exact)


def aggregate_by_zone(demands: Sequence[BuildingDemand], footprints: Sequence[Footprint],
                      zones: Sequence[Zone]) -> ZoneAggregation:
    """Assign each building to the zone containing its footprint centroid.

    Zones are tried in lexicographic ``zone_id`` order and the first match
    wins, which settles overlaps. Totals are summed exactly in footprint id
    order, so zone totals plus the unassigned bucket add up to the sum of all
    building demands without rounding loss.
    """
    ids = [z.zone_id for z in zones]
    if len(set(ids)) != len(ids):
        raise InvalidParams("zone ids must be unique")
    if UNASSIGNED in ids:
        raise InvalidParams(f"zone id {UNASSIGNED!r} is reserved")
    ordered = sorted(zones, key=lambda z: z.zone_id)
    boxes = [_bounds(z.geometry) for z in ordered]
    geom = {f.id: f.geometry for f in footprints}
    members: dict[str, list[float]] = {z.zone_id: [] for z in ordered}
    rest: list[float] = []
    assignment: dict[int, str | None] = {}
    for d in sorted(demands, key=lambda d: d.footprint_id):
        if d.footprint_id not in geom:
            raise InvalidParams(f"demand for unknown footprint {d.footprint_id}")
        cx, cy = polygon_centroid(geom[d.footprint_id])
        hit = None
        for z, (x0, y0, x1, y1) in zip(ordered, boxes):
            if x0 <= cx <= x1 and y0 <= cy <= y1 and point_in_polygon((cx, cy), z.geometry):
                hit = z.zone_id
                break
        assignment[d.footprint_id] = hit
        (members[hit] if hit is not None else rest).append(d.annual_kwh)
    return ZoneAggregation([_zone_total(zid, vals) for zid, vals in members.items()],
                           _zone_total(UNASSIGNED, rest), assignment)


def _bounds(g: Polygon | MultiPolygon):
    parts = g.polygons if isinstance(g, MultiPolygon) else (g,)
    bs = [p.bounds() for p in parts]
    return min(b[0] for b in bs), min(b[1] for b in bs), max(b[2] for b in bs), max(b[3] for b in bs)


@dataclass(frozen=True)
class ZoneDeviation:
    zone_id: str
    reference_kwh: float
    presented_kwh: float
    deviation: float | None  # None when the reference is zero


@dataclass(frozen=True)
class DeviationReport:
    zones: list[ZoneDeviation]
    overall_deviation: float | None
    reference_total_kwh: float
    presented_total_kwh: float
    missing_in_presented: list[str]
    missing_in_reference: list[str]
    zero_reference: list[str]

    def to_dict(self) -> dict:
        return {
            "overall_deviation": self.overall_deviation,
            "reference_total_kwh": self.reference_total_kwh,
            "presented_total_kwh": self.presented_total_kwh,
            "zones": [
                {"zone_id": z.zone_id, "reference_kwh": z.reference_kwh,
                 "presented_kwh": z.presented_kwh, "deviation": z.deviation}
                for z in self.zones
            ],
            "missing_in_presented": self.missing_in_presented,
            "missing_in_reference": self.missing_in_reference,
            "zero_reference": self.zero_reference,
        }


def relative_deviation(reference: float, presented: float) -> float:
    """Positive when the presented demand is below the reference."""
    return (reference - presented) / reference


def compare_to_reference(presented: Sequence[ZoneDemand],
                         reference: Sequence[tuple[str, float]]) -> DeviationReport:
    pres = {z.zone_id: z.total_kwh for z in presented if z.zone_id != UNASSIGNED}
    ref: dict[str, float] = {}
    for zid, kwh in reference:
        if zid in ref:
            raise InvalidParams(f"duplicate reference zone {zid!r}")
        if not (kwh >= 0 and math.isfinite(kwh)):
            raise InvalidParams(f"reference demand for {zid!r} must be finite and >= 0")
        ref[zid] = kwh
    joined = sorted(set(pres) & set(ref))
    rows = []
    zero = []
    for zid in joined:
        if ref[zid] == 0:
            zero.append(zid)
            rows.append(ZoneDeviation(zid, ref[zid], pres[zid], None))
        else:
            rows.append(ZoneDeviation(zid, ref[zid], pres[zid], relative_deviation(ref[zid], pres[zid])))
    ref_total = math.fsum(ref[z] for z in joined)
    pres_total = math.fsum(pres[z] for z in joined)
    overall = relative_deviation(ref_total, pres_total) if ref_total > 0 else None
    return DeviationReport(rows, overall, ref_total, pres_total,
                           missing_in_presented=sorted(set(ref) - set(pres)),
                           missing_in_reference=sorted(set(pres) - set(ref)),
                           zero_reference=zero)
