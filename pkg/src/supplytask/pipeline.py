"""File-level stages shared by the CLI subcommands and the ``pipeline`` command.

Every stage reads and writes the exchange formats as bytes, so running the
subcommands one after another produces exactly what ``pipeline`` produces.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

from .classifier import ForestModel, ForestParams, SizeClass, classify_hybrid, load_model, save_model, train_forest
from .demand import (UNASSIGNED, BuildingDemand, DemandParams, DeviationReport, Zone, ZoneAggregation,
                     ZoneDemand, aggregate_by_zone, compare_to_reference, compute_demands)
from .errors import ConfigError, CsvError, GeoJsonError, InputError, InsufficientData, InvalidParams
from .features import extract_features, features_csv
from .geo_core import Footprint, merge_contiguous
from .identification import (IdentificationConfig, footprint_records, footprints_from_records,
                             identify_buildings)
from .io.config import Config, parse_config
from .io.geojson import FeatureRecord, emit_geojson, parse_geojson
from .io.tables import read_csv, write_csv
from .raster_ingest import Connectivity, parse_grid
from .typology import (AgeDistribution, TypeAssignment, TypologyTable, age_distribution_from_config,
                       assign_typology, typology_from_config)


def load_config(raw: bytes | None) -> Config:
    return parse_config(raw) if raw is not None else Config()


# -- settings ---------------------------------------------------------------------

def run_seed(cfg: Config, override: int | None) -> int:
    if override is not None:
        return override
    return cfg.get_int("run", "seed", 0)


def identification_config(cfg: Config, **overrides) -> IdentificationConfig:
    conn = cfg.get_str("identification", "connectivity", "eight")
    try:
        connectivity = Connectivity.parse(conn)
    except ValueError as exc:
        raise ConfigError(str(exc), cfg.line_of("identification", "connectivity")) from None
    values = dict(
        min_area_m2=cfg.get_float("identification", "min_area_m2", 25.0),
        simplify_tolerance_m=cfg.get_float("identification", "simplify_tolerance_m", None),
        connectivity=connectivity,
        merge_gap_m=cfg.get_float("identification", "merge_gap_m", 0.0),
    )
    values.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return IdentificationConfig(**values)
    except InvalidParams as exc:
        raise ConfigError(exc.message, location="[identification]") from None


def forest_params(cfg: Config, seed: int) -> ForestParams:
    try:
        return ForestParams(
            n_trees=cfg.get_int("classifier", "n_trees", 100),
            max_depth=cfg.get_int("classifier", "max_depth", 12),
            min_samples_leaf=cfg.get_int("classifier", "min_samples_leaf", 2),
            feature_subsample=cfg.get_int("classifier", "feature_subsample", 2),
            bootstrap=cfg.get_bool("classifier", "bootstrap", True),
            seed=cfg.get_int("classifier", "seed", seed),
        )
    except InvalidParams as exc:
        raise ConfigError(exc.message, location="[classifier]") from None


def typology_seed(cfg: Config, seed: int) -> int:
    return cfg.get_int("typology_sampling", "seed", seed)


def demand_params(cfg: Config) -> DemandParams:
    v = cfg.get_float("demand", "household_annual_kwh")
    if v is None:
        raise ConfigError("missing [demand] household_annual_kwh", location="[demand]")
    try:
        return DemandParams(v)
    except InvalidParams as exc:
        raise ConfigError(exc.message, cfg.line_of("demand", "household_annual_kwh")) from None


def typology(cfg: Config) -> tuple[AgeDistribution, TypologyTable]:
    dist = age_distribution_from_config(cfg)
    return dist, typology_from_config(cfg, dist)


# -- readers ----------------------------------------------------------------------

def read_footprints(raw: bytes) -> list[Footprint]:
    return footprints_from_records(parse_geojson(raw), id_property="id")


def read_labels(raw: bytes, source: str | None = None) -> dict[int, SizeClass]:
    labels: dict[int, SizeClass] = {}
    for line, (fid, cls) in read_csv(raw, ["id", "size_class"], source):
        if not fid.isdigit():
            raise CsvError(f"id must be a non-negative integer, got {fid!r}", line, source)
        if int(fid) in labels:
            raise CsvError(f"duplicate id {fid}", line, source)
        try:
            labels[int(fid)] = SizeClass.parse(cls)
        except ValueError as exc:
            raise CsvError(str(exc), line, source) from None
    return labels


def labels_from_properties(raw: bytes) -> dict[int, SizeClass]:
    labels = {}
    for i, rec in enumerate(parse_geojson(raw)):
        if "size_class" not in rec.properties:
            continue
        try:
            labels[int(rec.properties["id"])] = SizeClass.parse(rec.properties["size_class"])
        except (KeyError, ValueError, TypeError):
            raise GeoJsonError("bad id or size_class property", f"$.features[{i}].properties", i) from None
    return labels


def labels_csv(labels: dict[int, SizeClass]) -> bytes:
    return write_csv(["id", "size_class"], ([fid, labels[fid].label] for fid in sorted(labels)))


TYPES_HEADER = ["id", "size_class", "year_band", "type_id", "reference_area_m2", "households"]


def types_csv(types: list[TypeAssignment]) -> bytes:
    return write_csv(TYPES_HEADER, ([t.footprint_id, t.size_class.label, t.year_band.label, t.building_type.type_id,
                                     repr(t.building_type.reference_area_m2), t.building_type.households]
                                    for t in types))


def read_types(raw: bytes, table: TypologyTable, source: str | None = None) -> list[TypeAssignment]:
    by_type = {r.type_id: r for r in table.rows}
    out = []
    for line, (fid, cls, band, type_id, _area, _hh) in read_csv(raw, TYPES_HEADER, source):
        if not fid.isdigit():
            raise CsvError(f"id must be a non-negative integer, got {fid!r}", line, source)
        row = by_type.get(type_id)
        if row is None:
            raise CsvError(f"type {type_id!r} is not in the configured typology", line, source)
        if row.size_class.label != cls or row.year_band.label != band:
            raise CsvError(f"type {type_id!r} does not match ({cls}, {band})", line, source)
        out.append(TypeAssignment(int(fid), row.size_class, row.year_band, row))
    return out


def read_zones(raw: bytes) -> list[Zone]:
    zones = []
    for i, rec in enumerate(parse_geojson(raw)):
        zid = rec.properties.get("zone_id")
        if isinstance(zid, bool) or not isinstance(zid, (str, int)):
            raise GeoJsonError("zone feature needs a string or integer zone_id property",
                               f"$.features[{i}].properties", i)
        zones.append(Zone(str(zid), rec.geometry))
    return zones


def read_reference(raw: bytes, source: str | None = None) -> list[tuple[str, float]]:
    out = []
    for line, (zid, kwh) in read_csv(raw, ["zone_id", "annual_kwh"], source):
        try:
            value = float(kwh)
        except ValueError:
            raise CsvError(f"annual_kwh must be a number, got {kwh!r}", line, source) from None
        if not (value >= 0 and math.isfinite(value)):
            raise CsvError("annual_kwh must be finite and >= 0", line, source)
        out.append((zid, value))
    return out


ZONE_HEADER = ["zone_id", "building_count", "total_kwh"]


def zone_csv(agg: ZoneAggregation) -> bytes:
    rows = [[z.zone_id, z.building_count, repr(z.total_kwh)] for z in agg.zones]
    rows.append([UNASSIGNED, agg.unassigned.building_count, repr(agg.unassigned.total_kwh)])
    return write_csv(ZONE_HEADER, rows)


def read_zone_csv(raw: bytes, source: str | None = None) -> list[ZoneDemand]:
    out = []
    for line, (zid, count, total) in read_csv(raw, ZONE_HEADER, source):
        try:
            out.append(ZoneDemand(zid, int(count), float(total)))
        except ValueError:
            raise CsvError("malformed zone demand row", line, source) from None
    return out


def read_demand(raw: bytes) -> tuple[list[BuildingDemand], list[Footprint]]:
    records = parse_geojson(raw)
    fps = footprints_from_records(records, id_property="id")
    demands = []
    for i, rec in enumerate(records):
        p = rec.properties
        try:
            demands.append(BuildingDemand(int(p["id"]), float(p["area_m2"]), str(p["type_id"]),
                                          float(p["reference_area_m2"]), int(p["households"]),
                                          float(p["annual_kwh"])))
        except (KeyError, ValueError, TypeError):
            raise GeoJsonError("demand feature lacks id/area_m2/type_id/reference_area_m2/households/annual_kwh",
                               f"$.features[{i}].properties", i) from None
    return demands, fps


# -- stages -----------------------------------------------------------------------

def stage_identify(grid_raw: bytes, cfg: IdentificationConfig, threads: int = 1) -> bytes:
    return emit_geojson(footprint_records(identify_buildings(parse_grid(grid_raw), cfg, threads)))


def stage_import(geojson_raw: bytes, merge_gap_m: float | None = None) -> bytes:
    fps = footprints_from_records(parse_geojson(geojson_raw))
    if merge_gap_m is not None:
        fps = merge_contiguous(fps, merge_gap_m)
    return emit_geojson(footprint_records(fps))


def stage_features(fps: list[Footprint]) -> bytes:
    return features_csv([(f.id, extract_features(f)) for f in fps])


def stage_train(fps: list[Footprint], labels: dict[int, SizeClass], params: ForestParams,
                threads: int = 1) -> ForestModel:
    by_id = {f.id: f for f in fps}
    missing = sorted(set(labels) - set(by_id))
    if missing:
        raise InvalidParams(f"labels reference unknown footprint ids {missing[:10]}")
    ids = sorted(labels)
    if len(ids) < 2:
        raise InsufficientData(f"need at least 2 labeled footprints, got {len(ids)}")
    return train_forest([extract_features(by_id[i]) for i in ids], [labels[i] for i in ids], params, threads)


def stage_classify(fps: list[Footprint], model: ForestModel | None, external: dict[int, SizeClass]) -> bytes:
    return labels_csv(classify_hybrid(fps, model, external))


def stage_assign(classes: dict[int, SizeClass], dist: AgeDistribution, table: TypologyTable, seed: int) -> bytes:
    return types_csv(assign_typology(classes, dist, table, seed))


DEMAND_HEADER = ["id", "area_m2", "size_class", "type_id", "reference_area_m2", "households", "annual_kwh"]


def stage_demand(fps: list[Footprint], types: list[TypeAssignment], params: DemandParams) -> tuple[bytes, bytes]:
    demands = compute_demands(fps, types, params)
    by_type = {t.footprint_id: t for t in types}
    extra = {}
    rows = []
    for d in demands:
        t = by_type[d.footprint_id]
        extra[d.footprint_id] = {"size_class": t.size_class.label, "year_band": t.year_band.label,
                                 "type_id": d.type_id, "reference_area_m2": d.reference_area_m2,
                                 "households": d.households, "annual_kwh": d.annual_kwh}
        rows.append([d.footprint_id, repr(d.area_m2), t.size_class.label, d.type_id, repr(d.reference_area_m2),
                     d.households, repr(d.annual_kwh)])
    return emit_geojson(footprint_records(fps, extra)), write_csv(DEMAND_HEADER, rows)


def stage_aggregate(demands: list[BuildingDemand], fps: list[Footprint], zones: list[Zone]) -> ZoneAggregation:
    return aggregate_by_zone(demands, fps, zones)


def deviation_json(report: DeviationReport) -> bytes:
    return (json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n").encode("utf-8")


def zones_geojson(zones: list[Zone], totals: list[ZoneDemand], report: DeviationReport | None = None) -> bytes:
    by_id = {z.zone_id: z for z in totals}
    dev = {z.zone_id: z.deviation for z in report.zones} if report else {}
    recs = []
    for zone in sorted(zones, key=lambda z: z.zone_id):
        props = {"zone_id": zone.zone_id}
        if zone.zone_id in by_id:
            props["building_count"] = by_id[zone.zone_id].building_count
            props["total_kwh"] = by_id[zone.zone_id].total_kwh
        if dev.get(zone.zone_id) is not None:
            props["deviation"] = dev[zone.zone_id]
        recs.append(FeatureRecord(zone.geometry, props))
    return emit_geojson(recs)


# -- whole pipeline -------------------------------------------------------------------

@dataclass
class PipelineInputs:
    config: bytes
    zones: bytes
    grid: bytes | None = None
    footprints: bytes | None = None
    model: bytes | None = None
    training: bytes | None = None
    external_labels: bytes | None = None
    reference: bytes | None = None


def _parsing(name: str, fn, arg):
    """Run a reader, naming the input in the error location."""
    try:
        return fn(arg)
    except InputError as exc:
        exc.location = f"{name}: {exc.location}" if exc.location else name
        raise


def run_pipeline(inputs: PipelineInputs, seed: int | None = None, threads: int = 1) -> dict[str, bytes]:
    """All stages in order; returns output file name -> content.

    Every input is parsed before the first stage runs.
    """
    if (inputs.grid is None) == (inputs.footprints is None):
        raise InvalidParams("pipeline needs exactly one of a grid or a footprints file")
    cfg = _parsing("config", load_config, inputs.config)
    seed = run_seed(cfg, seed)
    id_cfg = _parsing("config", identification_config, cfg)
    params = _parsing("config", lambda c: forest_params(c, seed), cfg)
    dist, table = _parsing("config", typology, cfg)
    dparams = _parsing("config", demand_params, cfg)
    if inputs.grid is not None:
        _parsing("grid", parse_grid, inputs.grid)
    else:
        _parsing("footprints", parse_geojson, inputs.footprints)
    zones = _parsing("zones", read_zones, inputs.zones)
    reference = _parsing("reference", read_reference, inputs.reference) if inputs.reference is not None else None
    external = _parsing("external labels", read_labels, inputs.external_labels) \
        if inputs.external_labels is not None else {}
    model = _parsing("model", load_model, inputs.model) if inputs.model is not None else None
    training = None
    if inputs.training is not None:
        training = _parsing("training", lambda r: (read_footprints(r), labels_from_properties(r)), inputs.training)

    out: dict[str, bytes] = {}
    if inputs.grid is not None:
        out["footprints.geojson"] = stage_identify(inputs.grid, id_cfg, threads)
    else:
        out["footprints.geojson"] = stage_import(inputs.footprints)
    fps = read_footprints(out["footprints.geojson"])
    out["features.csv"] = stage_features(fps)
    if training is not None:
        model = stage_train(training[0], training[1], params, threads)
        out["model.txt"] = save_model(model).encode("utf-8")
    out["classes.csv"] = stage_classify(fps, model, external)
    classes = read_labels(out["classes.csv"])
    out["types.csv"] = stage_assign(classes, dist, table, typology_seed(cfg, seed))
    types = read_types(out["types.csv"], table)
    out["demand.geojson"], out["demand.csv"] = stage_demand(fps, types, dparams)
    demands, dfps = read_demand(out["demand.geojson"])
    agg = stage_aggregate(demands, dfps, zones)
    out["zone_demand.csv"] = zone_csv(agg)
    report = None
    if reference is not None:
        report = compare_to_reference(read_zone_csv(out["zone_demand.csv"]), reference)
        out["deviation.json"] = deviation_json(report)
    out["zones.geojson"] = zones_geojson(zones, read_zone_csv(out["zone_demand.csv"]), report)
    return out


def write_outputs(outputs: dict[str, bytes], out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, data in outputs.items():
        (out_dir / name).write_bytes(data)
