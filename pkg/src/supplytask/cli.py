"""Command-line front end.

Exit codes: 0 success, 2 bad input (missing file, parse or validation
error), 1 internal error. Diagnostics go to stderr; data goes to the output
files, or stdout when no output path is given.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import pipeline as P
from .classifier import load_model, save_model
from .errors import InputError
from .raster_ingest import Connectivity

log = logging.getLogger("supplytask")


def _read(path: str | None) -> bytes | None:
    if path is None:
        return None
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}", path) from None


def _emit(data: bytes, path: str | None) -> None:
    if path is None:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_bytes(data)


def _with_source(fn, raw, source):
    """Run a reader, attaching the file name to the error location."""
    try:
        return fn(raw)
    except InputError as exc:
        exc.location = f"{source}: {exc.location}" if exc.location else source
        raise


def _config(args):
    return _with_source(P.load_config, _read(args.config), args.config) if args.config else P.load_config(None)


def cmd_identify(args) -> None:
    cfg = _config(args)
    id_cfg = P.identification_config(
        cfg, min_area_m2=args.min_area, simplify_tolerance_m=args.simplify_tolerance,
        connectivity=Connectivity.parse(args.connectivity) if args.connectivity else None,
        merge_gap_m=args.merge_gap)
    grid = _read(args.grid)
    out = _with_source(lambda raw: P.stage_identify(raw, id_cfg, args.threads), grid, args.grid)
    _emit(out, args.output)


def cmd_import(args) -> None:
    raw = _read(args.geojson)
    _emit(_with_source(lambda r: P.stage_import(r, args.merge_gap), raw, args.geojson), args.output)


def _footprints(path):
    return _with_source(P.read_footprints, _read(path), path)


def cmd_features(args) -> None:
    _emit(P.stage_features(_footprints(args.footprints)), args.output)


def cmd_train(args) -> None:
    cfg = _config(args)
    seed = P.run_seed(cfg, args.seed)
    raw = _read(args.footprints)
    fps = _with_source(P.read_footprints, raw, args.footprints)
    if args.labels:
        labels = _with_source(P.read_labels, _read(args.labels), args.labels)
    else:
        labels = _with_source(P.labels_from_properties, raw, args.footprints)
    model = P.stage_train(fps, labels, P.forest_params(cfg, seed), args.threads)
    log.info("trained %d trees on %d samples, out-of-bag accuracy %s", model.n_trees, len(labels), model.oob_accuracy)
    _emit(save_model(model).encode("utf-8"), args.output)


def cmd_classify(args) -> None:
    fps = _footprints(args.footprints)
    model = _with_source(load_model, _read(args.model), args.model) if args.model else None
    external = _with_source(P.read_labels, _read(args.external_labels), args.external_labels) \
        if args.external_labels else {}
    out = P.stage_classify(fps, model, external)
    _emit(out, args.output)
    if args.geojson_out:
        classes = P.read_labels(out)
        extra = {fid: {"size_class": c.label, "size_class_source": "external" if fid in external else "forest"}
                 for fid, c in classes.items()}
        _emit(P.emit_geojson(P.footprint_records(fps, extra)), args.geojson_out)


def cmd_assign(args) -> None:
    cfg = _config(args)
    seed = P.run_seed(cfg, args.seed)
    dist, table = P.typology(cfg)
    classes = _with_source(P.read_labels, _read(args.labels), args.labels)
    _emit(P.stage_assign(classes, dist, table, P.typology_seed(cfg, seed)), args.output)


def cmd_demand(args) -> None:
    cfg = _config(args)
    _, table = P.typology(cfg)
    params = P.demand_params(cfg)
    fps = _footprints(args.footprints)
    types = _with_source(lambda r: P.read_types(r, table), _read(args.types), args.types)
    geo, table_csv = P.stage_demand(fps, types, params)
    _emit(geo, args.output)
    if args.csv:
        _emit(table_csv, args.csv)


def cmd_aggregate(args) -> None:
    demands, fps = _with_source(P.read_demand, _read(args.demand), args.demand)
    zones = _with_source(P.read_zones, _read(args.zones), args.zones)
    agg = P.stage_aggregate(demands, fps, zones)
    _emit(P.zone_csv(agg), args.output)
    if args.geojson_out:
        _emit(P.zones_geojson(zones, agg.zones), args.geojson_out)


def cmd_compare(args) -> None:
    presented = _with_source(P.read_zone_csv, _read(args.zone_demand), args.zone_demand)
    reference = _with_source(P.read_reference, _read(args.reference), args.reference)
    zones = _with_source(P.read_zones, _read(args.zones), args.zones) if args.zones else None
    report = P.compare_to_reference(presented, reference)
    for zid in report.missing_in_presented:
        log.warning("reference zone %s has no presented demand", zid)
    for zid in report.zero_reference:
        log.warning("zone %s has zero reference demand; deviation undefined", zid)
    _emit(P.deviation_json(report), args.output)
    if args.geojson_out:
        if zones is None:
            raise InputError("--geojson-out needs --zones", "--geojson-out")
        _emit(P.zones_geojson(zones, presented, report), args.geojson_out)


def cmd_pipeline(args) -> None:
    inputs = P.PipelineInputs(
        config=_read(args.config), zones=_read(args.zones), grid=_read(args.grid),
        footprints=_read(args.footprints), model=_read(args.model), training=_read(args.training),
        external_labels=_read(args.external_labels), reference=_read(args.reference))
    outputs = P.run_pipeline(inputs, seed=args.seed, threads=args.threads)
    P.write_outputs(outputs, Path(args.out_dir))
    for name in outputs:
        log.info("wrote %s", Path(args.out_dir) / name)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="global seed (default: [run] seed, else 0)")
    common.add_argument("--threads", type=int, default=1, help="worker threads; results do not depend on it")
    common.add_argument("--json-errors", action="store_true", help="report errors as JSON on stderr")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="supplytask", description="Residential supply tasks from building masks.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_text):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.set_defaults(func=fn)
        return p

    p = add("identify", cmd_identify, "building footprints from an ASCII mask")
    p.add_argument("--grid", required=True)
    p.add_argument("--config")
    p.add_argument("--min-area", type=float)
    p.add_argument("--simplify-tolerance", type=float)
    p.add_argument("--connectivity", choices=["four", "eight"])
    p.add_argument("--merge-gap", type=float)
    p.add_argument("-o", "--output")

    p = add("import", cmd_import, "footprints from an external GeoJSON file")
    p.add_argument("--geojson", required=True)
    p.add_argument("--merge-gap", type=float)
    p.add_argument("-o", "--output")

    p = add("features", cmd_features, "geometry feature table (CSV)")
    p.add_argument("--footprints", required=True)
    p.add_argument("-o", "--output")

    p = add("train", cmd_train, "train the size-class forest")
    p.add_argument("--footprints", required=True)
    p.add_argument("--labels", help="CSV id,size_class (default: size_class property of the footprints)")
    p.add_argument("--config")
    p.add_argument("-o", "--output")

    p = add("classify", cmd_classify, "size classes: external labels first, forest for the rest")
    p.add_argument("--footprints", required=True)
    p.add_argument("--model")
    p.add_argument("--external-labels")
    p.add_argument("-o", "--output", help="labels CSV")
    p.add_argument("--geojson-out")

    p = add("assign-typology", cmd_assign, "sample year bands and look up building types")
    p.add_argument("--labels", required=True, help="CSV id,size_class")
    p.add_argument("--config", required=True)
    p.add_argument("-o", "--output")

    p = add("demand", cmd_demand, "annual electricity demand per building")
    p.add_argument("--footprints", required=True)
    p.add_argument("--types", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("-o", "--output", help="demand GeoJSON")
    p.add_argument("--csv", help="demand table")

    p = add("aggregate", cmd_aggregate, "sum building demand per zone")
    p.add_argument("--demand", required=True, help="demand GeoJSON")
    p.add_argument("--zones", required=True)
    p.add_argument("-o", "--output", help="zone demand CSV")
    p.add_argument("--geojson-out")

    p = add("compare", cmd_compare, "relative deviation against reference zone demands")
    p.add_argument("--zone-demand", required=True)
    p.add_argument("--reference", required=True, help="CSV zone_id,annual_kwh")
    p.add_argument("--zones")
    p.add_argument("-o", "--output", help="deviation report JSON")
    p.add_argument("--geojson-out")

    p = add("pipeline", cmd_pipeline, "run every stage")
    p.add_argument("--config", required=True)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--grid")
    src.add_argument("--footprints")
    p.add_argument("--zones", required=True)
    p.add_argument("--reference")
    p.add_argument("--model")
    p.add_argument("--training", help="labeled footprints to train the forest on")
    p.add_argument("--external-labels")
    p.add_argument("--out-dir", required=True)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s: %(message)s", force=True)
    try:
        args.func(args)
    except InputError as exc:
        _report(args, exc.to_dict(), str(exc))
        return 2
    except Exception as exc:  # noqa: BLE001
        log.debug("internal error", exc_info=True)
        _report(args, {"error": type(exc).__name__, "message": str(exc), "location": None},
                f"internal error: {type(exc).__name__}: {exc}")
        return 1
    return 0


def _report(args, payload: dict, text: str) -> None:
    if args.json_errors:
        print(json.dumps(payload, sort_keys=True), file=sys.stderr)
    else:
        print(f"error: {text}", file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
