import pytest

from supplytask.errors import GeoJsonError, InvalidParams
from supplytask.geo_core import FootprintSource
from supplytask.identification import IdentificationConfig, footprint_records, identify_buildings, import_footprints
from supplytask.io.geojson import emit_geojson
from supplytask.raster_ingest import Connectivity, GeoGrid


def paint(w, h, rects, pixel=1.0):
    data = bytearray(w * h)
    for c0, r0, rw, rh in rects:
        for r in range(r0, r0 + rh):
            for c in range(c0, c0 + rw):
                data[r * w + c] = 1
    return GeoGrid(w, h, 1000.0, 2000.0, pixel, bytes(data))


def test_block_and_shed():
    g = paint(30, 20, [(1, 1, 12, 12), (20, 2, 3, 3)])
    fps = identify_buildings(g, IdentificationConfig(min_area_m2=25.0))
    assert len(fps) == 1
    assert fps[0].area_m2 == 144.0
    assert fps[0].source is FootprintSource.MASK_DERIVED


def test_adjacent_blocks_form_one_component():
    g = paint(30, 20, [(1, 1, 8, 8), (9, 1, 8, 8)])
    fps = identify_buildings(g)
    assert len(fps) == 1 and fps[0].area_m2 == 128.0


def test_empty_grid():
    assert identify_buildings(paint(5, 5, [])) == []


def test_merge_gap_joins_nearby_blocks():
    g = paint(30, 12, [(1, 1, 8, 8), (10, 1, 8, 8)])
    assert len(identify_buildings(g)) == 2
    merged = identify_buildings(g, IdentificationConfig(merge_gap_m=1.0))
    assert len(merged) == 1
    assert merged[0].area_m2 == pytest.approx(136.0)


def test_shed_does_not_weld_buildings():
    # the small connector is its own component under 4-connectivity and gets filtered first
    g = paint(30, 12, [(1, 1, 8, 8), (10, 2, 8, 8), (9, 0, 1, 1)])
    fps = identify_buildings(g, IdentificationConfig(connectivity=Connectivity.FOUR))
    assert len(fps) == 2


def test_ids_are_component_labels():
    g = paint(30, 30, [(1, 20, 8, 8), (15, 1, 8, 8), (1, 1, 3, 3)])
    assert [f.id for f in identify_buildings(g)] == [2, 3]


def test_threads_do_not_change_result():
    g = paint(60, 60, [(1 + 12 * i, 1 + 12 * j, 7 + i, 6 + j) for i in range(4) for j in range(4)])
    assert identify_buildings(g, threads=4) == identify_buildings(g, threads=1)


def test_deterministic():
    g = paint(40, 40, [(2, 2, 10, 7), (20, 20, 9, 9)])
    a = emit_geojson(footprint_records(identify_buildings(g)))
    b = emit_geojson(footprint_records(identify_buildings(g)))
    assert a == b


def test_negative_params_rejected():
    with pytest.raises(InvalidParams):
        IdentificationConfig(min_area_m2=-1)


SQUARE = [[0, 0], [1, 0], [1, 1], [0, 1], [0, 0]]


def gj(*geoms):
    feats = ",".join('{"type":"Feature","properties":{},"geometry":%s}' % g for g in geoms)
    return '{"type":"FeatureCollection","features":[%s]}' % feats


def test_import_two_polygons():
    poly = '{"type":"Polygon","coordinates":[%s]}' % SQUARE
    fps = import_footprints(gj(poly, poly))
    assert [f.id for f in fps] == [1, 2]
    assert all(f.source is FootprintSource.IMPORTED for f in fps)


def test_import_multipolygon_parts():
    part = "[%s]" % SQUARE
    fps = import_footprints(gj('{"type":"MultiPolygon","coordinates":[%s,%s,%s]}' % (part, part, part)))
    assert len(fps) == 3


def test_import_linestring_rejected():
    with pytest.raises(GeoJsonError) as exc:
        import_footprints(gj('{"type":"LineString","coordinates":[[0,0],[1,1]]}'))
    assert exc.value.location


def test_import_with_id_property_round_trip():
    g = paint(30, 20, [(1, 1, 12, 12), (15, 2, 8, 8)])
    fps = identify_buildings(g)
    again = import_footprints(emit_geojson(footprint_records(fps)), id_property="id")
    assert again == fps


def test_import_duplicate_id_rejected():
    f = '{"type":"Feature","properties":{"id":1},"geometry":{"type":"Polygon","coordinates":[%s]}}' % SQUARE
    with pytest.raises(GeoJsonError):
        import_footprints('{"type":"FeatureCollection","features":[%s,%s]}' % (f, f), id_property="id")
