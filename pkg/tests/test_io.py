import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from supplytask import data_path
from supplytask.errors import ConfigError, CsvError, GeoJsonError, JsonSyntaxError
from supplytask.geo_core import MultiPolygon, Polygon
from supplytask.io import FeatureRecord, emit_config, emit_geojson, format_number, parse_config, parse_geojson
from supplytask.io.tables import read_csv, write_csv

SQUARE = Polygon(((0, 0), (2, 0), (2, 2), (0, 2)), (((0.5, 0.5), (1, 0.5), (1, 1), (0.5, 1)),))


def fc(geometry, properties="{}"):
    return ('{"type":"FeatureCollection","features":[{"type":"Feature","properties":%s,"geometry":%s}]}'
            % (properties, geometry))


# -- GeoJSON ---------------------------------------------------------------------------------

def test_geojson_round_trip():
    recs = [FeatureRecord(SQUARE, {"id": 3, "name": "a\"b", "ok": True, "v": 0.1}),
            FeatureRecord(MultiPolygon((SQUARE, SQUARE.transformed(lambda x, y: (x + 5, y)))), {})]
    text = emit_geojson(recs)
    back = parse_geojson(text)
    assert back == recs
    assert emit_geojson(back) == text


def test_geojson_emit_is_valid_json_with_closed_rings():
    doc = json.loads(emit_geojson([FeatureRecord(SQUARE, {"id": 1})]))
    ring = doc["features"][0]["geometry"]["coordinates"][0]
    assert ring[0] == ring[-1]


def test_geojson_empty():
    assert emit_geojson([]) == b'{"type":"FeatureCollection","features":[]}\n'
    assert parse_geojson(emit_geojson([])) == []


@pytest.mark.parametrize("fixture", ["training.geojson", "zones.geojson"])
def test_geojson_fixture_idempotent(fixture):
    raw = data_path("town", fixture).read_bytes()
    assert emit_geojson(parse_geojson(raw)) == raw


@settings(max_examples=200)
@given(st.floats(allow_nan=False, allow_infinity=False))
def test_number_round_trip(v):
    assert float(format_number(v)) == v
    assert format_number(float(format_number(v))) == format_number(v)


def test_negative_zero_preserved():
    recs = parse_geojson(fc('{"type":"Polygon","coordinates":[[[-0,0],[1,0],[1,1],[-0,0]]]}'))
    assert emit_geojson(recs) == emit_geojson(parse_geojson(emit_geojson(recs)))


@pytest.mark.parametrize("geometry, where", [
    ('{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1],[0,1]]]}', "$.features[0].geometry.coordinates[0]"),
    ('{"type":"Point","coordinates":[0,0]}', "$.features[0].geometry"),
    ('{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1,5],[0,0]]]}', "$.features[0].geometry.coordinates[0][2]"),
    ('{"type":"Polygon","coordinates":[[[0,0],[2,2],[2,0],[0,2],[0,0]]]}', "$.features[0].geometry.coordinates"),
    ('{"type":"Polygon","coordinates":[[[0,0],[1e999,0],[1,1],[0,0]]]}', "$.features[0].geometry.coordinates[0][1]"),
    ('{"type":"Polygon","coordinates":[[[0,0],[1%s,0],[1,1],[0,0]]]}' % ("0" * 400),
     "$.features[0].geometry.coordinates[0][1]"),
    ('{"type":"Polygon","coordinates":[[[0,0],[true,0],[1,1],[0,0]]]}', "$.features[0].geometry.coordinates[0][1]"),
])
def test_geojson_structural_errors(geometry, where):
    with pytest.raises(GeoJsonError) as exc:
        parse_geojson(fc(geometry))
    assert exc.value.location == where
    assert exc.value.feature_index == 0


def test_geojson_nested_property_rejected():
    with pytest.raises(GeoJsonError) as exc:
        parse_geojson(fc('{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1],[0,0]]]}', '{"a":[1]}'))
    assert exc.value.location == "$.features[0].properties.a"


def test_geojson_crs_rejected():
    with pytest.raises(GeoJsonError):
        parse_geojson('{"type":"FeatureCollection","crs":{},"features":[]}')


@pytest.mark.parametrize("text", ['{"type": "FeatureCollection", "features": [', '{"a":NaN}', '{"a":1,"a":2}', "﻿{}"])
def test_json_syntax_errors(text):
    with pytest.raises(JsonSyntaxError) as exc:
        parse_geojson(text)
    assert exc.value.location


def test_json_error_offset():
    with pytest.raises(JsonSyntaxError) as exc:
        parse_geojson('{"type":\n  }')
    assert (exc.value.line, exc.value.column) == (2, 3)


# -- config ----------------------------------------------------------------------------------

CFG = """\
# comment
[run]
seed = 42

[identification]
min_area_m2 = 25.0
connectivity = eight

[custom]
anything = goes here = too
"""


def test_config_values_and_lines():
    cfg = parse_config(CFG)
    assert cfg.get_int("run", "seed") == 42
    assert cfg.get_float("identification", "min_area_m2") == 25.0
    assert cfg.get_str("custom", "anything") == "goes here = too"
    assert cfg.line_of("identification", "connectivity") == 7
    assert cfg.get_float("identification", "missing", 1.5) == 1.5


def test_config_round_trip_preserves_unknown_sections():
    cfg = parse_config(CFG)
    again = parse_config(emit_config(cfg))
    assert again == cfg
    assert emit_config(again) == emit_config(cfg)


def test_config_fixture_round_trip():
    cfg = parse_config(data_path("town", "config.ini").read_bytes())
    assert parse_config(emit_config(cfg)) == cfg


@pytest.mark.parametrize("text, line", [
    ("[a]\nk = 1\nk = 2\n", 3),
    ("[a]\n[a]\n", 2),
    ("k = 1\n", 1),
    ("[a]\njust text\n", 2),
    ("[a b]\n", 1),
    ("[a]\nk = 1\r\n", 2),
])
def test_config_syntax_errors(text, line):
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert exc.value.line == line


@pytest.mark.parametrize("value", ["abc", "nan", "1_000", "inf", ""])
def test_config_bad_float_reports_line(value):
    cfg = parse_config(f"[a]\n\nx = {value}\n")
    with pytest.raises(ConfigError) as exc:
        cfg.get_float("a", "x")
    assert exc.value.line == 3


def test_config_bool_and_int():
    cfg = parse_config("[a]\nb = yes\ni = 2.5\n")
    assert cfg.get_bool("a", "b") is True
    with pytest.raises(ConfigError):
        cfg.get_int("a", "i")


# -- CSV -------------------------------------------------------------------------------------

def test_csv_round_trip_with_quoting():
    data = write_csv(["id", "name"], [[1, "a,b"], [2, 'q"uote']])
    assert read_csv(data, ["id", "name"]) == [(2, ["1", "a,b"]), (3, ["2", 'q"uote'])]


def test_csv_errors_have_line():
    with pytest.raises(CsvError) as exc:
        read_csv("id,x\n1,2\n3\n", ["id", "x"], "t.csv")
    assert exc.value.location == "t.csv, line 3"
    with pytest.raises(CsvError):
        read_csv("zone,x\n", ["id", "x"])
    with pytest.raises(CsvError):
        read_csv("", ["id"])
