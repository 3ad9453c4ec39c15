import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import ndimage

from supplytask.errors import DimensionMismatch, HeaderError, ParseError, UnknownComponent
from supplytask.geo_core import polygon_area
from supplytask.io.grid import emit_grid
from supplytask.raster_ingest import (
    Connectivity,
    GeoGrid,
    component_cells,
    connected_components,
    parse_grid,
    polygonize,
)


def grid_from_rows(rows, pixel=1.0, ox=0.0, oy=None):
    h, w = len(rows), len(rows[0])
    data = bytes(int(ch) for row in rows for ch in row)
    return GeoGrid(w, h, ox, float(h * pixel) if oy is None else oy, pixel, data)


def grid_text(rows, **header):
    hdr = {"width": len(rows[0]), "height": len(rows), "origin_x": 0, "origin_y": len(rows), "pixel_size": 1}
    hdr.update(header)
    lines = [f"{k} {v}" for k, v in hdr.items()] + ["data"] + [" ".join(r) for r in rows]
    return "\n".join(lines) + "\n"


masks = st.integers(1, 12).flatmap(
    lambda w: st.lists(st.lists(st.integers(0, 1), min_size=w, max_size=w), min_size=1, max_size=12))


def to_grid(mask, pixel=1.0):
    return grid_from_rows(["".join(map(str, r)) for r in mask], pixel)


def partition(labels, w):
    groups = {}
    for idx, lab in enumerate(labels):
        if lab:
            groups.setdefault(lab, set()).add(divmod(idx, w))
    return {frozenset(g) for g in groups.values()}


# -- parsing -----------------------------------------------------------------------

def test_parse_basic():
    g = parse_grid(grid_text(["0110", "0000"]))
    assert (g.width, g.height, g.pixel_size) == (4, 2, 1.0)
    assert g.data == bytes([0, 1, 1, 0, 0, 0, 0, 0])


def test_parse_header_any_order_and_comments():
    text = "# mask\npixel_size 0.5\nheight 1\n\nwidth 2\norigin_y 10\norigin_x -3.5\ndata\n1 0\n"
    g = parse_grid(text)
    assert (g.origin_x, g.origin_y, g.pixel_size) == (-3.5, 10.0, 0.5)


def test_parse_dimension_mismatch_reports_line():
    with pytest.raises(DimensionMismatch) as exc:
        parse_grid(grid_text(["010", "01"], width=3))
    assert exc.value.line == 8


def test_parse_too_few_rows():
    with pytest.raises(DimensionMismatch):
        parse_grid(grid_text(["01"], height=2))


@pytest.mark.parametrize("text, err", [
    ("width 1\nheight 1\norigin_x 0\norigin_y 0\ndata\n1\n", HeaderError),
    ("width 1\nwidth 1\nheight 1\norigin_x 0\norigin_y 0\npixel_size 1\ndata\n1\n", HeaderError),
    ("width 1\nheight 1\norigin_x 0\norigin_y 0\npixel_size 1\ncolor red\ndata\n1\n", HeaderError),
    ("width 1\nheight 1\norigin_x 0\norigin_y 0\npixel_size 0\ndata\n1\n", HeaderError),
    ("width 1\nheight 1\norigin_x nan\norigin_y 0\npixel_size 1\ndata\n1\n", HeaderError),
    ("width 1.5\nheight 1\norigin_x 0\norigin_y 0\npixel_size 1\ndata\n1\n", HeaderError),
    ("width 1\nheight 1\norigin_x 0\norigin_y 0\npixel_size 1\n", HeaderError),
    ("width 1\nheight 1\norigin_x 0\norigin_y 0\npixel_size 1\ndata\n2\n", ParseError),
    ("width 1\r\nheight 1\norigin_x 0\norigin_y 0\npixel_size 1\ndata\n1\n", ParseError),
])
def test_parse_errors_have_location(text, err):
    with pytest.raises(err) as exc:
        parse_grid(text)
    assert exc.value.location


def test_parse_invalid_utf8():
    with pytest.raises(ParseError):
        parse_grid(b"width \xff\n")


@settings(max_examples=100)
@given(masks, st.sampled_from([0.25, 0.5, 1.0, 2.0, 0.1]), st.floats(-1e6, 1e6), st.floats(-1e6, 1e6))
def test_emit_parse_round_trip(mask, pixel, ox, oy):
    g = to_grid(mask, pixel)
    g = GeoGrid(g.width, g.height, ox, oy, pixel, g.data)
    assert parse_grid(emit_grid(g)) == g
    assert emit_grid(parse_grid(emit_grid(g))) == emit_grid(g)


# -- connected components -----------------------------------------------------------------

def test_components_empty_grid():
    lab = connected_components(to_grid([[0, 0], [0, 0]]))
    assert lab.count == 0


def test_components_diagonal_depends_on_connectivity():
    g = to_grid([[1, 0], [0, 1]])
    assert connected_components(g, Connectivity.FOUR).count == 2
    assert connected_components(g, Connectivity.EIGHT).count == 1


def test_components_u_shape_merges_in_second_pass():
    g = to_grid([[1, 0, 1], [1, 0, 1], [1, 1, 1]])
    assert connected_components(g, Connectivity.FOUR).count == 1


def test_component_labels_dense_row_major():
    g = to_grid([[0, 0, 1], [1, 0, 0], [1, 0, 1]])
    lab = connected_components(g, Connectivity.FOUR)
    assert lab.labels == (0, 0, 1, 2, 0, 0, 2, 0, 3)


@settings(max_examples=200)
@given(masks, st.sampled_from([Connectivity.FOUR, Connectivity.EIGHT]))
def test_components_match_scipy(mask, conn):
    g = to_grid(mask)
    lab = connected_components(g, conn)
    structure = np.ones((3, 3)) if conn is Connectivity.EIGHT else None
    ref, n = ndimage.label(np.array(mask), structure=structure)
    assert lab.count == n
    assert partition(lab.labels, g.width) == partition(ref.ravel().tolist(), g.width)


@settings(max_examples=100)
@given(masks, st.sampled_from([Connectivity.FOUR, Connectivity.EIGHT]))
def test_components_independent_of_scan_order(mask, conn):
    # labeling the transposed grid (a column-major scan) gives the same partition
    g = to_grid(mask)
    t = to_grid([list(col) for col in zip(*mask)])
    a = partition(connected_components(g, conn).labels, g.width)
    b = partition(connected_components(t, conn).labels, t.width)
    assert a == {frozenset((c, r) for r, c in comp) for comp in b}


# -- polygonization -------------------------------------------------------------------

def test_polygonize_square_with_hole():
    g = to_grid([[1, 1, 1], [1, 0, 1], [1, 1, 1]], pixel=2.0)
    lab = connected_components(g)
    p = polygonize(g, lab, 1)
    assert polygon_area(p) == 32.0
    assert len(p.holes) == 1
    assert len(p.exterior) == 4


def test_polygonize_world_coordinates():
    g = GeoGrid(2, 1, 100.0, 50.0, 0.5, bytes([1, 1]))
    p = polygonize(g, connected_components(g), 1)
    assert p.bounds() == (100.0, 49.5, 101.0, 50.0)


def test_polygonize_diagonal_pixels_eight_connected():
    g = to_grid([[1, 0], [0, 1]])
    p = polygonize(g, connected_components(g, Connectivity.EIGHT), 1)
    assert polygon_area(p) == 2.0


def test_polygonize_unknown_component():
    g = to_grid([[1]])
    with pytest.raises(UnknownComponent):
        polygonize(g, connected_components(g), 2)


@settings(max_examples=150)
@given(masks, st.sampled_from([Connectivity.FOUR, Connectivity.EIGHT]), st.sampled_from([0.25, 0.5, 1.0, 2.0]))
def test_polygon_area_equals_pixel_count(mask, conn, pixel):
    g = to_grid(mask, pixel)
    lab = connected_components(g, conn)
    cells = component_cells(lab)
    for c in range(1, lab.count + 1):
        assert polygon_area(polygonize(g, lab, c)) == len(cells[c]) * pixel * pixel
