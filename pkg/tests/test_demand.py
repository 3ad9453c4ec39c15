import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from supplytask.classifier import SizeClass
from supplytask.demand import (
    UNASSIGNED,
    BuildingDemand,
    DemandParams,
    Zone,
    ZoneDemand,
    aggregate_by_zone,
    building_demand,
    compare_to_reference,
    compute_demands,
    relative_deviation,
)
from supplytask.errors import InvalidParams
from supplytask.geo_core import Footprint, Polygon
from supplytask.typology import ResidentialBuildingType, TypeAssignment, YearBand

BAND = YearBand("all", 1800, 2030)


def rbt(area=100.0, hh=2, tid="T"):
    return ResidentialBuildingType(tid, SizeClass.ROW_HOUSE, BAND, area, hh)


def rect(x0, y0, x1, y1):
    return Polygon(((x0, y0), (x1, y0), (x1, y1), (x0, y1)))


def test_demand_example():
    assert building_demand(150.0, rbt(100.0, 2), DemandParams(2000.0)) == 6000.0


def test_demand_equal_area_is_household_total():
    assert building_demand(120.0, rbt(120.0, 3), DemandParams(2500.0)) == 7500.0


def test_demand_zero_area():
    assert building_demand(0.0, rbt(), DemandParams(1000.0)) == 0.0


def test_demand_params_validated():
    with pytest.raises(InvalidParams):
        DemandParams(0.0)
    with pytest.raises(InvalidParams):
        DemandParams(float("nan"))


@settings(max_examples=500)
# normal floats only: doubling a subnormal product is not exact
@given(st.just(0.0) | st.floats(1e-3, 1e5), st.floats(1, 1e4), st.integers(1, 200), st.floats(1, 1e5))
def test_demand_formula_and_linearity(a, ar, n, e):
    got = building_demand(a, rbt(ar, n), DemandParams(e))
    assert got == pytest.approx(a / ar * n * e, rel=1e-9, abs=0.0)
    assert building_demand(2 * a, rbt(ar, n), DemandParams(e)) == 2 * got
    assert building_demand(a, rbt(ar, n), DemandParams(2 * e)) == 2 * got


def test_compute_demands_requires_type():
    fp = Footprint(1, rect(0, 0, 10, 10))
    with pytest.raises(InvalidParams):
        compute_demands([fp], [], DemandParams(1000.0))
    t = TypeAssignment(1, SizeClass.ROW_HOUSE, BAND, rbt(50.0, 1))
    [d] = compute_demands([fp], [t], DemandParams(1000.0))
    assert d.annual_kwh == 2000.0 and d.area_m2 == 100.0


# -- aggregation ------------------------------------------------------------------------

def demand(fid, kwh):
    return BuildingDemand(fid, 1.0, "T", 1.0, 1, kwh)


def test_aggregate_assigns_by_centroid():
    fps = [Footprint(1, rect(1, 1, 2, 2)), Footprint(2, rect(11, 1, 12, 2)), Footprint(3, rect(50, 50, 51, 51))]
    zones = [Zone("B", rect(10, 0, 20, 10)), Zone("A", rect(0, 0, 10, 10))]
    agg = aggregate_by_zone([demand(1, 5.0), demand(2, 7.0), demand(3, 1.0)], fps, zones)
    assert [(z.zone_id, z.building_count, z.total_kwh) for z in agg.zones] == [("A", 1, 5.0), ("B", 1, 7.0)]
    assert agg.unassigned == ZoneDemand(UNASSIGNED, 1, 1.0)
    assert agg.assignment == {1: "A", 2: "B", 3: None}


def test_aggregate_overlap_goes_to_lowest_zone_id():
    fps = [Footprint(1, rect(4, 4, 6, 6))]
    zones = [Zone("52064", rect(0, 0, 10, 10)), Zone("52062", rect(0, 0, 10, 10))]
    agg = aggregate_by_zone([demand(1, 3.0)], fps, zones)
    assert agg.assignment[1] == "52062"


def test_aggregate_centroid_on_shared_edge_is_deterministic():
    fps = [Footprint(1, rect(9, 4, 11, 6))]  # centroid x = 10, on the shared boundary
    zones = [Zone("west", rect(0, 0, 10, 10)), Zone("east", rect(10, 0, 20, 10))]
    a = aggregate_by_zone([demand(1, 3.0)], fps, zones)
    b = aggregate_by_zone([demand(1, 3.0)], fps, list(reversed(zones)))
    assert a.assignment == b.assignment
    assert a.assignment[1] is not None


def test_aggregate_rejects_bad_zones():
    with pytest.raises(InvalidParams):
        aggregate_by_zone([], [], [Zone("a", rect(0, 0, 1, 1)), Zone("a", rect(0, 0, 1, 1))])
    with pytest.raises(InvalidParams):
        aggregate_by_zone([], [], [Zone(UNASSIGNED, rect(0, 0, 1, 1))])


def test_aggregate_empty_zone_present():
    agg = aggregate_by_zone([], [], [Zone("z", rect(0, 0, 1, 1))])
    assert agg.zones == [ZoneDemand("z", 0, 0.0)]


@settings(max_examples=100)
@given(st.integers(1, 5), st.integers(1, 5),
       st.lists(st.tuples(st.floats(-5, 55), st.floats(-5, 55), st.floats(0, 1e6)), max_size=60))
def test_conservation_exact(nx, ny, buildings):
    zones = [Zone(f"z{i}{j}", rect(i * 50 / nx, j * 50 / ny, (i + 1) * 50 / nx, (j + 1) * 50 / ny))
             for i in range(nx) for j in range(ny)]
    fps = [Footprint(k + 1, rect(x, y, x + 0.5, y + 0.5)) for k, (x, y, _) in enumerate(buildings)]
    ds = [demand(k + 1, v) for k, (_, _, v) in enumerate(buildings)]
    agg = aggregate_by_zone(ds, fps, zones)
    assert agg.exact_grand_total() == sum((Fraction(d.annual_kwh) for d in ds), Fraction(0))
    assert sum(z.building_count for z in agg.zones) + agg.unassigned.building_count == len(ds)
    for z in agg.zones:
        assert z.total_kwh == float(z.exact_total)


# -- deviation -------------------------------------------------------------------------------

def zd(zid, kwh):
    return ZoneDemand(zid, 1, kwh)


def test_deviation_sign_convention():
    assert relative_deviation(100.0, 91.0) == pytest.approx(0.09)
    assert relative_deviation(100.0, 135.0) == pytest.approx(-0.35)
    assert relative_deviation(100.0, 100.0) == 0.0


def test_multi_zone_report():
    known = {"a": -0.35, "b": 0.42, "c": 0.0, "d": 0.09}
    ref = [(z, 1000.0) for z in known]
    pres = [zd(z, 1000.0 * (1 - d)) for z, d in known.items()]
    report = compare_to_reference(pres, ref)
    for row in report.zones:
        assert row.deviation == pytest.approx(known[row.zone_id], abs=1e-12)
    assert report.overall_deviation == pytest.approx(sum(known.values()) / 4, abs=1e-12)


def test_missing_zones_reported_not_raised():
    report = compare_to_reference([zd("a", 10.0), zd("x", 5.0), zd(UNASSIGNED, 99.0)],
                                  [("a", 10.0), ("b", 20.0)])
    assert report.missing_in_presented == ["b"]
    assert report.missing_in_reference == ["x"]
    assert report.overall_deviation == 0.0


def test_zero_reference_zone():
    report = compare_to_reference([zd("a", 10.0), zd("b", 3.0)], [("a", 10.0), ("b", 0.0)])
    assert report.zero_reference == ["b"]
    assert [r.deviation for r in report.zones] == [0.0, None]
    assert report.overall_deviation == pytest.approx(-0.3)


def test_reference_validation():
    with pytest.raises(InvalidParams):
        compare_to_reference([], [("a", 1.0), ("a", 2.0)])
    with pytest.raises(InvalidParams):
        compare_to_reference([], [("a", -1.0)])


def test_report_dict_is_json_friendly():
    d = compare_to_reference([zd("a", 91.0)], [("a", 100.0)]).to_dict()
    assert d["zones"][0]["deviation"] == pytest.approx(0.09)
    assert math.isclose(d["overall_deviation"], 0.09)
