"""Synthetic fixtures with known ground truth.

* :func:`separable_features` - three well-separated Gaussian clusters in
  feature space, one per size class.
* :func:`make_town` - a rasterized town of detached houses, row-house strips
  and perimeter blocks (with sheds that must be filtered out) laid out on a
  lot grid, split into four postal-code zones.

All numbers (typology values, household consumption) are illustrative and
not taken from any statistical source.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .classifier import SizeClass
from .geo_core import Polygon, cells_to_polygons
from .io.config import parse_config
from .io.geojson import FeatureRecord, emit_geojson
from .io.grid import emit_grid
from .io.tables import write_csv
from .raster_ingest import GeoGrid
from .rng import SplitMix64
from .typology import age_distribution_from_config, expected_households_per_m2, typology_from_config

TOWN_CONFIG = """\
# Synthetic town configuration. Typology and consumption values are
# illustrative placeholders, not statistical data.

[run]
seed = 42

[identification]
min_area_m2 = 25.0
connectivity = eight
merge_gap_m = 0.0

[classifier]
n_trees = 100
max_depth = 12
min_samples_leaf = 2
feature_subsample = 2
bootstrap = true

[demand]
household_annual_kwh = 3100.0

[age_distribution]
pre1949 = 1800 1948 0.22
y1949_1978 = 1949 1978 0.38
y1979_1994 = 1979 1994 0.18
post1995 = 1995 2025 0.22

[typology]
SYN.SFH.01 = DetachedSingle pre1949 150.0 1
SYN.SFH.02 = DetachedSingle y1949_1978 140.0 1
SYN.SFH.03 = DetachedSingle y1979_1994 135.0 1
SYN.SFH.04 = DetachedSingle post1995 145.0 1
SYN.TH.01 = RowHouse pre1949 110.0 1
SYN.TH.02 = RowHouse y1949_1978 105.0 1
SYN.TH.03 = RowHouse y1979_1994 115.0 1
SYN.TH.04 = RowHouse post1995 120.0 1
SYN.PB.01 = PerimeterBlock pre1949 700.0 10
SYN.PB.02 = PerimeterBlock y1949_1978 650.0 9
SYN.PB.03 = PerimeterBlock y1979_1994 720.0 10
SYN.PB.04 = PerimeterBlock post1995 780.0 11
"""


class _Rng(SplitMix64):
    def randint(self, a: int, b: int) -> int:
        return a + self.below(b - a + 1)

    def gauss(self) -> float:
        u1 = 1.0 - self.uniform()
        u2 = self.uniform()
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)


_CLUSTERS = {
    SizeClass.DETACHED_SINGLE: (130.0, 46.0, 0.97, 1.3, 0.95, 0.75),
    SizeClass.ROW_HOUSE: (420.0, 120.0, 0.98, 5.0, 0.96, 0.37),
    SizeClass.PERIMETER_BLOCK: (2400.0, 460.0, 0.60, 1.4, 0.60, 0.14),
}


def separable_features(n_per_class: int = 100, seed: int = 42, spread: float = 0.05):
    """``(vectors, labels)``: each feature is its class mean times ``1 + spread * N(0, 1)``."""
    rng = _Rng(seed)
    X, y = [], []
    for cls, mean in _CLUSTERS.items():
        for _ in range(n_per_class):
            X.append(tuple(m * (1.0 + spread * rng.gauss()) for m in mean))
            y.append(cls)
    return X, y


# -- town ---------------------------------------------------------------------------

PIXEL = 0.5
LOT = 80  # pixels
LOTS_X, LOTS_Y = 8, 6
ORIGIN_X, ORIGIN_Y = 294000.0, 5628240.0
ZONE_IDS = {(0, 0): "52062", (1, 0): "52064", (0, 1): "52066", (1, 1): "52068"}
# lot-type probabilities per zone: detached, row house, perimeter block
ZONE_MIX = {"52062": (0.0, 0.25, 0.75), "52064": (0.1, 0.5, 0.4),
            "52066": (0.8, 0.2, 0.0), "52068": (0.5, 0.3, 0.2)}
# reference demand = expected truth times this factor (for the comparison demo)
REFERENCE_FACTOR = {"52062": 0.85, "52064": 0.95, "52066": 1.1, "52068": 1.05}


@dataclass
class TruthBuilding:
    size_class: SizeClass
    cells: set[tuple[int, int]]  # (column, row), row 0 at the top
    zone_id: str

    @property
    def area_m2(self) -> float:
        return len(self.cells) * PIXEL * PIXEL

    def probe(self) -> tuple[float, float]:
        """World coordinates of the centre of one of the building's pixels."""
        c, r = min(self.cells, key=lambda cr: (cr[1], cr[0]))
        return ORIGIN_X + (c + 0.5) * PIXEL, ORIGIN_Y - (r + 0.5) * PIXEL

    def polygon(self) -> Polygon:
        h = LOTS_Y * LOT
        xs = [ORIGIN_X + i * PIXEL for i in range(LOTS_X * LOT + 1)]
        ys = [ORIGIN_Y - (h - k) * PIXEL for k in range(h + 1)]
        return cells_to_polygons({(c, h - 1 - r) for c, r in self.cells}, xs, ys, join_diagonals=True)[0]


@dataclass
class Town:
    grid: GeoGrid
    buildings: list[TruthBuilding]
    sheds: list[set[tuple[int, int]]] = field(default_factory=list)
    zones: dict[str, Polygon] = field(default_factory=dict)


def _rect(c0, r0, w, h):
    return {(c, r) for c in range(c0, c0 + w) for r in range(r0, r0 + h)}


def _pick(rng: _Rng, probs) -> int:
    u = rng.uniform()
    acc = 0.0
    for i, p in enumerate(probs):
        acc += p
        if u < acc:
            return i
    return max(i for i, p in enumerate(probs) if p > 0)


def _detached_lot(rng, c0, r0, zone, out, sheds):
    for sc in range(2):
        for sr in range(2):
            if rng.uniform() >= 0.85:
                continue
            bc, br = c0 + sc * 40, r0 + sr * 40
            w, h = rng.randint(18, 24), rng.randint(18, 24)
            cells = _rect(bc + 3, br + 3, w, h)
            if rng.uniform() < 0.3:  # small wing
                cells |= _rect(bc + 3 + w, br + 3, rng.randint(4, 6), rng.randint(6, h - 4))
            out.append(TruthBuilding(SizeClass.DETACHED_SINGLE, cells, zone))
            if rng.uniform() < 0.5:
                sw, sh = rng.randint(3, 7), rng.randint(3, 7)
                sheds.append(_rect(bc + 37 - sw, br + 37 - sh, sw, sh))


def _row_lot(rng, c0, r0, zone, out, sheds):
    vertical = rng.uniform() < 0.5
    for half in range(2):
        length, depth = rng.randint(56, 72), rng.randint(14, 20)
        off = rng.randint(2, 76 - length)
        if vertical:
            cells = _rect(c0 + half * 40 + 4, r0 + off, depth, length)
        else:
            cells = _rect(c0 + off, r0 + half * 40 + 4, length, depth)
        out.append(TruthBuilding(SizeClass.ROW_HOUSE, cells, zone))


def _perimeter_lot(rng, c0, r0, zone, out, sheds):
    ow, oh = rng.randint(64, 74), rng.randint(64, 74)
    t = rng.randint(18, 24)
    oc, orow = c0 + (80 - ow) // 2, r0 + (80 - oh) // 2
    cells = _rect(oc, orow, ow, oh) - _rect(oc + t, orow + t, ow - 2 * t, oh - 2 * t)
    if rng.uniform() < 0.4:  # open courtyard (U shape)
        side = rng.randint(0, 3)
        if side == 0:
            cells -= _rect(oc + t, orow, ow - 2 * t, t)
        elif side == 1:
            cells -= _rect(oc + t, orow + oh - t, ow - 2 * t, t)
        elif side == 2:
            cells -= _rect(oc, orow + t, t, oh - 2 * t)
        else:
            cells -= _rect(oc + ow - t, orow + t, t, oh - 2 * t)
    out.append(TruthBuilding(SizeClass.PERIMETER_BLOCK, cells, zone))


def make_town(seed: int = 7) -> Town:
    rng = _Rng(seed)
    w, h = LOTS_X * LOT, LOTS_Y * LOT
    buildings: list[TruthBuilding] = []
    sheds: list[set] = []
    for ly in range(LOTS_Y):
        for lx in range(LOTS_X):
            zone = ZONE_IDS[(lx * 2 // LOTS_X, ly * 2 // LOTS_Y)]
            kind = _pick(rng, ZONE_MIX[zone])
            (_detached_lot, _row_lot, _perimeter_lot)[kind](rng, lx * LOT, ly * LOT, zone, buildings, sheds)
    data = bytearray(w * h)
    for b in buildings:
        for c, r in b.cells:
            data[r * w + c] = 1
    for s in sheds:
        for c, r in s:
            data[r * w + c] = 1
    grid = GeoGrid(w, h, ORIGIN_X, ORIGIN_Y, PIXEL, bytes(data))
    zones = {}
    zw, zh = w * PIXEL / 2, h * PIXEL / 2
    for (zx, zy), zid in ZONE_IDS.items():
        x0, y1 = ORIGIN_X + zx * zw, ORIGIN_Y - zy * zh
        zones[zid] = Polygon(((x0, y1 - zh), (x0 + zw, y1 - zh), (x0 + zw, y1), (x0, y1)))
    return Town(grid, buildings, sheds, zones)


def town_config():
    return parse_config(TOWN_CONFIG)


def expected_total_kwh(town: Town, by_zone: bool = False):
    """Expected demand of the true buildings over the configured age distribution."""
    cfg = town_config()
    dist = age_distribution_from_config(cfg)
    table = typology_from_config(cfg, dist)
    e_hh = cfg.get_float("demand", "household_annual_kwh")
    density = {c: expected_households_per_m2(dist, table, c) for c in SizeClass}
    totals: dict[str, float] = {z: 0.0 for z in town.zones}
    for b in town.buildings:
        totals[b.zone_id] += b.area_m2 * density[b.size_class] * e_hh
    return totals if by_zone else math.fsum(totals.values())


STUDY_SEED = 7
TRAINING_SEED = 11


def town_files() -> dict[str, bytes]:
    """Contents of the bundled ``data/town`` directory."""
    study = make_town(STUDY_SEED)
    training = make_town(TRAINING_SEED)
    train_recs = [FeatureRecord(b.polygon(), {"id": i, "size_class": b.size_class.label, "source": "imported"})
                  for i, b in enumerate(training.buildings, start=1)]
    zone_recs = [FeatureRecord(p, {"zone_id": z}) for z, p in sorted(study.zones.items())]
    expected = expected_total_kwh(study, by_zone=True)
    reference = write_csv(["zone_id", "annual_kwh"],
                          ([z, repr(round(expected[z] * REFERENCE_FACTOR[z], 1))] for z in sorted(expected)))
    return {
        "config.ini": TOWN_CONFIG.encode("utf-8"),
        "grid.asc": emit_grid(study.grid),
        "training.geojson": emit_geojson(train_recs),
        "zones.geojson": emit_geojson(zone_recs),
        "reference.csv": reference,
    }
