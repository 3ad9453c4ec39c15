"""Construction-year bands and the residential building type table.

Config sections (see :mod:`supplytask.io.config`)::

    [age_distribution]
    # label = first_year last_year weight
    pre1949 = 1800 1948 0.25

    [typology]
    # type_id = size_class band_label reference_area_m2 households
    DE.SFH.A = DetachedSingle pre1949 140.0 1
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import Sequence

from .classifier import SizeClass
from .errors import ConfigError, InvalidParams, MissingTypologyRow
from .io.config import Config
from .rng import SplitMix64, derive_seed


@dataclass(frozen=True)
class YearBand:
    label: str
    lower: int
    upper: int

    def __post_init__(self):
        if self.lower > self.upper:
            raise InvalidParams(f"year band {self.label!r}: lower {self.lower} > upper {self.upper}")


@dataclass(frozen=True)
class AgeDistribution:
    bands: tuple[tuple[YearBand, float], ...]

    def __post_init__(self):
        bands = tuple(self.bands)
        if not bands:
            raise InvalidParams("age distribution has no bands")
        labels = [b.label for b, _ in bands]
        if len(set(labels)) != len(labels):
            raise InvalidParams("age distribution band labels must be unique")
        for (a, _), (b, _) in zip(bands, bands[1:]):
            if b.lower <= a.upper:
                raise InvalidParams(f"year bands {a.label!r} and {b.label!r} overlap or are out of order")
        weights = [w for _, w in bands]
        if any(not (w >= 0 and math.isfinite(w)) for w in weights):
            raise InvalidParams("band weights must be finite and >= 0")
        if abs(math.fsum(weights) - 1.0) > 1e-9:
            raise InvalidParams(f"band weights sum to {math.fsum(weights)!r}, expected 1")
        object.__setattr__(self, "bands", bands)

    def band(self, label: str) -> YearBand:
        for b, _ in self.bands:
            if b.label == label:
                return b
        raise KeyError(label)


@dataclass(frozen=True)
class ResidentialBuildingType:
    type_id: str
    size_class: SizeClass
    year_band: YearBand
    reference_area_m2: float
    households: int

    def __post_init__(self):
        if not (self.reference_area_m2 > 0 and math.isfinite(self.reference_area_m2)):
            raise InvalidParams(f"type {self.type_id!r}: reference area must be > 0")
        if self.households < 1:
            raise InvalidParams(f"type {self.type_id!r}: households must be >= 1")


@dataclass(frozen=True)
class TypologyTable:
    rows: tuple[ResidentialBuildingType, ...]

    def __post_init__(self):
        rows = tuple(self.rows)
        seen = set()
        for r in rows:
            key = (r.size_class, r.year_band.label)
            if key in seen:
                raise InvalidParams(f"more than one typology row for ({r.size_class.label}, {r.year_band.label})")
            seen.add(key)
        object.__setattr__(self, "rows", rows)


def sample_year_band(dist: AgeDistribution, building_id: int, seed: int) -> YearBand:
    """Inverse-CDF draw from a stream that depends only on ``(seed, building_id)``."""
    u = SplitMix64(derive_seed(seed, building_id)).uniform()
    cum = []
    acc = 0.0
    for _, w in dist.bands:
        acc += w
        cum.append(acc)
    i = bisect.bisect_right(cum, u)
    if i >= len(cum):
        # u beyond a cumulative sum that fell short of 1 through rounding
        i = max(k for k, (_, w) in enumerate(dist.bands) if w > 0)
    while dist.bands[i][1] == 0:
        i += 1
    return dist.bands[i][0]


def assign_type(table: TypologyTable, size_class: SizeClass, year_band: YearBand) -> ResidentialBuildingType:
    for row in table.rows:
        if row.size_class == size_class and row.year_band.label == year_band.label:
            return row
    raise MissingTypologyRow(f"no typology row for ({SizeClass(size_class).label}, {year_band.label})")


@dataclass(frozen=True)
class TypeAssignment:
    footprint_id: int
    size_class: SizeClass
    year_band: YearBand
    building_type: ResidentialBuildingType


def assign_typology(classes: dict[int, SizeClass], dist: AgeDistribution, table: TypologyTable,
                    seed: int) -> list[TypeAssignment]:
    out = []
    for fid in sorted(classes):
        band = sample_year_band(dist, fid, seed)
        out.append(TypeAssignment(fid, classes[fid], band, assign_type(table, classes[fid], band)))
    return out


# -- config ---------------------------------------------------------------------

def age_distribution_from_config(cfg: Config) -> AgeDistribution:
    section = cfg.section("age_distribution")
    if not section:
        raise ConfigError("missing or empty [age_distribution] section", location="[age_distribution]")
    bands = []
    for label, value in section.items():
        line = cfg.line_of("age_distribution", label)
        parts = value.split()
        if len(parts) != 3:
            raise ConfigError(f"band {label!r}: expected 'first_year last_year weight'", line)
        try:
            lower, upper, weight = int(parts[0]), int(parts[1]), float(parts[2])
            bands.append((YearBand(label, lower, upper), weight))
        except ValueError:
            raise ConfigError(f"band {label!r}: malformed value {value!r}", line) from None
        except InvalidParams as exc:
            raise ConfigError(exc.message, line) from None
    try:
        return AgeDistribution(tuple(bands))
    except InvalidParams as exc:
        raise ConfigError(exc.message, location="[age_distribution]") from None


def typology_from_config(cfg: Config, dist: AgeDistribution) -> TypologyTable:
    section = cfg.section("typology")
    if not section:
        raise ConfigError("missing or empty [typology] section", location="[typology]")
    rows = []
    for type_id, value in section.items():
        line = cfg.line_of("typology", type_id)
        parts = value.split()
        if len(parts) != 4:
            raise ConfigError(f"type {type_id!r}: expected 'size_class band_label reference_area households'", line)
        try:
            size_class = SizeClass.parse(parts[0])
            band = dist.band(parts[1])
            area = float(parts[2])
            households = int(parts[3])
            rows.append(ResidentialBuildingType(type_id, size_class, band, area, households))
        except KeyError:
            raise ConfigError(f"type {type_id!r}: unknown year band {parts[1]!r}", line) from None
        except ValueError as exc:
            raise ConfigError(f"type {type_id!r}: {exc}", line) from None
        except InvalidParams as exc:
            raise ConfigError(exc.message, line) from None
    try:
        return TypologyTable(tuple(rows))
    except InvalidParams as exc:
        raise ConfigError(exc.message, location="[typology]") from None


def expected_households_per_m2(dist: AgeDistribution, table: TypologyTable, size_class: SizeClass) -> float:
    """Mean ``households / reference_area`` over the age distribution for one size class."""
    return math.fsum(w * assign_type(table, size_class, band).households
                     / assign_type(table, size_class, band).reference_area_m2
                     for band, w in dist.bands if w > 0)


def band_frequencies(dist: AgeDistribution, ids: Sequence[int], seed: int) -> dict[str, float]:
    counts = {b.label: 0 for b, _ in dist.bands}
    for i in ids:
        counts[sample_year_band(dist, i, seed).label] += 1
    return {k: v / len(ids) for k, v in counts.items()}
