"""Geometry descriptors used for size-class classification."""
from __future__ import annotations

import math
from dataclasses import astuple, dataclass

from .geo_core import Footprint, Polygon, convex_hull, oriented_bbox, polygon_area, polygon_perimeter
from .io.tables import write_csv

# column order of the feature vector; the classifier and model files depend on it
FEATURE_ORDER = ("area_m2", "perimeter_m", "convexity", "elongation", "rectangularity", "compactness")


@dataclass(frozen=True)
class GeometryFeatures:
    area_m2: float
    perimeter_m: float
    convexity: float
    elongation: float
    rectangularity: float
    compactness: float

    def as_vector(self) -> tuple[float, ...]:
        return astuple(self)


def polygon_features(p: Polygon) -> GeometryFeatures:
    area = polygon_area(p)
    perimeter = polygon_perimeter(p)
    hull_area = polygon_area(convex_hull(p))
    width, height, _ = oriented_bbox(p)
    return GeometryFeatures(
        area_m2=area,
        perimeter_m=perimeter,
        convexity=area / hull_area,
        elongation=width / height,
        rectangularity=area / (width * height),
        compactness=4 * math.pi * area / (perimeter * perimeter),
    )


def extract_features(fp: Footprint) -> GeometryFeatures:
    return polygon_features(fp.geometry)


def features_csv(rows: list[tuple[int, GeometryFeatures]]) -> bytes:
    return write_csv(["id", *FEATURE_ORDER], ([fid, *(repr(v) for v in f.as_vector())] for fid, f in rows))
