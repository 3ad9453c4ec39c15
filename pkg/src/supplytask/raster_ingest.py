"""Binary building masks: parsing, component labeling and polygonization."""
from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass

from .errors import DimensionMismatch, HeaderError, ParseError, UnknownComponent
from .geo_core import Polygon, cells_to_polygons

HEADER_KEYS = ("width", "height", "origin_x", "origin_y", "pixel_size")
_INT = re.compile(r"[+-]?[0-9]+\Z")
_FLOAT = re.compile(r"[+-]?([0-9]+(\.[0-9]*)?|\.[0-9]+)([eE][+-]?[0-9]+)?\Z")


class Connectivity(enum.Enum):
    FOUR = 4
    EIGHT = 8

    @classmethod
    def parse(cls, text: str) -> "Connectivity":
        key = str(text).strip().lower()
        if key in ("4", "four"):
            return cls.FOUR
        if key in ("8", "eight"):
            return cls.EIGHT
        raise ValueError(f"unknown connectivity {text!r} (use four or eight)")


@dataclass(frozen=True)
class GeoGrid:
    """Row-major occupancy mask; ``origin_*`` is the top-left corner of pixel (0, 0)."""

    width: int
    height: int
    origin_x: float
    origin_y: float
    pixel_size: float
    data: bytes

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("grid dimensions must be positive")
        if not (self.pixel_size > 0 and math.isfinite(self.pixel_size)):
            raise ValueError("pixel_size must be positive and finite")
        if not (math.isfinite(self.origin_x) and math.isfinite(self.origin_y)):
            raise ValueError("origin must be finite")
        data = bytes(self.data)
        if len(data) != self.width * self.height:
            raise ValueError(f"data has {len(data)} cells, expected {self.width * self.height}")
        if any(v > 1 for v in data):
            raise ValueError("data must be binary")
        object.__setattr__(self, "data", data)

    def occupied(self) -> int:
        return sum(self.data)

    def xs(self) -> list[float]:
        return [self.origin_x + i * self.pixel_size for i in range(self.width + 1)]

    def ys_up(self) -> list[float]:
        """Horizontal grid lines from the bottom edge upwards."""
        return [self.origin_y - (self.height - k) * self.pixel_size for k in range(self.height + 1)]


@dataclass(frozen=True)
class ComponentLabeling:
    labels: tuple[int, ...]
    count: int
    width: int
    height: int
    connectivity: Connectivity = Connectivity.EIGHT


def parse_grid(raw: bytes | str) -> GeoGrid:
    """Parse the ASCII mask format (header, ``data`` line, rows of 0/1 tokens)."""
    if isinstance(raw, bytes):
        try:
            text = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            line = raw[: exc.start].count(b"\n") + 1
            col = exc.start - (raw.rfind(b"\n", 0, exc.start) + 1) + 1
            raise ParseError("invalid UTF-8", line, col) from None
    else:
        text = raw
    header: dict[str, str] = {}
    header_line: dict[str, int] = {}
    lines = text.split("\n")
    rows: list[tuple[int, list[str]]] = []
    in_data = False
    for lineno, line in enumerate(lines, start=1):
        if "\r" in line:
            raise ParseError("carriage return not allowed (LF line endings only)", lineno, line.index("\r") + 1)
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if in_data:
            rows.append((lineno, stripped.split()))
            continue
        if stripped == "data":
            in_data = True
            continue
        parts = stripped.split()
        if len(parts) != 2:
            raise ParseError(f"expected '<key> <value>' header line, got {stripped!r}", lineno, 1)
        key, value = parts
        if key not in HEADER_KEYS:
            raise HeaderError(f"unknown header key {key!r}", lineno, 1)
        if key in header:
            raise HeaderError(f"duplicate header key {key!r}", lineno, 1)
        header[key] = value
        header_line[key] = lineno
    if not in_data:
        raise HeaderError("missing 'data' line", len(lines), 1)
    for key in HEADER_KEYS:
        if key not in header:
            raise HeaderError(f"missing header key {key!r}", 1, 1)

    def value_col(key):
        return lines[header_line[key] - 1].index(header[key]) + 1

    ints = {}
    for key in ("width", "height"):
        if not _INT.match(header[key]) or int(header[key]) < 1:
            raise HeaderError(f"{key} must be a positive integer, got {header[key]!r}",
                              header_line[key], value_col(key))
        ints[key] = int(header[key])
    floats = {}
    for key in ("origin_x", "origin_y", "pixel_size"):
        v = header[key]
        if not _FLOAT.match(v) or not math.isfinite(float(v)):
            raise HeaderError(f"{key} must be a finite number, got {v!r}", header_line[key], value_col(key))
        floats[key] = float(v)
    if floats["pixel_size"] <= 0:
        raise HeaderError("pixel_size must be > 0", header_line["pixel_size"], value_col("pixel_size"))
    width, height = ints["width"], ints["height"]
    if len(rows) != height:
        at = rows[height][0] if len(rows) > height else len(lines)
        raise DimensionMismatch(f"expected {height} data rows, found {len(rows)}", at, 1)
    data = bytearray()
    for lineno, tokens in rows:
        if len(tokens) != width:
            raise DimensionMismatch(f"expected {width} values, found {len(tokens)}", lineno, 1)
        for t in tokens:
            if t == "1":
                data.append(1)
            elif t == "0":
                data.append(0)
            else:
                col = lines[lineno - 1].find(t) + 1
                raise ParseError(f"invalid cell value {t!r} (expected 0 or 1)", lineno, col)
    return GeoGrid(width, height, floats["origin_x"], floats["origin_y"], floats["pixel_size"], bytes(data))


def connected_components(g: GeoGrid, connectivity: Connectivity = Connectivity.EIGHT) -> ComponentLabeling:
    """Two-pass labeling with union-find.

    Components are numbered 1..count in the row-major order of their first
    pixel.
    """
    w, h, data = g.width, g.height, g.data
    prov = [0] * (w * h)
    parent = [0]

    def find(a):
        root = a
        while parent[root] != root:
            root = parent[root]
        while parent[a] != root:
            parent[a], a = root, parent[a]
        return root

    eight = connectivity is Connectivity.EIGHT
    for r in range(h):
        base = r * w
        for c in range(w):
            if not data[base + c]:
                continue
            neigh = []
            if c > 0 and prov[base + c - 1]:
                neigh.append(prov[base + c - 1])
            if r > 0:
                up = base - w + c
                if prov[up]:
                    neigh.append(prov[up])
                if eight:
                    if c > 0 and prov[up - 1]:
                        neigh.append(prov[up - 1])
                    if c < w - 1 and prov[up + 1]:
                        neigh.append(prov[up + 1])
            if not neigh:
                parent.append(len(parent))
                prov[base + c] = len(parent) - 1
                continue
            roots = {find(n) for n in neigh}
            m = min(roots)
            for rt in roots:
                parent[rt] = m
            prov[base + c] = m
    dense: dict[int, int] = {}
    labels = [0] * (w * h)
    for idx, p in enumerate(prov):
        if p:
            root = find(p)
            lab = dense.get(root)
            if lab is None:
                lab = dense[root] = len(dense) + 1
            labels[idx] = lab
    return ComponentLabeling(tuple(labels), len(dense), w, h, connectivity)


def component_cells(labeling: ComponentLabeling) -> dict[int, set[tuple[int, int]]]:
    """Cells of every component in y-up lattice coordinates ``(column, h - 1 - row)``."""
    w, h = labeling.width, labeling.height
    cells: dict[int, set[tuple[int, int]]] = {c: set() for c in range(1, labeling.count + 1)}
    for idx, lab in enumerate(labeling.labels):
        if lab:
            r, c = divmod(idx, w)
            cells[lab].add((c, h - 1 - r))
    return cells


def polygonize_cells(g: GeoGrid, cells: set[tuple[int, int]], connectivity: Connectivity) -> Polygon:
    polys = cells_to_polygons(cells, g.xs(), g.ys_up(), join_diagonals=connectivity is Connectivity.EIGHT)
    if len(polys) != 1:
        raise AssertionError(f"component traced into {len(polys)} polygons")
    return polys[0]


def polygonize(g: GeoGrid, labeling: ComponentLabeling, component: int) -> Polygon:
    """Outer contour and holes of one component, vertices on pixel corners."""
    if not 1 <= component <= labeling.count:
        raise UnknownComponent(f"component {component} not in 1..{labeling.count}")
    w, h = labeling.width, labeling.height
    cells = set()
    for idx, lab in enumerate(labeling.labels):
        if lab == component:
            r, c = divmod(idx, w)
            cells.add((c, h - 1 - r))
    return polygonize_cells(g, cells, labeling.connectivity)
