"""Planar geometry on projected coordinates (meters).

Polygons are immutable and normalized on construction: the closing vertex is
dropped, consecutive duplicates are removed, the exterior ring is stored
counter-clockwise and hole rings clockwise. The exterior must not
self-intersect; rings that touch themselves at a single vertex (the pinch
produced by diagonally connected pixels) are allowed.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import DegenerateGeometry, InvalidParams, InvalidPolygon

EPS = 1e-9

Point = tuple[float, float]
Ring = tuple[Point, ...]


def _signed_ring_area(ring: Sequence[Point]) -> float:
    # shoelace relative to the first vertex keeps large projected coordinates exact
    x0, y0 = ring[0]
    s = 0.0
    n = len(ring)
    for i in range(1, n - 1):
        ax, ay = ring[i][0] - x0, ring[i][1] - y0
        bx, by = ring[i + 1][0] - x0, ring[i + 1][1] - y0
        s += ax * by - bx * ay
    return s / 2.0


def _same(p: Point, q: Point) -> bool:
    return abs(p[0] - q[0]) <= EPS and abs(p[1] - q[1]) <= EPS


def _clean_ring(coords: Iterable[Sequence[float]], what: str) -> list[Point]:
    ring: list[Point] = []
    for c in coords:
        if len(c) != 2:
            raise InvalidPolygon(f"{what}: vertex must have two coordinates, got {len(c)}")
        x, y = float(c[0]), float(c[1])
        if not (math.isfinite(x) and math.isfinite(y)):
            raise InvalidPolygon(f"{what}: non-finite coordinate ({x}, {y})")
        if ring and _same(ring[-1], (x, y)):
            continue
        ring.append((x, y))
    while len(ring) > 1 and _same(ring[0], ring[-1]):
        ring.pop()
    if len(ring) < 3:
        raise InvalidPolygon(f"{what}: ring needs at least 3 distinct vertices, got {len(ring)}")
    return ring


def _reverse_ring(ring: list[Point]) -> list[Point]:
    return [ring[0]] + ring[:0:-1]


def _orient(a: Point, b: Point, c: Point) -> float:
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _on_segment(p: Point, a: Point, b: Point) -> bool:
    return (min(a[0], b[0]) <= p[0] <= max(a[0], b[0])
            and min(a[1], b[1]) <= p[1] <= max(a[1], b[1]))


def _segments_conflict(p1: Point, p2: Point, q1: Point, q2: Point) -> bool:
    """True if the segments meet anywhere other than a common endpoint."""
    d1 = _orient(q1, q2, p1)
    d2 = _orient(q1, q2, p2)
    d3 = _orient(p1, p2, q1)
    d4 = _orient(p1, p2, q2)
    if ((d1 > 0 > d2) or (d1 < 0 < d2)) and ((d3 > 0 > d4) or (d3 < 0 < d4)):
        return True
    shared = {p1, p2} & {q1, q2}
    for pt, d, a, b in ((p1, d1, q1, q2), (p2, d2, q1, q2), (q1, d3, p1, p2), (q2, d4, p1, p2)):
        if d == 0 and _on_segment(pt, a, b) and pt not in shared:
            return True
    if d1 == d2 == 0 and len(shared) == 2 and p1 != p2:
        return True  # the same segment traversed twice
    return False


def ring_self_intersects(ring: Sequence[Point]) -> bool:
    n = len(ring)
    edges = []
    for i in range(n):
        a, b = ring[i], ring[(i + 1) % n]
        edges.append((min(a[0], b[0]), max(a[0], b[0]), min(a[1], b[1]), max(a[1], b[1]), a, b))
    edges.sort(key=lambda e: e[0])
    for i, (x0, x1, y0, y1, a, b) in enumerate(edges):
        for j in range(i + 1, n):
            u0, _, v0, v1, c, d = edges[j]
            if u0 > x1:
                break
            if v0 > y1 or v1 < y0:
                continue
            if _segments_conflict(a, b, c, d):
                return True
    return False


@dataclass(frozen=True)
class Polygon:
    exterior: Ring
    holes: tuple[Ring, ...] = ()

    def __post_init__(self):
        ext = _clean_ring(self.exterior, "exterior")
        if _signed_ring_area(ext) < 0:
            ext = _reverse_ring(ext)
        if ring_self_intersects(ext):
            raise InvalidPolygon("exterior ring self-intersects")
        holes = []
        for k, h in enumerate(self.holes):
            ring = _clean_ring(h, f"hole {k}")
            if _signed_ring_area(ring) > 0:
                ring = _reverse_ring(ring)
            holes.append(tuple(ring))
        object.__setattr__(self, "exterior", tuple(ext))
        object.__setattr__(self, "holes", tuple(holes))

    def rings(self) -> tuple[Ring, ...]:
        return (self.exterior,) + self.holes

    def bounds(self) -> tuple[float, float, float, float]:
        xs = [p[0] for p in self.exterior]
        ys = [p[1] for p in self.exterior]
        return min(xs), min(ys), max(xs), max(ys)

    def transformed(self, fn) -> "Polygon":
        """Apply ``fn(x, y) -> (x, y)`` to every vertex."""
        return Polygon(tuple(fn(*p) for p in self.exterior),
                       tuple(tuple(fn(*p) for p in h) for h in self.holes))


@dataclass(frozen=True)
class MultiPolygon:
    polygons: tuple[Polygon, ...]

    def __post_init__(self):
        if not self.polygons:
            raise InvalidPolygon("MultiPolygon needs at least one part")
        object.__setattr__(self, "polygons", tuple(self.polygons))


class FootprintSource(enum.Enum):
    MASK_DERIVED = "mask"
    IMPORTED = "imported"


@dataclass(frozen=True)
class Footprint:
    id: int
    geometry: Polygon
    source: FootprintSource = FootprintSource.MASK_DERIVED
    area_m2: float = field(init=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "area_m2", polygon_area(self.geometry))


def polygon_area(p: Polygon) -> float:
    area = abs(_signed_ring_area(p.exterior))
    for h in p.holes:
        area -= abs(_signed_ring_area(h))
    return max(area, 0.0)


def ring_length(ring: Sequence[Point]) -> float:
    n = len(ring)
    return math.fsum(math.hypot(ring[(i + 1) % n][0] - ring[i][0], ring[(i + 1) % n][1] - ring[i][1])
                     for i in range(n))


def polygon_perimeter(p: Polygon) -> float:
    return math.fsum(ring_length(r) for r in p.rings())


def polygon_centroid(p: Polygon) -> Point:
    """Area centroid; holes are subtracted."""
    x0, y0 = p.exterior[0]
    ax = ay = total = 0.0
    for ring in p.rings():
        n = len(ring)
        for i in range(n):
            xa, ya = ring[i][0] - x0, ring[i][1] - y0
            xb, yb = ring[(i + 1) % n][0] - x0, ring[(i + 1) % n][1] - y0
            cross = xa * yb - xb * ya
            total += cross
            ax += (xa + xb) * cross
            ay += (ya + yb) * cross
    if total == 0:
        raise DegenerateGeometry("polygon has zero area")
    return x0 + ax / (3.0 * total), y0 + ay / (3.0 * total)


def point_in_ring(pt: Point, ring: Sequence[Point]) -> bool:
    """Even-odd ray casting towards +x."""
    x, y = pt
    inside = False
    n = len(ring)
    j = n - 1
    for i in range(n):
        xi, yi = ring[i]
        xj, yj = ring[j]
        if (yi > y) != (yj > y):
            if x < (xj - xi) * (y - yi) / (yj - yi) + xi:
                inside = not inside
        j = i
    return inside


def point_in_polygon(pt: Point, p: Polygon | MultiPolygon) -> bool:
    if isinstance(p, MultiPolygon):
        return any(point_in_polygon(pt, part) for part in p.polygons)
    if not point_in_ring(pt, p.exterior):
        return False
    return not any(point_in_ring(pt, h) for h in p.holes)


def _points_of(p: Polygon | Sequence[Point]) -> list[Point]:
    if isinstance(p, Polygon):
        return list(p.exterior)
    return [(float(x), float(y)) for x, y in p]


def convex_hull(p: Polygon | Sequence[Point]) -> Polygon:
    """Monotone-chain hull of the exterior vertices, collinear points removed."""
    pts = sorted(set(_points_of(p)))
    if len(pts) < 3:
        raise DegenerateGeometry("convex hull needs at least 3 distinct points")

    def half(points):
        chain: list[Point] = []
        for q in points:
            while len(chain) >= 2 and _orient(chain[-2], chain[-1], q) <= 0:
                chain.pop()
            chain.append(q)
        return chain

    lower = half(pts)
    upper = half(reversed(pts))
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 3:
        raise DegenerateGeometry("all points are collinear")
    return Polygon(tuple(hull))


def oriented_bbox(p: Polygon | Sequence[Point]) -> tuple[float, float, float]:
    """Minimum-area enclosing rectangle as ``(width, height, angle)``.

    ``width >= height``; ``angle`` in ``[0, pi)`` is the direction of the
    long side. One side of the optimum is collinear with a hull edge, so every
    hull edge direction is tried. Near-ties in area prefer the more elongated
    rectangle so the result does not depend on where the vertex list starts.
    """
    hull = convex_hull(p).exterior
    n = len(hull)
    candidates = []
    for i in range(n):
        (ax, ay), (bx, by) = hull[i], hull[(i + 1) % n]
        length = math.hypot(bx - ax, by - ay)
        ux, uy = (bx - ax) / length, (by - ay) / length
        s = [q[0] * ux + q[1] * uy for q in hull]
        t = [q[1] * ux - q[0] * uy for q in hull]
        es, et = max(s) - min(s), max(t) - min(t)
        candidates.append((es * et, es, et, math.atan2(uy, ux)))
    best_area = min(c[0] for c in candidates)
    near = [c for c in candidates if c[0] <= best_area * (1 + 1e-10)]
    area, es, et, theta = max(near, key=lambda c: max(c[1], c[2]) / min(c[1], c[2]))
    if es < et:
        es, et = et, es
        theta += math.pi / 2
    theta = math.fmod(theta, math.pi)
    if theta < 0:
        theta += math.pi
    if theta >= math.pi - 1e-12:
        theta = 0.0
    return es, et, theta


# -- simplification -----------------------------------------------------------

def _segment_distance(p: Point, a: Point, b: Point) -> float:
    dx, dy = b[0] - a[0], b[1] - a[1]
    denom = dx * dx + dy * dy
    if denom == 0:
        return math.hypot(p[0] - a[0], p[1] - a[1])
    t = ((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / denom
    t = min(1.0, max(0.0, t))
    return math.hypot(p[0] - (a[0] + t * dx), p[1] - (a[1] + t * dy))


def douglas_peucker(chain: Sequence[Point], tolerance: float) -> list[Point]:
    """Douglas-Peucker on an open chain; endpoints are always kept."""
    n = len(chain)
    if n < 3:
        return list(chain)
    keep = [False] * n
    keep[0] = keep[-1] = True
    stack = [(0, n - 1)]
    while stack:
        first, last = stack.pop()
        dmax, index = 0.0, -1
        for i in range(first + 1, last):
            d = _segment_distance(chain[i], chain[first], chain[last])
            if d > dmax:
                dmax, index = d, i
        if index >= 0 and dmax > tolerance:
            keep[index] = True
            stack.append((index, last))
            stack.append((first, index))
    return [q for q, k in zip(chain, keep) if k]


def simplify_ring(ring: Sequence[Point], tolerance: float) -> list[Point]:
    """Closed-ring Douglas-Peucker anchored at vertex 0 and the vertex farthest from it."""
    n = len(ring)
    x0, y0 = ring[0]
    far = max(range(n), key=lambda i: (math.hypot(ring[i][0] - x0, ring[i][1] - y0), -i))
    first = douglas_peucker(ring[: far + 1], tolerance)
    second = douglas_peucker(list(ring[far:]) + [ring[0]], tolerance)
    out = first[:-1] + second[:-1]
    return out


def simplify(p: Polygon, tolerance: float) -> Polygon:
    if not (tolerance >= 0) or math.isinf(tolerance):
        raise InvalidParams(f"simplify tolerance must be finite and >= 0, got {tolerance}")
    if tolerance == 0:
        return p
    ext = simplify_ring(p.exterior, tolerance)
    if len(ext) < 3 or _signed_ring_area(ext) == 0:
        raise InvalidPolygon(f"simplification with tolerance {tolerance} collapses the exterior ring")
    if ring_self_intersects(ext):
        ext = list(p.exterior)
    holes = []
    for h in p.holes:
        ring = simplify_ring(h, tolerance)
        if len(ring) >= 3 and _signed_ring_area(ring) != 0 and not ring_self_intersects(ring):
            holes.append(tuple(ring))
    return Polygon(tuple(ext), tuple(holes))


# -- cell-grid contour tracing --------------------------------------------------

def trace_cell_rings(cells: set[tuple[int, int]], join_diagonals: bool) -> list[list[tuple[int, int]]]:
    """Boundary rings of a set of unit cells on an integer lattice (y up).

    Cell ``(i, k)`` covers ``[i, i+1] x [k, k+1]``. Boundary edges are
    oriented with the cells on their left, so outer rings come out
    counter-clockwise and hole rings clockwise. Where two cells meet only at a
    corner, ``join_diagonals`` selects whether the contour keeps them together
    (8-connectivity) or separates them (4-connectivity). Collinear vertices
    are dropped; each ring starts at its lexicographically smallest vertex.
    """
    out: dict[tuple[int, int], list[tuple[int, int]]] = {}

    def add(a, b):
        out.setdefault(a, []).append(b)

    for i, k in sorted(cells):
        if (i, k - 1) not in cells:
            add((i, k), (i + 1, k))
        if (i + 1, k) not in cells:
            add((i + 1, k), (i + 1, k + 1))
        if (i, k + 1) not in cells:
            add((i + 1, k + 1), (i, k + 1))
        if (i - 1, k) not in cells:
            add((i, k + 1), (i, k))

    def step(prev, v):
        options = out[v]
        if len(options) == 1:
            return options[0]
        dx, dy = v[0] - prev[0], v[1] - prev[1]
        for w in options:
            cross = dx * (w[1] - v[1]) - dy * (w[0] - v[0])
            if (cross < 0) == join_diagonals:
                return w
        raise AssertionError("inconsistent saddle")

    used: set[tuple[tuple[int, int], tuple[int, int]]] = set()
    rings = []
    for start in sorted(out):
        for first in out[start]:
            if (start, first) in used:
                continue
            ring = [start]
            prev, cur = start, first
            used.add((start, first))
            while True:
                nxt = step(prev, cur)
                ring.append(cur)
                used.add((cur, nxt))
                prev, cur = cur, nxt
                if prev == start and cur == first:
                    break
            ring.pop()  # start vertex was appended again on closure
            rings.append(_drop_collinear(ring))
    return rings


def _drop_collinear(ring):
    n = len(ring)
    kept = []
    for i in range(n):
        a, b, c = ring[i - 1], ring[i], ring[(i + 1) % n]
        if (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]) != 0:
            kept.append(b)
    m = kept.index(min(kept))
    return kept[m:] + kept[:m]


def lattice_ring_area2(ring) -> int:
    """Twice the signed area of an integer ring."""
    n = len(ring)
    return sum(ring[i][0] * ring[(i + 1) % n][1] - ring[(i + 1) % n][0] * ring[i][1] for i in range(n))


def cells_to_polygons(cells: set[tuple[int, int]], xs: Sequence[float], ys: Sequence[float],
                      join_diagonals: bool) -> list[Polygon]:
    """Polygons covering ``cells`` on the rectilinear grid with lines ``xs`` / ``ys``.

    Holes are assigned to the exterior that contains them. For a connected
    cell set (under the chosen connectivity) exactly one polygon results.
    """
    rings = trace_cell_rings(cells, join_diagonals)
    exteriors = [r for r in rings if lattice_ring_area2(r) > 0]
    holes = [r for r in rings if lattice_ring_area2(r) < 0]

    def world(ring):
        return tuple((xs[i], ys[k]) for i, k in ring)

    if len(exteriors) == 1:
        return [Polygon(world(exteriors[0]), tuple(world(h) for h in holes))]
    assigned: dict[int, list] = {i: [] for i in range(len(exteriors))}
    for h in holes:
        # the cell left of a hole edge belongs to the hole's owner; the
        # smallest exterior around that cell is the owner's
        (ax, ay), (bx, by) = h[0], h[1]
        length = abs(bx - ax) + abs(by - ay)
        dx, dy = (bx - ax) / length, (by - ay) / length
        probe = (ax + 0.5 * dx - 0.5 * dy, ay + 0.5 * dy + 0.5 * dx)
        owners = [i for i, e in enumerate(exteriors) if point_in_ring(probe, e)]
        owner = min(owners, key=lambda i: lattice_ring_area2(exteriors[i]))
        assigned[owner].append(h)
    return [Polygon(world(e), tuple(world(h) for h in assigned[i])) for i, e in enumerate(exteriors)]


# -- merging ------------------------------------------------------------------

class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, a: int) -> int:
        root = a
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[a] != root:
            self.parent[a], a = root, self.parent[a]
        return root

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            if ra < rb:
                self.parent[rb] = ra
            else:
                self.parent[ra] = rb


def _segment_segment_distance(a: Point, b: Point, c: Point, d: Point) -> float:
    if _segments_conflict(a, b, c, d) or {a, b} & {c, d}:
        return 0.0
    return min(_segment_distance(a, c, d), _segment_distance(b, c, d),
               _segment_distance(c, a, b), _segment_distance(d, a, b))


def boundary_distance(p: Polygon, q: Polygon) -> float:
    """Smallest distance between the two polygons' boundaries (0 if they touch or overlap)."""
    if point_in_ring(q.exterior[0], p.exterior) or point_in_ring(p.exterior[0], q.exterior):
        # overlap or nesting: treat as touching unless q sits entirely in a hole of p
        if not _inside_hole(q, p) and not _inside_hole(p, q):
            return 0.0
    best = math.inf
    for r in p.rings():
        for s in q.rings():
            for i in range(len(r)):
                a, b = r[i], r[(i + 1) % len(r)]
                for j in range(len(s)):
                    d = _segment_segment_distance(a, b, s[j], s[(j + 1) % len(s)])
                    if d < best:
                        best = d
                        if best == 0.0:
                            return 0.0
    return best


def _inside_hole(q: Polygon, p: Polygon) -> bool:
    return any(point_in_ring(q.exterior[0], h) for h in p.holes)


def _is_rectilinear(p: Polygon) -> bool:
    for ring in p.rings():
        n = len(ring)
        for i in range(n):
            a, b = ring[i], ring[(i + 1) % n]
            if a[0] != b[0] and a[1] != b[1]:
                return False
    return True


def union_polygons(members: Sequence[Polygon], gap_tolerance: float = 0.0) -> Polygon:
    """Union of polygons that touch or lie within ``gap_tolerance`` of each other.

    Members are rasterized onto the grid spanned by all their vertex
    coordinates. For rectilinear members every grid cell is either fully
    inside or fully outside, so the union is exact; other members are sampled
    at cell centres. Gaps up to ``gap_tolerance`` are closed by filling empty
    cells whose centre is within the tolerance of two different members. If
    the result is still disconnected the convex hull of all members is used.
    """
    xs = sorted({q[0] for m in members for r in m.rings() for q in r})
    ys = sorted({q[1] for m in members for r in m.rings() for q in r})
    if not all(_is_rectilinear(m) for m in members):
        xs = _refine(xs)
        ys = _refine(ys)
    cells: set[tuple[int, int]] = set()
    empty = []
    for i in range(len(xs) - 1):
        cx = 0.5 * (xs[i] + xs[i + 1])
        for k in range(len(ys) - 1):
            cy = 0.5 * (ys[k] + ys[k + 1])
            if any(point_in_polygon((cx, cy), m) for m in members):
                cells.add((i, k))
            else:
                empty.append((i, k, cx, cy))
    if gap_tolerance > 0:
        for i, k, cx, cy in empty:
            near = 0
            for m in members:
                if _point_boundary_distance((cx, cy), m) <= gap_tolerance:
                    near += 1
                    if near == 2:
                        cells.add((i, k))
                        break
    polys = cells_to_polygons(cells, xs, ys, join_diagonals=True)
    if len(polys) == 1:
        return polys[0]
    return convex_hull([q for m in members for q in m.exterior])


def _refine(coords: list[float], parts: int = 8) -> list[float]:
    out = []
    for a, b in zip(coords, coords[1:]):
        out.extend(a + (b - a) * j / parts for j in range(parts))
    out.append(coords[-1])
    return out


def _point_boundary_distance(pt: Point, p: Polygon) -> float:
    return min(_segment_distance(pt, r[i], r[(i + 1) % len(r)]) for r in p.rings() for i in range(len(r)))


def merge_contiguous(fps: Sequence[Footprint], gap_tolerance: float) -> list[Footprint]:
    """Union footprints whose boundaries touch or come within ``gap_tolerance``.

    Groups are the transitive closure of pairwise adjacency. A merged
    footprint takes the smallest member id; the result is sorted by id.
    """
    if not (gap_tolerance >= 0) or math.isinf(gap_tolerance):
        raise InvalidParams(f"gap tolerance must be finite and >= 0, got {gap_tolerance}")
    fps = sorted(fps, key=lambda f: f.id)
    n = len(fps)
    boxes = [f.geometry.bounds() for f in fps]
    order = sorted(range(n), key=lambda i: boxes[i][0])
    uf = _UnionFind(n)
    for a_pos, a in enumerate(order):
        ax0, ay0, ax1, ay1 = boxes[a]
        for b in order[a_pos + 1:]:
            bx0, by0, bx1, by1 = boxes[b]
            if bx0 > ax1 + gap_tolerance:
                break
            if by0 > ay1 + gap_tolerance or by1 < ay0 - gap_tolerance:
                continue
            if boundary_distance(fps[a].geometry, fps[b].geometry) <= gap_tolerance:
                uf.union(a, b)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(uf.find(i), []).append(i)
    merged = []
    for members in groups.values():
        if len(members) == 1:
            merged.append(fps[members[0]])
            continue
        geoms = [fps[i].geometry for i in members]
        sources = {fps[i].source for i in members}
        source = FootprintSource.MASK_DERIVED if sources == {FootprintSource.MASK_DERIVED} else FootprintSource.IMPORTED
        merged.append(Footprint(min(fps[i].id for i in members), union_polygons(geoms, gap_tolerance), source))
    merged.sort(key=lambda f: f.id)
    return merged
