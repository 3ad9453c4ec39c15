from __future__ import annotations

from ..raster_ingest import GeoGrid


def emit_grid(g: GeoGrid) -> bytes:
    """Serialize a mask in the format read by :func:`~supplytask.raster_ingest.parse_grid`."""
    lines = [
        f"width {g.width}",
        f"height {g.height}",
        f"origin_x {g.origin_x!r}",
        f"origin_y {g.origin_y!r}",
        f"pixel_size {g.pixel_size!r}",
        "data",
    ]
    for r in range(g.height):
        lines.append(" ".join("1" if v else "0" for v in g.data[r * g.width:(r + 1) * g.width]))
    return ("\n".join(lines) + "\n").encode("utf-8")
