"""Parsers and emitters for the exchange formats."""
from .config import Config, emit_config, parse_config
from .geojson import FeatureRecord, emit_geojson, format_number, parse_geojson
from .grid import emit_grid
from .tables import read_csv, write_csv

__all__ = [
    "Config", "FeatureRecord", "emit_config", "emit_geojson", "emit_grid", "format_number",
    "parse_config", "parse_geojson", "read_csv", "write_csv",
]
