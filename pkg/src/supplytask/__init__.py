"""Residential electricity supply tasks from georeferenced building masks.

Stages: building identification (mask -> footprints), size-class
classification and building typology, per-building demand with zone
aggregation and comparison against a reference.
"""
from importlib import resources

__version__ = "0.1.0"


def data_path(*parts: str):
    """Path of a bundled data file, e.g. ``data_path("town", "grid.asc")``."""
    return resources.files(__name__).joinpath("data", *parts)
