"""Interpolation vs extrapolation analysis of classification datasets via convex-hull membership."""

from .hull import HullSplit, point_in_hull, split_by_hull
from .ingest import Dataset, load_table, standardize, stratified_kfold, validate
from .metafeatures import MetricVector, profile

__version__ = "0.1.0"
