"""Relative Hausdorff graph similarity and temporal anomaly detection."""

__version__ = "0.1.0"

from .graph import Ccdh, Graph, ccdh_of, smooth_eval
from .similarity import edit_distance_aligned, ks_distance, rh, rh_discrete, rh_smooth

__all__ = [
    "Ccdh",
    "Graph",
    "ccdh_of",
    "smooth_eval",
    "rh",
    "rh_smooth",
    "rh_discrete",
    "ks_distance",
    "edit_distance_aligned",
    "__version__",
]
