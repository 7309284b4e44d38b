"""CSV-to-figure rendering for the near-field tracking simulator's outputs."""

from .figures import plot_eta_curve, plot_rmse_map, plot_trajectory
from .readers import SchemaError, read_map, read_scene, read_sweep, read_track

__version__ = "0.1.0"
