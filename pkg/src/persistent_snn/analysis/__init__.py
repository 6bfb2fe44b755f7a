"""Post-hoc studies of evolved networks."""

from .landscape import LandscapeSample, landscape_genome, sample_landscape
from .pruning import (
    GroupLabel,
    GroupLabels,
    PruningResult,
    classify_groups,
    default_pruning_times,
    group_composition,
    prune_group,
    prune_sweep,
)
from .sensitivity import (
    CorrelationMap,
    WeightDeviationMap,
    default_grid,
    pearson,
    weight_deviation,
    weight_sweep,
)
from .spikes import ISIStats, RasterTable, export_raster, isi_stats, trial_windows

__all__ = [
    "LandscapeSample", "landscape_genome", "sample_landscape",
    "GroupLabel", "GroupLabels", "PruningResult", "classify_groups", "default_pruning_times",
    "group_composition", "prune_group", "prune_sweep",
    "CorrelationMap", "WeightDeviationMap", "default_grid", "pearson", "weight_deviation",
    "weight_sweep",
    "ISIStats", "RasterTable", "export_raster", "isi_stats", "trial_windows",
]
