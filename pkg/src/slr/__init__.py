"""Simulated LiDAR repositioning.

Resample an existing point cloud into the scan an ideal static LiDAR would
have taken from somewhere else in the scene.
"""

from .cloud import (
    Label,
    LabeledPoint,
    PointCloud,
    SphericalPoint,
    cartesian_coordinates,
    from_spherical,
    spherical_coordinates,
    to_spherical,
)
from .errors import (
    CloudFormatError,
    EmptyCloud,
    EmptyInput,
    EmptyTarget,
    NoGroundNearby,
    NoPointsInRange,
    NotEnoughCells,
    SLRError,
    ZeroRadius,
)
from .io import load_cloud, store_cloud
from .nss import (
    DistanceHistogram,
    PulseBinEdges,
    distance_histogram,
    ground_fraction,
    height_sweep,
    pool_histograms,
    pulse_sized_bins,
    total_variation,
)
from .scan import (
    BinnedCoordinate,
    GroundIndex,
    ScannerConfig,
    bin_coordinates,
    compute_scanner_origin,
    simulate_scan,
    simulate_scan_sorted,
    slr,
)
from .scenes import SceneConfig, generate_dense_scene, generate_ground_disk, generate_rectangles
from .selection import (
    AzimuthProfile,
    CandidateCell,
    SelectionConfig,
    build_grid,
    candidate_cells,
    compute_azimuth_profile,
    compute_minimum_profile,
    filter_azimuth_profile,
    filter_ground_density,
    select_positions,
)
from .validation import ExperimentResult, SimilarityRecord, nearest_neighbor_distances, run_experiment, similarity

__version__ = "0.1.0"
