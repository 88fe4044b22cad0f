"""Chord-accumulation corner detection and its transformation benchmark."""

from __future__ import annotations

from .config import RunConfig
from .contours import Curve, TJunction, detect_t_junctions, extract_curves, smooth_curve
from .detector import (
    CPDA_CHORDS,
    SCA_CHORD,
    Corner,
    CornerSet,
    CurvatureProfile,
    DetectorParams,
    OpCounters,
    PipelineConfig,
    accumulate,
    chord_point_distance,
    combine_profiles,
    corner_angle,
    detect_corners,
    local_maxima,
    normalize_profile,
    refine_by_angle,
    refine_by_curvature,
)
from .errors import (
    ChordCornersError,
    DegenerateAngleError,
    DegenerateChordError,
    DimensionError,
    FixtureError,
    InputError,
    ParameterError,
)
from .evaluation import (
    MATCH_RADIUS,
    REFERENCE_RESULTS,
    CornerMatch,
    ExperimentResult,
    ItemResult,
    average_repeatability,
    localization_error,
    match_corners,
    run_experiment,
    summarize,
    write_report,
)
from .image import (
    EdgeMap,
    GrayImage,
    canny,
    gaussian_kernel,
    gaussian_smooth,
    load_image,
    overlay_corners,
    read_pgm,
    to_grayscale,
    write_pgm,
)
from .synth import (
    SynthFixture,
    default_corpus,
    make_blob,
    make_polygon,
    make_rounded_rect,
    make_star,
)
from .transforms import (
    EXPECTED_PER_BASE,
    FAMILIES,
    GEOMETRIC_FAMILIES,
    REPORTED_FAMILY_TOTALS,
    ManifestRow,
    TransformSpec,
    add_gaussian_noise,
    apply_geometric,
    apply_transform,
    derive_seed,
    enumerate_specs,
    generate_dataset,
    inverse_map_point,
    jpeg_degrade,
    map_point,
    map_points,
    quantization_table,
    read_manifest,
    write_manifest,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
