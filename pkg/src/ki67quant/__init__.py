"""Ki-67 proliferation index scoring from immunohistochemistry micrographs.

Pipeline: HSV color thresholding separates positively stained (DAB brown)
and counterstained (hematoxylin blue) nuclei from background, binary
morphology cleans the masks, connected-component labeling counts nuclei,
and the index is the stained fraction. A synthetic generator with exact
ground truth and an embedded ten-case reference cohort provide end-to-end
validation.
"""

from .components import Component, ComponentSet, filter_by_area, label_components
from .config import ConfigError, RunConfig, default_config, load_config, parse_config
from .index import (
    REPORTED_CORRELATION,
    REPORTED_INDEX_RANGE_PERCENT,
    REPORTED_MEDIAN_TOTAL_CELLS,
    REPORTED_TOTAL_CELLS_RANGE,
    AnalysisReport,
    CohortSummary,
    ValidationRecord,
    cohort_summary,
    compute_area_index,
    compute_index,
    format_percent,
    pearson_r,
    validation_dataset,
)
from .morphology import StructuringElement, closing, dilate, erode, opening
from .raster import HsvPixel, ImageFormatError, hsv_planes, load_image, rgb_to_hsv, save_image
from .segmentation import (
    HueRange,
    SegmentationResult,
    StainThresholds,
    classify_pixels,
    default_thresholds,
)
from .synthgen import Disk, GroundTruth, PlacementError, SplitMix64, SynthSpec, generate

__version__ = "0.1.0"

__all__ = [
    "REPORTED_CORRELATION",
    "REPORTED_INDEX_RANGE_PERCENT",
    "REPORTED_MEDIAN_TOTAL_CELLS",
    "REPORTED_TOTAL_CELLS_RANGE",
    "AnalysisReport",
    "CohortSummary",
    "Component",
    "ComponentSet",
    "ConfigError",
    "Disk",
    "GroundTruth",
    "HsvPixel",
    "HueRange",
    "ImageFormatError",
    "PlacementError",
    "RunConfig",
    "SegmentationResult",
    "SplitMix64",
    "StainThresholds",
    "StructuringElement",
    "SynthSpec",
    "ValidationRecord",
    "classify_pixels",
    "closing",
    "cohort_summary",
    "compute_area_index",
    "compute_index",
    "default_config",
    "default_thresholds",
    "dilate",
    "erode",
    "filter_by_area",
    "format_percent",
    "generate",
    "hsv_planes",
    "label_components",
    "load_config",
    "load_image",
    "opening",
    "parse_config",
    "pearson_r",
    "rgb_to_hsv",
    "save_image",
    "validation_dataset",
]
