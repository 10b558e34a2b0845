"""Proliferation index computation and the embedded reference cohort.

The Ki-67 index is the fraction of tumor nuclei staining positive. It is
computed in two ways: from nucleus counts (the headline value) and from
stained pixel areas. Percentages are truncated, never rounded, to one
decimal; the embedded ten-case cohort is only self-consistent under
truncation (rounding would shift cases 8, 9, and 10).
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass
from decimal import ROUND_DOWN, Decimal
from typing import Sequence

from .segmentation import SegmentationResult


@dataclass(frozen=True)
class AnalysisReport:
    """Per-image result: counts and pixel areas of both stain classes, the
    index under both interpretations, and the formatted percentage.

    no_cells_detected flags a degenerate image with neither stain class
    present; such images report an index of 0 instead of failing. error is
    set (and the numeric fields zeroed) when the image could not be
    analyzed at all.
    """

    image_id: str
    stained_count: int
    unstained_count: int
    stained_area: int
    unstained_area: int
    index_by_count: float
    index_by_area: float
    formatted_percent: str
    no_cells_detected: bool = False
    error: str | None = None


@dataclass(frozen=True)
class ValidationRecord:
    """One reference case: nucleus counts from digital analysis plus the
    index percentage it produced and the pathologist's visual percentage."""

    case_id: int
    stained: int
    unstained: int
    digital_index_percent: float
    visual_index_percent: float


@dataclass(frozen=True)
class CohortSummary:
    """Cohort statistics over a set of validation records."""

    median_total_cells: float
    min_total_cells: int
    max_total_cells: int
    min_index_percent: float
    max_index_percent: float
    pearson_r: float


# Ten-case reference cohort: per-case stained / unstained counts from digital
# analysis, the digital index they yield, and an experienced pathologist's
# visual score for the same slides. Used by the validate subcommand.
_REFERENCE_COHORT = (
    (1, 77, 1883, 3.9, 5.0),
    (2, 240, 2473, 8.8, 7.5),
    (3, 471, 2278, 17.1, 25.0),
    (4, 442, 2013, 18.0, 24.0),
    (5, 771, 1534, 33.4, 40.0),
    (6, 79, 1082, 6.8, 7.5),
    (7, 189, 2631, 6.7, 7.5),
    (8, 80, 2363, 3.2, 5.0),
    (9, 9, 2329, 0.3, 3.0),
    (10, 282, 2600, 9.7, 7.5),
)

# Statistics reported alongside the reference cohort, reproduced by
# cohort_summary and checked by the validate subcommand.
REPORTED_MEDIAN_TOTAL_CELLS = 2449
REPORTED_TOTAL_CELLS_RANGE = (1161, 2882)
REPORTED_INDEX_RANGE_PERCENT = (0.3, 33.4)
# Correlation between the digital and visual methods as originally reported
# for this cohort. Recomputing Pearson's r from the percentages above gives
# a different value; validate prints both and their delta rather than
# forcing agreement, since the inputs behind the reported figure are not
# recoverable from the cohort table alone.
REPORTED_CORRELATION = 0.95127


def compute_index(stained: int, unstained: int) -> float:
    """stained / (stained + unstained); 0.0 when both counts are zero."""
    if stained < 0 or unstained < 0:
        raise ValueError(f"counts must be >= 0, got stained={stained} unstained={unstained}")
    total = stained + unstained
    if total == 0:
        return 0.0
    return stained / total


def compute_area_index(seg: SegmentationResult) -> float:
    """Index from pixel areas: positive popcount over total stained popcount."""
    positive = int(seg.positive.sum())
    negative = int(seg.negative.sum())
    return compute_index(positive, negative)


def format_percent(fraction: float) -> str:
    """Format a fraction in [0, 1] as a percentage truncated to one decimal.

    Truncation is decimal-exact: the shortest decimal representation of the
    value is cut after the first decimal of the percentage, so 0.097849
    gives '9.7%' (rounding would give '9.8%') and 0.5 gives '50.0%'.
    """
    fraction = float(fraction)
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"fraction must lie in [0, 1], got {fraction!r}")
    percent = Decimal(repr(fraction)) * 100
    return f"{percent.quantize(Decimal('0.1'), rounding=ROUND_DOWN)}%"


def validation_dataset() -> tuple[ValidationRecord, ...]:
    """The embedded ten-case reference cohort, in case order."""
    return tuple(ValidationRecord(*row) for row in _REFERENCE_COHORT)


def pearson_r(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Sample Pearson product-moment correlation of two equal-length sequences.

    Undefined (raises ValueError) for fewer than two pairs or when either
    sequence is constant.
    """
    if len(xs) != len(ys):
        raise ValueError(f"length mismatch: {len(xs)} vs {len(ys)}")
    n = len(xs)
    if n < 2:
        raise ValueError("need at least two pairs")
    xs = [float(x) for x in xs]
    ys = [float(y) for y in ys]
    mean_x = sum(xs) / n
    mean_y = sum(ys) / n
    sxx = sum((x - mean_x) ** 2 for x in xs)
    syy = sum((y - mean_y) ** 2 for y in ys)
    if sxx == 0.0 or syy == 0.0:
        raise ValueError("correlation is undefined for a constant sequence")
    sxy = sum((x - mean_x) * (y - mean_y) for x, y in zip(xs, ys))
    return sxy / math.sqrt(sxx * syy)


def cohort_summary(records: Sequence[ValidationRecord]) -> CohortSummary:
    """Summarize a cohort: median and range of total cells per case, range
    of the digital index, and Pearson's r between digital and visual
    percentages.

    pearson_r is NaN when the correlation is undefined (a single case, or a
    constant column); the positional statistics are still reported.
    """
    if not records:
        raise ValueError("cohort is empty")
    totals = [r.stained + r.unstained for r in records]
    digital = [r.digital_index_percent for r in records]
    visual = [r.visual_index_percent for r in records]
    try:
        r = pearson_r(digital, visual)
    except ValueError:
        r = math.nan
    return CohortSummary(
        median_total_cells=statistics.median(totals),
        min_total_cells=min(totals),
        max_total_cells=max(totals),
        min_index_percent=min(digital),
        max_index_percent=max(digital),
        pearson_r=r,
    )
