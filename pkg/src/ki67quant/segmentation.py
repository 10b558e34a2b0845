"""Pixelwise stain classification.

Every pixel of a micrograph is assigned to exactly one of three classes:
positive stain (DAB brown/red nucleus), negative stain (hematoxylin blue
nucleus), or background. Classification is pointwise in HSV: a pixel joins a
stain class when its hue falls in that class's hue window and its saturation
and value pass the shared gates. The two hue windows must be disjoint, so
the resulting masks are disjoint by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .raster import _hue_degrees, _require_rgb


@dataclass(frozen=True)
class HueRange:
    """Circular range of hues in degrees. from_deg > to_deg wraps past 360.

    HueRange(330, 50) covers 330..360 plus 0..50; HueRange(180, 280) is the
    plain interval. Bounds are inclusive.
    """

    from_deg: float
    to_deg: float

    def __post_init__(self):
        for bound in (self.from_deg, self.to_deg):
            if not 0.0 <= bound <= 360.0:
                raise ValueError(f"hue bounds must lie in [0, 360], got {bound!r}")

    @property
    def wraps(self) -> bool:
        return self.from_deg > self.to_deg

    def arcs(self) -> list[tuple[float, float]]:
        """The range as plain [lo, hi] arcs (two arcs when it wraps)."""
        if self.wraps:
            return [(self.from_deg, 360.0), (0.0, self.to_deg)]
        return [(self.from_deg, self.to_deg)]

    def contains(self, hue: float) -> bool:
        if self.wraps:
            return hue >= self.from_deg or hue <= self.to_deg
        return self.from_deg <= hue <= self.to_deg

    def contains_array(self, hues: np.ndarray) -> np.ndarray:
        if self.wraps:
            return (hues >= self.from_deg) | (hues <= self.to_deg)
        return (hues >= self.from_deg) & (hues <= self.to_deg)

    def overlaps(self, other: "HueRange") -> bool:
        for a_lo, a_hi in self.arcs():
            for b_lo, b_hi in other.arcs():
                if a_lo <= b_hi and b_lo <= a_hi:
                    return True
        return False


@dataclass(frozen=True)
class StainThresholds:
    """HSV windows defining the positive-stain, negative-stain, and background classes.

    min_saturation rejects washed-out (near-gray) pixels; min_value rejects
    near-black artifacts; max_value rejects pixels brighter than the ceiling.
    The saturation floor is what removes white slide background, so the
    shipped default leaves the value ceiling wide open.
    """

    positive_hue: HueRange
    negative_hue: HueRange
    min_saturation: float
    min_value: float
    max_value: float

    def __post_init__(self):
        if not 0.0 <= self.min_saturation <= 1.0:
            raise ValueError(f"min_saturation must lie in [0, 1], got {self.min_saturation!r}")
        if not 0.0 <= self.min_value < self.max_value <= 1.0:
            raise ValueError(
                "need 0 <= min_value < max_value <= 1, got "
                f"min_value={self.min_value!r} max_value={self.max_value!r}"
            )
        if self.positive_hue.overlaps(self.negative_hue):
            raise ValueError(
                f"positive hue window {self.positive_hue} overlaps negative window "
                f"{self.negative_hue}; the two classes must be disjoint"
            )


@dataclass(frozen=True)
class SegmentationResult:
    """Disjoint positive and negative stain masks sharing the source dimensions."""

    positive: np.ndarray
    negative: np.ndarray

    def __post_init__(self):
        if self.positive.shape != self.negative.shape:
            raise ValueError(
                f"mask shapes differ: {self.positive.shape} vs {self.negative.shape}"
            )
        if (self.positive & self.negative).any():
            raise ValueError("positive and negative masks must be pixelwise disjoint")

    @property
    def background(self) -> np.ndarray:
        return ~(self.positive | self.negative)


def default_thresholds() -> StainThresholds:
    """Shipped defaults: warm brown/red arc for DAB, blue arc for hematoxylin.

    The positive window wraps through red (330 to 50 degrees); the negative
    window spans the blues (180 to 280). These are starting points, not
    calibrated constants; override them per staining batch via the config
    file.
    """
    return StainThresholds(
        positive_hue=HueRange(330.0, 50.0),
        negative_hue=HueRange(180.0, 280.0),
        min_saturation=0.15,
        min_value=0.10,
        max_value=1.0,
    )


def classify_pixels(image: np.ndarray, thresholds: StainThresholds) -> SegmentationResult:
    """Classify every pixel of an RGB image into positive / negative / background.

    A pixel is positive iff its hue lies in thresholds.positive_hue, its
    saturation is at least min_saturation, and its value lies in
    [min_value, max_value]; negative analogously with negative_hue. All
    other pixels are background (members of neither mask).

    Hue is only evaluated on pixels passing the saturation and value gates
    (identical formula and precision as hsv_planes), which keeps megapixel
    micrographs fast since background dominates them.
    """
    arr = _require_rgb(image)
    r = arr[:, :, 0]
    g = arr[:, :, 1]
    b = arr[:, :, 2]

    max8 = np.maximum(np.maximum(r, g), b)
    min8 = np.minimum(np.minimum(r, g), b)
    maxc = max8.astype(np.float64)
    delta = (max8 - min8).astype(np.float64)
    value = maxc / 255.0
    saturation = delta / np.where(max8 > 0, maxc, 1.0)
    gate = (
        (saturation >= thresholds.min_saturation)
        & (value >= thresholds.min_value)
        & (value <= thresholds.max_value)
    )

    positive = np.zeros(gate.shape, dtype=bool)
    negative = np.zeros(gate.shape, dtype=bool)
    sel = np.nonzero(gate)
    if sel[0].size:
        max_sel = max8[sel]
        min_sel = min8[sel]
        hue = _hue_degrees(r[sel], g[sel], b[sel], max_sel, delta[sel], max_sel > min_sel)
        positive[sel] = thresholds.positive_hue.contains_array(hue)
        negative[sel] = thresholds.negative_hue.contains_array(hue)
    return SegmentationResult(positive=positive, negative=negative)
