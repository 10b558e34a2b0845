"""Synthetic stained-tissue images with exact ground truth.

Real annotated micrographs are rarely shareable, so the end-to-end oracle is
synthetic: non-overlapping colored disks (nuclei) on a pale background, with
the generator emitting the per-pixel masks, per-disk areas, and counts the
pipeline must recover exactly.

Determinism: every random decision comes from a counter-based splitmix64
stream, so a spec (including its seed) reproduces the identical image
bit for bit on any platform. Draw i is mix64(seed + (i+1) * 0x9E3779B97F4A7C15)
with the standard splitmix64 finalizer constants 0xBF58476D1CE4E5B9 and
0x94D049BB133111EB; integers in [0, m) are taken as draw % m, and channel
jitter offsets are drawn pixel-major, channel-minor.

Separability: disk and background colors must classify to their own classes
under the thresholds in use. Per-pixel jitter is re-drawn (never clamped)
for any pixel that a jitter draw would push out of channel range or across
a class boundary, so classifying the finished image reproduces the ground
truth masks exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .index import compute_index, format_percent
from .segmentation import StainThresholds, classify_pixels, default_thresholds

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX_1 = 0xBF58476D1CE4E5B9
_MIX_2 = 0x94D049BB133111EB

_MAX_PLACEMENT_ATTEMPTS = 2000
_MAX_JITTER_ROUNDS = 1000


class PlacementError(RuntimeError):
    """Raised when the requested nuclei cannot be placed in the canvas."""


def _mix64(x: int) -> int:
    x &= _MASK64
    x = ((x ^ (x >> 30)) * _MIX_1) & _MASK64
    x = ((x ^ (x >> 27)) * _MIX_2) & _MASK64
    return x ^ (x >> 31)


class SplitMix64:
    """Counter-based splitmix64 stream: stateless mixing of seed + counter."""

    def __init__(self, seed: int):
        self._seed = seed & _MASK64
        self._count = 0

    def next_int(self, bound: int) -> int:
        """One integer in [0, bound)."""
        if bound <= 0:
            raise ValueError(f"bound must be positive, got {bound}")
        self._count += 1
        return _mix64((self._seed + self._count * _GOLDEN) & _MASK64) % bound

    def take_array(self, n: int) -> np.ndarray:
        """The next n raw uint64 draws as an array (same stream as next_int)."""
        idx = np.arange(self._count + 1, self._count + n + 1, dtype=np.uint64)
        self._count += n
        with np.errstate(over="ignore"):
            z = np.uint64(self._seed) + idx * np.uint64(_GOLDEN)
            z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX_1)
            z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX_2)
            return z ^ (z >> np.uint64(31))


def _check_color(name: str, color) -> tuple[int, int, int]:
    try:
        r, g, b = color
    except (TypeError, ValueError):
        raise ValueError(f"{name} must be an (r, g, b) triple, got {color!r}") from None
    for c in (r, g, b):
        if isinstance(c, bool) or not isinstance(c, (int, np.integer)) or not 0 <= c <= 255:
            raise ValueError(f"{name} channels must be integers in [0, 255], got {color!r}")
    return (int(r), int(g), int(b))


@dataclass(frozen=True)
class SynthSpec:
    """Recipe for one synthetic image.

    radius_range bounds the integer disk radii (inclusive); jitter is the
    per-channel uniform noise amplitude; seed makes generation deterministic.
    """

    width: int
    height: int
    positive_count: int
    negative_count: int
    radius_range: tuple[int, int] = (3, 6)
    positive_color: tuple[int, int, int] = (140, 90, 50)
    negative_color: tuple[int, int, int] = (70, 80, 180)
    background_color: tuple[int, int, int] = (245, 245, 245)
    jitter: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError(f"canvas must be at least 1x1, got {self.width}x{self.height}")
        if self.positive_count < 0 or self.negative_count < 0:
            raise ValueError("nucleus counts must be >= 0")
        r_min, r_max = self.radius_range
        if not (isinstance(r_min, int) and isinstance(r_max, int)) or not 1 <= r_min <= r_max:
            raise ValueError(f"radius_range must be integers 1 <= min <= max, got {self.radius_range!r}")
        object.__setattr__(self, "radius_range", (r_min, r_max))
        for name in ("positive_color", "negative_color", "background_color"):
            object.__setattr__(self, name, _check_color(name, getattr(self, name)))
        if not isinstance(self.jitter, int) or not 0 <= self.jitter <= 30:
            raise ValueError(f"jitter must be an integer in [0, 30], got {self.jitter!r}")
        if not isinstance(self.seed, int):
            raise ValueError(f"seed must be an integer, got {self.seed!r}")

    @classmethod
    def from_dict(cls, data: dict) -> "SynthSpec":
        """Build from a parsed JSON document, rejecting unknown keys."""
        if not isinstance(data, dict):
            raise ValueError(f"synthetic spec must be a JSON object, got {type(data).__name__}")
        fields = {
            "width", "height", "positive_count", "negative_count", "radius_range",
            "positive_color", "negative_color", "background_color", "jitter", "seed",
        }
        unknown = set(data) - fields
        if unknown:
            raise ValueError(f"unknown synthetic spec keys: {sorted(unknown)}")
        missing = {"width", "height", "positive_count", "negative_count"} - set(data)
        if missing:
            raise ValueError(f"synthetic spec missing required keys: {sorted(missing)}")
        kwargs = dict(data)
        for key in ("radius_range", "positive_color", "negative_color", "background_color"):
            if key in kwargs:
                kwargs[key] = tuple(kwargs[key])
        return cls(**kwargs)


@dataclass(frozen=True)
class Disk:
    """One generated nucleus: center (row, col), radius, rasterized pixel
    area, and whether it is positively stained."""

    row: int
    col: int
    radius: int
    area: int
    positive: bool


@dataclass(frozen=True)
class GroundTruth:
    """A generated image together with everything the pipeline must recover."""

    image: np.ndarray
    positive_mask: np.ndarray
    negative_mask: np.ndarray
    positive_count: int
    negative_count: int
    disks: tuple[Disk, ...]

    @property
    def per_disk_areas(self) -> tuple[int, ...]:
        return tuple(d.area for d in self.disks)

    @property
    def expected_index(self) -> float:
        return compute_index(self.positive_count, self.negative_count)

    def sidecar_dict(self) -> dict:
        """JSON-ready ground truth summary written next to the image."""
        return {
            "width": int(self.image.shape[1]),
            "height": int(self.image.shape[0]),
            "positive_count": self.positive_count,
            "negative_count": self.negative_count,
            "expected_index": self.expected_index,
            "expected_percent": format_percent(self.expected_index),
            "disks": [
                {
                    "row": d.row,
                    "col": d.col,
                    "radius": d.radius,
                    "area": d.area,
                    "positive": d.positive,
                }
                for d in self.disks
            ],
        }


def _place_disks(spec: SynthSpec, rng: SplitMix64) -> list[tuple[int, int, int, bool]]:
    """Rejection-sample non-overlapping disk placements, positives first.

    Disks keep a 1-pixel margin to the image edge and a center-distance gap
    strictly greater than the radius sum plus 2, which keeps rasterized
    disks disjoint even under 8-connectivity.
    """
    r_min, r_max = spec.radius_range
    total = spec.positive_count + spec.negative_count
    placed_rows = np.empty(total, dtype=np.int64)
    placed_cols = np.empty(total, dtype=np.int64)
    placed_radii = np.empty(total, dtype=np.int64)
    out: list[tuple[int, int, int, bool]] = []

    for k in range(total):
        positive = k < spec.positive_count
        for _ in range(_MAX_PLACEMENT_ATTEMPTS):
            radius = r_min + rng.next_int(r_max - r_min + 1)
            row_span = spec.height - 2 * radius - 2
            col_span = spec.width - 2 * radius - 2
            if row_span < 1 or col_span < 1:
                raise PlacementError(
                    f"placement failed: a radius-{radius} nucleus cannot fit in a "
                    f"{spec.width}x{spec.height} canvas with a 1-pixel margin"
                )
            row = radius + 1 + rng.next_int(row_span)
            col = radius + 1 + rng.next_int(col_span)
            if k > 0:
                gap = placed_radii[:k] + radius + 2
                d2 = (placed_rows[:k] - row) ** 2 + (placed_cols[:k] - col) ** 2
                if not (d2 > gap * gap).all():
                    continue
            placed_rows[k] = row
            placed_cols[k] = col
            placed_radii[k] = radius
            out.append((row, col, radius, positive))
            break
        else:
            raise PlacementError(
                f"placement failed: could not fit nucleus {k + 1} of {total} after "
                f"{_MAX_PLACEMENT_ATTEMPTS} attempts; the spec is too dense for the canvas"
            )
    return out


def _paint_disk(
    mask: np.ndarray, image: np.ndarray, color: tuple[int, int, int],
    row: int, col: int, radius: int,
) -> int:
    """Rasterize one disk (center-distance test) into the class mask and the
    image; returns its exact pixel area."""
    ys = np.arange(row - radius, row + radius + 1)
    xs = np.arange(col - radius, col + radius + 1)
    circle = ((ys - row) ** 2)[:, None] + ((xs - col) ** 2)[None, :] <= radius * radius
    rows_slice = slice(row - radius, row + radius + 1)
    cols_slice = slice(col - radius, col + radius + 1)
    mask[rows_slice, cols_slice] |= circle
    image[rows_slice, cols_slice][circle] = color
    return int(circle.sum())


def _classify_matches(
    image: np.ndarray,
    positive_mask: np.ndarray,
    negative_mask: np.ndarray,
    thresholds: StainThresholds,
) -> np.ndarray:
    seg = classify_pixels(image, thresholds)
    return (seg.positive == positive_mask) & (seg.negative == negative_mask)


def generate(spec: SynthSpec, thresholds: StainThresholds | None = None) -> GroundTruth:
    """Generate an image plus exact ground truth for the given spec.

    thresholds defaults to default_thresholds() and is the classifier the
    separability guarantee is verified against. Raises PlacementError when
    the requested counts do not fit (never silently places fewer), and
    ValueError when the spec colors do not classify to their own classes.
    """
    if thresholds is None:
        thresholds = default_thresholds()

    # The three base colors must land in their own classes before any jitter.
    base_colors = np.array(
        [spec.positive_color, spec.negative_color, spec.background_color], dtype=np.uint8
    ).reshape(3, 1, 3)
    base_seg = classify_pixels(base_colors, thresholds)
    expected_pos = np.array([[True], [False], [False]])
    expected_neg = np.array([[False], [True], [False]])
    if not (
        np.array_equal(base_seg.positive, expected_pos)
        and np.array_equal(base_seg.negative, expected_neg)
    ):
        raise ValueError(
            "spec colors are not separable under the given thresholds: "
            f"positive {spec.positive_color} -> ({base_seg.positive[0, 0]}, {base_seg.negative[0, 0]}), "
            f"negative {spec.negative_color} -> ({base_seg.positive[1, 0]}, {base_seg.negative[1, 0]}), "
            f"background {spec.background_color} -> ({base_seg.positive[2, 0]}, {base_seg.negative[2, 0]})"
        )

    rng = SplitMix64(spec.seed)
    placements = _place_disks(spec, rng)

    positive_mask = np.zeros((spec.height, spec.width), dtype=bool)
    negative_mask = np.zeros((spec.height, spec.width), dtype=bool)
    image = np.empty((spec.height, spec.width, 3), dtype=np.uint8)
    image[:, :] = spec.background_color

    disks = []
    for row, col, radius, positive in placements:
        mask = positive_mask if positive else negative_mask
        color = spec.positive_color if positive else spec.negative_color
        area = _paint_disk(mask, image, color, row, col, radius)
        disks.append(Disk(row=row, col=col, radius=radius, area=area, positive=positive))

    if spec.jitter > 0:
        image = _apply_jitter(image, positive_mask, negative_mask, spec, thresholds, rng)

    if not _classify_matches(image, positive_mask, negative_mask, thresholds).all():
        raise RuntimeError("generated image does not reproduce its ground truth masks")

    return GroundTruth(
        image=image,
        positive_mask=positive_mask,
        negative_mask=negative_mask,
        positive_count=spec.positive_count,
        negative_count=spec.negative_count,
        disks=tuple(disks),
    )


def _apply_jitter(
    image: np.ndarray,
    positive_mask: np.ndarray,
    negative_mask: np.ndarray,
    spec: SynthSpec,
    thresholds: StainThresholds,
    rng: SplitMix64,
) -> np.ndarray:
    """Add bounded per-pixel channel noise without crossing class boundaries.

    Offsets are uniform in [-jitter, +jitter]. Any pixel whose jittered color
    leaves [0, 255] on some channel or classifies differently from its base
    color gets a fresh draw, repeatedly, until the whole image verifies.
    """
    span = 2 * spec.jitter + 1
    base = image.astype(np.int16)
    n_pixels = image.shape[0] * image.shape[1]

    offsets = rng.take_array(n_pixels * 3) % np.uint64(span)
    candidate = base + (offsets.astype(np.int16).reshape(base.shape) - spec.jitter)

    in_range = ((candidate >= 0) & (candidate <= 255)).all(axis=2)
    clipped = np.clip(candidate, 0, 255).astype(np.uint8)
    good = in_range & _classify_matches(clipped, positive_mask, negative_mask, thresholds)

    rounds = 0
    while not good.all():
        rounds += 1
        if rounds > _MAX_JITTER_ROUNDS:
            raise RuntimeError(
                "jitter re-draws did not converge; spec colors sit too close to a "
                "class boundary for the requested jitter"
            )
        rows, cols = np.nonzero(~good)
        redraw = rng.take_array(len(rows) * 3) % np.uint64(span)
        sub = base[rows, cols] + (redraw.astype(np.int16).reshape(-1, 3) - spec.jitter)

        sub_in_range = ((sub >= 0) & (sub <= 255)).all(axis=1)
        sub_clipped = np.clip(sub, 0, 255).astype(np.uint8).reshape(-1, 1, 3)
        sub_ok = sub_in_range & _classify_matches(
            sub_clipped,
            positive_mask[rows, cols].reshape(-1, 1),
            negative_mask[rows, cols].reshape(-1, 1),
            thresholds,
        ).reshape(-1)

        accepted = np.nonzero(sub_ok)[0]
        candidate[rows[accepted], cols[accepted]] = sub[accepted]
        good[rows[accepted], cols[accepted]] = True

    return candidate.astype(np.uint8)
