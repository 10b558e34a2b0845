"""Binary morphology on boolean masks.

The four classic operators (dilate, erode, opening, closing) over a small
structuring element, used to clean stain masks before counting: one opening
pass removes sub-nuclear specks without shifting nucleus boundaries.

Border policy: cells outside the image are background for both operators.
Erosion therefore shrinks regions touching the frame rather than preserving
them, and dilation never hallucinates pixels from beyond the border. The
erosion/dilation duality holds only away from borders under this policy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class StructuringElement:
    """Odd-sized boolean neighborhood with its origin at the center cell.

    The origin cell must be set, which makes dilation extensive and erosion
    anti-extensive.
    """

    bits: np.ndarray

    def __post_init__(self):
        bits = np.ascontiguousarray(np.asarray(self.bits, dtype=bool))
        if bits.ndim != 2:
            raise ValueError(f"structuring element must be 2-D, got {bits.ndim}-D")
        h, w = bits.shape
        if h % 2 == 0 or w % 2 == 0 or h < 1 or w < 1:
            raise ValueError(f"structuring element dimensions must be odd, got {h}x{w}")
        if not bits[h // 2, w // 2]:
            raise ValueError("structuring element origin (center cell) must be set")
        object.__setattr__(self, "bits", bits)

    @classmethod
    def square(cls, radius: int) -> "StructuringElement":
        """Full (2*radius+1) square; radius 1 is the default 3x3 block."""
        if radius < 0:
            raise ValueError(f"radius must be >= 0, got {radius}")
        side = 2 * radius + 1
        return cls(np.ones((side, side), dtype=bool))

    @classmethod
    def cross(cls, radius: int) -> "StructuringElement":
        """Plus-shaped element: the two axes through the origin."""
        if radius < 0:
            raise ValueError(f"radius must be >= 0, got {radius}")
        side = 2 * radius + 1
        bits = np.zeros((side, side), dtype=bool)
        bits[radius, :] = True
        bits[:, radius] = True
        return cls(bits)

    @classmethod
    def from_matrix(cls, rows) -> "StructuringElement":
        """Build from an explicit 0/1 matrix (list of equal-length rows)."""
        return cls(np.asarray(rows, dtype=bool))

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    def offsets(self) -> list[tuple[int, int]]:
        """Set cells as (row, col) offsets relative to the origin."""
        cy, cx = self.height // 2, self.width // 2
        rows, cols = np.nonzero(self.bits)
        return [(int(r) - cy, int(c) - cx) for r, c in zip(rows, cols)]

    def reflected(self) -> "StructuringElement":
        """The element rotated 180 degrees about its origin."""
        return StructuringElement(self.bits[::-1, ::-1])


def _require_mask(mask) -> np.ndarray:
    arr = np.asarray(mask)
    if arr.ndim != 2 or arr.dtype != np.bool_:
        raise ValueError(f"expected a 2-D boolean mask, got shape {arr.shape} dtype {arr.dtype}")
    return arr


def _shift(mask: np.ndarray, dr: int, dc: int) -> np.ndarray:
    """Translate a mask by (dr, dc), filling vacated cells with background."""
    h, w = mask.shape
    out = np.zeros_like(mask)
    r0, r1 = max(0, dr), min(h, h + dr)
    c0, c1 = max(0, dc), min(w, w + dc)
    if r0 < r1 and c0 < c1:
        out[r0:r1, c0:c1] = mask[r0 - dr : r1 - dr, c0 - dc : c1 - dc]
    return out


def dilate(mask: np.ndarray, se: StructuringElement) -> np.ndarray:
    """Output (i, j) is set iff any set mask bit falls under the reflected
    element placed at (i, j); equivalently, the union of the mask translated
    by every set offset of the element."""
    mask = _require_mask(mask)
    out = np.zeros_like(mask)
    for dr, dc in se.offsets():
        out |= _shift(mask, dr, dc)
    return out


def erode(mask: np.ndarray, se: StructuringElement) -> np.ndarray:
    """Output (i, j) is set iff every set cell of the element placed at
    (i, j) lands on a set mask bit; placements overhanging the border fail."""
    mask = _require_mask(mask)
    out = np.ones_like(mask)
    for dr, dc in se.offsets():
        out &= _shift(mask, -dr, -dc)
    return out


def opening(mask: np.ndarray, se: StructuringElement, passes: int = 1) -> np.ndarray:
    """Erosion then dilation; removes specks smaller than the element.

    passes applies erosion that many times before the matching number of
    dilations (an order-n opening); 0 passes returns the mask unchanged.
    """
    if passes < 0:
        raise ValueError(f"passes must be >= 0, got {passes}")
    out = _require_mask(mask)
    for _ in range(passes):
        out = erode(out, se)
    for _ in range(passes):
        out = dilate(out, se)
    return out


def closing(mask: np.ndarray, se: StructuringElement, passes: int = 1) -> np.ndarray:
    """Dilation then erosion; fills gaps smaller than the element."""
    if passes < 0:
        raise ValueError(f"passes must be >= 0, got {passes}")
    out = _require_mask(mask)
    for _ in range(passes):
        out = dilate(out, se)
    for _ in range(passes):
        out = erode(out, se)
    return out
