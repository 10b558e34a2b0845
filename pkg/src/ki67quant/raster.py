"""Image representation, PNG I/O, and RGB-to-HSV conversion.

Images are numpy arrays of shape (height, width, 3), dtype uint8, row-major
RGB. Binary masks elsewhere in the package are boolean arrays of shape
(height, width). Both are treated as immutable values: no function in this
package mutates an input array.

Only 8-bit RGB or RGBA PNG files are accepted; an alpha channel is dropped
on load. PNG is the sole supported format because lossy compression would
perturb the color thresholds downstream.
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import NamedTuple

import numpy as np
from PIL import Image

_PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"
# PNG IHDR color types decodable to 8-bit RGB(A): 2 = truecolor, 6 = truecolor+alpha
_SUPPORTED_COLOR_TYPES = (2, 6)


class ImageFormatError(ValueError):
    """Raised when a file is not a PNG this tool can analyze."""


class HsvPixel(NamedTuple):
    """Hue in degrees [0, 360); saturation and value as fractions in [0, 1].

    Achromatic pixels (r == g == b) have hue 0 by convention.
    """

    hue: float
    saturation: float
    value: float


def _require_rgb(image) -> np.ndarray:
    arr = np.asarray(image)
    if arr.ndim != 3 or arr.shape[2] != 3 or arr.dtype != np.uint8:
        raise ValueError(
            f"expected a (height, width, 3) uint8 array, got shape {arr.shape} dtype {arr.dtype}"
        )
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError("image must be at least 1x1")
    return arr


def load_image(path) -> np.ndarray:
    """Decode an 8-bit RGB or RGBA PNG into a (height, width, 3) uint8 array.

    The IHDR chunk is checked before decoding so that unsupported files
    (wrong bit depth, grayscale or palette color, zero dimensions) fail with
    an ImageFormatError instead of being silently converted.
    """
    path = Path(path)
    with path.open("rb") as fh:
        header = fh.read(26)
    if len(header) < 26 or header[:8] != _PNG_SIGNATURE:
        raise ImageFormatError(f"{path}: not a PNG file")
    length, chunk_type = struct.unpack(">I4s", header[8:16])
    if chunk_type != b"IHDR" or length != 13:
        raise ImageFormatError(f"{path}: malformed PNG header")
    width, height, bit_depth, color_type = struct.unpack(">IIBB", header[16:26])
    if width == 0 or height == 0:
        raise ImageFormatError(f"{path}: zero-dimension image ({width}x{height})")
    if bit_depth != 8:
        raise ImageFormatError(f"{path}: unsupported bit depth {bit_depth}, need 8 bits per channel")
    if color_type not in _SUPPORTED_COLOR_TYPES:
        raise ImageFormatError(
            f"{path}: unsupported color type {color_type}, need RGB (2) or RGBA (6)"
        )

    with Image.open(path) as img:
        data = np.asarray(img, dtype=np.uint8)
    return np.ascontiguousarray(data[:, :, :3])


def save_image(image: np.ndarray, path) -> None:
    """Write a (height, width, 3) uint8 array as a lossless RGB PNG."""
    arr = _require_rgb(image)
    Image.fromarray(arr, mode="RGB").save(Path(path), format="PNG")


def rgb_to_hsv(pixel) -> HsvPixel:
    """Convert one (r, g, b) pixel, channels integer in [0, 255], to HSV.

    Standard hexcone formulation: value = max/255, saturation = (max-min)/max
    (0 when max is 0), hue from the dominant-channel sector, in [0, 360).
    """
    r, g, b = pixel
    for c in (r, g, b):
        if isinstance(c, bool) or not isinstance(c, (int, np.integer)) or not 0 <= c <= 255:
            raise ValueError(f"channels must be integers in [0, 255], got {pixel!r}")
    maxc = max(r, g, b)
    minc = min(r, g, b)
    value = maxc / 255.0
    saturation = 0.0 if maxc == 0 else (maxc - minc) / maxc
    if maxc == minc:
        hue = 0.0
    else:
        delta = float(maxc - minc)
        if maxc == r:
            hue = 60.0 * (((g - b) / delta) % 6.0)
        elif maxc == g:
            hue = 60.0 * ((b - r) / delta + 2.0)
        else:
            hue = 60.0 * ((r - g) / delta + 4.0)
    return HsvPixel(hue, saturation, value)


def _hue_degrees(
    r: np.ndarray, g: np.ndarray, b: np.ndarray,
    max8: np.ndarray, delta: np.ndarray, chromatic: np.ndarray,
) -> np.ndarray:
    """Hexcone hue in degrees from uint8 channels and precomputed extrema.

    delta must be the float64 max-min difference; achromatic cells get 0.
    Works on arrays of any shape, identically to the scalar formula.
    """
    safe_delta = np.where(chromatic, delta, 1.0)
    g_minus_b = (g.astype(np.int16) - b).astype(np.float64)
    b_minus_r = (b.astype(np.int16) - r).astype(np.float64)
    r_minus_g = (r.astype(np.int16) - g).astype(np.float64)
    hue = np.where(
        max8 == r,
        (g_minus_b / safe_delta) % 6.0,
        np.where(max8 == g, b_minus_r / safe_delta + 2.0, r_minus_g / safe_delta + 4.0),
    )
    return np.where(chromatic, 60.0 * hue, 0.0)


def hsv_planes(image: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-pixel HSV of a whole image as three float64 (height, width) planes.

    Computes the same hexcone formula as rgb_to_hsv, vectorized; the two
    agree bit for bit on every pixel. Channel maxima and differences are
    taken in integer space (exact) before the floating-point divisions.
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
    # delta is 0 wherever max is 0, so the guarded divisor changes nothing
    # there and saturation comes out 0 as required.
    saturation = delta / np.where(max8 > 0, maxc, 1.0)
    hue = _hue_degrees(r, g, b, max8, delta, max8 > min8)
    return hue, saturation, value
