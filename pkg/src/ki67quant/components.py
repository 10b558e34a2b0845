"""Connected-component labeling and size filtering of binary masks.

Labeling is run-based: each row is decomposed into horizontal runs of set
pixels (vectorized), runs in adjacent rows are merged with union-find when
they touch under the chosen connectivity, and components are numbered 1..k
in the order their first pixel appears in row-major scan. This keeps the
Python-level work proportional to the number of runs, not pixels, so
megapixel masks label in tens of milliseconds.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np


@dataclass(frozen=True)
class Component:
    """One connected region: 1-based label, pixel area, inclusive bounding
    box (min_row, min_col, max_row, max_col), and centroid as fractional
    (row, col) coordinates."""

    label: int
    area: int
    bbox: tuple[int, int, int, int]
    centroid: tuple[float, float]


@dataclass(frozen=True)
class ComponentSet:
    """Labeled components of a mask: an int32 label map (0 = background)
    plus per-component records, ordered by label."""

    label_map: np.ndarray
    components: tuple[Component, ...]

    def count(self) -> int:
        """Number of components (the nucleus count)."""
        return len(self.components)


def _find(parent: list[int], i: int) -> int:
    while parent[i] != i:
        parent[i] = parent[parent[i]]
        i = parent[i]
    return i


def _union(parent: list[int], size: list[int], a: int, b: int) -> None:
    ra, rb = _find(parent, a), _find(parent, b)
    if ra == rb:
        return
    if size[ra] < size[rb]:
        ra, rb = rb, ra
    parent[rb] = ra
    size[ra] += size[rb]


def label_components(mask: np.ndarray, connectivity: int = 8) -> ComponentSet:
    """Label maximal connected regions of set bits.

    connectivity 8 joins diagonal neighbors, 4 only orthogonal ones.
    """
    if connectivity not in (4, 8):
        raise ValueError(f"connectivity must be 4 or 8, got {connectivity}")
    mask = np.asarray(mask)
    if mask.ndim != 2 or mask.dtype != np.bool_:
        raise ValueError(f"expected a 2-D boolean mask, got shape {mask.shape} dtype {mask.dtype}")
    h, w = mask.shape
    label_map = np.zeros((h, w), dtype=np.int32)

    # Horizontal runs [start, end) per row, in row-major order.
    padded = np.zeros((h, w + 2), dtype=np.int8)
    padded[:, 1:-1] = mask
    edges = np.diff(padded, axis=1)
    run_rows_arr, starts_arr = np.nonzero(edges == 1)
    _, ends_arr = np.nonzero(edges == -1)
    n_runs = len(run_rows_arr)
    if n_runs == 0:
        return ComponentSet(label_map, ())

    # Index range of each row's runs within the row-major run arrays.
    row_bounds = np.searchsorted(run_rows_arr, np.arange(h + 1)).tolist()

    run_rows = run_rows_arr.tolist()
    starts = starts_arr.tolist()
    ends = ends_arr.tolist()

    parent = list(range(n_runs))
    size = [1] * n_runs

    diagonal = connectivity == 8
    for r in range(h - 1):
        i, i_hi = row_bounds[r], row_bounds[r + 1]
        j, j_hi = row_bounds[r + 1], row_bounds[r + 2]
        while i < i_hi and j < j_hi:
            if diagonal:
                touching = starts[i] <= ends[j] and starts[j] <= ends[i]
            else:
                touching = starts[i] < ends[j] and starts[j] < ends[i]
            if touching:
                _union(parent, size, i, j)
            if ends[i] <= ends[j]:
                i += 1
            else:
                j += 1

    # Number components in first-encounter order and accumulate statistics.
    label_of_root: dict[int, int] = {}
    areas: list[int] = []
    row_sums: list[int] = []
    col_sums: list[float] = []
    bboxes: list[list[int]] = []
    run_labels: list[int] = []
    for k in range(n_runs):
        root = _find(parent, k)
        label = label_of_root.get(root)
        row, s, e = run_rows[k], starts[k], ends[k]
        if label is None:
            label = len(label_of_root) + 1
            label_of_root[root] = label
            areas.append(0)
            row_sums.append(0)
            col_sums.append(0.0)
            bboxes.append([row, s, row, e - 1])
        idx = label - 1
        length = e - s
        areas[idx] += length
        row_sums[idx] += row * length
        col_sums[idx] += (s + e - 1) * length / 2.0
        box = bboxes[idx]
        box[2] = row  # runs arrive in ascending row order
        if s < box[1]:
            box[1] = s
        if e - 1 > box[3]:
            box[3] = e - 1
        run_labels.append(label)

    for k in range(n_runs):
        label_map[run_rows[k], starts[k] : ends[k]] = run_labels[k]

    components = tuple(
        Component(
            label=idx + 1,
            area=areas[idx],
            bbox=tuple(bboxes[idx]),
            centroid=(row_sums[idx] / areas[idx], col_sums[idx] / areas[idx]),
        )
        for idx in range(len(areas))
    )
    return ComponentSet(label_map, components)


def filter_by_area(
    cs: ComponentSet, min_area: int = 0, max_area: int | None = None
) -> ComponentSet:
    """Drop components with area below min_area or above max_area.

    Dropped components are relabeled to background in the label map;
    survivors are renumbered 1..k preserving their original order.
    max_area None means unbounded.
    """
    if min_area < 0:
        raise ValueError(f"min_area must be >= 0, got {min_area}")
    if max_area is not None and max_area < min_area:
        raise ValueError(f"max_area {max_area} is below min_area {min_area}")

    survivors = [
        c
        for c in cs.components
        if c.area >= min_area and (max_area is None or c.area <= max_area)
    ]
    lut = np.zeros(len(cs.components) + 1, dtype=np.int32)
    for new_label, comp in enumerate(survivors, start=1):
        lut[comp.label] = new_label
    label_map = lut[cs.label_map]
    components = tuple(
        replace(comp, label=new_label) for new_label, comp in enumerate(survivors, start=1)
    )
    return ComponentSet(label_map, components)
