"""Connectivity, dilation, boundary extraction, and exact EDT.

The geometric kernel under small-component removal and the surface
distance metric.  Everything operates on boolean (x, y, z) grids and is
pure: no function mutates its input.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .volume import Spacing

#: the 26-neighborhood offsets, and the 13 unique directions modulo sign
#: (lexicographically positive half), in a fixed documented order
OFFSETS_26 = tuple(
    (dx, dy, dz)
    for dx in (-1, 0, 1)
    for dy in (-1, 0, 1)
    for dz in (-1, 0, 1)
    if (dx, dy, dz) != (0, 0, 0)
)
OFFSETS_13 = tuple(o for o in OFFSETS_26 if o > (0, 0, 0))
OFFSETS_6 = tuple(o for o in OFFSETS_26 if abs(o[0]) + abs(o[1]) + abs(o[2]) == 1)


def _structure(connectivity: int) -> np.ndarray:
    if connectivity == 6:
        return ndimage.generate_binary_structure(3, 1)
    if connectivity == 26:
        return np.ones((3, 3, 3), dtype=bool)
    raise ValueError(f"connectivity must be 6 or 26, got {connectivity}")


@dataclass(frozen=True)
class ComponentLabeling:
    """Connected components of a binary mask.

    ``labels`` holds component ids (0 = background) numbered 1..count by
    the first-encountered voxel in scan order (x fastest).  ``sizes[c]``
    is the voxel count of component c.
    """

    labels: np.ndarray  # int32 grid
    sizes: dict[int, int]
    count: int

    def component_mask(self, component_id: int) -> np.ndarray:
        return self.labels == component_id


def connected_components(mask: np.ndarray, connectivity: int = 26) -> ComponentLabeling:
    """Label connected components under 6- or 26-connectivity.

    Component ids are assigned by first-encountered voxel in scan order
    (x fastest, then y, then z), so the labeling is deterministic for a
    fixed input.
    """
    mask = np.asarray(mask, dtype=bool)
    labels, count = ndimage.label(mask, structure=_structure(connectivity))
    if count == 0:
        return ComponentLabeling(labels=labels.astype(np.int32), sizes={}, count=0)

    # renumber to x-fastest scan order (ndimage.label scans in C order)
    flat = labels.ravel(order="F")
    first = np.full(count + 1, flat.size, dtype=np.int64)
    nonzero = np.flatnonzero(flat)
    # reversed so earlier occurrences overwrite later ones
    first[flat[nonzero[::-1]]] = nonzero[::-1]
    order = np.argsort(first[1:], kind="stable")  # old id-1 sorted by first voxel
    remap = np.zeros(count + 1, dtype=np.int32)
    remap[order + 1] = np.arange(1, count + 1, dtype=np.int32)
    labels = remap[labels]

    counts = np.bincount(labels.ravel(), minlength=count + 1)
    sizes = {int(c): int(counts[c]) for c in range(1, count + 1)}
    return ComponentLabeling(labels=labels, sizes=sizes, count=count)


def remove_small_components(
    mask: np.ndarray, min_size: int, connectivity: int = 26
) -> np.ndarray:
    """Keep only components with size >= min_size; min_size 0 is identity."""
    if min_size < 0:
        raise ValueError(f"min_size must be >= 0, got {min_size}")
    mask = np.asarray(mask, dtype=bool)
    if min_size == 0 or not mask.any():
        return mask.copy()
    cc = connected_components(mask, connectivity)
    keep = np.array(
        [False] + [cc.sizes[c] >= min_size for c in range(1, cc.count + 1)]
    )
    return keep[cc.labels]


def dilate(mask: np.ndarray, iterations: int, connectivity: int = 26) -> np.ndarray:
    """Binary dilation by the connectivity neighborhood, ``iterations`` times."""
    if iterations < 0:
        raise ValueError(f"iterations must be >= 0, got {iterations}")
    mask = np.asarray(mask, dtype=bool)
    if iterations == 0 or not mask.any():
        return mask.copy()
    return ndimage.binary_dilation(mask, structure=_structure(connectivity),
                                   iterations=iterations)


def boundary_voxels(mask: np.ndarray, connectivity: int = 6) -> np.ndarray:
    """Foreground voxels with at least one background neighbor.

    Face adjacency (connectivity 6) by default; voxels outside the grid
    count as background, so masks touching the edge keep a surface there.
    """
    mask = np.asarray(mask, dtype=bool)
    offsets = OFFSETS_6 if connectivity == 6 else OFFSETS_26
    if connectivity not in (6, 26):
        raise ValueError(f"connectivity must be 6 or 26, got {connectivity}")
    interior = np.ones_like(mask)
    for off in offsets:
        interior &= _shifted(mask, off, fill=False)
    return mask & ~interior


def _shifted(mask: np.ndarray, offset: tuple[int, int, int], fill: bool) -> np.ndarray:
    """mask translated by -offset: out[i] = mask[i + offset], out-of-grid = fill."""
    out = np.full_like(mask, fill)
    src = []
    dst = []
    for n, o in zip(mask.shape, offset):
        if o >= 0:
            src.append(slice(o, n))
            dst.append(slice(0, n - o))
        else:
            src.append(slice(0, n + o))
            dst.append(slice(-o, n))
    out[tuple(dst)] = mask[tuple(src)]
    return out


def euclidean_distance_transform(mask: np.ndarray, spacing: Spacing) -> np.ndarray:
    """Exact Euclidean distance (mm) from each voxel to the nearest
    foreground voxel center, honoring anisotropic spacing.

    Foreground voxels get 0; an empty mask yields +inf everywhere.
    """
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        return np.full(mask.shape, np.inf)
    return ndimage.distance_transform_edt(~mask, sampling=spacing.as_tuple())
