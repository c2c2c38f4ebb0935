"""Patch placements, covering mask sets, column ablations, and the overlap bound.

All builders are deterministic and order-stable: patches are row-major by
top-left corner, masks row-major over the k x k placement grid, ablation
bands by starting column.  Mask construction re-verifies the covering
invariant and refuses geometries that cannot cover.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import BinaryRegion, GeometryError


@dataclass(frozen=True, eq=False)
class PatchSet:
    """Every placement of a patch_side x patch_side square inside the frame."""

    width: int
    height: int
    patch_side: int
    regions: tuple[BinaryRegion, ...]

    def __len__(self):
        return len(self.regions)

    def bit_stack(self) -> np.ndarray:
        return np.stack([r.bits for r in self.regions])


@dataclass(frozen=True, eq=False)
class MaskSet:
    """A k x k grid of rectangular masks covering every patch placement."""

    width: int
    height: int
    masks_per_axis: int
    mask_side: tuple[int, int]  # (rows, cols)
    stride: tuple[int, int]
    masks: tuple[BinaryRegion, ...]

    def __len__(self):
        return len(self.masks)

    def bit_stack(self) -> np.ndarray:
        return np.stack([m.bits for m in self.masks])


@dataclass(frozen=True, eq=False)
class AblationSet:
    """One wrap-around band of kept columns per starting column."""

    width: int
    height: int
    band_width: int
    wraparound: bool
    bands: tuple[BinaryRegion, ...]

    def __len__(self):
        return len(self.bands)

    def bit_stack(self) -> np.ndarray:
        return np.stack([b.bits for b in self.bands])


def build_patch_set(width: int, height: int, patch_side: int) -> PatchSet:
    """All (width-p+1)(height-p+1) square patch placements, row-major."""
    if not (1 <= patch_side <= min(width, height)):
        raise GeometryError(
            f"patch side {patch_side} out of range for frame {width}x{height}"
        )
    regions = tuple(
        BinaryRegion.from_rect(width, height, top, left, patch_side, patch_side)
        for top in range(height - patch_side + 1)
        for left in range(width - patch_side + 1)
    )
    return PatchSet(width, height, patch_side, regions)


def _axis_layout(axis_len: int, patch_side: int, k: int) -> tuple[list[int], int, int]:
    """Mask offsets, mask side, and stride along one axis.

    Returns the k placement offsets (ascending, end-clamped) and the smallest
    side >= patch_side + stride - 1 whose placements cover every patch start.
    """
    if k == 1:
        return [0], axis_len, 0
    stride = max(1, math.ceil((axis_len - patch_side) / k))
    side = patch_side + stride - 1
    while side <= axis_len:
        offsets = sorted({min(i * stride, axis_len - side) for i in range(k)})
        covered = all(
            any(o <= start and start + patch_side <= o + side for o in offsets)
            for start in range(axis_len - patch_side + 1)
        )
        if covered:
            # keep exactly k placements (duplicates collapse after clamping)
            full = [min(i * stride, axis_len - side) for i in range(k)]
            return full, side, stride
        side += 1
    raise GeometryError(
        f"no mask side covers axis of length {axis_len} with p={patch_side}, k={k}"
    )


def build_mask_set(width: int, height: int, patch_side: int, k: int) -> MaskSet:
    """k x k strided grid of rectangular masks; fails if covering is violated."""
    if k < 1:
        raise GeometryError(f"masks per axis must be >= 1, got {k}")
    if not (1 <= patch_side <= min(width, height)):
        raise GeometryError(
            f"patch side {patch_side} out of range for frame {width}x{height}"
        )
    row_offsets, side_rows, stride_rows = _axis_layout(height, patch_side, k)
    col_offsets, side_cols, stride_cols = _axis_layout(width, patch_side, k)
    masks = tuple(
        BinaryRegion.from_rect(width, height, top, left, side_rows, side_cols)
        for top in row_offsets
        for left in col_offsets
    )
    ms = MaskSet(
        width, height, k, (side_rows, side_cols), (stride_rows, stride_cols), masks
    )
    ok, counterexample = verify_covering(ms, build_patch_set(width, height, patch_side))
    if not ok:
        raise GeometryError(
            f"mask set does not cover patch placement {counterexample} "
            f"(frame {width}x{height}, p={patch_side}, k={k})"
        )
    return ms


def verify_covering(mask_set: MaskSet, patch_set: PatchSet) -> tuple[bool, int | None]:
    """Exhaustively check that every patch fits inside at least one single mask.

    Returns (True, None) or (False, index of the first uncovered patch).
    """
    if (mask_set.width, mask_set.height) != (patch_set.width, patch_set.height):
        raise GeometryError("mask set and patch set frames differ")
    contained = kernels.containment(patch_set.bit_stack(), mask_set.bit_stack())
    covered = contained.any(axis=1)
    if covered.all():
        return True, None
    return False, int(np.flatnonzero(~covered)[0])


def build_ablation_set(width: int, height: int, band_width: int) -> AblationSet:
    """One band per starting column, keeping band_width contiguous columns mod width."""
    if not (1 <= band_width <= width):
        raise GeometryError(f"band width {band_width} out of range for width {width}")
    bands = tuple(
        BinaryRegion.from_columns(width, height, range(start, start + band_width))
        for start in range(width)
    )
    return AblationSet(width, height, band_width, True, bands)


def compute_delta(ablations: AblationSet, patches: PatchSet) -> int:
    """Max number of bands any single patch overlaps, by exhaustive counting."""
    if (ablations.width, ablations.height) != (patches.width, patches.height):
        raise GeometryError("ablation set and patch set frames differ")
    counts = kernels.overlap_counts(patches.bit_stack(), ablations.bit_stack())
    return int(counts.max())


def bands_overlapping(ablations: AblationSet, patch: BinaryRegion) -> np.ndarray:
    """Boolean vector: which bands intersect the given patch region."""
    inter = ablations.bit_stack().astype(np.int64) @ patch.bits.astype(np.int64)
    return inter > 0
