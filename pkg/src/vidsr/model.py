"""Core domain types: sample planes, motion vectors, block partitions, per-frame syntax.

All types are immutable after construction (plane buffers are marked
read-only), so they can be shared freely across threads.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np

PICTURE_DTYPE = np.uint8
RESIDUAL_DTYPE = np.int16

BLOCK_SIZES = (8, 16, 32, 64)


class PlaneKind(enum.Enum):
    PICTURE = "picture"    # unsigned 8-bit samples in [0, 255]
    RESIDUAL = "residual"  # signed 16-bit samples in [-255, 255]


class TransferMode(enum.Enum):
    TRANSFER = 0
    BICUBIC_FALLBACK = 1


@dataclass(frozen=True)
class Plane:
    """A 2-D grid of samples, row-major, origin at the top-left."""

    data: np.ndarray
    kind: PlaneKind = PlaneKind.PICTURE

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim != 2:
            raise ValueError(f"plane must be 2-D, got shape {arr.shape}")
        if arr.shape[0] <= 0 or arr.shape[1] <= 0:
            raise ValueError(f"plane dimensions must be positive, got {arr.shape}")
        if self.kind is PlaneKind.PICTURE:
            if arr.dtype != PICTURE_DTYPE:
                raise ValueError(f"picture plane must be uint8, got {arr.dtype}")
        else:
            if arr.dtype != RESIDUAL_DTYPE:
                raise ValueError(f"residual plane must be int16, got {arr.dtype}")
            if arr.size and (arr.min() < -255 or arr.max() > 255):
                raise ValueError("residual samples must lie in [-255, 255]")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @classmethod
    def picture(cls, data) -> "Plane":
        return cls(np.asarray(data, dtype=PICTURE_DTYPE), PlaneKind.PICTURE)

    @classmethod
    def residual(cls, data) -> "Plane":
        return cls(np.asarray(data, dtype=RESIDUAL_DTYPE), PlaneKind.RESIDUAL)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Plane):
            return NotImplemented
        return self.kind is other.kind and np.array_equal(self.data, other.data)

    def __hash__(self):
        raise TypeError("Plane is not hashable")

    def __repr__(self) -> str:
        return f"Plane({self.width}x{self.height}, {self.kind.value})"


@dataclass(frozen=True)
class QuarterPelMV:
    """2-D motion vector in quarter-pixel units (4 == one full pixel).

    (0, 0) denotes the co-located block; positive dx points right,
    positive dy points down.
    """

    dx_qpel: int = 0
    dy_qpel: int = 0

    def is_zero(self) -> bool:
        return self.dx_qpel == 0 and self.dy_qpel == 0

    def is_integer(self) -> bool:
        return self.dx_qpel % 4 == 0 and self.dy_qpel % 4 == 0

    def scaled(self, factor: int) -> "QuarterPelMV":
        return QuarterPelMV(self.dx_qpel * factor, self.dy_qpel * factor)


@dataclass(frozen=True)
class BlockNode:
    """A quadtree leaf: a rectangle of the frame with its prediction metadata.

    Width/height are one of 8/16/32/64 except at the right/bottom frame
    borders, where they are clipped to the remaining extent.
    """

    x: int
    y: int
    w: int
    h: int
    mv: QuarterPelMV = field(default_factory=QuarterPelMV)
    skip: bool = False
    mean_abs_residual: float = 0.0
    mode: TransferMode = TransferMode.TRANSFER

    def __post_init__(self):
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"block must have positive extent, got {self.w}x{self.h}")
        if self.x < 0 or self.y < 0:
            raise ValueError(f"block origin must be non-negative, got ({self.x}, {self.y})")
        if self.mean_abs_residual < 0:
            raise ValueError("mean_abs_residual must be non-negative")

    @property
    def n_pixels(self) -> int:
        return self.w * self.h

    def size_class(self) -> int:
        """Nominal quadtree size this leaf belongs to (8/16/32/64).

        Border leaves are clipped rectangles; the class is the smallest
        power of two covering the larger extent.
        """
        size = 8
        longest = max(self.w, self.h)
        while size < longest:
            size *= 2
        return min(size, 64)

    def with_mode(self, mode: TransferMode) -> "BlockNode":
        return replace(self, mode=mode)


@dataclass(frozen=True)
class BlockPartition:
    """Quadtree leaves tiling a frame exactly, in depth-first superblock order."""

    frame_width: int
    frame_height: int
    leaves: tuple

    def __post_init__(self):
        if self.frame_width <= 0 or self.frame_height <= 0:
            raise ValueError("frame dimensions must be positive")
        leaves = tuple(self.leaves)
        object.__setattr__(self, "leaves", leaves)
        cover = np.zeros((self.frame_height, self.frame_width), dtype=np.uint8)
        for node in leaves:
            if node.x + node.w > self.frame_width or node.y + node.h > self.frame_height:
                raise ValueError(f"leaf {node} exceeds frame bounds")
            cover[node.y:node.y + node.h, node.x:node.x + node.w] += 1
        if cover.size and not (cover == 1).all():
            raise ValueError("leaves must tile the frame exactly (disjoint, full cover)")

    def __len__(self) -> int:
        return len(self.leaves)

    def __iter__(self):
        return iter(self.leaves)


@dataclass(frozen=True)
class FrameSyntax:
    """Per-frame syntax elements: partition, MVs, skip flags and the residual plane."""

    frame_index: int
    partition: BlockPartition
    residual: Plane
    reference_index: int = -1

    def __post_init__(self):
        if self.frame_index < 0:
            raise ValueError("frame_index must be non-negative")
        if self.residual.kind is not PlaneKind.RESIDUAL:
            raise ValueError("FrameSyntax.residual must be a residual plane")
        if (self.residual.width != self.partition.frame_width
                or self.residual.height != self.partition.frame_height):
            raise ValueError("residual plane dimensions must match the partition")
        for node in self.partition:
            if node.skip and block_region_view(self.residual, node).any():
                raise ValueError(f"skip leaf {node} has nonzero residual")

    def __eq__(self, other) -> bool:
        if not isinstance(other, FrameSyntax):
            return NotImplemented
        return (self.frame_index == other.frame_index
                and self.reference_index == other.reference_index
                and self.partition == other.partition
                and self.residual == other.residual)

    def __hash__(self):
        raise TypeError("FrameSyntax is not hashable")


@dataclass(frozen=True)
class GopConfig:
    """Chained group-of-pictures: every frame is predicted from its predecessor."""

    gop_length: int = 16
    STRUCTURE = "chained"

    def __post_init__(self):
        if self.gop_length < 1:
            raise ValueError("gop_length must be >= 1")

    def is_keyframe(self, frame_index: int) -> bool:
        return frame_index % self.gop_length == 0


def block_region_view(plane: Plane, node: BlockNode) -> np.ndarray:
    """Read-only view of the node's w x h region of the plane (no copy)."""
    if node.x + node.w > plane.width or node.y + node.h > plane.height:
        raise ValueError(
            f"block ({node.x},{node.y},{node.w},{node.h}) exceeds "
            f"{plane.width}x{plane.height} plane")
    return plane.data[node.y:node.y + node.h, node.x:node.x + node.w]
