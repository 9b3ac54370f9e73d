"""Adaptive deblocking of HR block boundaries created by non-overlapping transfer.

Boundaries lie on the alpha-scaled LR block grid. Each boundary gets a
strength in {0, 1, 2} from the adjacent leaves' modes, MVs and skip flags;
filtered segments are processed in 4-line groups gated by a local activity
test (flat sides mean the edge is artificial), with corrections clipped to
+-tc for the boundary samples and +-tc/2 one sample in.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .model import BlockNode, BlockPartition, Plane, TransferMode

GROUP_LINES = 4


class Orientation(enum.Enum):
    VERTICAL = "vertical"      # boundary between horizontally adjacent blocks
    HORIZONTAL = "horizontal"  # boundary between vertically adjacent blocks


@dataclass(frozen=True)
class DeblockConfig:
    beta: int = 24   # activity threshold: d >= beta leaves the group untouched
    tc: int = 6      # clipping threshold for boundary-sample corrections
    enabled: bool = True

    def __post_init__(self):
        if self.beta < 0 or self.tc < 0:
            raise ValueError("beta and tc must be non-negative")


@dataclass(frozen=True)
class BoundarySegment:
    """One filterable group of HR lines on a block boundary."""

    orientation: Orientation
    position: int     # HR column (vertical) or row (horizontal) of the boundary
    line_start: int   # first HR line of the group, along the boundary
    line_count: int   # 4 except for clipped tail groups
    bs: int


def _adjacency(a: BlockNode, b: BlockNode):
    """(orientation, overlap_start, overlap_len) if b touches a's right or bottom edge."""
    if a.x + a.w == b.x:
        lo, hi = max(a.y, b.y), min(a.y + a.h, b.y + b.h)
        if hi > lo:
            return Orientation.VERTICAL, lo, hi - lo
    if a.y + a.h == b.y:
        lo, hi = max(a.x, b.x), min(a.x + a.w, b.x + b.w)
        if hi > lo:
            return Orientation.HORIZONTAL, lo, hi - lo
    return None


def compute_boundary_strength(leaf_a: BlockNode, leaf_b: BlockNode) -> int:
    """Boundary strength between two adjacent leaves.

    2 if either side fell back to bicubic, 1 if the MVs differ by at least a
    full pixel or either side carries residual, else 0 (nothing to smooth).
    """
    if _adjacency(leaf_a, leaf_b) is None and _adjacency(leaf_b, leaf_a) is None:
        raise ValueError(f"leaves {leaf_a} and {leaf_b} are not adjacent")
    if (leaf_a.mode is TransferMode.BICUBIC_FALLBACK
            or leaf_b.mode is TransferMode.BICUBIC_FALLBACK):
        return 2
    if (abs(leaf_a.mv.dx_qpel - leaf_b.mv.dx_qpel) >= 4
            or abs(leaf_a.mv.dy_qpel - leaf_b.mv.dy_qpel) >= 4
            or not leaf_a.skip or not leaf_b.skip):
        return 1
    return 0


def boundary_segments(partition: BlockPartition, alpha: int):
    """Yield 4-line BoundarySegments for every internal boundary, vertical first.

    Positions and line ranges are HR coordinates (alpha x the LR grid).
    """
    by_x = {}
    by_y = {}
    for leaf in partition:
        by_x.setdefault(leaf.x, []).append(leaf)
        by_y.setdefault(leaf.y, []).append(leaf)
    vertical = []
    horizontal = []
    for leaf in partition:
        for other in by_x.get(leaf.x + leaf.w, ()):
            adj = _adjacency(leaf, other)
            if adj and adj[0] is Orientation.VERTICAL:
                vertical.append((leaf, other, adj[1], adj[2]))
        for other in by_y.get(leaf.y + leaf.h, ()):
            adj = _adjacency(leaf, other)
            if adj and adj[0] is Orientation.HORIZONTAL:
                horizontal.append((leaf, other, adj[1], adj[2]))

    for orientation, pairs in ((Orientation.VERTICAL, vertical),
                               (Orientation.HORIZONTAL, horizontal)):
        for leaf, other, lo, length in pairs:
            bs = compute_boundary_strength(leaf, other)
            position = alpha * (leaf.x + leaf.w if orientation is Orientation.VERTICAL
                                else leaf.y + leaf.h)
            start, end = alpha * lo, alpha * (lo + length)
            for group in range(start, end, GROUP_LINES):
                yield BoundarySegment(orientation, position, group,
                                      min(GROUP_LINES, end - group), bs)


def _filter_group(img: np.ndarray, seg: BoundarySegment, cfg: DeblockConfig) -> None:
    """Apply the normal filter to one line group, in place on an int32 frame."""
    lines = np.arange(seg.line_start, seg.line_start + seg.line_count)
    pos = seg.position
    if seg.orientation is Orientation.VERTICAL:
        def col(offset):
            return img[lines, pos + offset]
        def setcol(offset, values):
            img[lines, pos + offset] = values
        limit = img.shape[1]
    else:
        def col(offset):
            return img[pos + offset, lines]
        def setcol(offset, values):
            img[pos + offset, lines] = values
        limit = img.shape[0]
    if pos < 3 or pos > limit - 3:
        return  # too close to the frame edge for the 3-sample support

    p2, p1, p0 = col(-3), col(-2), col(-1)
    q0, q1, q2 = col(0), col(1), col(2)

    outer = np.unique([0, seg.line_count - 1])
    dp = int(np.abs(p2[outer] - 2 * p1[outer] + p0[outer]).sum())
    dq = int(np.abs(q2[outer] - 2 * q1[outer] + q0[outer]).sum())
    if dp + dq >= cfg.beta:
        return  # busy sides: likely a true edge, keep it

    delta = np.clip(((q0 - p0) * 4 + (p1 - q1) + 4) >> 3, -cfg.tc, cfg.tc)
    setcol(-1, np.clip(p0 + delta, 0, 255))
    setcol(0, np.clip(q0 - delta, 0, 255))
    half_tc = cfg.tc // 2
    if dp < cfg.beta / 4:
        dp1 = np.clip((((p2 + p0 + 1) >> 1) - p1 + delta) >> 1, -half_tc, half_tc)
        setcol(-2, np.clip(p1 + dp1, 0, 255))
    if dq < cfg.beta / 4:
        dq1 = np.clip((((q2 + q0 + 1) >> 1) - q1 - delta) >> 1, -half_tc, half_tc)
        setcol(1, np.clip(q1 + dq1, 0, 255))


def deblock_frame(frame: Plane, partition: BlockPartition, alpha: int,
                  cfg: DeblockConfig) -> Plane:
    """Filter all internal block boundaries of an HR frame.

    All vertical boundaries are processed before all horizontal ones; only
    samples within 2 of a boundary with bs > 0 can change.
    """
    if (frame.width != alpha * partition.frame_width
            or frame.height != alpha * partition.frame_height):
        raise ValueError("frame must be alpha x the partition dimensions")
    if not cfg.enabled:
        return frame
    img = frame.data.astype(np.int32)
    segments = list(boundary_segments(partition, alpha))
    for seg in segments:
        if seg.bs > 0 and seg.orientation is Orientation.VERTICAL:
            _filter_group(img, seg, cfg)
    for seg in segments:
        if seg.bs > 0 and seg.orientation is Orientation.HORIZONTAL:
            _filter_group(img, seg, cfg)
    return Plane.picture(img.astype(np.uint8))
