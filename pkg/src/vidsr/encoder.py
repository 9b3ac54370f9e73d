"""Mini-encoder: produces the syntax elements the transfer engine consumes.

Quadtree block partition, exhaustive integer motion search with two-stage
sub-pel refinement, per-block residuals with optional deadzone quantization,
skip flags, and a binary sidecar file that round-trips the syntax losslessly.
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass, replace

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .model import (BLOCK_SIZES, BlockNode, BlockPartition, FrameSyntax, Plane,
                    QuarterPelMV, TransferMode)
from .sampling import qpel_fetch_block

SIDECAR_MAGIC = b"FSTX"
SIDECAR_VERSION = 1
_HEADER = struct.Struct("<4sHHIIIBB6s")
_FRAME_HEAD = struct.Struct("<II")
_LEAF = struct.Struct("<HHBBhhBB")


class ResidualMode(enum.Enum):
    LOSSLESS = 0
    DEADZONE = 1


class MvAccuracy(enum.IntEnum):
    INTEGER = 0
    HALF = 1
    QUARTER = 2


@dataclass(frozen=True)
class EncoderConfig:
    search_range: int = 16          # integer pixels, exhaustive full search
    max_block: int = 64
    min_block: int = 8
    split_threshold: float = 5.0    # mean abs SAD per pixel above which a block splits
    residual_mode: ResidualMode = ResidualMode.LOSSLESS
    deadzone: int = 2               # used only in DEADZONE mode

    def __post_init__(self):
        if self.search_range < 1:
            raise ValueError("search_range must be >= 1")
        if self.max_block not in BLOCK_SIZES or self.min_block not in BLOCK_SIZES:
            raise ValueError(f"block sizes must be in {BLOCK_SIZES}")
        if self.min_block > self.max_block:
            raise ValueError("min_block must be <= max_block")
        if self.split_threshold < 0:
            raise ValueError("split_threshold must be non-negative")
        if self.deadzone < 0:
            raise ValueError("deadzone must be non-negative")


class SidecarFormatError(ValueError):
    """Malformed sidecar file; carries the byte offset of the failure."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


def _block_sad(ref: Plane, cur_block: np.ndarray, x: int, y: int, mv: QuarterPelMV) -> int:
    fetched = qpel_fetch_block(ref, x, y, cur_block.shape[1], cur_block.shape[0], mv)
    return int(np.abs(fetched.astype(np.int32) - cur_block).sum())


def estimate_motion_integer(ref: Plane, cur: Plane, region, search_range: int = 16):
    """Exhaustive integer-pel full search over [-search_range, +search_range]^2.

    Returns (mv, sad) where mv is in quarter-pel units with both components
    multiples of 4. Ties are broken by smaller |dx|+|dy|, then smaller dy,
    then smaller dx. Reference reads outside the frame replicate edges.
    """
    x, y, w, h = region
    if x < 0 or y < 0 or x + w > cur.width or y + h > cur.height:
        raise ValueError(f"region {region} outside {cur.width}x{cur.height} frame")
    r = search_range
    cur_block = cur.data[y:y + h, x:x + w].astype(np.int16)
    padded = np.pad(ref.data, r, mode="edge")
    window = padded[y:y + h + 2 * r, x:x + w + 2 * r]
    candidates = sliding_window_view(window, (h, w))           # (2r+1, 2r+1, h, w)
    sad = np.abs(candidates.astype(np.int16) - cur_block).sum(axis=(2, 3), dtype=np.int64)
    dys, dxs = np.meshgrid(np.arange(-r, r + 1), np.arange(-r, r + 1), indexing="ij")
    order = np.lexsort((dxs.ravel(), dys.ravel(),
                        (np.abs(dxs) + np.abs(dys)).ravel(), sad.ravel()))
    best = order[0]
    mv = QuarterPelMV(4 * int(dxs.ravel()[best]), 4 * int(dys.ravel()[best]))
    return mv, int(sad.ravel()[best])


_NEIGHBORS = ((-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1))


def refine_qpel(ref: Plane, cur: Plane, region, mv_int: QuarterPelMV,
                accuracy: MvAccuracy = MvAccuracy.QUARTER,
                max_qpel: int | None = None):
    """Two-stage sub-pel refinement around the best integer MV.

    Stage 1 evaluates the 8 half-pel neighbors (step 2 qpel), stage 2 the
    8 quarter-pel neighbors (step 1) of the stage-1 winner. A candidate
    replaces the incumbent only on strictly smaller SAD, so the SAD never
    increases across stages. Candidates beyond +-max_qpel (the search
    window, 4 x search_range) are not considered. Returns (mv, sad).
    """
    if mv_int.dx_qpel % 4 or mv_int.dy_qpel % 4:
        raise ValueError("mv_int must be integer-pel (components multiples of 4)")
    x, y, w, h = region
    cur_block = cur.data[y:y + h, x:x + w].astype(np.int32)
    best_mv = mv_int
    best_sad = _block_sad(ref, cur_block, x, y, best_mv)
    steps = []
    if accuracy >= MvAccuracy.HALF:
        steps.append(2)
    if accuracy >= MvAccuracy.QUARTER:
        steps.append(1)
    for step in steps:
        if best_sad == 0:
            break
        center = best_mv
        for ddx, ddy in _NEIGHBORS:
            cand = QuarterPelMV(center.dx_qpel + ddx * step, center.dy_qpel + ddy * step)
            if max_qpel is not None and (abs(cand.dx_qpel) > max_qpel
                                         or abs(cand.dy_qpel) > max_qpel):
                continue
            sad = _block_sad(ref, cur_block, x, y, cand)
            if sad < best_sad:
                best_mv, best_sad = cand, sad
    return best_mv, best_sad


def build_quadtree(ref: Plane, cur: Plane, cfg: EncoderConfig,
                   accuracy: MvAccuracy = MvAccuracy.QUARTER) -> BlockPartition:
    """Partition the frame into motion-estimated blocks.

    Superblocks (max_block-sized, clipped at the right/bottom borders) are
    split while SAD per pixel after integer-pel search exceeds
    cfg.split_threshold and the nominal size is above cfg.min_block. Leaves
    carry the final sub-pel refined MVs.
    """
    if ref.width != cur.width or ref.height != cur.height:
        raise ValueError("frames must share dimensions")
    width, height = cur.width, cur.height
    leaves = []

    def visit(x: int, y: int, size: int):
        w = min(size, width - x)
        h = min(size, height - y)
        if w <= 0 or h <= 0:
            return
        region = (x, y, w, h)
        mv, sad = estimate_motion_integer(ref, cur, region, cfg.search_range)
        if sad / (w * h) > cfg.split_threshold and size > cfg.min_block:
            half = size // 2
            visit(x, y, half)
            visit(x + half, y, half)
            visit(x, y + half, half)
            visit(x + half, y + half, half)
            return
        mv, _ = refine_qpel(ref, cur, region, mv, accuracy,
                            max_qpel=4 * cfg.search_range)
        leaves.append(BlockNode(x, y, w, h, mv))

    for sy in range(0, height, cfg.max_block):
        for sx in range(0, width, cfg.max_block):
            visit(sx, sy, cfg.max_block)
    return BlockPartition(width, height, tuple(leaves))


def encode_frame(ref: Plane, cur: Plane, cfg: EncoderConfig, frame_index: int = 0,
                 accuracy: MvAccuracy = MvAccuracy.QUARTER):
    """Encode `cur` against `ref`; returns (FrameSyntax, reconstructed Plane).

    Per leaf: residual = cur - prediction; DEADZONE mode zeroes residual
    samples with |r| <= cfg.deadzone; skip is set iff the stored block
    residual is all zero. In LOSSLESS mode the reconstruction equals `cur`
    bit-exactly.
    """
    if ref.width != cur.width or ref.height != cur.height:
        raise ValueError("frames must share dimensions")
    partition = build_quadtree(ref, cur, cfg, accuracy)
    residual_full = np.zeros((cur.height, cur.width), dtype=np.int16)
    recon = np.zeros_like(cur.data)
    nodes = []
    for node in partition:
        sl = (slice(node.y, node.y + node.h), slice(node.x, node.x + node.w))
        pred = qpel_fetch_block(ref, node.x, node.y, node.w, node.h, node.mv)
        res = cur.data[sl].astype(np.int16) - pred
        if cfg.residual_mode is ResidualMode.DEADZONE:
            res[np.abs(res) <= cfg.deadzone] = 0
        skip = not res.any()
        mar = float(np.abs(res).mean())
        residual_full[sl] = res
        recon[sl] = np.clip(pred.astype(np.int16) + res, 0, 255).astype(np.uint8)
        nodes.append(replace(node, skip=skip, mean_abs_residual=mar))
    syntax = FrameSyntax(
        frame_index=frame_index,
        partition=BlockPartition(cur.width, cur.height, tuple(nodes)),
        residual=Plane.residual(residual_full),
        reference_index=frame_index - 1,
    )
    return syntax, Plane.picture(recon)


def encode_sequence(frames, cfg: EncoderConfig, accuracy: MvAccuracy = MvAccuracy.QUARTER):
    """Chained encode: frame i predicted from the reconstruction of frame i-1.

    Frame 0 is the anchor and gets no syntax. Returns (list of FrameSyntax
    for frames 1..n-1, list of reconstructed frames for all n frames).
    """
    if not frames:
        return [], []
    syntaxes = []
    recons = [frames[0]]
    for i in range(1, len(frames)):
        syntax, recon = encode_frame(recons[-1], frames[i], cfg, frame_index=i,
                                     accuracy=accuracy)
        syntaxes.append(syntax)
        recons.append(recon)
    return syntaxes, recons


def decode_frame(ref: Plane, syntax: FrameSyntax) -> Plane:
    """Decoder-side reconstruction: per-leaf prediction plus stored residual."""
    out = np.zeros((syntax.partition.frame_height, syntax.partition.frame_width),
                   dtype=np.uint8)
    for leaf in syntax.partition:
        sl = (slice(leaf.y, leaf.y + leaf.h), slice(leaf.x, leaf.x + leaf.w))
        pred = qpel_fetch_block(ref, leaf.x, leaf.y, leaf.w, leaf.h, leaf.mv)
        out[sl] = np.clip(pred.astype(np.int16) + syntax.residual.data[sl],
                          0, 255).astype(np.uint8)
    return Plane.picture(out)


def decode_sequence(anchor: Plane, syntaxes) -> list:
    """Chained decode from the anchor frame; returns all reconstructed frames."""
    frames = [anchor]
    for syntax in syntaxes:
        frames.append(decode_frame(frames[-1], syntax))
    return frames


def _log2_code(extent: int) -> int:
    code = 3
    while (1 << code) < extent:
        code += 1
    return code


def write_sidecar(path, seq, residual_mode: ResidualMode = ResidualMode.LOSSLESS,
                  deadzone: int = 0) -> None:
    """Serialize FrameSyntax records; skip leaves store no residual payload."""
    seq = list(seq)
    if seq:
        width = seq[0].partition.frame_width
        height = seq[0].partition.frame_height
        for s in seq:
            if (s.partition.frame_width, s.partition.frame_height) != (width, height):
                raise ValueError("all frames in a sidecar must share dimensions")
    else:
        width = height = 0
    chunks = [_HEADER.pack(SIDECAR_MAGIC, SIDECAR_VERSION, 0, width, height,
                           len(seq), residual_mode.value, deadzone, b"\0" * 6)]
    for syntax in seq:
        chunks.append(_FRAME_HEAD.pack(syntax.frame_index, len(syntax.partition)))
        payload = []
        for leaf in syntax.partition:
            chunks.append(_LEAF.pack(leaf.x, leaf.y, _log2_code(leaf.w), _log2_code(leaf.h),
                                     leaf.mv.dx_qpel, leaf.mv.dy_qpel,
                                     int(leaf.skip), leaf.mode.value))
            if not leaf.skip:
                region = syntax.residual.data[leaf.y:leaf.y + leaf.h, leaf.x:leaf.x + leaf.w]
                payload.append(region.astype("<i2").tobytes())
        chunks.extend(payload)
    with open(path, "wb") as fh:
        fh.write(b"".join(chunks))


class _Cursor:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.buf):
            raise SidecarFormatError(f"truncated file while reading {what}", self.pos)
        out = self.buf[self.pos:self.pos + n]
        self.pos += n
        return out


def read_sidecar(path):
    """Parse a sidecar file back into a list of FrameSyntax records."""
    with open(path, "rb") as fh:
        cur = _Cursor(fh.read())
    magic, version, _flags, width, height, frame_count, mode_code, _dz, _rsv = \
        _HEADER.unpack(cur.take(_HEADER.size, "header"))
    if magic != SIDECAR_MAGIC:
        raise SidecarFormatError(f"bad magic {magic!r}", 0)
    if version != SIDECAR_VERSION:
        raise SidecarFormatError(f"unsupported version {version}", 4)
    ResidualMode(mode_code)  # validates
    frames = []
    for _ in range(frame_count):
        frame_index, leaf_count = _FRAME_HEAD.unpack(cur.take(_FRAME_HEAD.size, "frame header"))
        raw_leaves = [_LEAF.unpack(cur.take(_LEAF.size, "leaf record"))
                      for _ in range(leaf_count)]
        residual_full = np.zeros((height, width), dtype=np.int16)
        leaves = []
        for x, y, log2w, log2h, dx, dy, skip, mode_val in raw_leaves:
            w = min(1 << log2w, width - x)
            h = min(1 << log2h, height - y)
            if w <= 0 or h <= 0:
                raise SidecarFormatError(f"leaf at ({x},{y}) outside frame", cur.pos)
            if not skip:
                raw = cur.take(2 * w * h, "residual payload")
                block = np.frombuffer(raw, dtype="<i2").reshape(h, w).astype(np.int16)
                residual_full[y:y + h, x:x + w] = block
                mar = float(np.abs(block).mean())
            else:
                mar = 0.0
            leaves.append(BlockNode(x, y, w, h, QuarterPelMV(dx, dy), bool(skip),
                                    mar, TransferMode(mode_val)))
        frames.append(FrameSyntax(
            frame_index=frame_index,
            partition=BlockPartition(width, height, tuple(leaves)),
            residual=Plane.residual(residual_full),
            reference_index=frame_index - 1,
        ))
    return frames
