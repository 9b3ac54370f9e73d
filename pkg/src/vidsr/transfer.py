"""Transfer engine: rebuild an HR frame from the previous HR frame plus syntax.

Per block the output is the previous HR frame fetched at the alpha-scaled
motion vector plus the bicubically upsampled residual, with two shortcuts
(zero-MV copy, zero-residual skip) and an adaptive per-block fallback to
plain bicubic upsampling when the residual magnitude says the prediction
was poor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .encoder import encode_frame
from .model import (BlockNode, BlockPartition, FrameSyntax, Plane, TransferMode)
from .sampling import VALID_ALPHAS, bicubic_downsample, bicubic_upsample, qpel_fetch_block

PSNR_CAP_DB = 100.0


@dataclass(frozen=True)
class TransferConfig:
    alpha: int
    eta: float = 10.0        # mean-abs-residual threshold for the bicubic fallback
    adaptive: bool = True
    shortcuts: bool = True

    def __post_init__(self):
        if self.alpha not in VALID_ALPHAS:
            raise ValueError(f"alpha must be one of {VALID_ALPHAS}, got {self.alpha}")
        if self.eta < 0:
            raise ValueError("eta must be non-negative")


@dataclass
class TransferStats:
    """Pixel/block counters for one or more transferred frames (LR pixel units)."""

    blocks_transferred: int = 0
    blocks_fallback: int = 0
    pixels_zero_mv: int = 0
    pixels_zero_residual: int = 0
    pixels_total: int = 0
    copied_by_size: dict = field(default_factory=dict)
    skipped_by_size: dict = field(default_factory=dict)

    def record(self, leaf: BlockNode, mode: TransferMode) -> None:
        n = leaf.n_pixels
        self.pixels_total += n
        if mode is TransferMode.BICUBIC_FALLBACK:
            self.blocks_fallback += 1
            return
        self.blocks_transferred += 1
        size = leaf.size_class()
        if leaf.mv.is_zero():
            self.pixels_zero_mv += n
            self.copied_by_size[size] = self.copied_by_size.get(size, 0) + n
        if leaf.skip:
            self.pixels_zero_residual += n
            self.skipped_by_size[size] = self.skipped_by_size.get(size, 0) + n

    def merge(self, other: "TransferStats") -> None:
        self.blocks_transferred += other.blocks_transferred
        self.blocks_fallback += other.blocks_fallback
        self.pixels_zero_mv += other.pixels_zero_mv
        self.pixels_zero_residual += other.pixels_zero_residual
        self.pixels_total += other.pixels_total
        for size, n in other.copied_by_size.items():
            self.copied_by_size[size] = self.copied_by_size.get(size, 0) + n
        for size, n in other.skipped_by_size.items():
            self.skipped_by_size[size] = self.skipped_by_size.get(size, 0) + n

    def zero_mv_fraction(self) -> float:
        return self.pixels_zero_mv / self.pixels_total if self.pixels_total else 0.0

    def zero_residual_fraction(self) -> float:
        return self.pixels_zero_residual / self.pixels_total if self.pixels_total else 0.0


def decide_mode(leaf: BlockNode, cfg: TransferConfig) -> TransferMode:
    if cfg.adaptive and leaf.mean_abs_residual > cfg.eta:
        return TransferMode.BICUBIC_FALLBACK
    return TransferMode.TRANSFER


def resolve_transfer_modes(partition: BlockPartition, cfg: TransferConfig) -> BlockPartition:
    """Copy of the partition with each leaf's mode set by the adaptive rule."""
    leaves = tuple(leaf.with_mode(decide_mode(leaf, cfg)) for leaf in partition)
    return BlockPartition(partition.frame_width, partition.frame_height, leaves)


def transfer_block(prev_hr: Plane, leaf: BlockNode, residual: Plane,
                   bicubic_hr_cur, cfg: TransferConfig) -> np.ndarray:
    """HR output block for one leaf, shape (alpha*h, alpha*w) uint8.

    Fallback blocks crop the whole-frame bicubic upsample; transferred
    blocks fetch prev_hr at the alpha-scaled MV (still quarter-pel units,
    interpolating when fractional) and add the upsampled block residual
    unless the skip flag says it is all zero.
    """
    a = cfg.alpha
    hx, hy, hw, hh = a * leaf.x, a * leaf.y, a * leaf.w, a * leaf.h
    if decide_mode(leaf, cfg) is TransferMode.BICUBIC_FALLBACK:
        if bicubic_hr_cur is None:
            raise ValueError("fallback block needs the frame's bicubic upsample")
        return bicubic_hr_cur.data[hy:hy + hh, hx:hx + hw].copy()

    if cfg.shortcuts and leaf.mv.is_zero():
        pred = prev_hr.data[hy:hy + hh, hx:hx + hw]  # co-located copy, no interpolation
    else:
        pred = qpel_fetch_block(prev_hr, hx, hy, hw, hh, leaf.mv.scaled(a))
    if cfg.shortcuts and leaf.skip:
        return np.array(pred, dtype=np.uint8)

    res_block = Plane.residual(residual.data[leaf.y:leaf.y + leaf.h,
                                             leaf.x:leaf.x + leaf.w])
    res_hr = bicubic_upsample(res_block, a).data
    return np.clip(pred.astype(np.int16) + res_hr, 0, 255).astype(np.uint8)


def transfer_frame(prev_hr: Plane, cur_lr: Plane, syntax: FrameSyntax,
                   cfg: TransferConfig):
    """Assemble the full HR frame from per-leaf transfers; returns (Plane, stats).

    The whole-frame bicubic upsample is computed once and only when at least
    one leaf falls back.
    """
    a = cfg.alpha
    if (syntax.partition.frame_width != cur_lr.width
            or syntax.partition.frame_height != cur_lr.height):
        raise ValueError("syntax does not match the LR frame dimensions")
    if prev_hr.width != a * cur_lr.width or prev_hr.height != a * cur_lr.height:
        raise ValueError("prev_hr must be alpha x the LR dimensions")
    partition = resolve_transfer_modes(syntax.partition, cfg)
    bicubic_hr = None
    if any(leaf.mode is TransferMode.BICUBIC_FALLBACK for leaf in partition):
        bicubic_hr = bicubic_upsample(cur_lr, a)
    out = np.empty((a * cur_lr.height, a * cur_lr.width), dtype=np.uint8)
    stats = TransferStats()
    for leaf in partition:
        block = transfer_block(prev_hr, leaf, syntax.residual, bicubic_hr, cfg)
        out[a * leaf.y:a * (leaf.y + leaf.h), a * leaf.x:a * (leaf.x + leaf.w)] = block
        stats.record(leaf, leaf.mode)
    return Plane.picture(out), stats


def _block_psnr(a: np.ndarray, b: np.ndarray) -> float:
    mse = float(np.mean((a.astype(np.float64) - b.astype(np.float64)) ** 2))
    if mse == 0.0:
        return PSNR_CAP_DB
    return min(10.0 * math.log10(255.0 ** 2 / mse), PSNR_CAP_DB)


def learn_threshold(training_blocks) -> float:
    """Pick the residual threshold maximizing total PSNR over training blocks.

    Each tuple is (e_i, y_i_transfer, y_i_bicubic): blocks with e_i <= eta
    contribute their transfer PSNR, the rest their bicubic PSNR. Candidates
    are midpoints between consecutive distinct e values plus the sentinels
    0 and max(e)+1; ties resolve toward the smaller eta.
    """
    blocks = list(training_blocks)
    if not blocks:
        raise ValueError("training block list must be non-empty")
    e = np.array([t[0] for t in blocks], dtype=np.float64)
    yt = np.array([t[1] for t in blocks], dtype=np.float64)
    yb = np.array([t[2] for t in blocks], dtype=np.float64)
    if (e < 0).any():
        raise ValueError("residual magnitudes must be non-negative")
    distinct = np.unique(e)
    candidates = np.concatenate(
        [[0.0], (distinct[:-1] + distinct[1:]) / 2.0, [distinct[-1] + 1.0]])
    best_eta, best_obj = None, -np.inf
    for eta in candidates:
        transfer = e <= eta
        obj = float(yt[transfer].sum() + yb[~transfer].sum())
        if obj > best_obj:
            best_eta, best_obj = float(eta), obj
    return best_eta


def collect_training_blocks(hr_pairs, alpha: int, encoder_cfg) -> list:
    """Build (e_i, y_transfer, y_bicubic) tuples from HR frame pairs.

    Pairs are cropped to alpha-divisible dimensions and downsampled; the
    second frame is encoded against the first; every block is then
    reconstructed both ways and scored in PSNR against the HR ground truth.
    The transfer reference is the ground-truth HR source frame (an ideal
    keyframe operator).
    """
    if not hr_pairs:
        raise ValueError("need at least one HR frame pair")
    samples = []
    for hr_a, hr_b in hr_pairs:
        w = (hr_a.width // alpha) * alpha
        h = (hr_a.height // alpha) * alpha
        hr_a = Plane.picture(hr_a.data[:h, :w])
        hr_b = Plane.picture(hr_b.data[:h, :w])
        lr_a = bicubic_downsample(hr_a, alpha)
        lr_b = bicubic_downsample(hr_b, alpha)
        syntax, _ = encode_frame(lr_a, lr_b, encoder_cfg)
        bicubic_hr = bicubic_upsample(lr_b, alpha)
        cfg = TransferConfig(alpha=alpha, adaptive=False)
        for leaf in syntax.partition:
            transferred = transfer_block(hr_a, leaf, syntax.residual, None, cfg)
            sl = (slice(alpha * leaf.y, alpha * (leaf.y + leaf.h)),
                  slice(alpha * leaf.x, alpha * (leaf.x + leaf.w)))
            truth = hr_b.data[sl]
            samples.append((leaf.mean_abs_residual,
                            _block_psnr(transferred, truth),
                            _block_psnr(bicubic_hr.data[sl], truth)))
    return samples
