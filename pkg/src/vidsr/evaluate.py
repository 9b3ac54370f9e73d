"""Experiment harness: PSNR metrics, chained-GOP comparison, sweeps, CSV output.

Two arms are measured on every clip: SR applied to every frame, and SR on
GOP keyframes with transfer + deblocking on the rest. Timings are wall
clock, median of 3 repeats, with one untimed warm-up call beforehand.
"""

from __future__ import annotations

import math
import statistics
import time
from dataclasses import dataclass, field

import numpy as np

from .deblock import DeblockConfig, deblock_frame
from .encoder import EncoderConfig, MvAccuracy, encode_frame, encode_sequence
from .model import GopConfig, Plane
from .sampling import bicubic_downsample, bicubic_upsample
from .sr import SrOperator, apply_sr
from .transfer import (PSNR_CAP_DB, TransferConfig, TransferStats,
                       resolve_transfer_modes, transfer_frame)

CSV_HEADER = "frame,psnr_bicubic,psnr_sr,psnr_fast,t_sr_ms,t_transfer_ms,t_deblock_ms"
TIMING_REPEATS = 3


def psnr(a: Plane, b: Plane) -> float:
    """10*log10(255^2 / MSE) between two planes; identical planes cap at 100 dB."""
    if a.width != b.width or a.height != b.height:
        raise ValueError(f"plane dimensions differ: {a.width}x{a.height} "
                         f"vs {b.width}x{b.height}")
    mse = float(np.mean((a.data.astype(np.float64) - b.data.astype(np.float64)) ** 2))
    if mse == 0.0:
        return PSNR_CAP_DB
    return min(10.0 * math.log10(255.0 ** 2 / mse), PSNR_CAP_DB)


@dataclass(frozen=True)
class FrameRecord:
    frame_index: int
    psnr_bicubic: float
    psnr_sr: float
    psnr_fast: float
    t_sr_ms: float
    t_transfer_ms: float
    t_deblock_ms: float

    def columns(self) -> tuple:
        return (self.psnr_bicubic, self.psnr_sr, self.psnr_fast,
                self.t_sr_ms, self.t_transfer_ms, self.t_deblock_ms)


@dataclass
class ExperimentReport:
    records: list
    avg4: tuple
    avg16: tuple
    speedup: float
    stats: TransferStats
    alpha: int
    gop_length: int
    fast_frames: list = field(default_factory=list, repr=False)


def column_means(records) -> tuple:
    cols = np.array([r.columns() for r in records], dtype=np.float64)
    return tuple(float(v) for v in cols.mean(axis=0))


def compute_speedup(records, gop: GopConfig) -> float:
    """Total per-frame SR cost over the cost of the keyframe-SR + transfer path."""
    total_sr = sum(r.t_sr_ms for r in records)
    fast_path = sum(r.t_sr_ms if gop.is_keyframe(r.frame_index)
                    else r.t_transfer_ms + r.t_deblock_ms for r in records)
    return total_sr / fast_path if fast_path > 0 else float("inf")


def _timed(fn):
    results, times = None, []
    for rep in range(TIMING_REPEATS):
        t0 = time.perf_counter()
        out = fn()
        times.append((time.perf_counter() - t0) * 1e3)
        if rep == 0:
            results = out
    return results, statistics.median(times)


def _crop_for_alpha(frame: Plane, alpha: int) -> Plane:
    w = (frame.width // alpha) * alpha
    h = (frame.height // alpha) * alpha
    if (w, h) == (frame.width, frame.height):
        return frame
    return Plane.picture(frame.data[:h, :w])


def run_chained_experiment(hr_frames, alpha: int, gop: GopConfig, sr: SrOperator,
                           transfer_cfg: TransferConfig, deblock_cfg: DeblockConfig,
                           encoder_cfg: EncoderConfig) -> ExperimentReport:
    """Downsample, encode chained, then measure per-frame SR vs keyframe SR + transfer."""
    if len(hr_frames) < 2:
        raise ValueError("need at least 2 frames")
    truth = [_crop_for_alpha(f, alpha) for f in hr_frames]
    lr = [bicubic_downsample(f, alpha) for f in truth]
    syntaxes, decoded = encode_sequence(lr, encoder_cfg)
    n = len(truth)

    apply_sr(sr, decoded[0])  # warm-up, excluded from timings
    sr_out, t_sr = [], []
    for frame in decoded:
        out, ms = _timed(lambda f=frame: apply_sr(sr, f))
        sr_out.append(out)
        t_sr.append(ms)

    # warm up the transfer path on the first non-keyframe, if any
    for i in range(1, n):
        if not gop.is_keyframe(i):
            pre, _ = transfer_frame(sr_out[i - 1], decoded[i], syntaxes[i - 1], transfer_cfg)
            deblock_frame(pre, resolve_transfer_modes(syntaxes[i - 1].partition, transfer_cfg),
                          alpha, deblock_cfg)
            break

    fast_out = [None] * n
    t_transfer = [0.0] * n
    t_deblock = [0.0] * n
    stats = TransferStats()
    prev_hr = None
    for i in range(n):
        if gop.is_keyframe(i):
            fast_out[i] = sr_out[i]
        else:
            (pre, frame_stats), t_transfer[i] = _timed(
                lambda p=prev_hr, i=i: transfer_frame(p, decoded[i], syntaxes[i - 1],
                                                      transfer_cfg))
            decided = resolve_transfer_modes(syntaxes[i - 1].partition, transfer_cfg)
            fast_out[i], t_deblock[i] = _timed(
                lambda f=pre, d=decided: deblock_frame(f, d, alpha, deblock_cfg))
            stats.merge(frame_stats)
        prev_hr = fast_out[i]

    records = []
    for i in range(n):
        records.append(FrameRecord(
            frame_index=i,
            psnr_bicubic=psnr(bicubic_upsample(decoded[i], alpha), truth[i]),
            psnr_sr=psnr(sr_out[i], truth[i]),
            psnr_fast=psnr(fast_out[i], truth[i]),
            t_sr_ms=t_sr[i],
            t_transfer_ms=t_transfer[i],
            t_deblock_ms=t_deblock[i],
        ))
    return ExperimentReport(
        records=records,
        avg4=column_means(records[:4]),
        avg16=column_means(records[:16]),
        speedup=compute_speedup(records, gop),
        stats=stats,
        alpha=alpha,
        gop_length=gop.gop_length,
        fast_frames=fast_out,
    )


def run_mv_accuracy_sweep(hr_pair, alpha: int, sr: SrOperator,
                          encoder_cfg: EncoderConfig = None,
                          transfer_cfg: TransferConfig = None) -> list:
    """Transfer quality of frame 2 with motion search limited to each accuracy.

    Returns [(MvAccuracy, psnr_dB)] ordered INTEGER, HALF, QUARTER. Deblocking
    is not applied; this isolates the motion-compensation contribution.
    """
    encoder_cfg = encoder_cfg or EncoderConfig()
    transfer_cfg = transfer_cfg or TransferConfig(alpha=alpha)
    hr_a, hr_b = (_crop_for_alpha(f, alpha) for f in hr_pair)
    lr_a = bicubic_downsample(hr_a, alpha)
    lr_b = bicubic_downsample(hr_b, alpha)
    hr_a_sr = apply_sr(sr, lr_a)
    rows = []
    for accuracy in (MvAccuracy.INTEGER, MvAccuracy.HALF, MvAccuracy.QUARTER):
        syntax, _ = encode_frame(lr_a, lr_b, encoder_cfg, frame_index=1, accuracy=accuracy)
        out, _ = transfer_frame(hr_a_sr, lr_b, syntax, transfer_cfg)
        rows.append((accuracy, psnr(out, hr_b)))
    return rows


def run_deblock_ablation(hr_frames, alpha: int, gop: GopConfig, sr: SrOperator,
                         transfer_cfg: TransferConfig, deblock_cfg: DeblockConfig,
                         encoder_cfg: EncoderConfig) -> list:
    """Per-frame (psnr_with_deblock, psnr_without) from two otherwise-identical runs."""
    with_db = run_chained_experiment(hr_frames, alpha, gop, sr, transfer_cfg,
                                     deblock_cfg, encoder_cfg)
    no_db = run_chained_experiment(
        hr_frames, alpha, gop, sr, transfer_cfg,
        DeblockConfig(deblock_cfg.beta, deblock_cfg.tc, enabled=False), encoder_cfg)
    return [(a.psnr_fast, b.psnr_fast) for a, b in zip(with_db.records, no_db.records)]


def emit_csv(report: ExperimentReport, path) -> None:
    """Fixed-schema CSV: one row per frame, aggregate rows prefixed '#agg,'."""
    lines = [CSV_HEADER]
    for r in report.records:
        lines.append(",".join([str(r.frame_index)] + [repr(v) for v in r.columns()]))
    lines.append("#agg,avg4," + ",".join(repr(v) for v in report.avg4))
    lines.append("#agg,avg16," + ",".join(repr(v) for v in report.avg16))
    lines.append(f"#agg,speedup,{report.speedup!r}")
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def emit_stats(report: ExperimentReport, path) -> None:
    """Transfer statistics as key,value lines (pixel counts in LR units)."""
    s = report.stats
    lines = [
        f"blocks_transferred,{s.blocks_transferred}",
        f"blocks_fallback,{s.blocks_fallback}",
        f"pixels_total,{s.pixels_total}",
        f"pixels_zero_mv,{s.pixels_zero_mv}",
        f"pixels_zero_residual,{s.pixels_zero_residual}",
        f"zero_mv_fraction,{s.zero_mv_fraction()!r}",
        f"zero_residual_fraction,{s.zero_residual_fraction()!r}",
    ]
    for size in (8, 16, 32, 64):
        lines.append(f"copied_pixels_size_{size},{s.copied_by_size.get(size, 0)}")
    for size in (8, 16, 32, 64):
        lines.append(f"skipped_pixels_size_{size},{s.skipped_by_size.get(size, 0)}")
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")
