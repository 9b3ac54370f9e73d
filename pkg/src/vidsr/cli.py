"""Command-line interface: extract syntax, upscale a clip, run benchmarks.

Exit codes: 0 success, 2 usage/input error, 3 data-consistency error,
4 plugin error.
"""

from __future__ import annotations

import argparse
import sys

from .deblock import DeblockConfig, deblock_frame
from .encoder import (EncoderConfig, ResidualMode, SidecarFormatError,
                      decode_sequence, encode_sequence, read_sidecar, write_sidecar)
from .evaluate import (column_means, emit_csv, emit_stats, run_chained_experiment,
                       run_mv_accuracy_sweep)
from .model import GopConfig, Plane
from .sampling import bicubic_upsample
from .sr import PluginError, SrOperator, apply_sr
from .transfer import TransferConfig, resolve_transfer_modes, transfer_frame
from .video_io import VideoClip, load_clip, save_clip

EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_PLUGIN = 4


class UsageError(Exception):
    """Unreadable input or bad arguments."""


class DataError(Exception):
    """Inputs are readable but mutually inconsistent."""


def _add_encoder_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--search-range", type=int, default=16,
                   help="integer motion search range in pixels")
    p.add_argument("--split-threshold", type=float, default=5.0,
                   help="SAD per pixel above which a block splits")
    p.add_argument("--residual-mode", choices=["lossless", "deadzone"],
                   default="lossless", help="residual storage mode")
    p.add_argument("--deadzone", type=int, default=2,
                   help="zero out residual samples with |r| <= this (deadzone mode)")


def _add_pipeline_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha", type=int, default=2, choices=[2, 3, 4],
                   help="upscaling factor")
    p.add_argument("--sr", default="ibp",
                   help="keyframe SR operator: bicubic, ibp, or external:<command>")
    p.add_argument("--gop", type=int, default=16,
                   help="GOP length (SR every N-th frame, transfer the rest)")
    p.add_argument("--eta", type=float, default=10.0,
                   help="mean-abs-residual threshold for the bicubic fallback")
    p.add_argument("--no-adaptive", action="store_true",
                   help="disable the per-block bicubic fallback")
    p.add_argument("--no-shortcuts", action="store_true",
                   help="disable zero-MV copy / zero-residual skip shortcuts")
    p.add_argument("--beta", type=int, default=24, help="deblocking activity threshold")
    p.add_argument("--tc", type=int, default=6, help="deblocking clipping threshold")
    p.add_argument("--no-deblock", action="store_true", help="disable deblocking")


def _encoder_cfg(args) -> EncoderConfig:
    return EncoderConfig(
        search_range=args.search_range,
        split_threshold=args.split_threshold,
        residual_mode=(ResidualMode.DEADZONE if args.residual_mode == "deadzone"
                       else ResidualMode.LOSSLESS),
        deadzone=args.deadzone,
    )


def _transfer_cfg(args) -> TransferConfig:
    return TransferConfig(alpha=args.alpha, eta=args.eta,
                          adaptive=not args.no_adaptive,
                          shortcuts=not args.no_shortcuts)


def _deblock_cfg(args) -> DeblockConfig:
    return DeblockConfig(beta=args.beta, tc=args.tc, enabled=not args.no_deblock)


def _load_input(path) -> VideoClip:
    try:
        return load_clip(path)
    except (FileNotFoundError, ValueError, OSError) as exc:
        raise UsageError(str(exc)) from exc


def _fail(code: int, message: str) -> int:
    print(f"vidsr: error: {message}", file=sys.stderr)
    return code


def _limit(clip: VideoClip, n) -> VideoClip:
    if n is None or n >= len(clip):
        return clip
    if n < 1:
        raise DataError("--frames must be >= 1")
    return VideoClip(clip.luma[:n], clip.chroma[:n] if clip.chroma else [], clip.fps)


def _partition_histogram(syntaxes) -> dict:
    hist = {8: 0, 16: 0, 32: 0, 64: 0}
    for syntax in syntaxes:
        for leaf in syntax.partition:
            hist[leaf.size_class()] += 1
    return hist


def cmd_extract(args) -> int:
    clip = _limit(_load_input(args.input), args.frames)
    if len(clip) < 2:
        raise DataError("extraction needs at least 2 frames")
    cfg = _encoder_cfg(args)
    syntaxes, _ = encode_sequence(clip.luma, cfg)
    write_sidecar(args.output, syntaxes, cfg.residual_mode, cfg.deadzone)
    hist = _partition_histogram(syntaxes)
    total_leaves = sum(hist.values())
    skip_pixels = sum(l.n_pixels for s in syntaxes for l in s.partition if l.skip)
    total_pixels = sum(s.partition.frame_width * s.partition.frame_height
                       for s in syntaxes)
    print(f"wrote {args.output}: {len(syntaxes)} frames, {total_leaves} blocks")
    for size in (64, 32, 16, 8):
        print(f"  blocks size {size:2d}: {hist[size]}")
    print(f"  skip pixel fraction: {skip_pixels / total_pixels:.3f}")
    return 0


def _upscale_chroma(chroma, alpha):
    out = []
    for cb, cr in chroma:
        out.append((bicubic_upsample(Plane.picture(cb), alpha).data,
                    bicubic_upsample(Plane.picture(cr), alpha).data))
    return out


def cmd_upscale(args) -> int:
    clip = _limit(_load_input(args.input), args.frames)
    try:
        sr = SrOperator.parse(args.sr, args.alpha)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    tcfg = _transfer_cfg(args)
    dcfg = _deblock_cfg(args)
    gop = GopConfig(args.gop)

    if args.sidecar:
        syntaxes = read_sidecar(args.sidecar)
        by_index = {s.frame_index: s for s in syntaxes}
        if syntaxes:
            part = syntaxes[0].partition
            if (part.frame_width, part.frame_height) != (clip.width, clip.height):
                raise DataError(
                    f"sidecar is {part.frame_width}x{part.frame_height}, "
                    f"clip is {clip.width}x{clip.height}")
        missing = [i for i in range(1, len(clip)) if i not in by_index]
        if missing:
            raise DataError(f"sidecar has no syntax for frames {missing}")
        ordered = [by_index[i] for i in range(1, len(clip))]
        frames = decode_sequence(clip.luma[0], ordered)
    else:
        cfg = _encoder_cfg(args)
        syntaxes, frames = encode_sequence(clip.luma, cfg)
        by_index = {s.frame_index: s for s in syntaxes}

    out_frames = []
    prev_hr = None
    for i, frame in enumerate(frames):
        if gop.is_keyframe(i):
            hr = apply_sr(sr, frame)
        else:
            syntax = by_index[i]
            pre, _ = transfer_frame(prev_hr, frame, syntax, tcfg)
            decided = resolve_transfer_modes(syntax.partition, tcfg)
            hr = deblock_frame(pre, decided, args.alpha, dcfg)
        out_frames.append(hr)
        prev_hr = hr

    out_clip = VideoClip(out_frames,
                         _upscale_chroma(clip.chroma, args.alpha) if clip.chroma else [],
                         clip.fps)
    save_clip(args.output, out_clip)
    print(f"wrote {args.output}: {len(out_frames)} frames at "
          f"{out_clip.width}x{out_clip.height}")
    return 0


def cmd_bench(args) -> int:
    clip = _limit(_load_input(args.input), args.frames)
    try:
        sr = SrOperator.parse(args.sr, args.alpha)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    ecfg = _encoder_cfg(args)
    tcfg = _transfer_cfg(args)
    dcfg = _deblock_cfg(args)

    if args.mv_sweep:
        if len(clip) < 2:
            raise DataError("--mv-sweep needs at least 2 frames")
        rows = run_mv_accuracy_sweep(clip.luma[:2], args.alpha, sr, ecfg, tcfg)
        print("accuracy,psnr_db")
        for accuracy, value in rows:
            print(f"{accuracy.name},{value:.4f}")
        if args.output:
            with open(args.output, "w", encoding="ascii") as fh:
                fh.write("accuracy,psnr_db\n")
                for accuracy, value in rows:
                    fh.write(f"{accuracy.name},{value!r}\n")
        return 0

    gop_lengths = ([int(g) for g in args.sweep_gop.split(",")] if args.sweep_gop
                   else [args.gop])
    for gop_length in gop_lengths:
        report = run_chained_experiment(clip.luma, args.alpha, GopConfig(gop_length),
                                        sr, tcfg, dcfg, ecfg)
        means = column_means(report.records)
        print(f"gop={gop_length}: psnr bicubic/sr/fast = "
              f"{means[0]:.3f}/{means[1]:.3f}/{means[2]:.3f} dB, "
              f"speedup = {report.speedup:.2f}x")
        if args.output:
            path = args.output
            if len(gop_lengths) > 1:
                stem, dot, ext = path.rpartition(".")
                path = f"{stem}_gop{gop_length}{dot}{ext}" if dot else f"{path}_gop{gop_length}"
            emit_csv(report, path)
            print(f"  wrote {path}")
        if args.stats_out:
            emit_stats(report, args.stats_out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vidsr",
        description="Upscale video by running single-image SR on keyframes and "
                    "transferring the result via codec-style motion syntax.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="compute syntax elements, write a sidecar",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("input", help="input clip: .y4m, .pgm/.png, or a frame directory")
    p.add_argument("-o", "--output", required=True, help="sidecar file to write")
    p.add_argument("--frames", type=int, default=None, help="limit input frame count")
    _add_encoder_flags(p)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("upscale", help="super-resolve a clip",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True,
                   help="output .y4m file or frame directory")
    p.add_argument("--sidecar", default=None,
                   help="sidecar from `extract`; omitted = extract inline")
    p.add_argument("--frames", type=int, default=None, help="limit input frame count")
    _add_pipeline_flags(p)
    _add_encoder_flags(p)
    p.set_defaults(func=cmd_upscale)

    p = sub.add_parser("bench", help="measure PSNR/speed trade-offs, write CSV",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("input")
    p.add_argument("-o", "--output", default=None, help="CSV output path")
    p.add_argument("--stats-out", default=None, help="transfer statistics output path")
    p.add_argument("--frames", type=int, default=None, help="limit input frame count")
    p.add_argument("--sweep-gop", default=None,
                   help="comma-separated GOP lengths; one CSV per value")
    p.add_argument("--mv-sweep", action="store_true",
                   help="motion-accuracy sweep on the first frame pair")
    _add_pipeline_flags(p)
    _add_encoder_flags(p)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except PluginError as exc:
        return _fail(EXIT_PLUGIN, str(exc))
    except (SidecarFormatError, DataError) as exc:
        return _fail(EXIT_DATA, str(exc))
    except (UsageError, FileNotFoundError) as exc:
        return _fail(EXIT_USAGE, str(exc))


if __name__ == "__main__":
    sys.exit(main())
