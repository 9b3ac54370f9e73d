"""Separable cubic interpolation: plane up/downsampling and quarter-pel block fetch.

One kernel is used everywhere (Catmull-Rom, a = -0.5). Intermediate math is
float64; results are rounded once (nearest, half away from zero), clamped to
the plane's sample range, and cast. Out-of-frame reads replicate the nearest
edge sample.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Plane, PlaneKind, QuarterPelMV

VALID_ALPHAS = (2, 3, 4)


@dataclass(frozen=True)
class CubicKernel:
    """4-tap cubic convolution kernel with sharpness parameter `a`.

    At any phase the four weights sum to 1; at phase 0 they are (0, 1, 0, 0),
    so integer positions reproduce the source samples exactly.
    """

    a: float = -0.5

    def __call__(self, t) -> np.ndarray:
        t = np.abs(np.asarray(t, dtype=np.float64))
        a = self.a
        near = (a + 2.0) * t**3 - (a + 3.0) * t**2 + 1.0
        far = a * t**3 - 5.0 * a * t**2 + 8.0 * a * t - 4.0 * a
        return np.where(t <= 1.0, near, np.where(t < 2.0, far, 0.0))

    def weights(self, phase) -> np.ndarray:
        """Weights for taps at offsets (-1, 0, +1, +2) around the base sample.

        `phase` is the fractional position in [0, 1); accepts scalars or
        arrays and returns shape (4,) + phase.shape.
        """
        phase = np.asarray(phase, dtype=np.float64)
        return np.stack([
            self(1.0 + phase),
            self(phase),
            self(1.0 - phase),
            self(2.0 - phase),
        ])


DEFAULT_KERNEL = CubicKernel()


def _round_half_away(values: np.ndarray) -> np.ndarray:
    return np.copysign(np.floor(np.abs(values) + 0.5), values)

def _finalize(values: np.ndarray, kind: PlaneKind) -> np.ndarray:
    out = _round_half_away(values)
    if kind is PlaneKind.PICTURE:
        return np.clip(out, 0, 255).astype(np.uint8)
    return np.clip(out, -255, 255).astype(np.int16)


def _upsample_axis(arr: np.ndarray, alpha: int, kernel: CubicKernel) -> np.ndarray:
    """Resample the last axis to alpha x length.

    Output sample i maps to source coordinate (i + 0.5) / alpha - 0.5
    (half-sample-centered); edges replicate. The 4-tap sum is accumulated
    left to right so results are reproducible bit for bit.
    """
    n = arr.shape[-1]
    pos = (np.arange(alpha * n) + 0.5) / alpha - 0.5
    base = np.floor(pos).astype(np.int64)
    weights = kernel.weights(pos - base)                       # (4, m)
    taps = np.clip(base[None, :] + np.arange(-1, 3)[:, None], 0, n - 1)
    gathered = arr[..., taps]                                  # (..., 4, m)
    return (weights[0] * gathered[..., 0, :] + weights[1] * gathered[..., 1, :]
            + weights[2] * gathered[..., 2, :] + weights[3] * gathered[..., 3, :])


def _upsample_float(arr: np.ndarray, alpha: int, kernel: CubicKernel = DEFAULT_KERNEL) -> np.ndarray:
    # Horizontal pass first, then vertical; full float64 precision throughout.
    out = _upsample_axis(np.asarray(arr, dtype=np.float64), alpha, kernel)
    return _upsample_axis(out.swapaxes(-1, -2), alpha, kernel).swapaxes(-1, -2)


def _downsample_float(arr: np.ndarray, alpha: int) -> np.ndarray:
    h, w = arr.shape
    return arr.reshape(h // alpha, alpha, w // alpha, alpha).mean(axis=(1, 3))


def bicubic_upsample(src: Plane, alpha: int, kernel: CubicKernel = DEFAULT_KERNEL) -> Plane:
    """Upsample a plane by an integer factor with separable cubic convolution.

    Picture output is clamped to [0, 255], residual output to [-255, 255];
    rounding happens once at the end.
    """
    if alpha not in VALID_ALPHAS:
        raise ValueError(f"alpha must be one of {VALID_ALPHAS}, got {alpha}")
    out = _upsample_float(src.data, alpha, kernel)
    return Plane(_finalize(out, src.kind), src.kind)


def bicubic_downsample(src: Plane, alpha: int) -> Plane:
    """Downsample a plane by an integer factor.

    Low-pass prefilter (alpha x alpha box) followed by cubic resampling at
    stride alpha with the half-sample-centered phase convention. The cubic
    sample points land exactly on the box-filtered grid (phase 0), so the
    composition reduces to non-overlapping alpha x alpha block means; that is
    what is computed, with one final rounding.
    """
    if alpha not in VALID_ALPHAS:
        raise ValueError(f"alpha must be one of {VALID_ALPHAS}, got {alpha}")
    if src.width % alpha or src.height % alpha:
        raise ValueError(
            f"source dimensions {src.width}x{src.height} not divisible by alpha={alpha}")
    out = _downsample_float(src.data.astype(np.float64), alpha)
    return Plane(_finalize(out, src.kind), src.kind)


def qpel_fetch_block(ref: Plane, x: int, y: int, w: int, h: int,
                     mv: QuarterPelMV, kernel: CubicKernel = DEFAULT_KERNEL) -> np.ndarray:
    """Fetch the w x h block whose top-left is at (x + mv.dx/4, y + mv.dy/4).

    Fractional phases are interpolated separably with the cubic kernel
    (vertical pass first); integer phases are exact shifted copies. Reads
    outside the frame replicate edge samples. Returns an array in the
    plane's sample dtype, rounded half away from zero and range-clamped.
    """
    if w <= 0 or h <= 0:
        raise ValueError(f"block extent must be positive, got {w}x{h}")
    bx, fx = divmod(mv.dx_qpel, 4)
    by, fy = divmod(mv.dy_qpel, 4)
    x0, y0 = x + bx, y + by
    arr = ref.data
    nrows, ncols = arr.shape

    rows = np.arange(y0 - 1, y0 + h + 2) if fy else np.arange(y0, y0 + h)
    cols = np.arange(x0 - 1, x0 + w + 2) if fx else np.arange(x0, x0 + w)
    win = arr[np.clip(rows, 0, nrows - 1)[:, None], np.clip(cols, 0, ncols - 1)[None, :]]
    if not fx and not fy:
        return win  # integer phase: plain (possibly edge-replicated) copy

    win = win.astype(np.float64)
    if fy:
        wv = kernel.weights(fy / 4.0)
        win = (wv[0] * win[0:h] + wv[1] * win[1:h + 1]
               + wv[2] * win[2:h + 2] + wv[3] * win[3:h + 3])
    if fx:
        wh = kernel.weights(fx / 4.0)
        win = (wh[0] * win[:, 0:w] + wh[1] * win[:, 1:w + 1]
               + wh[2] * win[:, 2:w + 2] + wh[3] * win[:, 3:w + 3])
    return _finalize(win, ref.kind)
