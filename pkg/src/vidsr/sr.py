"""Single-image SR operators behind one interface.

Built-ins: plain bicubic and iterative back-projection (IBP). Any external
model can be plugged in as a child process speaking binary PGM on
stdin/stdout with a `--scale <alpha>` argument.
"""

from __future__ import annotations

import enum
import shlex
import subprocess
from dataclasses import dataclass

import numpy as np

from .model import Plane
from .sampling import (VALID_ALPHAS, _downsample_float, _finalize, _upsample_float,
                       bicubic_upsample)

IBP_ITERATIONS = 3
IBP_STEP = 1.0


class SrKind(enum.Enum):
    BICUBIC = "bicubic"
    IBP = "ibp"
    EXTERNAL = "external"


class PluginError(RuntimeError):
    """External SR process misbehaved; message carries captured diagnostics."""


@dataclass(frozen=True)
class SrOperator:
    kind: SrKind
    alpha: int
    command: str = ""   # EXTERNAL only: command line, split with shlex

    def __post_init__(self):
        if self.alpha not in VALID_ALPHAS:
            raise ValueError(f"alpha must be one of {VALID_ALPHAS}, got {self.alpha}")
        if self.kind is SrKind.EXTERNAL and not self.command.strip():
            raise ValueError("external operator needs a command line")

    @classmethod
    def parse(cls, spec: str, alpha: int) -> "SrOperator":
        """Build from a CLI spec: 'bicubic', 'ibp', or 'external:<command>'."""
        if spec == "bicubic":
            return cls(SrKind.BICUBIC, alpha)
        if spec == "ibp":
            return cls(SrKind.IBP, alpha)
        if spec.startswith("external:"):
            return cls(SrKind.EXTERNAL, alpha, spec[len("external:"):])
        raise ValueError(f"unknown SR operator {spec!r}")


def pgm_bytes(arr: np.ndarray) -> bytes:
    """Encode a uint8 grayscale array as binary PGM (P5, maxval 255)."""
    h, w = arr.shape
    return b"P5\n%d %d\n255\n" % (w, h) + arr.astype(np.uint8).tobytes()


def parse_pgm(data: bytes) -> np.ndarray:
    """Decode binary PGM (P5, maxval 255); comments and extra whitespace allowed."""
    if not data.startswith(b"P5"):
        raise ValueError("not a binary PGM (missing P5 magic)")
    pos = 2
    fields = []
    while len(fields) < 3:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValueError("truncated PGM header")
        fields.append(data[start:pos])
    pos += 1  # single whitespace after maxval
    w, h, maxval = (int(f) for f in fields)
    if maxval != 255:
        raise ValueError(f"unsupported PGM maxval {maxval}")
    if len(data) - pos < w * h:
        raise ValueError(f"PGM payload short: need {w * h} bytes, have {len(data) - pos}")
    return np.frombuffer(data, dtype=np.uint8, count=w * h, offset=pos).reshape(h, w).copy()


def _apply_ibp(frame: Plane, alpha: int) -> Plane:
    """Bicubic init, then back-project the downsampling error a few times."""
    lr = frame.data.astype(np.float64)
    current = _upsample_float(lr, alpha)
    for _ in range(IBP_ITERATIONS):
        err = _downsample_float(current, alpha) - lr
        current = current - IBP_STEP * _upsample_float(err, alpha)
    return Plane(_finalize(current, frame.kind), frame.kind)


def _apply_external(op: SrOperator, frame: Plane) -> Plane:
    argv = shlex.split(op.command) + ["--scale", str(op.alpha)]
    try:
        proc = subprocess.run(argv, input=pgm_bytes(frame.data),
                              capture_output=True, check=False)
    except OSError as exc:
        raise PluginError(f"failed to launch {argv[0]!r}: {exc}") from exc
    stderr = proc.stderr.decode("utf-8", "replace").strip()
    if proc.returncode != 0:
        raise PluginError(
            f"plugin exited with status {proc.returncode}: {stderr or '<no stderr>'}")
    try:
        out = parse_pgm(proc.stdout)
    except ValueError as exc:
        raise PluginError(f"plugin wrote malformed PGM: {exc}; stderr: {stderr}") from exc
    expect = (op.alpha * frame.height, op.alpha * frame.width)
    if out.shape != expect:
        raise PluginError(
            f"plugin output is {out.shape[1]}x{out.shape[0]}, "
            f"expected {expect[1]}x{expect[0]}; stderr: {stderr}")
    return Plane.picture(out)


def apply_sr(op: SrOperator, frame: Plane) -> Plane:
    """Run the operator; output is exactly (alpha*W, alpha*H) or an error."""
    if op.kind is SrKind.BICUBIC:
        return bicubic_upsample(frame, op.alpha)
    if op.kind is SrKind.IBP:
        return _apply_ibp(frame, op.alpha)
    return _apply_external(op, frame)
