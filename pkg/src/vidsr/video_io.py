"""Frame I/O: Y4M (4:2:0 or mono, 8-bit), PGM/PNG grayscale frame directories.

The pipeline is luma-only; 4:2:0 chroma planes are carried through and
upscaled with plain bicubic at output time.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .model import Plane
from .sr import parse_pgm, pgm_bytes

Y4M_MAGIC = b"YUV4MPEG2"
_SUPPORTED_420 = ("420", "420jpeg", "420mpeg2", "420paldv")


@dataclass
class VideoClip:
    """A decoded clip: luma planes plus optional 4:2:0 chroma pairs."""

    luma: list                       # list[Plane]
    chroma: list = field(default_factory=list)   # list[(cb, cr) uint8 arrays], or empty
    fps: str = "30:1"

    def __post_init__(self):
        if not self.luma:
            raise ValueError("clip must contain at least one frame")
        if self.chroma and len(self.chroma) != len(self.luma):
            raise ValueError("chroma frame count must match luma")

    @property
    def width(self) -> int:
        return self.luma[0].width

    @property
    def height(self) -> int:
        return self.luma[0].height

    def __len__(self) -> int:
        return len(self.luma)


def read_y4m(path) -> VideoClip:
    with open(path, "rb") as fh:
        data = fh.read()
    eol = data.find(b"\n")
    if eol < 0 or not data.startswith(Y4M_MAGIC):
        raise ValueError(f"{path}: not a Y4M file")
    width = height = 0
    fps = "30:1"
    colorspace = "420"
    for token in data[len(Y4M_MAGIC):eol].split():
        tag, value = chr(token[0]), token[1:].decode("ascii")
        if tag == "W":
            width = int(value)
        elif tag == "H":
            height = int(value)
        elif tag == "F":
            fps = value
        elif tag == "C":
            colorspace = value
    if width <= 0 or height <= 0:
        raise ValueError(f"{path}: missing W/H in Y4M header")
    mono = colorspace == "mono"
    if not mono and colorspace not in _SUPPORTED_420:
        raise ValueError(f"{path}: unsupported Y4M colorspace C{colorspace}")
    if not mono and (width % 2 or height % 2):
        raise ValueError(f"{path}: 4:2:0 needs even dimensions, got {width}x{height}")

    luma_size = width * height
    chroma_size = 0 if mono else (width // 2) * (height // 2)
    frame_size = luma_size + 2 * chroma_size
    luma, chroma = [], []
    pos = eol + 1
    while pos < len(data):
        eol = data.find(b"\n", pos)
        if eol < 0 or not data[pos:eol].startswith(b"FRAME"):
            raise ValueError(f"{path}: bad FRAME marker at byte {pos}")
        pos = eol + 1
        if pos + frame_size > len(data):
            raise ValueError(f"{path}: truncated frame at byte {pos}")
        y = np.frombuffer(data, np.uint8, luma_size, pos).reshape(height, width)
        luma.append(Plane.picture(y))
        if not mono:
            cw, ch = width // 2, height // 2
            cb = np.frombuffer(data, np.uint8, chroma_size, pos + luma_size)
            cr = np.frombuffer(data, np.uint8, chroma_size, pos + luma_size + chroma_size)
            chroma.append((cb.reshape(ch, cw).copy(), cr.reshape(ch, cw).copy()))
        pos += frame_size
    if not luma:
        raise ValueError(f"{path}: no frames")
    return VideoClip(luma, chroma, fps)


def write_y4m(path, clip: VideoClip) -> None:
    colorspace = b"C420" if clip.chroma else b"Cmono"
    header = b"%s W%d H%d F%s Ip A1:1 %s\n" % (
        Y4M_MAGIC, clip.width, clip.height, clip.fps.encode("ascii"), colorspace)
    with open(path, "wb") as fh:
        fh.write(header)
        for i, plane in enumerate(clip.luma):
            fh.write(b"FRAME\n")
            fh.write(plane.data.tobytes())
            if clip.chroma:
                cb, cr = clip.chroma[i]
                fh.write(cb.tobytes())
                fh.write(cr.tobytes())


def read_gray_image(path) -> Plane:
    path = os.fspath(path)
    if path.lower().endswith(".pgm"):
        with open(path, "rb") as fh:
            return Plane.picture(parse_pgm(fh.read()))
    from PIL import Image
    with Image.open(path) as img:
        return Plane.picture(np.asarray(img.convert("L"), dtype=np.uint8))


def write_pgm(path, plane: Plane) -> None:
    with open(path, "wb") as fh:
        fh.write(pgm_bytes(plane.data))


def read_frame_dir(path) -> VideoClip:
    names = sorted(n for n in os.listdir(path)
                   if n.lower().endswith((".pgm", ".png")))
    if not names:
        raise ValueError(f"{path}: no .pgm/.png frames found")
    frames = [read_gray_image(os.path.join(path, n)) for n in names]
    sizes = {(f.width, f.height) for f in frames}
    if len(sizes) != 1:
        raise ValueError(f"{path}: frames have mixed dimensions {sorted(sizes)}")
    return VideoClip(frames)


def write_frame_dir(path, clip: VideoClip) -> None:
    os.makedirs(path, exist_ok=True)
    for i, plane in enumerate(clip.luma):
        write_pgm(os.path.join(path, f"frame_{i:06d}.pgm"), plane)


def load_clip(path) -> VideoClip:
    """Dispatch on path: .y4m file, directory of frames, or single image."""
    path = os.fspath(path)
    if os.path.isdir(path):
        return read_frame_dir(path)
    if not os.path.exists(path):
        raise FileNotFoundError(f"no such input: {path}")
    if path.lower().endswith(".y4m"):
        return read_y4m(path)
    if path.lower().endswith((".pgm", ".png")):
        return VideoClip([read_gray_image(path)])
    raise ValueError(f"{path}: unsupported input format (expect .y4m, .pgm, .png, or a directory)")


def save_clip(path, clip: VideoClip) -> None:
    """Write .y4m when the path says so, else a directory of PGM frames."""
    path = os.fspath(path)
    if path.lower().endswith(".y4m"):
        write_y4m(path, clip)
    else:
        write_frame_dir(path, clip)
