"""Persistence: PNG frame sequences, Y4M streams, and the field container.

The field container is deliberately dumb: a fixed little-endian header and
raw float32 payload, so files are byte-reproducible across platforms.
"""

from __future__ import annotations

import re
import struct
from pathlib import Path

import cv2
import numpy as np

from .core import FieldGrid, FrequencyBank
from .errors import (
    ColorspaceError,
    ConfigError,
    EmptySequenceError,
    FormatError,
    FrameReadError,
    FrameSizeError,
    MagicError,
    PayloadSizeError,
    StreamError,
    StructureError,
    VersionError,
)
from .video import VideoBuffer

FIELD_MAGIC = b"VFF1"
FIELD_VERSION = 1
_FIELD_HEADER = struct.Struct("<4s8I")

_DEPTH_MAX = {8: 255, 16: 65535}


def read_png_sequence(directory, pattern: str = "*.png") -> VideoBuffer:
    """Load frames in sorted filename order, normalized by their bit depth."""
    directory = Path(directory)
    paths = sorted(directory.glob(pattern))
    if not paths:
        raise EmptySequenceError(f"no frames matching {pattern!r} in {directory}")
    frames = []
    for path in paths:
        raw = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
        if raw is None:
            raise FrameReadError(f"could not decode {path}")
        if raw.ndim != 3 or raw.shape[2] != 3:
            raise FrameReadError(f"{path} is not 3-channel RGB (shape {raw.shape})")
        if raw.dtype == np.uint8:
            peak = _DEPTH_MAX[8]
        elif raw.dtype == np.uint16:
            peak = _DEPTH_MAX[16]
        else:
            raise FrameReadError(f"{path} has unsupported dtype {raw.dtype}")
        if frames and raw.shape != frames[0][1]:
            raise FrameSizeError(
                f"{path} has dims {raw.shape[:2]}, expected {frames[0][1][:2]}"
            )
        frames.append((raw[..., ::-1].astype(np.float64) / peak, raw.shape))
    return VideoBuffer(np.stack([f for f, _ in frames]))


def write_png_sequence(video: VideoBuffer, directory, bit_depth: int = 8, prefix: str = "frame_"):
    """Write zero-padded numbered frames with round-half-up quantization."""
    if bit_depth not in _DEPTH_MAX:
        raise ConfigError(f"bit_depth must be 8 or 16, got {bit_depth}")
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    peak = _DEPTH_MAX[bit_depth]
    dtype = np.uint8 if bit_depth == 8 else np.uint16
    quant = np.floor(np.clip(video.data, 0.0, 1.0) * peak + 0.5)
    quant = np.clip(quant, 0, peak).astype(dtype)
    for k in range(quant.shape[0]):
        path = directory / f"{prefix}{k:06d}.png"
        if not cv2.imwrite(str(path), quant[k][..., ::-1]):
            raise StreamError(f"could not write {path}")


def _quantize_u8(plane: np.ndarray) -> np.ndarray:
    return np.clip(np.floor(plane + 0.5), 0, 255).astype(np.uint8)


def _upsample2_axis(plane: np.ndarray, axis: int) -> np.ndarray:
    """Center-aligned bilinear doubling: output i sits at source i/2 - 0.25."""
    n = plane.shape[axis]
    coords = np.clip(np.arange(2 * n) / 2.0 - 0.25, 0.0, n - 1.0)
    i0 = np.clip(np.floor(coords).astype(np.int64), 0, max(n - 2, 0))
    f = coords - i0
    shape = [1, 1]
    shape[axis] = coords.size
    f = f.reshape(shape)
    lo = np.take(plane, i0, axis=axis)
    hi = np.take(plane, np.minimum(i0 + 1, n - 1), axis=axis)
    return (1.0 - f) * lo + f * hi


def _ycbcr_to_rgb(y: np.ndarray, cb: np.ndarray, cr: np.ndarray) -> np.ndarray:
    y_lin = (y - 16.0) / 219.0
    pb = (cb - 128.0) / 224.0
    pr = (cr - 128.0) / 224.0
    r = y_lin + 1.402 * pr
    b = y_lin + 1.772 * pb
    g = (y_lin - 0.299 * r - 0.114 * b) / 0.587
    return np.clip(np.stack([r, g, b], axis=-1), 0.0, 1.0)


def _parse_y4m_header(line: bytes):
    if not line.startswith(b"YUV4MPEG2"):
        raise FormatError("not a YUV4MPEG2 stream")
    width = height = None
    fps = (30, 1)
    colorspace = "420jpeg"
    for tag in line.split()[1:]:
        tag = tag.decode("ascii", errors="replace")
        kind, value = tag[0], tag[1:]
        if kind == "W":
            width = int(value)
        elif kind == "H":
            height = int(value)
        elif kind == "F":
            m = re.fullmatch(r"(\d+):(\d+)", value)
            if not m:
                raise FormatError(f"bad frame-rate tag {tag!r}")
            fps = (int(m.group(1)), int(m.group(2)))
        elif kind == "C":
            colorspace = value
    if width is None or height is None:
        raise FormatError("y4m header missing W or H")
    if colorspace not in ("420jpeg", "444"):
        raise ColorspaceError(f"unsupported y4m colorspace C{colorspace}")
    return width, height, fps, colorspace


def read_y4m(path):
    """Decode a C420jpeg or C444 stream to RGB; returns (VideoBuffer, fps)."""
    data = Path(path).read_bytes()
    nl = data.find(b"\n")
    if nl < 0:
        raise FormatError("y4m stream has no header line")
    width, height, fps, colorspace = _parse_y4m_header(data[:nl])
    if colorspace == "444":
        cdims = (height, width)
    else:
        if width % 2 or height % 2:
            raise FormatError(f"C420jpeg needs even dims, got {width}x{height}")
        cdims = (height // 2, width // 2)
    frame_bytes = width * height + 2 * cdims[0] * cdims[1]
    frames = []
    pos = nl + 1
    while pos < len(data):
        marker_end = data.find(b"\n", pos)
        if marker_end < 0 or not data[pos:marker_end].startswith(b"FRAME"):
            raise StreamError(f"malformed FRAME marker at byte {pos}")
        pos = marker_end + 1
        payload = data[pos : pos + frame_bytes]
        if len(payload) < frame_bytes:
            raise StreamError(
                f"truncated frame payload: wanted {frame_bytes} bytes, got {len(payload)}"
            )
        pos += frame_bytes
        y_end = width * height
        c_size = cdims[0] * cdims[1]
        planes = np.frombuffer(payload, dtype=np.uint8)
        y = planes[:y_end].reshape(height, width).astype(np.float64)
        cb = planes[y_end : y_end + c_size].reshape(cdims).astype(np.float64)
        cr = planes[y_end + c_size :].reshape(cdims).astype(np.float64)
        if colorspace == "420jpeg":
            cb = _upsample2_axis(_upsample2_axis(cb, 0), 1)
            cr = _upsample2_axis(_upsample2_axis(cr, 0), 1)
        frames.append(_ycbcr_to_rgb(y, cb, cr))
    if not frames:
        raise StructureError("y4m stream contains no frames")
    return VideoBuffer(np.stack(frames)), fps


def write_y4m(video: VideoBuffer, path, fps: tuple[int, int] = (30, 1)):
    """Emit a C444 stream with BT.601 limited-range encoding."""
    num, den = (int(v) for v in fps)
    if num < 1 or den < 1:
        raise ConfigError(f"fps ratio must be positive, got {num}:{den}")
    t, h, w = video.dims
    data = np.clip(video.data, 0.0, 1.0)
    r, g, b = data[..., 0], data[..., 1], data[..., 2]
    y_lin = 0.299 * r + 0.587 * g + 0.114 * b
    y = _quantize_u8(16.0 + 219.0 * y_lin)
    cb = _quantize_u8(128.0 + 224.0 * (b - y_lin) / 1.772)
    cr = _quantize_u8(128.0 + 224.0 * (r - y_lin) / 1.402)
    with open(path, "wb") as fh:
        fh.write(f"YUV4MPEG2 W{w} H{h} F{num}:{den} Ip A1:1 C444\n".encode("ascii"))
        for k in range(t):
            fh.write(b"FRAME\n")
            fh.write(y[k].tobytes())
            fh.write(cb[k].tobytes())
            fh.write(cr[k].tobytes())


def save_field(grid: FieldGrid, path):
    """Write the binary field container (float32 payload, fixed layout)."""
    t, h, w = grid.dims
    header = _FIELD_HEADER.pack(
        FIELD_MAGIC, FIELD_VERSION, t, h, w, grid.channels, grid.bank.n_basis,
        grid.bank.dc_index, 0,
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(grid.bank.omegas.astype("<f4").tobytes())
        # one t-slab at a time caps the float32 conversion transient
        for k in range(t):
            fh.write(grid.coeffs[k].astype("<f4").tobytes())


def load_field(path) -> FieldGrid:
    data = Path(path).read_bytes()
    if len(data) < _FIELD_HEADER.size:
        raise MagicError(f"file too short for a field header ({len(data)} bytes)")
    magic, version, t, h, w, c, n, dc_index, _ = _FIELD_HEADER.unpack_from(data)
    if magic != FIELD_MAGIC:
        raise MagicError(f"bad magic {magic!r}, expected {FIELD_MAGIC!r}")
    if version != FIELD_VERSION:
        raise VersionError(f"unsupported field version {version}")
    expected = _FIELD_HEADER.size + 4 * (n * 3 + t * h * w * c * n * 2)
    if len(data) != expected:
        raise PayloadSizeError(
            f"payload length mismatch: file has {len(data)} bytes, header implies {expected}"
        )
    bank_end = _FIELD_HEADER.size + 4 * n * 3
    omegas = np.frombuffer(data[_FIELD_HEADER.size : bank_end], dtype="<f4")
    coeffs = np.frombuffer(data[bank_end:], dtype="<f4")
    bank = FrequencyBank(omegas.astype(np.float64).reshape(n, 3), dc_index=dc_index)
    return FieldGrid(
        bank, coeffs.astype(np.float64).reshape(t, h, w, c, n, 2)
    )
