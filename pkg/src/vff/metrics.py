"""Fidelity metrics: PSNR and single-scale SSIM on BT.601 luma."""

from __future__ import annotations

import math
from dataclasses import dataclass

import cv2
import numpy as np

from .errors import ConfigError, StructureError
from .video import VideoBuffer

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


def rgb_to_luma(video: VideoBuffer) -> np.ndarray:
    """Studio-swing BT.601 luminance per frame, shape (T, H, W).

    Y = (16 + 65.481 R + 128.553 G + 24.966 B) / 255, so [0,1] inputs land in
    [16/255, 235/255].
    """

    r, g, b = video.data[..., 0], video.data[..., 1], video.data[..., 2]
    return (16.0 + 65.481 * r + 128.553 * g + 24.966 * b) / 255.0


def _check_dims(pred: VideoBuffer, ref: VideoBuffer):
    if pred.data.shape != ref.data.shape:
        raise StructureError(
            f"metric inputs must share dims, got {pred.data.shape} vs {ref.data.shape}"
        )


def psnr(pred: VideoBuffer, ref: VideoBuffer, on_luma: bool = False):
    """Per-frame and mean PSNR with peak 1.0; identical frames report inf."""
    _check_dims(pred, ref)
    if on_luma:
        diff = rgb_to_luma(pred) - rgb_to_luma(ref)
    else:
        diff = pred.data - ref.data
    frames = []
    for k in range(diff.shape[0]):
        mse = float(np.mean(diff[k] ** 2))
        frames.append(math.inf if mse == 0.0 else 10.0 * math.log10(1.0 / mse))
    return frames, float(np.mean(frames))


def _gaussian_window() -> np.ndarray:
    half = SSIM_WINDOW // 2
    g = np.exp(-(np.arange(-half, half + 1) ** 2) / (2.0 * SSIM_SIGMA**2))
    g /= g.sum()
    return np.outer(g, g)


def _ssim_frame(x: np.ndarray, y: np.ndarray, window: np.ndarray) -> float:
    c1 = SSIM_K1**2
    c2 = SSIM_K2**2
    crop = SSIM_WINDOW // 2

    def filt(img):
        return cv2.filter2D(img, -1, window)[crop:-crop, crop:-crop]

    mu_x = filt(x)
    mu_y = filt(y)
    var_x = filt(x * x) - mu_x**2
    var_y = filt(y * y) - mu_y**2
    cov = filt(x * y) - mu_x * mu_y
    num = (2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2)
    den = (mu_x**2 + mu_y**2 + c1) * (var_x + var_y + c2)
    return float(np.mean(num / den))


def ssim(pred: VideoBuffer, ref: VideoBuffer):
    """Mean single-scale SSIM on luma per frame; peak 1.0, 11x11 window."""
    _check_dims(pred, ref)
    _, h, w = pred.dims
    if h < SSIM_WINDOW or w < SSIM_WINDOW:
        raise ConfigError(
            f"ssim needs frames of at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {h}x{w}"
        )
    lp = rgb_to_luma(pred)
    lr = rgb_to_luma(ref)
    window = _gaussian_window()
    frames = [_ssim_frame(lp[k], lr[k], window) for k in range(lp.shape[0])]
    return frames, float(np.mean(frames))


@dataclass(frozen=True)
class MetricReport:
    """Per-frame metric values plus means and the optional keyframe split.

    frame_labels marks output frame tau as a keyframe when tau % r == 0 for
    the split factor r; split means are plain arithmetic means over each
    class's per-frame values.
    """

    psnr_frames: tuple[float, ...] | None = None
    psnr_mean: float | None = None
    ssim_frames: tuple[float, ...] | None = None
    ssim_mean: float | None = None
    frame_labels: tuple[str, ...] | None = None
    keyframe_psnr: float | None = None
    interpolated_psnr: float | None = None
    keyframe_ssim: float | None = None
    interpolated_ssim: float | None = None

    def to_dict(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if v is not None}


def _class_means(frames, labels):
    key = [v for v, lab in zip(frames, labels) if lab == "keyframe"]
    mid = [v for v, lab in zip(frames, labels) if lab == "interpolated"]
    key_mean = float(np.mean(key)) if key else None
    mid_mean = float(np.mean(mid)) if mid else None
    return key_mean, mid_mean


def evaluate(
    pred: VideoBuffer,
    ref: VideoBuffer,
    metrics=("psnr", "ssim"),
    on_luma: bool = False,
    split_r: int | None = None,
) -> MetricReport:
    """Compute the requested metrics and, with split_r, the keyframe split."""
    unknown = [m for m in metrics if m not in ("psnr", "ssim")]
    if unknown:
        raise ConfigError(f"unknown metrics {unknown}; available: psnr, ssim")
    fields: dict = {}
    if split_r is not None:
        if int(split_r) < 1:
            raise ConfigError(f"split factor must be >= 1, got {split_r}")
        labels = tuple(
            "keyframe" if tau % int(split_r) == 0 else "interpolated"
            for tau in range(pred.dims[0])
        )
        fields["frame_labels"] = labels
    if "psnr" in metrics:
        frames, mean = psnr(pred, ref, on_luma=on_luma)
        fields["psnr_frames"] = tuple(frames)
        fields["psnr_mean"] = mean
        if split_r is not None:
            key, mid = _class_means(frames, fields["frame_labels"])
            fields["keyframe_psnr"] = key
            fields["interpolated_psnr"] = mid
    if "ssim" in metrics:
        frames, mean = ssim(pred, ref)
        fields["ssim_frames"] = tuple(frames)
        fields["ssim_mean"] = mean
        if split_r is not None:
            key, mid = _class_means(frames, fields["frame_labels"])
            fields["keyframe_ssim"] = key
            fields["interpolated_ssim"] = mid
    return MetricReport(**fields)
