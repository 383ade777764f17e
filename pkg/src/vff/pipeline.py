"""Degradation operators, PSF selection, and the end-to-end pipeline.

Degradation follows the usual benchmark protocol: anti-aliased bicubic
downsampling in space, plain frame decimation in time. Super-resolution is
fit_video followed by anti-aliased sample_grid. Spatial alignment is
pixel-center based everywhere, so degrading and then super-resolving by the
same factors lands output pixel k exactly on source pixel k.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import FrequencyBank, PsfSpec
from .errors import ConfigError
from .fit import FitConfig, fit_video
from .sampling import SampleSpec, round_half_up, sample_grid
from .video import VideoBuffer


def auto_psf(s: float, r: float, nu: float = 0.5) -> PsfSpec:
    """Scale-matched Gaussian PSF: sigma_x = sigma_y = nu * s, point in time.

    Larger s admits more of the band (less attenuation at fixed omega). Time
    stays a point sample, the way typical camera shutters are modeled here;
    pass a manual PsfSpec to engage temporal attenuation.
    """

    if not (s > 0.0 and r > 0.0):
        raise ConfigError(f"scale factors must be positive, got s={s}, r={r}")
    if not (nu > 0.0 and math.isfinite(nu)):
        raise ConfigError(f"nu must be positive, got {nu}")
    return PsfSpec(nu * s, nu * s, math.inf)


@dataclass(frozen=True)
class PsfPolicy:
    """auto derives the PSF from the scale factors; manual passes one through."""

    mode: str = "auto"
    nu: float = 0.5
    manual: PsfSpec | None = None

    def __post_init__(self):
        if self.mode not in ("auto", "manual"):
            raise ConfigError(f"psf mode must be auto or manual, got {self.mode!r}")
        if not (float(self.nu) > 0.0 and math.isfinite(float(self.nu))):
            raise ConfigError(f"nu must be positive, got {self.nu}")
        object.__setattr__(self, "nu", float(self.nu))
        if self.mode == "manual" and self.manual is None:
            raise ConfigError("manual psf mode needs a PsfSpec")

    def resolve(self, s: float, r: float) -> PsfSpec:
        if self.mode == "manual":
            return self.manual
        return auto_psf(s, r, self.nu)


def _cubic_kernel(t: np.ndarray) -> np.ndarray:
    # Catmull-Rom: a = -0.5, support (-2, 2)
    a = -0.5
    t = np.abs(t)
    out = np.zeros_like(t)
    near = t < 1.0
    far = (t >= 1.0) & (t < 2.0)
    tn = t[near]
    out[near] = (a + 2.0) * tn**3 - (a + 3.0) * tn**2 + 1.0
    tf = t[far]
    out[far] = a * tf**3 - 5.0 * a * tf**2 + 8.0 * a * tf - 4.0 * a
    return out


def _down_matrix(n_in: int, s: float) -> np.ndarray:
    """Row-stochastic bicubic decimation matrix for one axis.

    Output center i maps to input coordinate (i+0.5)*s - 0.5; the kernel
    footprint scales with s so the pass band shrinks along with the output
    rate. Taps beyond the edge fold onto the border sample (replication) and
    each row renormalizes to sum 1.
    """

    n_out = round_half_up(n_in / s)
    if n_out < 1:
        raise ConfigError(f"factor {s} collapses axis of size {n_in} to zero")
    mat = np.zeros((n_out, n_in))
    radius = 2.0 * s
    for i in range(n_out):
        center = (i + 0.5) * s - 0.5
        lo = int(math.ceil(center - radius))
        hi = int(math.floor(center + radius))
        taps = np.arange(lo, hi + 1)
        weights = _cubic_kernel((taps - center) / s) / s
        np.add.at(mat[i], np.clip(taps, 0, n_in - 1), weights)
        mat[i] /= mat[i].sum()
    return mat


def bicubic_downsample(video: VideoBuffer, s: float) -> VideoBuffer:
    """Anti-aliased spatial decimation by any real factor s >= 1."""
    s = float(s)
    if not (math.isfinite(s) and s >= 1.0):
        raise ConfigError(f"spatial degradation factor must be >= 1, got {s}")
    if s == 1.0:
        return VideoBuffer(video.data.copy())
    t, h, w = video.dims
    dy = _down_matrix(h, s)
    dx = _down_matrix(w, s)
    out = np.einsum("ij,tjkc,lk->tilc", dy, video.data, dx, optimize=True)
    return VideoBuffer(np.clip(out, 0.0, 1.0))


def temporal_subsample(video: VideoBuffer, r) -> VideoBuffer:
    """Keep every r-th frame starting at frame 0 (point sampling in time)."""
    if isinstance(r, float) and not r.is_integer():
        raise ConfigError(f"temporal factor must be an integer, got {r}")
    r = int(r)
    if r < 1:
        raise ConfigError(f"temporal factor must be >= 1, got {r}")
    t = video.dims[0]
    if t < r:
        raise ConfigError(f"need at least r={r} frames, video has {t}")
    return VideoBuffer(video.data[::r].copy())


def degrade(video: VideoBuffer, s: float, r) -> VideoBuffer:
    """Benchmark degradation: bicubic spatial decimation, then frame decimation."""
    return temporal_subsample(bicubic_downsample(video, s), r)


def _lerp_axis(data: np.ndarray, coords: np.ndarray, axis: int) -> np.ndarray:
    n = data.shape[axis]
    c = np.clip(coords, 0.0, n - 1.0)
    if n == 1:
        return np.take(data, np.zeros(coords.size, dtype=np.int64), axis=axis)
    i0 = np.clip(np.floor(c).astype(np.int64), 0, n - 2)
    f = c - i0
    shape = [1] * data.ndim
    shape[axis] = coords.size
    f = f.reshape(shape)
    return (1.0 - f) * np.take(data, i0, axis=axis) + f * np.take(data, i0 + 1, axis=axis)


def trilinear_resample(lr: VideoBuffer, s: float, r: float) -> VideoBuffer:
    """Separable linear interpolation baseline on the SampleSpec raster.

    Coordinates beyond the outermost sample centers hold the border value.
    """

    spec = SampleSpec(s, r, lr.dims)
    out = _lerp_axis(lr.data, spec.t_coords(), axis=0)
    out = _lerp_axis(out, spec.y_coords(), axis=1)
    out = _lerp_axis(out, spec.x_coords(), axis=2)
    return VideoBuffer(out)


def stvsr(
    lr: VideoBuffer,
    s: float,
    r: float,
    bank: FrequencyBank,
    fit_cfg: FitConfig,
    psf_policy: PsfPolicy,
    *,
    workers: int = 1,
) -> VideoBuffer:
    """Continuous space-time super-resolution: fit, then resample, then clamp."""
    if not (s >= 1.0 and r >= 1.0):
        raise ConfigError(f"stvsr upsamples only: need s, r >= 1, got s={s}, r={r}")
    grid = fit_video(lr, bank, fit_cfg, workers=workers)
    spec = SampleSpec(s, r, lr.dims)
    psf = psf_policy.resolve(s, r)
    return sample_grid(grid, spec, psf, workers=workers).clamped()
