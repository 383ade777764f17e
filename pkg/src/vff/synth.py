"""Synthetic scenes with closed-form ground truth at any space-time coordinate.

Each pattern is a continuous function of (x, y, t), so a degraded clip's
ideal reconstruction can be rendered exactly at whatever raster the sampler
produces. Per-channel variation (phases, levels) is drawn once from the seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .sampling import SampleSpec, round_half_up
from .video import VideoBuffer

PATTERNS = (
    "translating-sinusoid",
    "translating-checkerboard",
    "rotating-bars",
    "accelerating-dot",
)


@dataclass(frozen=True)
class SynthSpec:
    """Scene description: pattern, raster dims (T, H, W), motion and content.

    cycles counts whole spatial periods across the frame for the sinusoid
    (integers keep integer-velocity translation exactly circular); cell is
    the checkerboard square size in pixels; stripe_freq is the rotating-bars
    frequency in cycles per pixel; dot_sigma the Gaussian dot radius.
    """

    pattern: str
    dims: tuple[int, int, int]
    velocity: tuple[float, float] = (1.0, 0.0)
    acceleration: tuple[float, float] = (0.0, 0.0)
    angular_rate: float = 0.1
    cycles: tuple[int, int] = (3, 2)
    cell: float = 4.0
    stripe_freq: float = 0.15
    dot_sigma: float = 2.5
    amplitude: float = 0.4
    seed: int = 0

    def __post_init__(self):
        if self.pattern not in PATTERNS:
            raise ConfigError(
                f"unknown pattern {self.pattern!r}; choose from {', '.join(PATTERNS)}"
            )
        dims = tuple(int(v) for v in self.dims)
        if len(dims) != 3 or min(dims) < 1:
            raise ConfigError(f"dims must be three positive ints, got {self.dims}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "velocity", tuple(float(v) for v in self.velocity))
        object.__setattr__(self, "acceleration", tuple(float(v) for v in self.acceleration))
        object.__setattr__(self, "cycles", tuple(int(v) for v in self.cycles))
        if not (0.0 < float(self.amplitude) <= 0.5):
            raise ConfigError(f"amplitude must be in (0, 0.5], got {self.amplitude}")
        if float(self.cell) <= 0.0 or float(self.dot_sigma) <= 0.0:
            raise ConfigError("cell and dot_sigma must be positive")

    def to_dict(self) -> dict:
        return {
            "pattern": self.pattern,
            "dims": list(self.dims),
            "velocity": list(self.velocity),
            "acceleration": list(self.acceleration),
            "angular_rate": self.angular_rate,
            "cycles": list(self.cycles),
            "cell": self.cell,
            "stripe_freq": self.stripe_freq,
            "dot_sigma": self.dot_sigma,
            "amplitude": self.amplitude,
            "seed": self.seed,
        }


def _channel_rng(spec: SynthSpec) -> np.random.Generator:
    return np.random.default_rng(spec.seed)


def pattern_value(spec: SynthSpec, x, y, t) -> np.ndarray:
    """Evaluate the scene at broadcastable coordinates; returns (..., 3) in [0,1]."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    rng = _channel_rng(spec)
    _, h, w = spec.dims
    vx, vy = spec.velocity
    if spec.pattern == "translating-sinusoid":
        phases = rng.uniform(0.0, 2.0 * math.pi, 3)
        cx, cy = spec.cycles
        arg = 2.0 * math.pi * (cx * (x - vx * t) / w + cy * (y - vy * t) / h)
        out = 0.5 + spec.amplitude * np.sin(arg[..., None] + phases)
    elif spec.pattern == "translating-checkerboard":
        high = rng.uniform(0.7, 0.95, 3)
        low = rng.uniform(0.05, 0.3, 3)
        parity = (
            np.floor((x - vx * t) / spec.cell) + np.floor((y - vy * t) / spec.cell)
        ) % 2.0
        out = low + (high - low) * (parity == 0.0)[..., None]
    elif spec.pattern == "rotating-bars":
        phases = rng.uniform(0.0, 2.0 * math.pi, 3)
        theta = spec.angular_rate * t
        u = (x - (w - 1) / 2.0) * np.cos(theta) + (y - (h - 1) / 2.0) * np.sin(theta)
        arg = 2.0 * math.pi * spec.stripe_freq * u
        out = 0.5 + spec.amplitude * np.sin(arg[..., None] + phases)
    else:  # accelerating-dot
        peaks = rng.uniform(0.7, 1.0, 3)
        bg = 0.1
        ax, ay = spec.acceleration
        px = (w - 1) / 4.0 + vx * t + 0.5 * ax * t * t
        py = (h - 1) / 4.0 + vy * t + 0.5 * ay * t * t
        d2 = (x - px) ** 2 + (y - py) ** 2
        out = bg + (peaks - bg) * np.exp(-d2 / (2.0 * spec.dot_sigma**2))[..., None]
    return np.clip(out, 0.0, 1.0)


def rasterize(spec: SynthSpec) -> VideoBuffer:
    """Sample the scene at integer pixel-frame coordinates."""
    t, h, w = spec.dims
    tt, yy, xx = np.meshgrid(np.arange(t), np.arange(h), np.arange(w), indexing="ij")
    return VideoBuffer(pattern_value(spec, xx, yy, tt))


def reference_at_output(spec: SynthSpec, s: float, r: int) -> VideoBuffer:
    """Ground truth on the raster a degrade-then-upsample round trip produces.

    Degrading by (s, r) and sampling back with the same factors puts output
    pixel (i, k) exactly on source pixel (i, k) and output frame tau at
    source time tau + 0.5 - r/2; the scene is rendered there in closed form.
    """

    t, h, w = spec.dims
    r = int(r)
    lr_dims = (
        len(range(0, t, r)),
        round_half_up(h / s),
        round_half_up(w / s),
    )
    out_spec = SampleSpec(s, r, lr_dims)
    to, ho, wo = out_spec.output_dims
    times = out_spec.t_coords() * r
    tt, yy, xx = np.meshgrid(times, np.arange(ho), np.arange(wo), indexing="ij")
    return VideoBuffer(pattern_value(spec, xx, yy, tt))
