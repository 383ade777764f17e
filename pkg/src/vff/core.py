"""Field representation and exact evaluation.

A clip is modeled as a grid of voxels, one per input pixel-frame, each holding
a truncated sinusoidal expansion

    V(u) = sum_i  c_i * sin(omega_i . u) + d_i * cos(omega_i . u)

in local coordinates u relative to the voxel center. All voxels share one
frequency bank; only the (c, d) coefficients vary per voxel and channel.

Conventions used throughout the package:

* Continuous coordinates and frequency triples are ordered (x, y, t).
* Array storage is ordered (t, y, x): a grid's coefficient tensor has shape
  (T, H, W, C, N, 2) and a video (T, H, W, C).
* Voxel centers sit at integer coordinates; the grid's closed domain is
  [-0.5, W-0.5] x [-0.5, H-0.5] x [-0.5, T-0.5].
* Local offsets live in [-0.5, 0.5) except at the upper domain boundary,
  where +0.5 is reachable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainError, StructureError

TWO_PI = 2.0 * math.pi

#: Grid spacing is one input sample along every axis by construction.
PITCH = (1.0, 1.0, 1.0)


def wrap_phase(phi):
    """Wrap phases to the canonical interval [-pi, pi)."""
    phi = np.asarray(phi, dtype=np.float64)
    out = phi - TWO_PI * np.floor((phi + math.pi) / TWO_PI)
    # floor rounding can land exactly on +pi; fold it to the open end
    out = np.where(out >= math.pi, out - TWO_PI, out)
    return out if out.ndim else float(out)


@dataclass
class FrequencyBank:
    """Shared set of N frequency triples, with one reserved DC entry.

    omegas has shape (N, 3) in (omega_x, omega_y, omega_t) order, rad per
    input sample. The entry at dc_index is exactly (0, 0, 0) and no other
    entry may be the zero triple. The array is frozen after validation;
    reads are safe to share across threads.
    """

    omegas: np.ndarray
    dc_index: int = 0

    def __post_init__(self):
        om = np.array(self.omegas, dtype=np.float64)
        if om.ndim != 2 or om.shape[1] != 3 or om.shape[0] < 1:
            raise StructureError(f"bank must have shape (N, 3), got {om.shape}")
        if not np.all(np.isfinite(om)):
            raise StructureError("bank contains non-finite frequencies")
        n = om.shape[0]
        if not (0 <= self.dc_index < n):
            raise StructureError(f"dc_index {self.dc_index} out of range for N={n}")
        zero_rows = np.flatnonzero(~om.any(axis=1))
        if self.dc_index not in zero_rows:
            raise StructureError("entry at dc_index must be the zero triple")
        if zero_rows.size != 1:
            raise StructureError("only the DC entry may be the zero triple")
        om.flags.writeable = False
        self.omegas = om

    @property
    def n_basis(self) -> int:
        return self.omegas.shape[0]


@dataclass
class PsfSpec:
    """Per-axis Gaussian sampling-kernel bandwidths.

    Each sigma lives in (0, inf], where inf is the point-sampling sentinel
    (no attenuation on that axis). Smaller sigma means a wider equivalent
    spatial kernel and therefore stronger attenuation; the equivalent
    Gaussian kernel on an axis has standard deviation 1 / (2*pi*sigma).
    """

    sigma_x: float = math.inf
    sigma_y: float = math.inf
    sigma_t: float = math.inf

    def __post_init__(self):
        for name in ("sigma_x", "sigma_y", "sigma_t"):
            v = float(getattr(self, name))
            if math.isnan(v) or v <= 0.0:
                raise ConfigError(f"{name} must be in (0, inf], got {v}")
            setattr(self, name, v)

    @classmethod
    def point(cls) -> "PsfSpec":
        return cls(math.inf, math.inf, math.inf)

    @property
    def sigmas(self) -> tuple[float, float, float]:
        return (self.sigma_x, self.sigma_y, self.sigma_t)

    @property
    def is_point(self) -> bool:
        return all(math.isinf(s) for s in self.sigmas)


def psf_attenuation(omega, psf: PsfSpec):
    """Closed-form attenuation of a sinusoid under Gaussian sampling.

    xi(omega, sigma) = exp(-sum_d omega_d^2 / (8 pi^2 sigma_d^2)), with
    sentinel (infinite) sigmas contributing nothing on their axis. Returns a
    factor in (0, 1]; 1 exactly when every non-sentinel axis has omega_d = 0.
    Accepts a single (3,) triple or any (..., 3) stack of triples.
    """

    om = np.asarray(omega, dtype=np.float64)
    if om.shape[-1:] != (3,):
        raise StructureError(f"omega must have trailing dimension 3, got {om.shape}")
    expo = np.zeros(om.shape[:-1], dtype=np.float64)
    for axis, sigma in enumerate(psf.sigmas):
        if math.isinf(sigma):
            continue
        expo += om[..., axis] ** 2 / (8.0 * math.pi**2 * sigma**2)
    out = np.exp(-expo)
    return out if out.ndim else float(out)


@dataclass
class LocalField:
    """One voxel's expansion: coeffs of shape (C, N, 2) in (c, d) order."""

    coeffs: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.coeffs, dtype=np.float64)
        if arr.ndim != 3 or arr.shape[2] != 2:
            raise StructureError(f"coeffs must have shape (C, N, 2), got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise StructureError("coefficients contain non-finite values")
        self.coeffs = arr

    @property
    def channels(self) -> int:
        return self.coeffs.shape[0]

    @property
    def n_basis(self) -> int:
        return self.coeffs.shape[1]


def coeff_to_amp_phase(coeffs):
    """Convert (c, d) pairs to (amplitude, phase).

    c*sin(theta) + d*cos(theta) = a*sin(theta + phi) with a = hypot(c, d) and
    phi = atan2(d, c) wrapped to [-pi, pi). Zero pairs map to (0, 0).
    """

    arr = np.asarray(coeffs, dtype=np.float64)
    if arr.shape[-1:] != (2,):
        raise StructureError(f"expected trailing (c, d) axis of size 2, got {arr.shape}")
    c, d = arr[..., 0], arr[..., 1]
    amp = np.hypot(c, d)
    phase = np.arctan2(d, c)
    phase = np.where(phase >= math.pi, phase - TWO_PI, phase)
    phase = np.where(amp == 0.0, 0.0, phase)
    return amp, phase


def amp_phase_to_coeff(amp, phase):
    """Inverse of :func:`coeff_to_amp_phase`; stacks (c, d) on a new last axis."""
    amp = np.asarray(amp, dtype=np.float64)
    phase = np.asarray(phase, dtype=np.float64)
    return np.stack([amp * np.cos(phase), amp * np.sin(phase)], axis=-1)


def _eval_coeffs(coeffs, omegas, xi, u):
    """Evaluate one voxel's expansion at offset u. coeffs: (..., N, 2)."""
    theta = omegas @ np.asarray(u, dtype=np.float64)
    ks = xi * np.sin(theta)
    kc = xi * np.cos(theta)
    return coeffs[..., 0] @ ks + coeffs[..., 1] @ kc


def eval_local(field: LocalField, bank: FrequencyBank, u, psf: PsfSpec):
    """PSF-attenuated evaluation of a voxel field at local offset u.

    Accumulates basis terms in bank order in double precision. With an
    all-sentinel psf every factor is exactly 1.0, so the result is bitwise
    identical to the plain unattenuated sum.
    """

    if field.n_basis != bank.n_basis:
        raise StructureError(
            f"field has {field.n_basis} basis entries, bank has {bank.n_basis}"
        )
    u = np.asarray(u, dtype=np.float64)
    if u.shape != (3,):
        raise StructureError(f"offset must be a triple, got shape {u.shape}")
    if not np.all(np.isfinite(u)):
        raise DomainError("offset must be finite")
    xi = psf_attenuation(bank.omegas, psf)
    return _eval_coeffs(field.coeffs, bank.omegas, xi, u)


@dataclass
class FieldGrid:
    """Dense voxel grid sharing one bank.

    coeffs has shape (T, H, W, C, N, 2) float64. Voxel (jt, jy, jx) sits at
    continuous coordinates (x=jx, y=jy, t=jt); the grid pitch is one input
    sample per axis. The tensor is frozen after validation.
    """

    bank: FrequencyBank
    coeffs: np.ndarray
    pitch: tuple[float, float, float] = field(default=PITCH, init=False)

    def __post_init__(self):
        arr = np.asarray(self.coeffs)
        if arr.dtype != np.float64:
            arr = arr.astype(np.float64)
        if arr.ndim != 6 or arr.shape[5] != 2:
            raise StructureError(
                f"grid coeffs must have shape (T, H, W, C, N, 2), got {arr.shape}"
            )
        if arr.size == 0:
            raise StructureError(f"grid must be nonempty, got shape {arr.shape}")
        if arr.shape[4] != self.bank.n_basis:
            raise StructureError(
                f"grid N={arr.shape[4]} does not match bank N={self.bank.n_basis}"
            )
        if not np.all(np.isfinite(arr)):
            raise StructureError("grid coefficients contain non-finite values")
        if not arr.flags.c_contiguous:
            arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        self.coeffs = arr

    @classmethod
    def zeros(cls, dims, bank: FrequencyBank, channels: int = 3) -> "FieldGrid":
        t, h, w = dims
        return cls(bank, np.zeros((t, h, w, channels, bank.n_basis, 2)))

    @property
    def dims(self) -> tuple[int, int, int]:
        """(T, H, W)."""
        return self.coeffs.shape[:3]

    @property
    def channels(self) -> int:
        return self.coeffs.shape[3]

    def local_field(self, j) -> LocalField:
        """Voxel expansion at index j = (jx, jy, jt)."""
        jx, jy, jt = (int(v) for v in j)
        t, h, w = self.dims
        if not (0 <= jx < w and 0 <= jy < h and 0 <= jt < t):
            raise DomainError(f"voxel index {j} outside grid dims {self.dims}")
        return LocalField(np.array(self.coeffs[jt, jy, jx]))


def _domain_check(dims, p):
    t, h, w = dims
    x, y, tt = p
    if not (math.isfinite(x) and math.isfinite(y) and math.isfinite(tt)):
        raise DomainError(f"coordinate {tuple(p)} is not finite")
    if not (-0.5 <= x <= w - 0.5 and -0.5 <= y <= h - 0.5 and -0.5 <= tt <= t - 0.5):
        raise DomainError(
            f"coordinate {tuple(p)} outside domain "
            f"[-0.5, {w - 0.5}] x [-0.5, {h - 0.5}] x [-0.5, {t - 0.5}]"
        )


def _locate_clamped(values, n):
    """Round-half-up voxel indices along one axis, clamped to [0, n-1]."""
    v = np.asarray(values, dtype=np.float64)
    j = np.clip(np.floor(v + 0.5).astype(np.int64), 0, n - 1)
    return j, v - j


def locate(grid: FieldGrid, p):
    """Map a continuous coordinate to (voxel index, local offset).

    p is (x, y, t). Returns j = (jx, jy, jt) ints and u = p - j as a float
    triple, with u in [-0.5, 0.5) away from the upper domain edge (where +0.5
    occurs). Raises DomainError outside the closed grid domain.
    """

    p = np.asarray(p, dtype=np.float64)
    if p.shape != (3,):
        raise StructureError(f"coordinate must be a triple, got shape {p.shape}")
    t, h, w = grid.dims
    _domain_check(grid.dims, p)
    jx, ux = _locate_clamped(p[0], w)
    jy, uy = _locate_clamped(p[1], h)
    jt, ut = _locate_clamped(p[2], t)
    return (int(jx), int(jy), int(jt)), np.array([ux, uy, ut])


def _axis_blend(j, u, n, margin):
    """Cross-fade candidates along one axis.

    Returns [(index, offset, weight), ...] with weights summing to 1. Within
    `margin` of a voxel boundary the evaluation blends linearly with the
    neighbor across that boundary; at the domain edge there is no neighbor
    and the home voxel keeps full weight.
    """

    if margin <= 0.0 or abs(u) <= 0.5 - margin:
        return [(j, u, 1.0)]
    side = 1 if u > 0 else -1
    jn = j + side
    if jn < 0 or jn >= n:
        return [(j, u, 1.0)]
    alpha = (abs(u) - (0.5 - margin)) / (2.0 * margin)
    return [(j, u, 1.0 - alpha), (jn, u - side, alpha)]


def eval_grid_point(grid: FieldGrid, p, psf: PsfSpec, crossfade_margin: float = 0.0):
    """Evaluate the grid at a continuous coordinate p = (x, y, t).

    Looks up the containing voxel and evaluates its expansion at the local
    offset. With crossfade_margin > 0, points within that distance of a voxel
    boundary blend linearly with the neighboring voxel per axis (up to eight
    voxels at a corner), which makes the field continuous across boundaries.
    """

    if not (0.0 <= crossfade_margin < 0.5):
        raise ConfigError(f"crossfade_margin must be in [0, 0.5), got {crossfade_margin}")
    j, u = locate(grid, p)
    xi = psf_attenuation(grid.bank.omegas, psf)
    if crossfade_margin == 0.0:
        jx, jy, jt = j
        return _eval_coeffs(grid.coeffs[jt, jy, jx], grid.bank.omegas, xi, u)
    t, h, w = grid.dims
    out = np.zeros(grid.channels)
    for jx, ux, wx in _axis_blend(j[0], u[0], w, crossfade_margin):
        for jy, uy, wy in _axis_blend(j[1], u[1], h, crossfade_margin):
            for jt, ut, wt in _axis_blend(j[2], u[2], t, crossfade_margin):
                weight = wx * wy * wt
                if weight == 0.0:
                    continue
                out += weight * _eval_coeffs(
                    grid.coeffs[jt, jy, jx], grid.bank.omegas, xi, (ux, uy, ut)
                )
    return out


def _rotate_coeffs(coeffs, alpha):
    """Rotate (c, d) pairs by -alpha per basis entry (phase shift by -alpha).

    alpha broadcasts over the basis axis: coeffs (..., N, 2), alpha (N,).
    """

    ca, sa = np.cos(alpha), np.sin(alpha)
    c, d = coeffs[..., 0], coeffs[..., 1]
    return np.stack([c * ca + d * sa, d * ca - c * sa], axis=-1)


def phase_shift(field: LocalField, bank: FrequencyBank, delta) -> LocalField:
    """Re-center a voxel field: the result evaluated at u equals the input at u - delta.

    Implemented as a rotation of each (c_i, d_i) pair by -omega_i . delta,
    i.e. phases move by phi -> phi - omega_i . delta. The DC entry is
    unchanged. Exact up to floating point; no resampling is involved.
    """

    if field.n_basis != bank.n_basis:
        raise StructureError(
            f"field has {field.n_basis} basis entries, bank has {bank.n_basis}"
        )
    delta = np.asarray(delta, dtype=np.float64)
    if delta.shape != (3,):
        raise StructureError(f"delta must be a triple, got shape {delta.shape}")
    if not np.all(np.isfinite(delta)):
        raise DomainError("delta must be finite")
    alpha = bank.omegas @ delta
    return LocalField(_rotate_coeffs(field.coeffs, alpha))


def translate_grid(grid: FieldGrid, delta) -> FieldGrid:
    """Translate the whole grid by a continuous displacement delta = (dx, dy, dt).

    delta splits into an integer part n (round-half-up) and a fractional part
    f in [-0.5, 0.5)^3. Voxel contents are remapped by n (vacated border
    voxels copy the nearest surviving voxel) and every voxel's coefficients
    are phase-rotated by f. For points farther than |f| from any voxel
    boundary, eval(translated, p) = eval(original, p - delta); closer to a
    boundary the two sides may disagree because voxel expansions are
    independent.
    """

    delta = np.asarray(delta, dtype=np.float64)
    if delta.shape != (3,):
        raise StructureError(f"delta must be a triple, got shape {delta.shape}")
    if not np.all(np.isfinite(delta)):
        raise DomainError("delta must be finite")
    n = np.floor(delta + 0.5).astype(np.int64)
    f = delta - n
    alpha = grid.bank.omegas @ f
    rotated = _rotate_coeffs(grid.coeffs, alpha)
    t, h, w = grid.dims
    # source index per axis, clamped so vacated voxels copy the nearest survivor
    src_t = np.clip(np.arange(t) - n[2], 0, t - 1)
    src_y = np.clip(np.arange(h) - n[1], 0, h - 1)
    src_x = np.clip(np.arange(w) - n[0], 0, w - 1)
    remapped = rotated[np.ix_(src_t, src_y, src_x)]
    return FieldGrid(grid.bank, remapped)
