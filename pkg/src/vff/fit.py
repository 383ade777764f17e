"""Coefficient estimation by windowed ridge least squares, plus bank setup.

Every voxel is fit from a window of surrounding samples against the shared
basis. The normal matrix depends only on the window geometry, weights and
regularizer, never on pixel values, so one factorization serves the whole
grid and fitting reduces to a matrix product per chunk of voxels.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .core import FieldGrid, FrequencyBank, LocalField, PsfSpec
from .errors import ConfigError, DomainError, RankDeficiencyError, StructureError
from .sampling import SampleSpec, round_half_up, sample_grid
from .video import VideoBuffer

#: Voxels per matrix-product block in fit_video. Fixed (not tied to worker
#: count) so results are bitwise independent of parallelism.
CHUNK_VOXELS = 2048

_BORDER_PAD_MODE = {"clamp": "edge", "reflect": "reflect"}


@dataclass(frozen=True)
class FitConfig:
    """Windowed ridge solver settings.

    window is (w_t, w_y, w_x) odd extents in input samples. ridge_lambda
    penalizes every coefficient except the DC cosine term. Window samples are
    weighted by exp(-|u|^2 / (2 sigma^2)) with sigma = sample_weight_sigma;
    an infinite (or None) sigma means uniform weights. border_mode controls
    how windows read past the video edge.
    """

    window: tuple[int, int, int] = (5, 9, 9)
    ridge_lambda: float = 1e-3
    sample_weight_sigma: float | None = 3.0
    border_mode: str = "clamp"

    def __post_init__(self):
        win = tuple(int(v) for v in self.window)
        if len(win) != 3 or any(v < 1 or v % 2 == 0 for v in win):
            raise ConfigError(f"window extents must be odd and >= 1, got {self.window}")
        object.__setattr__(self, "window", win)
        lam = float(self.ridge_lambda)
        if not (math.isfinite(lam) and lam >= 0.0):
            raise ConfigError(f"ridge_lambda must be >= 0, got {self.ridge_lambda}")
        object.__setattr__(self, "ridge_lambda", lam)
        sig = self.sample_weight_sigma
        sig = math.inf if sig is None else float(sig)
        if math.isnan(sig) or sig <= 0.0:
            raise ConfigError(f"sample_weight_sigma must be positive, got {sig}")
        object.__setattr__(self, "sample_weight_sigma", sig)
        if self.border_mode not in _BORDER_PAD_MODE:
            raise ConfigError(f"border_mode must be clamp or reflect, got {self.border_mode!r}")


@dataclass(frozen=True)
class BankInitConfig:
    n_basis: int = 512
    omega_max: float = math.pi * 4.0
    strategy: str = "stratified-random"
    seed: int = 0

    def __post_init__(self):
        if int(self.n_basis) < 2:
            raise ConfigError(f"n_basis must be >= 2, got {self.n_basis}")
        object.__setattr__(self, "n_basis", int(self.n_basis))
        wm = float(self.omega_max)
        if not (math.isfinite(wm) and wm > 0.0):
            raise ConfigError(f"omega_max must be positive, got {self.omega_max}")
        object.__setattr__(self, "omega_max", wm)
        if self.strategy not in ("stratified-random", "axis-grid"):
            raise ConfigError(f"unknown bank strategy {self.strategy!r}")


@dataclass(frozen=True)
class RefineConfig:
    """Optional frequency refinement; iterations = 0 disables it.

    corpus holds clip paths for the command layer; refine_bank itself takes
    loaded buffers.
    """

    iterations: int = 0
    step: float = 0.1
    corpus: tuple[str, ...] = ()
    holdout_fraction: float = 0.25

    def __post_init__(self):
        if int(self.iterations) < 0:
            raise ConfigError(f"iterations must be >= 0, got {self.iterations}")
        object.__setattr__(self, "iterations", int(self.iterations))
        if not (float(self.step) > 0.0 and math.isfinite(float(self.step))):
            raise ConfigError(f"step must be positive, got {self.step}")
        object.__setattr__(self, "step", float(self.step))
        object.__setattr__(self, "corpus", tuple(str(p) for p in self.corpus))
        frac = float(self.holdout_fraction)
        if not (0.0 < frac < 1.0):
            raise ConfigError(f"holdout_fraction must be in (0, 1), got {frac}")
        object.__setattr__(self, "holdout_fraction", frac)


def canonicalize_sign(omegas: np.ndarray) -> np.ndarray:
    """Flip each triple so its first nonzero component is positive.

    sin(-w . u) = -sin(w . u), so a triple and its negation span the same
    coefficient space; keeping one representative removes the redundancy.
    """

    out = np.array(omegas, dtype=np.float64)
    for axis in range(3):
        decided = out[:, :axis].any(axis=1)
        flip = ~decided & (out[:, axis] < 0)
        out[flip] *= -1.0
    return out


def _stratified_bank(n: int, omega_max: float, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    width = 2.0 * omega_max / n
    cols = []
    for _ in range(3):
        strata = rng.permutation(n)
        cols.append(-omega_max + (strata + rng.random(n)) * width)
    return np.stack(cols, axis=1)


def _axis_grid_bank(n: int, omega_max: float) -> np.ndarray:
    m = 2
    while True:
        # integer offsets scaled afterwards, so mirrored entries negate exactly
        # and sign canonicalization cannot manufacture near-duplicate rows
        vals = (np.arange(m) - (m - 1) / 2.0) * (2.0 * omega_max / (m - 1))
        lattice = np.stack(np.meshgrid(vals, vals, vals, indexing="ij"), axis=-1)
        cand = canonicalize_sign(lattice.reshape(-1, 3))
        cand = cand[cand.any(axis=1)]
        cand = np.unique(cand, axis=0)
        if cand.shape[0] >= n:
            break
        m += 1
    order = np.lexsort((cand[:, 2], cand[:, 1], cand[:, 0], (cand**2).sum(axis=1)))
    return cand[order[:n]]


def init_bank(cfg: BankInitConfig) -> FrequencyBank:
    """Deterministic bank: DC at entry 0 plus N-1 frequencies in the box.

    stratified-random draws a Latin-hypercube sample of [-omega_max,
    omega_max]^3 (each axis independently stratified), then canonicalizes
    signs. axis-grid takes the lowest-magnitude entries of the smallest
    symmetric lattice with enough distinct canonical triples; it ignores the
    seed.
    """

    n_osc = cfg.n_basis - 1
    if cfg.strategy == "stratified-random":
        osc = canonicalize_sign(_stratified_bank(n_osc, cfg.omega_max, cfg.seed))
    else:
        osc = _axis_grid_bank(n_osc, cfg.omega_max)
    omegas = np.vstack([np.zeros((1, 3)), osc])
    return FrequencyBank(omegas, dc_index=0)


def window_offsets(window: tuple[int, int, int]) -> np.ndarray:
    """Window sample offsets as (P, 3) triples in (x, y, t) order.

    Enumeration is C-order over (dt, dy, dx), matching how a flattened
    (w_t, w_y, w_x) window block lays out in memory.
    """

    wt, wy, wx = window
    ts = np.arange(wt) - wt // 2
    ys = np.arange(wy) - wy // 2
    xs = np.arange(wx) - wx // 2
    grid = np.stack(np.meshgrid(ts, ys, xs, indexing="ij"), axis=-1).reshape(-1, 3)
    return grid[:, ::-1].astype(np.float64)


def design_matrix(bank: FrequencyBank, offsets) -> np.ndarray:
    """Rows [sin(w_1.u) ... sin(w_N.u) | cos(w_1.u) ... cos(w_N.u)] per offset."""
    offs = np.asarray(offsets, dtype=np.float64)
    if offs.ndim != 2 or offs.shape[1] != 3:
        raise StructureError(f"offsets must have shape (P, 3), got {offs.shape}")
    if not np.all(np.isfinite(offs)):
        raise DomainError("offsets must be finite")
    theta = offs @ bank.omegas.T
    return np.concatenate([np.sin(theta), np.cos(theta)], axis=1)


def _sample_weights(offsets: np.ndarray, sigma: float) -> np.ndarray:
    if math.isinf(sigma):
        return np.ones(offsets.shape[0])
    return np.exp(-(offsets**2).sum(axis=1) / (2.0 * sigma**2))


def _solve_operator(bank: FrequencyBank, cfg: FitConfig) -> np.ndarray:
    """Map window values to coefficients: the (2N, P) matrix S with z = S v.

    lambda > 0: S = (M^T W M + lambda P)^{-1} M^T W with P the penalty that
    exempts the DC cosine term; the system is positive definite because the
    only unpenalized direction has a nonzero (all-ones) design column.
    lambda = 0: weighted SVD pseudoinverse with the structurally-zero DC sine
    column removed; any further rank loss is an error.
    """

    offsets = window_offsets(cfg.window)
    m = design_matrix(bank, offsets)
    w = _sample_weights(offsets, cfg.sample_weight_sigma)
    n = bank.n_basis
    lam = cfg.ridge_lambda
    if lam > 0.0:
        mw_t = (m * w[:, None]).T
        a = mw_t @ m
        penalty = np.ones(2 * n)
        penalty[n + bank.dc_index] = 0.0
        a[np.diag_indices_from(a)] += lam * penalty
        return np.linalg.solve(a, mw_t)
    sw = np.sqrt(w)
    keep = np.ones(2 * n, dtype=bool)
    keep[bank.dc_index] = False
    ms = m[:, keep] * sw[:, None]
    u, s, vt = np.linalg.svd(ms, full_matrices=False)
    tol = s[0] * max(ms.shape) * np.finfo(np.float64).eps if s.size else 0.0
    rank = int(np.count_nonzero(s > tol))
    if rank < 2 * n - 1:
        raise RankDeficiencyError(
            f"window design matrix has rank {rank} < {2 * n - 1}; "
            f"enlarge the window or use ridge_lambda > 0"
        )
    s_op = (vt.T / s) @ u.T * sw[None, :]
    full = np.zeros((2 * n, offsets.shape[0]))
    full[keep] = s_op
    return full


def _padded(video: VideoBuffer, cfg: FitConfig) -> np.ndarray:
    wt, wy, wx = cfg.window
    pt, py, px = wt // 2, wy // 2, wx // 2
    mode = _BORDER_PAD_MODE[cfg.border_mode]
    t, h, w = video.dims
    if mode == "reflect" and (pt > t - 1 or py > h - 1 or px > w - 1):
        raise ConfigError(
            f"reflect border needs window half-extents within dims-1; "
            f"window {cfg.window} does not fit video dims {video.dims}"
        )
    return np.pad(video.data, ((pt, pt), (py, py), (px, px), (0, 0)), mode=mode)


def fit_voxel(video: VideoBuffer, center, bank: FrequencyBank, cfg: FitConfig) -> LocalField:
    """Ridge fit of one voxel from its window; center is (jx, jy, jt)."""
    jx, jy, jt = (int(v) for v in center)
    t, h, w = video.dims
    if not (0 <= jx < w and 0 <= jy < h and 0 <= jt < t):
        raise DomainError(f"center {center} outside video dims {video.dims}")
    try:
        s_op = _solve_operator(bank, cfg)
    except RankDeficiencyError as exc:
        raise RankDeficiencyError(str(exc), voxel=(jx, jy, jt)) from None
    wt, wy, wx = cfg.window
    padded = _padded(video, cfg)
    win = padded[jt : jt + wt, jy : jy + wy, jx : jx + wx]  # (wt, wy, wx, C)
    v = win.reshape(-1, win.shape[3])
    z = s_op @ v  # (2N, C)
    n = bank.n_basis
    return LocalField(np.stack([z[:n].T, z[n:].T], axis=-1))


def fit_video(
    video: VideoBuffer, bank: FrequencyBank, cfg: FitConfig, *, workers: int = 1
) -> FieldGrid:
    """Fit every voxel against the shared factorization; dims match the video.

    The padded video is viewed through sliding windows, gathered in fixed
    chunks and pushed through one coefficient-solve matrix product per chunk.
    Workers process disjoint chunks; chunking is independent of the worker
    count, so the output grid is bitwise identical for any parallelism.
    """

    if workers < 1:
        raise ConfigError(f"workers must be >= 1, got {workers}")
    s_op = _solve_operator(bank, cfg)
    t, h, w = video.dims
    channels = video.data.shape[3]
    n = bank.n_basis
    padded = _padded(video, cfg)
    windows = sliding_window_view(padded, cfg.window, axis=(0, 1, 2))
    # (T, H, W, C, wt, wy, wx); flatten voxel index lexicographically
    n_vox = t * h * w
    out = np.empty((n_vox, channels, n, 2))

    def run(lo: int, hi: int):
        idx = np.unravel_index(np.arange(lo, hi), (t, h, w))
        win = windows[idx]  # (m, C, wt, wy, wx)
        v = win.reshape(hi - lo, channels, -1).reshape((hi - lo) * channels, -1)
        z = s_op @ v.T  # (2N, m*C)
        zt = z.T.reshape(hi - lo, channels, 2 * n)
        out[lo:hi, :, :, 0] = zt[..., :n]
        out[lo:hi, :, :, 1] = zt[..., n:]

    spans = [(lo, min(lo + CHUNK_VOXELS, n_vox)) for lo in range(0, n_vox, CHUNK_VOXELS)]
    if workers == 1 or len(spans) == 1:
        for lo, hi in spans:
            run(lo, hi)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for f in [pool.submit(run, lo, hi) for lo, hi in spans]:
                f.result()
    return FieldGrid(bank, out.reshape(t, h, w, channels, n, 2))


def _corpus_mse(bank: FrequencyBank, clips, fit_cfg: FitConfig) -> float:
    err = 0.0
    for clip in clips:
        grid = fit_video(clip, bank, fit_cfg)
        recon = sample_grid(grid, SampleSpec.identity(clip.dims), PsfSpec.point())
        err += float(np.mean((recon.data - clip.data) ** 2))
    return err / len(clips)


def refine_bank(
    corpus, bank: FrequencyBank, fit_cfg: FitConfig, refine_cfg: RefineConfig
) -> FrequencyBank:
    """Finite-difference descent of the oscillatory frequencies.

    The objective is mean squared fit-then-identity-sample reconstruction
    error. The corpus splits deterministically into a leading train part and
    trailing holdout part (a single-clip corpus serves as both). Steps that
    fail to reduce train error trigger step halving, then termination; the
    returned bank is the holdout-best among all iterates including the
    initial one, so holdout error never increases. The DC entry stays frozen.
    """

    clips = list(corpus)
    if not clips:
        raise ConfigError("refine_bank needs a nonempty corpus")
    if refine_cfg.iterations < 1:
        raise ConfigError("refine_bank needs iterations >= 1")
    n_clips = len(clips)
    if n_clips == 1:
        train, hold = clips, clips
    else:
        k = min(n_clips - 1, max(1, round_half_up(refine_cfg.holdout_fraction * n_clips)))
        train, hold = clips[: n_clips - k], clips[n_clips - k :]

    def objective(omegas: np.ndarray, subset) -> tuple[float, FrequencyBank | None]:
        try:
            cand = FrequencyBank(omegas, dc_index=bank.dc_index)
        except StructureError:
            return math.inf, None
        return _corpus_mse(cand, subset, fit_cfg), cand

    cur = np.array(bank.omegas)
    cur_train, _ = objective(cur, train)
    best_hold, _ = objective(cur, hold)
    best = bank
    fd_step = 1e-3
    osc = [i for i in range(bank.n_basis) if i != bank.dc_index]
    for _ in range(refine_cfg.iterations):
        grad = np.zeros_like(cur)
        for i in osc:
            for axis in range(3):
                probe = cur.copy()
                probe[i, axis] += fd_step
                hi_err, _ = objective(probe, train)
                probe[i, axis] -= 2.0 * fd_step
                lo_err, _ = objective(probe, train)
                grad[i, axis] = (hi_err - lo_err) / (2.0 * fd_step)
        norm = float(np.linalg.norm(grad))
        if norm == 0.0 or not math.isfinite(norm):
            break
        direction = grad / norm
        accepted = None
        for scale in (1.0, 0.5, 0.25, 0.125):
            cand = cur - refine_cfg.step * scale * direction
            cand[bank.dc_index] = 0.0
            cand_train, cand_bank = objective(cand, train)
            if cand_bank is not None and cand_train < cur_train:
                accepted = (cand, cand_train, cand_bank)
                break
        if accepted is None:
            break
        cur, cur_train, cur_bank = accepted
        cand_hold, _ = objective(cur, hold)
        if cand_hold < best_hold:
            best_hold, best = cand_hold, cur_bank
    return best
