"""Reference implementations and shared builders for the test suite.

Everything here is deliberately written the slow, obvious way (scalar
loops, dense quadrature, direct formula transcription) so that none of it
shares a code path with the package under test.
"""

import math

import numpy as np

from vff.core import FieldGrid, FrequencyBank


def make_bank(n, seed, omega_max=math.pi):
    """Random bank built directly, without going through vff.fit."""
    rng = np.random.default_rng(seed)
    om = rng.uniform(-omega_max, omega_max, size=(n, 3))
    om[0] = 0.0
    # keep rows away from zero so no accidental second DC appears
    small = np.all(np.abs(om[1:]) < 1e-3, axis=1)
    om[1:][small] = omega_max / 2.0
    return FrequencyBank(om, dc_index=0)


def random_base(bank, channels, seed, scale=0.2):
    """Random (C, N, 2) coefficients with the unobservable DC sine zeroed."""
    rng = np.random.default_rng(seed)
    base = scale * rng.normal(size=(channels, bank.n_basis, 2))
    base[:, bank.dc_index, 0] = 0.0
    return base


def coherent_grid(bank, dims, base):
    """Grid whose voxels all describe one global expansion.

    Voxel j holds the base field re-centered at j, so that evaluating any
    voxel at offset u returns the base field at j + u. Windowed refits of
    a rendering of this grid see data consistent with a single local model,
    which is what makes exact recovery possible.
    """
    t, h, w = dims
    jt, jy, jx = np.indices((t, h, w))
    pos = np.stack([jx, jy, jt], axis=-1).astype(np.float64)
    alpha = -(pos @ bank.omegas.T)
    ca = np.cos(alpha)[..., None, :]
    sa = np.sin(alpha)[..., None, :]
    c, d = base[..., 0], base[..., 1]
    coeffs = np.stack([c * ca + d * sa, d * ca - c * sa], axis=-1)
    return FieldGrid(bank, np.ascontiguousarray(coeffs))


def symmetric_cosine_field(dims, modes, channels, seed, amp=0.35, mean=0.5):
    """Random field that is even about every grid edge.

    Sum of products cos(kx*pi*x/(W-1)) * cos(ky*pi*y/(H-1)) *
    cos(kt*pi*t/(T-1)) with random per-channel amplitudes. Reflect padding
    of a rendering continues this field exactly, so windowed refits recover
    it at border voxels too, not just in the interior. Mode indices stay
    at or below n-2 per axis so no frequency component reaches pi, where
    the sine design column would vanish.

    Returns (bank, base) for use with coherent_grid.
    """
    t, h, w = dims
    mx, my, mt = modes
    ax, ay, at = math.pi / (w - 1), math.pi / (h - 1), math.pi / (t - 1)
    mx, my, mt = min(mx, w - 2), min(my, h - 2), min(mt, t - 2)
    rng = np.random.default_rng(seed)
    combos = [(kx, ky, kt)
              for kx in range(mx + 1)
              for ky in range(my + 1)
              for kt in range(mt + 1)]
    weights = {}
    for kx, ky, kt in combos:
        if (kx, ky, kt) == (0, 0, 0):
            a_k = np.full(channels, mean)
        else:
            a_k = amp / len(combos) * rng.uniform(-1.0, 1.0, channels)
        for s2 in (1.0, -1.0):
            for s3 in (1.0, -1.0):
                tri = np.array([kx * ax, s2 * ky * ay, s3 * kt * at])
                nz = np.flatnonzero(tri)
                if nz.size and tri[nz[0]] < 0:
                    tri = -tri
                key = (float(tri[0]), float(tri[1]), float(tri[2]))
                weights.setdefault(key, np.zeros(channels))
                weights[key] += a_k / 4.0
    keys = sorted(k for k in weights if k != (0.0, 0.0, 0.0))
    omegas = np.array([(0.0, 0.0, 0.0)] + keys)
    bank = FrequencyBank(omegas, dc_index=0)
    base = np.zeros((channels, len(omegas), 2))
    base[:, 0, 1] = weights[(0.0, 0.0, 0.0)]
    for i, key in enumerate(keys, start=1):
        base[:, i, 1] = weights[key]
    return bank, base


def eval_terms_loop(coeffs, omegas, u, xi=None):
    """Per-term scalar-loop evaluation of a local field."""
    coeffs = np.asarray(coeffs, dtype=np.float64)
    out = []
    for ch in range(coeffs.shape[0]):
        acc = 0.0
        for i in range(omegas.shape[0]):
            theta = (omegas[i, 0] * u[0] + omegas[i, 1] * u[1]
                     + omegas[i, 2] * u[2])
            gain = 1.0 if xi is None else float(xi[i])
            acc += gain * (coeffs[ch, i, 0] * math.sin(theta)
                           + coeffs[ch, i, 1] * math.cos(theta))
        out.append(acc)
    return np.array(out)


def _simpson(y, dx):
    weights = np.ones(len(y))
    weights[1:-1:2] = 4.0
    weights[2:-1:2] = 2.0
    return float(np.dot(weights, y) * dx / 3.0)


def psf_convolved_sine(omega_vec, phase, u, sigma):
    """Dense quadrature of a Gaussian-blurred 3D sinusoid at point u.

    The isotropic Gaussian kernel has standard deviation 1/(2*pi*sigma) in
    sample units; only displacement along the frequency direction changes
    the argument, so the convolution reduces to a 1D integral. Truncated at
    8 kernel std; step well below 1/64 of the sinusoid period.
    """
    omega_vec = np.asarray(omega_vec, dtype=np.float64)
    k_std = 1.0 / (2.0 * math.pi * sigma)
    mag = float(np.linalg.norm(omega_vec))
    period = 2.0 * math.pi / mag
    half = 8.0 * k_std
    step = min(period / 256.0, k_std / 8.0)
    n = int(math.ceil(2.0 * half / step))
    if n % 2:
        n += 1
    taus = np.linspace(-half, half, n + 1)
    dx = taus[1] - taus[0]
    kernel = np.exp(-0.5 * (taus / k_std) ** 2) / (k_std * math.sqrt(2.0 * math.pi))
    signal = np.sin(float(omega_vec @ np.asarray(u, dtype=np.float64))
                    + mag * taus + phase)
    return _simpson(kernel * signal, dx)


def cubic_weight(x):
    """Catmull-Rom cubic (a = -0.5), scalar."""
    x = abs(x)
    if x < 1.0:
        return 1.5 * x ** 3 - 2.5 * x ** 2 + 1.0
    if x < 2.0:
        return -0.5 * x ** 3 + 2.5 * x ** 2 - 4.0 * x + 2.0
    return 0.0


def downsample_1d_taps(line, s):
    """Per-output-pixel scalar transcription of the bicubic contract."""
    n_in = len(line)
    n_out = int(math.floor(n_in / s + 0.5))
    out = np.zeros(n_out)
    for i in range(n_out):
        center = (i + 0.5) * s - 0.5
        lo = int(math.ceil(center - 2.0 * s))
        hi = int(math.floor(center + 2.0 * s))
        total = 0.0
        acc = 0.0
        for tap in range(lo, hi + 1):
            w = cubic_weight((tap - center) / s) / s
            src = min(max(tap, 0), n_in - 1)
            acc += w * line[src]
            total += w
        out[i] = acc / total
    return out


def ramp_quadrature(slope, intercept, n_in, s):
    """Dense quadrature of the scaled cubic kernel against an analytic ramp."""
    n_out = int(math.floor(n_in / s + 0.5))
    taus = np.linspace(-2.0 * s, 2.0 * s, 8193)
    dx = taus[1] - taus[0]
    kern = np.array([cubic_weight(t / s) / s for t in taus])
    kern /= _simpson(kern, dx)
    out = np.zeros(n_out)
    for i in range(n_out):
        center = (i + 0.5) * s - 0.5
        out[i] = _simpson(kern * (slope * (center + taus) + intercept), dx)
    return out


def _gaussian_window_2d(size=11, sigma=1.5):
    half = size // 2
    g = np.exp(-0.5 * (np.arange(size) - half) ** 2 / sigma ** 2)
    win = np.outer(g, g)
    return win / win.sum()


def ssim_reference(img_a, img_b):
    """Direct transcription of single-scale SSIM on one float image."""
    from numpy.lib.stride_tricks import sliding_window_view

    win = _gaussian_window_2d()

    def filt(img):
        v = sliding_window_view(img, (11, 11))
        return np.einsum("ijkl,kl->ij", v, win)

    mu_a = filt(img_a)
    mu_b = filt(img_b)
    var_a = filt(img_a * img_a) - mu_a ** 2
    var_b = filt(img_b * img_b) - mu_b ** 2
    cov = filt(img_a * img_b) - mu_a * mu_b
    c1 = 0.01 ** 2
    c2 = 0.03 ** 2
    num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)
    den = (mu_a ** 2 + mu_b ** 2 + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))
