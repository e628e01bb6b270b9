"""Synthetic ground truth, coil maps, sampling masks, noise and NRMSE.

Images are ``(height, width)`` arrays. Pixel-center coordinates run over
``[-1, 1]`` on both axes with ``y`` pointing up. All randomness comes from
:mod:`palmnut.rng`, so every output is reproducible from its seed.
"""
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DimensionError
from .rng import SplitMix64, stream

#: Pixels with magnitude above this fraction of the maximum count as tissue.
TISSUE_THRESHOLD = 0.05

# (intensity, semi-axis x, semi-axis y, center x, center y, rotation in degrees)
_ELLIPSES = (
    (1.0, 0.69, 0.92, 0.0, 0.0, 0.0),
    (-0.6, 0.6624, 0.874, 0.0, -0.0184, 0.0),
    (-0.2, 0.11, 0.31, 0.22, 0.0, -18.0),
    (-0.2, 0.16, 0.41, -0.22, 0.0, 18.0),
    (0.2, 0.21, 0.25, 0.0, 0.35, 0.0),
    (0.2, 0.046, 0.046, 0.0, 0.1, 0.0),
    (0.2, 0.046, 0.046, 0.0, -0.1, 0.0),
    (0.2, 0.046, 0.023, -0.08, -0.605, 0.0),
    (0.2, 0.023, 0.023, 0.0, -0.606, 0.0),
    (0.2, 0.023, 0.046, 0.06, -0.605, 0.0),
)

# phase = a x + b y + c x y + g exp(-((x - x0)^2 + (y - y0)^2) / s)
_PHASES = (
    (0.8, 0.5, 0.3, 1.2, 0.2, 0.1, 0.1),
    (-0.6, 0.7, -0.4, 1.0, -0.25, 0.2, 0.08),
    (0.4, -0.9, 0.5, -1.1, 0.1, -0.3, 0.12),
    (-0.3, -0.4, -0.6, 0.9, -0.1, -0.15, 0.15),
)

PHASE_VARIANTS = len(_PHASES)


@dataclass(frozen=True)
class Phantom:
    magnitude: np.ndarray
    phase: np.ndarray
    mask: np.ndarray

    @property
    def shape(self):
        return self.magnitude.shape

    @property
    def image(self):
        return self.magnitude * np.exp(1j * self.phase)


def _grid(width, height):
    x = (2.0 * np.arange(width) + 1.0) / width - 1.0
    y = 1.0 - (2.0 * np.arange(height) + 1.0) / height
    return np.meshgrid(x, y)


def _check_dims(width, height):
    for n in (width, height):
        if int(n) != n or n < 8 or (int(n) & (int(n) - 1)) != 0:
            raise DimensionError(f"phantom sizes must be powers of two >= 8, got {width}x{height}")


def smooth_phase(width, height, variant=0):
    """Low-order polynomial plus one Gaussian bump; stays inside (-pi, pi)."""
    a, b, c, g, x0, y0, s = _PHASES[variant % PHASE_VARIANTS]
    x, y = _grid(width, height)
    return a * x + b * y + c * x * y + g * np.exp(-((x - x0) ** 2 + (y - y0) ** 2) / s)


def tissue_mask(magnitude):
    return magnitude > TISSUE_THRESHOLD * np.max(magnitude)


def make_phantom(width, height, kind="ellipses", phase_variant=0):
    """Ground-truth magnitude (in [0, 1]) and smooth phase.

    Parameters
    ----------
    kind : {"ellipses", "flat"}
        Ellipse head phantom, or a unit disc of radius 0.8.
    phase_variant : int
        Selects one of :data:`PHASE_VARIANTS` smooth phase maps.
    """
    _check_dims(width, height)
    x, y = _grid(width, height)
    if kind == "ellipses":
        mag = np.zeros((height, width))
        for val, ax, ay, cx, cy, deg in _ELLIPSES:
            th = np.deg2rad(deg)
            xr = (x - cx) * np.cos(th) + (y - cy) * np.sin(th)
            yr = -(x - cx) * np.sin(th) + (y - cy) * np.cos(th)
            mag[(xr / ax) ** 2 + (yr / ay) ** 2 <= 1.0] += val
        mag = np.clip(mag, 0.0, 1.0)
    elif kind == "flat":
        mag = (x * x + y * y <= 0.64).astype(np.float64)
    else:
        raise ConfigError(f"unknown phantom kind {kind!r}")
    return Phantom(mag, smooth_phase(width, height, phase_variant), tissue_mask(mag))


def make_sensitivities(width, height, coil_count, seed):
    """Smooth complex coil maps normalized to unit sum-of-squares.

    Each coil has a Gaussian profile centered on a ring around the image and
    a random linear phase. Normalization makes ``sum_j |S_j|^2 = 1`` at every
    pixel, so the fully sampled SENSE operator is an isometry.
    """
    if int(coil_count) != coil_count or coil_count < 1:
        raise ConfigError("coil_count must be a positive integer")
    if coil_count == 1:
        return np.ones((1, height, width), dtype=np.complex128)
    x, y = _grid(width, height)
    draws = stream(seed, "sensitivities").uniform(4 * coil_count).reshape(coil_count, 4)
    maps = np.empty((coil_count, height, width), dtype=np.complex128)
    for j in range(coil_count):
        ang = 2.0 * np.pi * (j + 0.3 * draws[j, 0]) / coil_count
        cx, cy = 1.2 * np.cos(ang), 1.2 * np.sin(ang)
        profile = np.exp(-((x - cx) ** 2 + (y - cy) ** 2) / 1.5)
        kx, ky = np.pi * (draws[j, 1] - 0.5), np.pi * (draws[j, 2] - 0.5)
        maps[j] = profile * np.exp(1j * (kx * x + ky * y + 2.0 * np.pi * draws[j, 3]))
    sos = np.sqrt(np.sum(np.abs(maps) ** 2, axis=0))
    return maps / sos


def line_density(ky, height):
    """Relative probability of sampling phase-encode line ``ky`` (centered index)."""
    r = np.abs(ky) / (height / 2.0)
    return np.maximum((1.0 - r) ** 2, 0.02)


def make_mask(width, height, accel, center_frac=0.08, seed=0):
    """Cartesian variable-density mask in centered k-space layout.

    Whole rows (phase-encode lines) are sampled. ``round(center_frac * height)``
    central lines are always kept; the remaining budget of
    ``round(height / accel)`` lines is filled by rejection sampling with
    :func:`line_density`.
    """
    if not accel >= 1:
        raise ConfigError("accel must be >= 1")
    if not 0 <= center_frac <= 1:
        raise ConfigError("center_frac must lie in [0, 1]")
    budget = max(1, int(round(height / accel)))
    n_center = int(round(center_frac * height))
    if n_center > budget:
        raise ConfigError(f"center block of {n_center} lines exceeds the budget of {budget} lines")
    rows = np.zeros(height, dtype=bool)
    if budget >= height:
        rows[:] = True
    else:
        start = height // 2 - n_center // 2
        rows[start:start + n_center] = True
        ky = np.arange(height) - height // 2
        prob = line_density(ky, height)
        rng = stream(seed, "mask")
        while rows.sum() < budget:
            u = rng.uniform(2)
            idx = min(int(u[0] * height), height - 1)
            if not rows[idx] and u[1] < prob[idx]:
                rows[idx] = True
    return np.repeat(rows[:, None], width, axis=1)


def add_noise(x, sigma, seed):
    """Add complex white Gaussian noise with per-component std ``sigma``."""
    if sigma < 0:
        raise ConfigError("sigma must be >= 0")
    x = np.asarray(x)
    if sigma == 0:
        return x.copy()
    return x + sigma * SplitMix64(seed).complex_normal(x.shape)


def nrmse(estimate, truth, mask=None):
    """``||estimate - truth|| / ||truth||`` over the pixels selected by ``mask``."""
    estimate = np.asarray(estimate)
    truth = np.asarray(truth)
    if estimate.shape != truth.shape:
        raise DimensionError(f"shape mismatch {estimate.shape} vs {truth.shape}")
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != truth.shape:
            raise DimensionError("mask shape does not match the images")
        estimate = estimate[mask]
        truth = truth[mask]
    denom = np.linalg.norm(truth)
    if denom == 0:
        raise ValueError("truth has zero norm on the mask")
    return float(np.linalg.norm(estimate - truth) / denom)
