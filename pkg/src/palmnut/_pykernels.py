"""Pure numpy kernels.

Reference implementations of the hot elementwise and filter-bank loops.
``_ckernels.pyx`` mirrors every function here with identical floating-point
operation order, so the two backends agree to the last few ulps.
"""
import numpy as np

_S3 = np.sqrt(3.0)
_DEN = 4.0 * np.sqrt(2.0)
H0 = (1.0 + _S3) / _DEN
H1 = (3.0 + _S3) / _DEN
H2 = (3.0 - _S3) / _DEN
H3 = (1.0 - _S3) / _DEN
G0, G1, G2, G3 = H3, -H2, H1, -H0


def dwt4_rows_forward(x):
    """One periodic D4 analysis level along the last axis of a 2D array.

    Returns an array of the same shape holding ``[approx | detail]``.
    """
    x0 = x[:, 0::2]
    x1 = x[:, 1::2]
    x2 = np.roll(x0, -1, axis=1)
    x3 = np.roll(x1, -1, axis=1)
    out = np.empty_like(x)
    half = x.shape[1] // 2
    out[:, :half] = H0 * x0 + H1 * x1 + H2 * x2 + H3 * x3
    out[:, half:] = G0 * x0 + G1 * x1 + G2 * x2 + G3 * x3
    return out


def dwt4_rows_inverse(c):
    half = c.shape[1] // 2
    a = c[:, :half]
    d = c[:, half:]
    am1 = np.roll(a, 1, axis=1)
    dm1 = np.roll(d, 1, axis=1)
    out = np.empty_like(c)
    out[:, 0::2] = H0 * a + G0 * d + H2 * am1 + G2 * dm1
    out[:, 1::2] = H1 * a + G1 * d + H3 * am1 + G3 * dm1
    return out


def unit_modulus(z):
    mag = np.abs(z)
    out = np.ones_like(z)
    nz = mag > 0.0
    out[nz] = z[nz] / mag[nz]
    return out


def huber_weights(mag_sq, xi):
    return 1.0 / np.maximum(xi, np.sqrt(mag_sq))


def huber_sum(mag_sq, xi):
    t = np.sqrt(mag_sq)
    vals = np.where(t <= xi, mag_sq / (2.0 * xi), t - 0.5 * xi)
    return float(np.sum(vals))


def soft_threshold(a, tau):
    """Shrink moduli by ``tau`` (scalar or array), keeping the angle."""
    mag = np.abs(a)
    scale = np.zeros(mag.shape)
    nz = mag > 0.0
    tau = np.broadcast_to(tau, mag.shape)
    scale[nz] = np.maximum(mag[nz] - tau[nz], 0.0) / mag[nz]
    return a * scale
