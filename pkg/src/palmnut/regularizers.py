"""Magnitude and phase penalties.

Each regularizer exposes ``smooth`` plus either ``gradient`` and
``lipschitz`` (smooth penalties) or ``prox`` (nonsmooth ones). Inputs may be
real (magnitude ``m``) or complex (phase ``q``); for real inputs the gradient
is the real part of the complex expression, so it is the gradient on R^N.
"""
import numpy as np

from . import kernels
from .errors import ConfigError, DimensionError
from .operators import LinearOperator, Stacked, bound_norm_sq, is_unitary


def huber_scalar(t, xi):
    """``t^2 / (2 xi)`` for ``|t| <= xi``, else ``|t| - xi / 2``."""
    if xi <= 0:
        raise ValueError("xi must be positive")
    a = abs(t)
    if a <= xi:
        return a * a / (2.0 * xi)
    return a - 0.5 * xi


def _abs_sq(z):
    if np.iscomplexobj(z):
        return z.real * z.real + z.imag * z.imag
    return z * z


def _match_kind(x, g):
    return np.real(g) if np.isrealobj(x) else g


def _check_lambda(lam):
    lam = float(lam)
    if not lam > 0 or not np.isfinite(lam):
        raise ConfigError(f"regularization weight must be positive and finite, got {lam}")
    return lam


class HuberStackReg:
    """``lam * sum_l h_xi(sqrt(sum_t |[B_t x]_l|^2))``.

    ``transforms`` is a list of operators sharing input and output shapes,
    or a single operator (T = 1).

    Parameters
    ----------
    lam, xi : float
        Positive weight and Huber breakpoint.
    transforms : LinearOperator or list of LinearOperator
    """

    smooth = True

    def __init__(self, lam, xi, transforms):
        self.lam = _check_lambda(lam)
        self.xi = float(xi)
        if not self.xi > 0:
            raise ConfigError("xi must be positive")
        if isinstance(transforms, LinearOperator):
            transforms = [transforms]
        self.stack = Stacked(transforms)
        self._lipschitz = None

    @property
    def ishape(self):
        return self.stack.ishape

    def _coeffs(self, x):
        bx = self.stack.apply(x)
        return bx, np.sum(_abs_sq(bx), axis=0)

    def value(self, x):
        _, mag_sq = self._coeffs(x)
        return self.lam * kernels.huber_sum(mag_sq, self.xi)

    def weights(self, x):
        """Diagonal of ``W(x)``: ``1 / max(xi, sqrt(sum_t |B_t x|^2))``."""
        _, mag_sq = self._coeffs(x)
        return kernels.huber_weights(mag_sq, self.xi)

    def gradient(self, x):
        bx, mag_sq = self._coeffs(x)
        w = kernels.huber_weights(mag_sq, self.xi)
        return _match_kind(x, self.lam * self.stack.adjoint_apply(w * bx))

    def lipschitz(self):
        """``(lam / xi) * ||sum_t B_t^H B_t||``; the norm is computed once."""
        if self._lipschitz is None:
            self._lipschitz = bound_norm_sq(self.stack)
        return self.lam / self.xi * self._lipschitz

    def __repr__(self):
        return f"HuberStackReg(lam={self.lam}, xi={self.xi}, T={len(self.stack.ops)})"


class TikhonovReg:
    """``(lam / 2) * ||C x||^2``."""

    smooth = True

    def __init__(self, lam, c_op):
        self.lam = _check_lambda(lam)
        self.c_op = c_op
        self._norm_sq = None

    @property
    def ishape(self):
        return self.c_op.ishape

    def value(self, x):
        return 0.5 * self.lam * float(np.sum(_abs_sq(self.c_op.apply(x))))

    def gradient(self, x):
        return _match_kind(x, self.lam * self.c_op.normal_apply(x))

    def lipschitz(self):
        if self._norm_sq is None:
            self._norm_sq = bound_norm_sq(self.c_op)
        return self.lam * self._norm_sq

    def __repr__(self):
        return f"TikhonovReg(lam={self.lam}, C={self.c_op!r})"


def soft_threshold(a, tau):
    """Shrink each coefficient's modulus by ``tau`` and keep its angle; 0 stays 0."""
    return kernels.soft_threshold(a, tau)


class L1UnitaryReg:
    """``lam * sum_l w_l |[T x]_l|`` for a unitary transform ``T``.

    ``weights`` (default all ones) lets selected coefficients go unpenalized,
    e.g. the coarse wavelet band.
    """

    smooth = False

    def __init__(self, lam, t_op, weights=None, check_unitary=True):
        self.lam = _check_lambda(lam)
        if check_unitary and not is_unitary(t_op):
            raise ConfigError(f"{t_op!r} is not unitary; the l1 prox needs T^H = T^-1")
        self.t_op = t_op
        if weights is None:
            self.weights = None
        else:
            self.weights = np.asarray(weights, dtype=np.float64)
            if self.weights.shape != t_op.oshape:
                raise DimensionError(f"weights shape {self.weights.shape} != transform output {t_op.oshape}")
            if np.any(self.weights < 0):
                raise ConfigError("l1 weights must be nonnegative")

    @property
    def ishape(self):
        return self.t_op.ishape

    def value(self, x):
        mag = np.abs(self.t_op.apply(x))
        if self.weights is not None:
            mag = self.weights * mag
        return self.lam * float(np.sum(mag))

    def prox(self, w, c):
        """``argmin_x value(x) + (c / 2) ||x - w||^2`` (scalar ``c``)."""
        if not c > 0:
            raise ValueError("prox step parameter c must be positive")
        tau = self.lam / c
        if self.weights is not None:
            tau = tau * self.weights
        out = self.t_op.adjoint_apply(soft_threshold(self.t_op.apply(w), tau))
        return _match_kind(w, out)

    def __repr__(self):
        return f"L1UnitaryReg(lam={self.lam}, T={self.t_op!r})"


def prox_unit_modulus(z):
    """Projection onto ``|q_n| = 1``: ``z / |z|`` with ``0 / 0 = 1``."""
    return kernels.unit_modulus(z)


def prox_l1_unitary(w, c, reg):
    return reg.prox(w, c)
