"""Linear operators on complex (or real) arrays and spectral-norm estimation.

Vectors are numpy arrays: complex images are ``complex128`` and magnitudes
are ``float64``. Every operator has a fixed input shape ``ishape`` and
output shape ``oshape``; :meth:`LinearOperator.apply` and
:meth:`LinearOperator.adjoint_apply` check them.

Inner products used throughout the package are real: ``Re(vdot(a, b))``,
i.e. the Euclidean inner product on R^{2N}.
"""
import math

import numpy as np

from . import kernels
from .errors import ConvergenceError, DimensionError
from .rng import SplitMix64


def real_inner(a, b):
    """``Re <a, b>`` on the R^{2N} view of complex arrays."""
    return float(np.real(np.vdot(a, b)))


class LinearOperator:
    """Abstract linear map ``ishape -> oshape``.

    Subclasses implement ``_apply`` and ``_adjoint``. Composition uses
    ``A @ B`` (apply ``B`` first).
    """

    kind = "abstract"

    def __init__(self, ishape, oshape):
        self.ishape = tuple(int(s) for s in ishape)
        self.oshape = tuple(int(s) for s in oshape)
        if min(self.ishape + self.oshape, default=0) < 1:
            raise DimensionError(f"operator shapes must be positive, got {self.ishape} -> {self.oshape}")

    @property
    def domain_dim(self):
        return math.prod(self.ishape)

    @property
    def codomain_dim(self):
        return math.prod(self.oshape)

    def apply(self, x):
        x = np.asarray(x)
        if x.shape != self.ishape:
            raise DimensionError(f"{self.kind}: expected input shape {self.ishape}, got {x.shape}")
        return self._apply(x)

    def adjoint_apply(self, y):
        y = np.asarray(y)
        if y.shape != self.oshape:
            raise DimensionError(f"{self.kind}: expected adjoint input shape {self.oshape}, got {y.shape}")
        return self._adjoint(y)

    def normal_apply(self, x):
        return self.adjoint_apply(self.apply(x))

    def __matmul__(self, other):
        if not isinstance(other, LinearOperator):
            return NotImplemented
        return Composite(self, other)

    def _apply(self, x):
        raise NotImplementedError

    def _adjoint(self, y):
        raise NotImplementedError

    def __repr__(self):
        return f"<{type(self).__name__} {self.ishape} -> {self.oshape}>"


class Identity(LinearOperator):
    kind = "identity"

    def __init__(self, shape):
        if isinstance(shape, int):
            shape = (shape,)
        super().__init__(shape, shape)

    def _apply(self, x):
        return x.copy()

    def _adjoint(self, y):
        return y.copy()


class Diagonal(LinearOperator):
    """Elementwise multiplication by a fixed (possibly complex) array."""

    kind = "diagonal"

    def __init__(self, d):
        self.d = np.array(d)
        super().__init__(self.d.shape, self.d.shape)
        self._dconj = np.conj(self.d)

    def _apply(self, x):
        return self.d * x

    def _adjoint(self, y):
        return self._dconj * y


def _fft_axes(ndim, offset=0):
    return tuple(range(offset, offset + ndim))


class MaskedDFT(LinearOperator):
    """Unitary DFT over all axes followed by a k-space sampling mask.

    ``mask`` is given in centered (fftshifted) layout by default, matching
    :func:`palmnut.phantom.make_mask`. Unsampled entries are returned as 0.
    """

    kind = "masked_dft"

    def __init__(self, mask, centered=True):
        mask = np.asarray(mask, dtype=bool)
        super().__init__(mask.shape, mask.shape)
        self.mask = np.fft.ifftshift(mask) if centered else mask.copy()
        self._axes = _fft_axes(mask.ndim)

    def _apply(self, x):
        return self.mask * np.fft.fftn(x, axes=self._axes, norm="ortho")

    def _adjoint(self, y):
        return np.fft.ifftn(self.mask * y, axes=self._axes, norm="ortho")


class Sense(LinearOperator):
    """Multi-coil SENSE model: coil weighting, unitary DFT, then sampling mask.

    ``maps`` has shape ``(coils, *image_shape)``; the output has the same
    shape and holds masked k-space for every coil.
    """

    kind = "sense"

    def __init__(self, maps, mask, centered=True):
        maps = np.asarray(maps, dtype=np.complex128)
        mask = np.asarray(mask, dtype=bool)
        if maps.shape[1:] != mask.shape:
            raise DimensionError(f"maps {maps.shape} incompatible with mask {mask.shape}")
        super().__init__(mask.shape, maps.shape)
        self.maps = maps
        self._maps_conj = np.conj(maps)
        self.mask = np.fft.ifftshift(mask) if centered else mask.copy()
        self._axes = _fft_axes(mask.ndim, offset=1)

    def _apply(self, x):
        return self.mask * np.fft.fftn(self.maps * x, axes=self._axes, norm="ortho")

    def _adjoint(self, y):
        coil_images = np.fft.ifftn(self.mask * y, axes=self._axes, norm="ortho")
        return np.sum(self._maps_conj * coil_images, axis=0)


class FiniteDifference(LinearOperator):
    """Periodic forward difference ``x[i+1] - x[i]`` along one axis."""

    kind = "finite_difference"

    def __init__(self, shape, axis):
        super().__init__(shape, shape)
        self.axis = axis

    def _apply(self, x):
        return np.roll(x, -1, axis=self.axis) - x

    def _adjoint(self, y):
        return np.roll(y, 1, axis=self.axis) - y


class Stacked(LinearOperator):
    """Vertical stack ``[B_1; ...; B_T]`` with output shape ``(T, *oshape)``."""

    kind = "stacked"

    def __init__(self, ops):
        ops = list(ops)
        if not ops:
            raise DimensionError("cannot stack zero operators")
        ishape, oshape = ops[0].ishape, ops[0].oshape
        for op in ops[1:]:
            if op.ishape != ishape or op.oshape != oshape:
                raise DimensionError("stacked operators must share input and output shapes")
        super().__init__(ishape, (len(ops),) + oshape)
        self.ops = ops

    def _apply(self, x):
        return np.stack([op.apply(x) for op in self.ops])

    def _adjoint(self, y):
        out = self.ops[0].adjoint_apply(y[0])
        for op, yt in zip(self.ops[1:], y[1:]):
            out = out + op.adjoint_apply(yt)
        return out


class FiniteDifferenceStack(Stacked):
    """Periodic differences along every axis, stacked (isotropic TV layout)."""

    kind = "finite_difference_stack"

    def __init__(self, shape):
        super().__init__([FiniteDifference(shape, ax) for ax in range(len(shape))])


class Composite(LinearOperator):
    """``outer @ inner``: apply ``inner`` then ``outer``."""

    kind = "composite"

    def __init__(self, outer, inner):
        if outer.ishape != inner.oshape:
            raise DimensionError(f"cannot compose {outer!r} after {inner!r}")
        super().__init__(inner.ishape, outer.oshape)
        self.outer = outer
        self.inner = inner

    def _apply(self, x):
        return self.outer.apply(self.inner.apply(x))

    def _adjoint(self, y):
        return self.inner.adjoint_apply(self.outer.adjoint_apply(y))


def _check_dwt_shape(shape, levels):
    if levels < 1:
        raise DimensionError("levels must be >= 1")
    for n in shape:
        if n % (2**levels) != 0:
            raise DimensionError(f"length {n} is not divisible by 2**{levels}")


def _dwt_real(x, levels, inverse):
    """Multi-level separable D4 transform of a real 1D or 2D array."""
    out = np.array(x, dtype=np.float64, copy=True)
    sizes = [tuple(n >> lev for n in x.shape) for lev in range(levels)]
    if inverse:
        sizes = sizes[::-1]
    for size in sizes:
        block = tuple(slice(0, n) for n in size)
        sub = out[block]
        if inverse:
            if sub.ndim == 2:
                sub = kernels.dwt4_last_axis(sub.T, inverse=True).T
            sub = kernels.dwt4_last_axis(sub, inverse=True)
        else:
            sub = kernels.dwt4_last_axis(sub)
            if sub.ndim == 2:
                sub = kernels.dwt4_last_axis(sub.T).T
        out[block] = sub
    return out


def dwt4_forward(x, levels):
    """Orthonormal periodic Daubechies-4 (4-tap) transform.

    1D output layout is ``[a_L | d_L | ... | d_1]``. 2D input is transformed
    rows first, then columns, at every level (Mallat pyramid); the coarse
    approximation ends up in the top-left ``shape / 2**levels`` block.
    """
    x = np.asarray(x)
    if x.ndim not in (1, 2):
        raise DimensionError("dwt4 supports 1D and 2D arrays")
    _check_dwt_shape(x.shape, levels)
    if x.ndim == 1:
        return _dwt_1d(x, levels, False)
    if np.iscomplexobj(x):
        return _dwt_real(x.real, levels, False) + 1j * _dwt_real(x.imag, levels, False)
    return _dwt_real(x, levels, False)


def dwt4_inverse(c, levels):
    c = np.asarray(c)
    if c.ndim not in (1, 2):
        raise DimensionError("dwt4 supports 1D and 2D arrays")
    _check_dwt_shape(c.shape, levels)
    if c.ndim == 1:
        return _dwt_1d(c, levels, True)
    if np.iscomplexobj(c):
        return _dwt_real(c.real, levels, True) + 1j * _dwt_real(c.imag, levels, True)
    return _dwt_real(c, levels, True)


def _dwt_1d(x, levels, inverse):
    if np.iscomplexobj(x):
        rows = np.stack([x.real, x.imag])
    else:
        rows = x[None, :].astype(np.float64)
    n = x.shape[0]
    sizes = [n >> lev for lev in range(levels)]
    if inverse:
        sizes = sizes[::-1]
    out = rows.copy()
    for size in sizes:
        out[:, :size] = kernels.dwt4_last_axis(out[:, :size], inverse=inverse)
    if np.iscomplexobj(x):
        return out[0] + 1j * out[1]
    return out[0]


class Daubechies4(LinearOperator):
    """Unitary multi-level periodic D4 wavelet transform (1D or 2D)."""

    kind = "daubechies4"

    def __init__(self, shape, levels):
        shape = tuple(shape)
        _check_dwt_shape(shape, levels)
        super().__init__(shape, shape)
        self.levels = levels

    def _apply(self, x):
        return dwt4_forward(x, self.levels)

    def _adjoint(self, y):
        return dwt4_inverse(y, self.levels)

    def detail_mask(self):
        """Boolean array that is False on the coarse approximation block."""
        mask = np.ones(self.ishape, dtype=bool)
        mask[tuple(slice(0, n >> self.levels) for n in self.ishape)] = False
        return mask


def is_unitary(op, trials=3, tol=1e-10, seed=0x5EED):
    """Check ``||Tx|| = ||x||`` and ``T^H T x = x`` on random complex inputs."""
    if op.ishape != op.oshape:
        return False
    rng = SplitMix64(seed)
    for _ in range(trials):
        x = rng.complex_normal(op.ishape)
        tx = op.apply(x)
        nx = np.linalg.norm(x)
        if abs(np.linalg.norm(tx) - nx) > tol * nx:
            return False
        if np.linalg.norm(op.adjoint_apply(tx) - x) > tol * nx:
            return False
    return True


POWER_TOL = 1e-9
POWER_MAX_ITER = 5000
POWER_SEED = 0x9E3779B9


def spectral_norm_sq(op, tol=POWER_TOL, max_iter=POWER_MAX_ITER, method="power"):
    """Largest eigenvalue of ``A^H A``.

    ``method="power"`` runs power iteration and stops when successive
    Rayleigh quotients differ by less than ``tol`` relatively.
    ``method="lanczos"`` runs restarted Lanczos with full
    reorthogonalization and stops when successive top Ritz values agree to
    ``tol``; it converges far faster when the top eigenvalues are clustered.
    ``max_iter`` bounds the number of ``A^H A`` products either way.

    The start vector is a fixed SplitMix64 complex Gaussian draw, so
    repeated calls return identical doubles. Both methods approach the top
    eigenvalue from below; callers that need an upper bound must inflate
    the result.

    Raises
    ------
    ConvergenceError
        If ``max_iter`` is reached; ``exc.estimate`` holds the last value.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    x = SplitMix64(POWER_SEED).complex_normal(op.ishape)
    x /= np.linalg.norm(x)
    if method == "power":
        return _power(op, x, tol, max_iter)
    if method == "lanczos":
        return _lanczos(op, x, tol, max_iter)
    raise ValueError(f"unknown method {method!r}")


def _power(op, x, tol, max_iter):
    rq_old = None
    for _ in range(max_iter):
        y = op.normal_apply(x)
        rq = real_inner(x, y)
        ny = np.linalg.norm(y)
        if ny == 0.0:
            return 0.0
        if rq_old is not None and abs(rq - rq_old) <= tol * abs(rq):
            return rq
        rq_old = rq
        x = y / ny
    raise ConvergenceError(f"power iteration did not converge in {max_iter} iterations", estimate=rq_old)


LANCZOS_STEPS = 30


def _lanczos(op, x, tol, max_iter):
    used = 0
    top_old = None
    while used < max_iter:
        steps = min(LANCZOS_STEPS, max_iter - used, op.domain_dim)
        basis = [x]
        alphas, betas = [], []
        for j in range(steps):
            w = op.normal_apply(basis[j])
            used += 1
            alphas.append(real_inner(basis[j], w))
            for _ in range(2):
                for qi in basis:
                    w = w - np.vdot(qi, w) * qi
            beta = np.linalg.norm(w)
            if beta <= 1e-13 * max(abs(alphas[-1]), 1e-300) or j == steps - 1:
                break
            betas.append(beta)
            basis.append(w / beta)
        k = len(alphas)
        t = np.diag(alphas) + np.diag(betas[: k - 1], 1) + np.diag(betas[: k - 1], -1)
        evals, evecs = np.linalg.eigh(t)
        top = float(evals[-1])
        if top <= 0.0:
            return 0.0
        invariant = k < steps or k == op.domain_dim
        if invariant or (top_old is not None and abs(top - top_old) <= tol * top):
            return top
        top_old = top
        x = sum(c * qi for c, qi in zip(evecs[:, -1], basis[:k]))
        x /= np.linalg.norm(x)
    raise ConvergenceError(f"Lanczos did not converge in {max_iter} operator products", estimate=top_old)


#: Stopping tolerance for norms that feed step-size bounds. The bounds are
#: inflated by 1%, so a 1e-6 stagnation test is ample and avoids thousands
#: of products when the top of the spectrum is clustered.
BOUND_TOL = 1e-6


def bound_norm_sq(op):
    """``||A||^2`` estimate used for step-size bounds (restarted Lanczos)."""
    return spectral_norm_sq(op, tol=BOUND_TOL, method="lanczos")
