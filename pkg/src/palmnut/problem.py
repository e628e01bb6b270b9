"""Magnitude/phase objectives in the exponentiated-phase variable ``q``.

The objective is::

    Psi(m, q) = 1/2 ||A(m * q) - b||^2 + R1(m) + R2(q) + I_V(q)

with ``m`` real, ``q`` complex and ``V = {q : |q_n| = 1}``. Smooth penalties
join the differentiable coupling term; a nonsmooth ``R1`` is handled through
its prox. ``R2`` must be smooth (or absent) because the prox of
``R2 + I_V`` has no general closed form.

Complex gradients use the real-isomorphism convention: for ``f: C^N -> R``
the gradient ``g`` satisfies ``f(q + t h) = f(q) + t Re<h, g> + o(t)``.
"""
import numpy as np

from . import kernels
from .errors import ConfigError, ConstraintViolation, DimensionError
from .operators import Identity, bound_norm_sq
from .regularizers import TikhonovReg

#: Relative safety margin applied to power-iteration estimates of ||A||^2.
NORM_INFLATION = 1.01
OBJECTIVE_FEASIBILITY_TOL = 1e-6
DEBUG_FEASIBILITY_TOL = 1e-9


def _abs_sq(z):
    return z.real * z.real + z.imag * z.imag


def _check_feasible(q, tol):
    dev = float(np.max(np.abs(np.abs(q) - 1.0))) if q.size else 0.0
    if dev > tol:
        raise ConstraintViolation(f"phase vector leaves the unit-modulus set by {dev:.3e} (> {tol:g})")


def _check_reg(reg, shape, name):
    if reg is None:
        return
    if tuple(reg.ishape) != tuple(shape):
        raise DimensionError(f"{name} acts on shape {reg.ishape}, image shape is {shape}")


class _ProblemBase:
    """Shared pieces: regularizer plumbing, phase parameterization, bounds."""

    def __init__(self, shape, r1, r2, debug):
        self.shape = tuple(shape)
        if r2 is not None and not r2.smooth:
            raise ConfigError("a nonsmooth phase penalty is not supported together with the unit-modulus constraint")
        _check_reg(r1, self.shape, "R1")
        _check_reg(r2, self.shape, "R2")
        self.r1 = r1
        self.r2 = r2
        self.debug = debug
        self._r1_lip = r1.lipschitz() if r1 is not None and r1.smooth else 0.0
        self._r2_lip = r2.lipschitz() if r2 is not None else 0.0

    @property
    def r1_smooth(self):
        return self.r1 is None or self.r1.smooth

    @property
    def quadratic(self):
        """True when the magnitude subproblem is quadratic (no or Tikhonov R1)."""
        return self.r1 is None or isinstance(self.r1, TikhonovReg)

    def _check_m(self, m):
        if m.shape != self.shape:
            raise DimensionError(f"magnitude shape {m.shape} != {self.shape}")

    def _check_q(self, q):
        if q.shape != self.q_shape:
            raise DimensionError(f"phase shape {q.shape} != {self.q_shape}")

    def r1_value(self, m):
        return 0.0 if self.r1 is None else self.r1.value(m)

    def r2_value(self, q):
        if self.r2 is None:
            return 0.0
        if q.shape == self.shape:
            return self.r2.value(q)
        return float(sum(self.r2.value(qj) for qj in q))

    def _r2_gradient(self, q):
        if q.shape == self.shape:
            return self.r2.gradient(q)
        return np.stack([self.r2.gradient(qj) for qj in q])

    def objective(self, m, q):
        """Full objective; raises if ``q`` is off the unit-modulus set by > 1e-6."""
        m = np.asarray(m)
        q = np.asarray(q)
        _check_feasible(q, OBJECTIVE_FEASIBILITY_TOL)
        return self.data_fidelity(m, q) + self.r1_value(m) + self.r2_value(q)

    def smooth_value(self, m, q):
        """Coupling term plus the smooth penalties (no constraint check)."""
        val = self._data_value(m, q) + self.r2_value(q)
        if self.r1_smooth:
            val += self.r1_value(m)
        return val

    def data_fidelity(self, m, q):
        m = np.asarray(m)
        q = np.asarray(q)
        self._check_m(m)
        self._check_q(q)
        if self.debug:
            _check_feasible(q, DEBUG_FEASIBILITY_TOL)
        return self._data_value(m, q)

    def grad_m(self, m, q):
        m = np.asarray(m)
        q = np.asarray(q)
        self._check_m(m)
        self._check_q(q)
        g = self._data_grad_m(m, q)
        if self.r1 is not None and self.r1.smooth:
            g = g + self.r1.gradient(m)
        return g

    def grad_q(self, m, q):
        m = np.asarray(m)
        q = np.asarray(q)
        self._check_m(m)
        self._check_q(q)
        g = self._data_grad_q(m, q)
        if self.r2 is not None:
            g = g + self._r2_gradient(q)
        return g

    def grad_p(self, m, p):
        """Gradient in the raw phase ``p`` where ``q = exp(i p)``."""
        p = np.asarray(p, dtype=np.float64)
        q = np.exp(1j * p)
        return np.imag(np.conj(q) * self.grad_q(m, q))

    def objective_p(self, m, p):
        m = np.asarray(m)
        q = np.exp(1j * np.asarray(p, dtype=np.float64))
        return self._data_value(m, q) + self.r1_value(m) + self.r2_value(q)

    def prox_m(self, w, c):
        """Magnitude prox step; identity when ``R1`` is smooth."""
        if self.r1_smooth:
            return w
        return self.r1.prox(w, c)

    @staticmethod
    def project_q(z):
        return kernels.unit_modulus(z)

    def bound_c(self, q=None):
        """Scalar step bound for the magnitude block.

        With ``q`` given (e.g. an extrapolated, non-unit-modulus point) the
        data term uses ``max(1, max_n |q_n|^2)`` instead of 1.
        """
        scale = 1.0
        if q is not None:
            scale = max(1.0, self._q_energy_max(np.asarray(q)))
        return NORM_INFLATION * self.norm_a_sq * self._m_weight * scale + self._r1_lip

    def bound_d_scalar(self, m):
        m = np.asarray(m, dtype=np.float64)
        mmax = float(np.max(np.abs(m))) if m.size else 0.0
        return NORM_INFLATION * self.norm_a_sq * (mmax * mmax) + self._r2_lip

    def bound_d_vector(self, m):
        """Coordinatewise bound ``1.01 ||A||^2 m_n^2 + L(R2)``, shaped like ``q``."""
        m = np.asarray(m, dtype=np.float64)
        d = NORM_INFLATION * self.norm_a_sq * (m * m) + self._r2_lip
        return np.broadcast_to(d, self.q_shape).copy()


class MagPhaseProblem(_ProblemBase):
    """Single-image problem with forward operator ``A`` and data ``b``.

    Parameters
    ----------
    a_op : LinearOperator
        Forward model acting on images of shape ``a_op.ishape``.
    b : ndarray
        Measured data with shape ``a_op.oshape``.
    r1, r2 : regularizer or None
        Magnitude and phase penalties.
    debug : bool
        Check ``|q_n| = 1`` to 1e-9 on every data-term evaluation.
    """

    _m_weight = 1.0

    def __init__(self, a_op, b, r1=None, r2=None, debug=False, norm_a_sq=None):
        b = np.asarray(b, dtype=np.complex128)
        if b.shape != a_op.oshape:
            raise DimensionError(f"data shape {b.shape} != operator output {a_op.oshape}")
        if not np.all(np.isfinite(b)):
            raise ConfigError("data contain non-finite values")
        super().__init__(a_op.ishape, r1, r2, debug)
        self.a_op = a_op
        self.b = b
        self.q_shape = self.shape
        self.norm_a_sq = bound_norm_sq(a_op) if norm_a_sq is None else float(norm_a_sq)
        self._ahb = a_op.adjoint_apply(b)

    def _residual(self, m, q):
        return self.a_op.apply(m * q) - self.b

    def _data_value(self, m, q):
        return 0.5 * float(np.sum(_abs_sq(self._residual(m, q))))

    def _normal_residual(self, m, q):
        return self.a_op.normal_apply(m * q) - self._ahb

    def _data_grad_m(self, m, q):
        return np.real(np.conj(q) * self._normal_residual(m, q))

    def _data_grad_q(self, m, q):
        return m * self._normal_residual(m, q)

    def _q_energy_max(self, q):
        return float(np.max(_abs_sq(q)))

    def hess_m(self, q, v):
        """Magnitude Hessian-vector product (quadratic ``R1`` only)."""
        out = np.real(np.conj(q) * self.a_op.normal_apply(v * q))
        if self.r1 is not None:
            out = out + self.r1.gradient(v)
        return out


class MultiRepProblem(_ProblemBase):
    """Shared magnitude, one phase per repetition, identity forward model.

    ``b`` and ``q`` have shape ``(J, *image_shape)``; ``m`` has the image
    shape. ``R2`` is applied to every repetition's phase.
    """

    def __init__(self, b, r1=None, r2=None, debug=False):
        b = np.asarray(b, dtype=np.complex128)
        if b.ndim < 2:
            raise DimensionError("multi-repetition data need shape (J, *image_shape)")
        if not np.all(np.isfinite(b)):
            raise ConfigError("data contain non-finite values")
        super().__init__(b.shape[1:], r1, r2, debug)
        self.b = b
        self.n_reps = b.shape[0]
        self.q_shape = b.shape
        self.a_op = Identity(self.shape)
        self.norm_a_sq = 1.0
        self._m_weight = float(self.n_reps)

    def _data_value(self, m, q):
        return 0.5 * float(np.sum(_abs_sq(m * q - self.b)))

    def _data_grad_m(self, m, q):
        return np.sum(np.real(np.conj(q) * (m * q - self.b)), axis=0)

    def _data_grad_q(self, m, q):
        return m * (m * q - self.b)

    def _q_energy_max(self, q):
        return float(np.max(np.sum(_abs_sq(q), axis=0))) / self.n_reps

    def hess_m(self, q, v):
        out = np.sum(_abs_sq(q), axis=0) * v
        if self.r1 is not None:
            out = out + self.r1.gradient(v)
        return out
