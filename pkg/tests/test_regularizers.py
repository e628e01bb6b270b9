import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import crandn, fd_gradient, rel_err
from palmnut.errors import ConfigError, DimensionError
from palmnut.operators import Daubechies4, Diagonal, FiniteDifferenceStack, Identity
from palmnut.regularizers import (
    HuberStackReg,
    L1UnitaryReg,
    TikhonovReg,
    huber_scalar,
    prox_l1_unitary,
    prox_unit_modulus,
)


@pytest.mark.parametrize("t,xi,expected", [(0.5, 1.0, 0.125), (2.0, 1.0, 1.5), (-2.0, 1.0, 1.5), (0.0, 0.3, 0.0)])
def test_huber_scalar_cases(t, xi, expected):
    assert huber_scalar(t, xi) == pytest.approx(expected)


def test_huber_scalar_breakpoint_continuity():
    xi = 0.3
    assert xi * xi / (2 * xi) == pytest.approx(0.15)
    assert abs(xi) - xi / 2 == pytest.approx(0.15)
    assert huber_scalar(xi, xi) == pytest.approx(0.15)


def test_huber_scalar_c1_at_breakpoint():
    xi, h = 0.7, 1e-7
    left = (huber_scalar(xi - h, xi) - huber_scalar(xi - 2 * h, xi)) / h
    right = (huber_scalar(xi + 2 * h, xi) - huber_scalar(xi + h, xi)) / h
    assert abs(left - right) < 1e-6


@settings(max_examples=100, deadline=None)
@given(st.floats(-100, 100), st.floats(-100, 100), st.floats(0.01, 10), st.floats(0, 1))
def test_huber_scalar_even_and_convex(a, b, xi, theta):
    assert huber_scalar(a, xi) == huber_scalar(-a, xi)
    mid = huber_scalar(theta * a + (1 - theta) * b, xi)
    assert mid <= theta * huber_scalar(a, xi) + (1 - theta) * huber_scalar(b, xi) + 1e-9


def fd_stack(n=4):
    return FiniteDifferenceStack((n, n)).ops


def test_huber_value_zero_and_scalar_sum():
    reg = HuberStackReg(1.0, 1.0, Identity((2,)))
    assert reg.value(np.zeros(2)) == 0.0
    assert reg.value(np.array([0.5, 2.0])) == pytest.approx(1.625)


def test_huber_value_matches_loop_oracle(rng):
    ops = fd_stack(6)
    reg = HuberStackReg(0.7, 0.4, ops)
    x = crandn(rng, (6, 6))
    coeffs = [op.apply(x) for op in ops]
    total = 0.0
    for i in range(6):
        for j in range(6):
            mag = np.sqrt(sum(abs(c[i, j]) ** 2 for c in coeffs))
            total += huber_scalar(mag, 0.4)
    assert reg.value(x) == pytest.approx(0.7 * total, rel=1e-12)


def test_huber_weights_cases():
    reg = HuberStackReg(1.0, 0.1, Identity((3,)))
    np.testing.assert_allclose(reg.weights(np.zeros(3)), 10.0)
    np.testing.assert_allclose(reg.weights(np.array([2.0, 0.0, 0.05])), [0.5, 10.0, 10.0])


def test_huber_gradient_zero():
    reg = HuberStackReg(1.0, 0.5, fd_stack())
    assert np.all(reg.gradient(np.zeros((4, 4))) == 0)


def test_huber_gradient_quadratic_regime(rng):
    ops = fd_stack()
    reg = HuberStackReg(2.0, 1e3, ops)
    x = rng.standard_normal((4, 4))
    expected = 2.0 / 1e3 * sum(np.real(op.adjoint_apply(op.apply(x))) for op in ops)
    np.testing.assert_allclose(reg.gradient(x), expected, rtol=1e-12)


def test_huber_large_xi_quadratic_identity(rng):
    ops = fd_stack()
    x = crandn(rng, (4, 4))
    reg = HuberStackReg(1.5, 100.0, ops)
    quad = 1.5 / (2 * 100.0) * sum(np.linalg.norm(op.apply(x)) ** 2 for op in ops)
    assert reg.value(x) == pytest.approx(quad, rel=1e-12)


@pytest.mark.parametrize("complex_input", [False, True])
def test_huber_gradient_finite_differences(complex_input, rng):
    reg = HuberStackReg(0.8, 0.3, fd_stack())
    for _ in range(20):
        x = crandn(rng, (4, 4)) if complex_input else rng.standard_normal((4, 4))
        assert rel_err(reg.gradient(x), fd_gradient(reg.value, x)) < 1e-6


def test_huber_weighted_gradient_matches_fd_of_value(rng):
    reg = HuberStackReg(1.0, 0.2, fd_stack())
    x = rng.standard_normal((4, 4))
    bx = np.stack([op.apply(x) for op in reg.stack.ops])
    w = reg.weights(x)
    manual = sum(np.real(op.adjoint_apply(w * b)) for op, b in zip(reg.stack.ops, bx))
    assert rel_err(manual, fd_gradient(reg.value, x)) < 1e-6


def test_huber_lipschitz_terms():
    assert HuberStackReg(2.0, 0.5, Identity((5,))).lipschitz() == pytest.approx(4.0, abs=1e-9)
    assert HuberStackReg(1.0, 1.0, FiniteDifferenceStack((16, 16)).ops).lipschitz() == pytest.approx(8.0, abs=1e-5)
    a = HuberStackReg(1.0, 0.1, fd_stack()).lipschitz()
    b = HuberStackReg(2.0, 0.1, fd_stack()).lipschitz()
    assert b == 2 * a


def test_huber_rejects_bad_params():
    with pytest.raises(ConfigError):
        HuberStackReg(0.0, 1.0, Identity((2,)))
    with pytest.raises(ConfigError):
        HuberStackReg(1.0, -1.0, Identity((2,)))
    with pytest.raises(DimensionError):
        HuberStackReg(1.0, 1.0, [Identity((2,)), Identity((3,))])
    with pytest.raises(DimensionError):
        HuberStackReg(1.0, 1.0, Identity((2,))).value(np.zeros(3))


def test_tikhonov_cases():
    reg = TikhonovReg(2.0, Identity((2,)))
    q = np.array([1.0, 1j])
    assert reg.value(np.zeros(2, complex)) == 0 and np.all(reg.gradient(np.zeros(2, complex)) == 0)
    assert reg.value(q) == pytest.approx(2.0)
    np.testing.assert_allclose(reg.gradient(q), [2.0, 2j])


@pytest.mark.parametrize("complex_input", [False, True])
def test_tikhonov_gradient_finite_differences(complex_input, rng):
    reg = TikhonovReg(0.6, FiniteDifferenceStack((4, 4)))
    for _ in range(20):
        x = crandn(rng, (4, 4)) if complex_input else rng.standard_normal((4, 4))
        assert rel_err(reg.gradient(x), fd_gradient(reg.value, x)) < 1e-6


def test_tikhonov_lipschitz():
    assert TikhonovReg(3.0, Identity((4,))).lipschitz() == pytest.approx(3.0, abs=1e-9)
    assert TikhonovReg(0.5, FiniteDifferenceStack((8, 8))).lipschitz() == pytest.approx(4.0, abs=1e-6)


# -------------------------------------------------------------------- proxes


def test_prox_unit_modulus_cases():
    np.testing.assert_allclose(prox_unit_modulus(np.array([3 + 4j])), [0.6 + 0.8j])
    assert prox_unit_modulus(np.array([0j]))[0] == 1 + 0j


def test_prox_unit_modulus_beats_grid_search(rng):
    z = crandn(rng, (50,))
    q = prox_unit_modulus(z)
    angles = np.exp(2j * np.pi * np.arange(3600) / 3600)
    grid_best = np.min(np.abs(angles[None, :] - z[:, None]), axis=1)
    assert np.all(np.abs(q - z) <= grid_best + 1e-12)
    assert np.max(np.abs(np.abs(q) - 1)) < 1e-15


@settings(max_examples=50, deadline=None)
@given(st.lists(st.complex_numbers(max_magnitude=1e6, allow_nan=False, allow_infinity=False), min_size=1, max_size=20))
def test_prox_unit_modulus_idempotent(vals):
    z = np.array(vals, dtype=complex)
    once = prox_unit_modulus(z)
    twice = prox_unit_modulus(once)
    nz = z != 0
    assert np.array_equal(twice[~nz], once[~nz])
    np.testing.assert_allclose(twice[nz], once[nz], rtol=0, atol=4e-16)


def test_prox_l1_identity_cases():
    reg = L1UnitaryReg(1.0, Identity((1,)))
    np.testing.assert_allclose(prox_l1_unitary(np.array([2.0]), 2.0, reg), [1.5])
    reg3 = L1UnitaryReg(1.0, Identity((3,)))
    assert np.all(prox_l1_unitary(np.array([0.3, -0.5, 0.0]), 2.0, reg3) == 0)


def scalar_prox_oracle(a, tau):
    """argmin_x tau |x| + 1/2 |x - a|^2 for complex a, solved in polar form."""
    r = abs(a)
    return 0.0 if r <= tau else (r - tau) * a / r


@pytest.mark.parametrize("complex_input", [False, True])
def test_prox_l1_wavelet_matches_coefficientwise_oracle(complex_input, rng):
    dwt = Daubechies4((16, 16), 2)
    reg = L1UnitaryReg(0.4, dwt)
    w = crandn(rng, (16, 16)) if complex_input else rng.standard_normal((16, 16))
    c = 1.3
    coeffs = dwt.apply(w)
    expected = dwt.adjoint_apply(np.vectorize(lambda a: scalar_prox_oracle(a, 0.4 / c), otypes=[coeffs.dtype])(coeffs))
    got = reg.prox(w, c)
    assert rel_err(got, expected) < 1e-10
    assert np.isrealobj(got) == (not complex_input)


def test_prox_l1_is_minimizer(rng):
    dwt = Daubechies4((8, 8), 1)
    reg = L1UnitaryReg(0.3, dwt)
    w = rng.standard_normal((8, 8))
    p = reg.prox(w, 1.0)

    def obj(x):
        return reg.value(x) + 0.5 * np.sum((x - w) ** 2)

    for _ in range(50):
        assert obj(p) <= obj(p + 1e-3 * rng.standard_normal((8, 8))) + 1e-12


def test_prox_l1_nonexpansive_in_transform_domain(rng):
    dwt = Daubechies4((16, 16), 3)
    reg = L1UnitaryReg(0.5, dwt)
    for _ in range(20):
        w1, w2 = crandn(rng, (16, 16)), crandn(rng, (16, 16))
        lhs = np.linalg.norm(dwt.apply(reg.prox(w1, 1.0)) - dwt.apply(reg.prox(w2, 1.0)))
        assert lhs <= np.linalg.norm(dwt.apply(w1) - dwt.apply(w2)) + 1e-12


def test_prox_l1_weights_leave_coarse_band(rng):
    dwt = Daubechies4((16, 16), 2)
    weights = dwt.detail_mask().astype(float)
    reg = L1UnitaryReg(100.0, dwt, weights=weights)
    w = rng.standard_normal((16, 16))
    out = dwt.apply(reg.prox(w, 1.0))
    np.testing.assert_allclose(out[:4, :4], dwt.apply(w)[:4, :4], atol=1e-12)
    assert np.max(np.abs(out[weights > 0])) < 1e-12


def test_l1_rejects_non_unitary():
    with pytest.raises(ConfigError):
        L1UnitaryReg(1.0, Diagonal(np.full(4, 2.0)))


def test_l1_prox_rejects_nonpositive_c():
    with pytest.raises(ValueError):
        L1UnitaryReg(1.0, Identity((2,))).prox(np.zeros(2), 0.0)
