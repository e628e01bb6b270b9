import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles import circulant_laplacian_max, crandn, dft_matrix, dot_test, dwt1d_oracle, dwt2d_oracle
from palmnut.errors import ConvergenceError, DimensionError
from palmnut.operators import (
    Composite,
    Daubechies4,
    Diagonal,
    FiniteDifference,
    FiniteDifferenceStack,
    Identity,
    MaskedDFT,
    Sense,
    Stacked,
    dwt4_forward,
    dwt4_inverse,
    is_unitary,
    spectral_norm_sq,
)
from palmnut.phantom import make_mask, make_sensitivities


def all_operator_kinds(rng):
    mask = make_mask(16, 16, 4, 0.125, seed=1)
    return {
        "identity": Identity((8,)),
        "diagonal": Diagonal(crandn(rng, (5, 3))),
        "masked_dft": MaskedDFT(mask),
        "sense": Sense(make_sensitivities(16, 16, 3, seed=2), mask),
        "finite_difference_stack": FiniteDifferenceStack((8, 8)),
        "daubechies4": Daubechies4((16, 32), 3),
        "composite": Diagonal(rng.random((16, 16))) @ Daubechies4((16, 16), 2),
        "stacked": Stacked([FiniteDifference((12,), 0), Identity((12,))]),
    }


def test_identity_apply():
    x = np.array([1, 1j, 0, -2])
    assert np.array_equal(Identity(4).apply(x), x)
    assert np.array_equal(Identity(4).adjoint_apply(x), x)


def test_diagonal_apply_and_adjoint():
    assert np.array_equal(Diagonal(np.array([2.0, 3.0])).apply(np.array([1.0, 1.0])), [2.0, 3.0])
    assert np.array_equal(Diagonal(np.array([2j])).adjoint_apply(np.array([1.0 + 0j])), [-2j])


def test_masked_dft_full_mask_matches_dense_dft(rng):
    x = crandn(rng, (16,))
    op = MaskedDFT(np.ones(16, dtype=bool))
    np.testing.assert_allclose(op.apply(x), dft_matrix(16) @ x, atol=1e-12)
    np.testing.assert_allclose(op.adjoint_apply(op.apply(x)), x, atol=1e-12)


def test_masked_dft_centered_mask_zeroes_unsampled(rng):
    mask = np.zeros(16, dtype=bool)
    mask[8] = True  # centered layout: index 8 is DC
    y = MaskedDFT(mask).apply(crandn(rng, (16,)))
    assert np.count_nonzero(y) == 1 and y[0] != 0


def test_sense_single_coil_full_mask_is_unitary(rng):
    op = Sense(np.ones((1, 8, 8)), np.ones((8, 8), dtype=bool))
    assert is_unitary(op) is False  # different in/out shapes
    x = crandn(rng, (8, 8))
    np.testing.assert_allclose(np.linalg.norm(op.apply(x)), np.linalg.norm(x), rtol=1e-12)


@pytest.mark.parametrize("kind", [
    "identity", "diagonal", "masked_dft", "sense", "finite_difference_stack", "daubechies4", "composite", "stacked",
])
def test_dot_test_every_kind(kind, rng):
    op = all_operator_kinds(rng)[kind]
    worst = max(dot_test(op, rng) for _ in range(100))
    assert worst < 1e-10


def test_finite_difference_dot_test_1d(rng):
    op = FiniteDifferenceStack((8,))
    assert max(dot_test(op, rng) for _ in range(100)) < 1e-10


@pytest.mark.parametrize("shape", [(8,), (4, 6)])
def test_dimension_mismatch_raises(shape):
    op = Identity(shape)
    with pytest.raises(DimensionError):
        op.apply(np.zeros(5))
    with pytest.raises(DimensionError):
        op.adjoint_apply(np.zeros(5))


def test_composite_equals_sequential_bitwise(rng):
    a = Diagonal(crandn(rng, (16, 16)))
    b = Daubechies4((16, 16), 2)
    x = crandn(rng, (16, 16))
    assert np.array_equal((a @ b).apply(x), a.apply(b.apply(x)))
    y = crandn(rng, (16, 16))
    assert np.array_equal((a @ b).adjoint_apply(y), b.adjoint_apply(a.adjoint_apply(y)))


def test_composite_shape_mismatch():
    with pytest.raises(DimensionError):
        Composite(Identity((4,)), Identity((5,)))


def test_apply_is_pure(rng):
    op = Sense(make_sensitivities(16, 16, 2, 0), make_mask(16, 16, 2, 0.25, 0))
    x = crandn(rng, (16, 16))
    x0 = x.copy()
    assert np.array_equal(op.apply(x), op.apply(x))
    assert np.array_equal(x, x0)


# ----------------------------------------------------------------- wavelets


def test_dwt_matches_dense_matrix_oracle_1d(rng):
    x = rng.standard_normal(64)
    np.testing.assert_allclose(dwt4_forward(x, 3), dwt1d_oracle(x, 3), atol=1e-13)


def test_dwt_matches_dense_matrix_oracle_2d(rng):
    x = crandn(rng, (16, 32))
    np.testing.assert_allclose(dwt4_forward(x, 2), dwt2d_oracle(x, 2), atol=1e-13)


def test_dwt_constant_signal_has_zero_details():
    c = dwt4_forward(np.full(64, 3.0), 3)
    assert np.max(np.abs(c[8:])) < 1e-12


def test_dwt_constant_image_has_zero_details():
    c = Daubechies4((32, 32), 2).apply(np.full((32, 32), 2.0 - 1j))
    c[:8, :8] = 0
    assert np.max(np.abs(c)) < 1e-12


def test_dwt_round_trip_random_64(rng):
    x = rng.standard_normal(64)
    np.testing.assert_allclose(dwt4_inverse(dwt4_forward(x, 4), 4), x, atol=1e-12)


def test_dwt_norm_preservation_sweep(rng):
    for _ in range(100):
        x = crandn(rng, (32,))
        assert abs(np.linalg.norm(dwt4_forward(x, 3)) - np.linalg.norm(x)) <= 1e-12 * np.linalg.norm(x)


def test_daubechies4_is_unitary():
    assert is_unitary(Daubechies4((16, 16), 3))
    assert not is_unitary(Diagonal(np.full((4,), 2.0)))


@pytest.mark.parametrize("n,levels", [(12, 3), (10, 2), (16, 0)])
def test_dwt_invalid_length(n, levels):
    with pytest.raises(DimensionError):
        dwt4_forward(np.zeros(n), levels)


def test_detail_mask_excludes_coarse_block():
    mask = Daubechies4((32, 16), 2).detail_mask()
    assert not mask[:8, :4].any() and mask.sum() == 32 * 16 - 32


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, st.sampled_from([(8,), (16,), (4, 8), (8, 8)]),
              elements=st.floats(-1e3, 1e3, allow_nan=False)),
       st.integers(1, 2))
def test_dwt_round_trip_property(x, levels):
    back = dwt4_inverse(dwt4_forward(x, levels), levels)
    np.testing.assert_allclose(back, x, atol=1e-9 * (1 + np.max(np.abs(x))))


# ----------------------------------------------------------- spectral norms


@pytest.mark.parametrize("method", ["power", "lanczos"])
def test_spectral_norm_identity(method):
    assert spectral_norm_sq(Identity((7,)), method=method) == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("method", ["power", "lanczos"])
def test_spectral_norm_diagonal(method):
    assert spectral_norm_sq(Diagonal(np.array([1.0, 2.0, 3.0])), method=method) == pytest.approx(9.0, abs=1e-9)


@pytest.mark.parametrize("method", ["power", "lanczos"])
def test_spectral_norm_finite_difference_16(method):
    expected = circulant_laplacian_max(16, 16)
    assert expected == pytest.approx(8.0)
    assert spectral_norm_sq(FiniteDifferenceStack((16, 16)), method=method) == pytest.approx(expected, abs=1e-6)


def test_spectral_norm_never_exceeds_truth(rng):
    d = crandn(rng, (50,))
    est = spectral_norm_sq(Diagonal(d))
    assert est <= np.max(np.abs(d)) ** 2 * (1 + 1e-12)


def test_spectral_norm_deterministic():
    op = FiniteDifferenceStack((8, 8))
    assert spectral_norm_sq(op) == spectral_norm_sq(op)


def test_spectral_norm_nonconvergence_carries_estimate():
    with pytest.raises(ConvergenceError) as info:
        spectral_norm_sq(FiniteDifferenceStack((32, 32)), max_iter=3)
    assert info.value.estimate is not None and 0 < info.value.estimate <= 8.0


def test_spectral_norm_rejects_bad_tol():
    with pytest.raises(ValueError):
        spectral_norm_sq(Identity((3,)), tol=0)
