import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dnmaps.boundary import (BoundaryFunction, BoundaryOperator, antiderivative_matrix,
                             band_projector, derivative_matrix, fourier_antiderivative,
                             fourier_derivative, l2_norm, operator_norm, osc_norm,
                             read_csv, read_operator_csv, resample, shift_matrix,
                             sobolev_norm, write_csv, write_operator_csv)
from dnmaps.errors import InvalidInput

N, L = 64, 2 * np.pi


def _trig(coeffs, n=N, length=L):
    t = length * np.arange(n) / n
    k = 2 * np.pi / length
    return sum(a * np.cos(j * k * t) + b * np.sin(j * k * t)
               for j, (a, b) in enumerate(coeffs, start=1))


coeff_lists = st.lists(st.tuples(st.floats(-1, 1), st.floats(-1, 1)), min_size=1, max_size=20)


def test_derivative_of_sine_is_cosine():
    t = L * np.arange(N) / N
    d = fourier_derivative(BoundaryFunction(np.sin(3 * t), L))
    assert np.allclose(d.samples, 3 * np.cos(3 * t), atol=1e-12)


def test_derivative_respects_length_scaling():
    length = 5.0
    t = length * np.arange(N) / N
    w = 2 * np.pi * 2 / length
    d = fourier_derivative(BoundaryFunction(np.cos(w * t), length))
    assert np.allclose(d.samples, -w * np.sin(w * t), atol=1e-12)


def test_antiderivative_inverts_derivative_on_mean_zero():
    f = BoundaryFunction(_trig([(0.3, -0.2), (0.0, 1.0), (0.5, 0.1)]), L)
    back = fourier_antiderivative(fourier_derivative(f))
    assert np.allclose(back.samples, f.samples, atol=1e-13)


def test_antiderivative_kills_constants_and_nyquist():
    A = antiderivative_matrix(N, L)
    assert np.allclose(A @ np.ones(N), 0, atol=1e-14)
    assert np.allclose(A @ (-1.0) ** np.arange(N), 0, atol=1e-14)


@given(st.integers(0, N - 1), coeff_lists)
def test_derivative_and_antiderivative_commute_with_rotation(shift, coeffs):
    f = _trig(coeffs)
    S = shift_matrix(N, shift)
    assert np.allclose(S @ f, np.roll(f, shift), atol=1e-12)
    for op in (derivative_matrix(N, L), antiderivative_matrix(N, L)):
        assert np.allclose(op @ (S @ f), S @ (op @ f), atol=1e-10)


def test_sobolev_zero_is_l2_quadrature():
    t = L * np.arange(N) / N
    f = BoundaryFunction(np.cos(t) + 0.5, L)
    exact = np.sqrt(np.pi + 0.25 * 2 * np.pi)
    assert sobolev_norm(f, 0.0) == pytest.approx(exact, rel=1e-13)
    assert l2_norm(f) == pytest.approx(exact, rel=1e-13)


def test_sobolev_one_of_a_mode():
    t = L * np.arange(N) / N
    f = BoundaryFunction(np.sin(4 * t), L)
    assert sobolev_norm(f, 1.0) == pytest.approx(np.sqrt(np.pi * 17), rel=1e-13)


@given(coeff_lists)
def test_sobolev_zero_equals_l2(coeffs):
    f = BoundaryFunction(_trig(coeffs) + 0.1, L)
    assert sobolev_norm(f, 0.0) == pytest.approx(l2_norm(f), rel=1e-12, abs=1e-14)


def test_operator_norm_of_derivative_h1_to_l2():
    # sup_k |k| / sqrt(1 + k^2) over resolved modes
    D = BoundaryOperator(derivative_matrix(N, L), L)
    k = N // 2 - 1
    assert operator_norm(D, 1.0, 0.0) == pytest.approx(k / np.sqrt(1 + k * k), rel=1e-12)


@given(st.integers(0, 2 ** 31), st.sampled_from([(0.0, 0.0), (1.0, 0.0), (0.5, -0.5)]))
def test_operator_norm_submultiplicative(seed, s):
    rng = np.random.default_rng(seed)
    A = BoundaryOperator(rng.normal(size=(16, 16)), 3.0)
    B = BoundaryOperator(rng.normal(size=(16, 16)), 3.0)
    s_in, s_out = s
    lhs = operator_norm(A @ B, s_in, s_out)
    rhs = operator_norm(A, s_out, s_out) * operator_norm(B, s_in, s_out)
    assert lhs <= rhs * (1 + 1e-12)


@given(coeff_lists, st.floats(-10, 10))
def test_osc_invariant_under_constants(coeffs, c):
    f = _trig(coeffs)
    assert osc_norm(f + c) == pytest.approx(osc_norm(f), abs=1e-9)
    assert osc_norm(-f) == pytest.approx(osc_norm(f), abs=1e-12)


def test_band_projector_is_orthogonal_projection():
    P = band_projector(N, 5)
    assert np.allclose(P @ P, P, atol=1e-13)
    assert np.allclose(P, P.T, atol=1e-13)
    assert np.trace(P) == pytest.approx(10)
    assert np.trace(band_projector(N, 5, keep_mean=True)) == pytest.approx(11)


def test_resample_is_exact_on_band_limited_data():
    f = BoundaryFunction(_trig([(0.2, 0.1), (0.0, -0.4)], n=32), L)
    g = resample(f, 128)
    assert np.allclose(g.samples, _trig([(0.2, 0.1), (0.0, -0.4)], n=128), atol=1e-13)
    assert np.allclose(resample(g, 32).samples, f.samples, atol=1e-13)


def test_fractional_shift_of_a_mode():
    t = np.arange(N)
    S = shift_matrix(N, 0.37)
    assert np.allclose(S @ np.cos(2 * np.pi * 3 * t / N),
                       np.cos(2 * np.pi * 3 * (t - 0.37) / N), atol=1e-13)


def test_grid_mismatch_rejected():
    A = BoundaryOperator(np.eye(8), 1.0)
    with pytest.raises(InvalidInput):
        A(BoundaryFunction(np.zeros(8), 2.0))
    with pytest.raises(InvalidInput):
        BoundaryFunction(np.zeros(7), 1.0)


def test_csv_round_trips(tmp_path):
    rng = np.random.default_rng(1)
    f = BoundaryFunction(rng.normal(size=16), 1.7)
    write_csv(tmp_path / "f.csv", f)
    assert np.array_equal(read_csv(tmp_path / "f.csv", 1.7).samples, f.samples)
    A = BoundaryOperator(rng.normal(size=(16, 16)), 1.7)
    write_operator_csv(tmp_path / "a.csv", A)
    B = read_operator_csv(tmp_path / "a.csv")
    assert np.array_equal(B.matrix, A.matrix) and B.length == A.length
