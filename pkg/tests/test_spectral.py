import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hyperlc.spectral import (
    Grid3,
    SpectralField,
    VectorField3,
    dealias,
    dealias_product,
    derivative_symbol,
    differentiate,
    fft3,
    ifft3,
    l2_norm,
    reflect,
    sobolev_norm,
    sup_norm,
    transform_forward,
    transform_inverse,
)


@pytest.fixture(scope="module")
def grid():
    return Grid3(16, 1.0)


def field(grid, f):
    return transform_forward(f, grid)


def test_grid_validation():
    for n in (6, 7, 15, 0):
        with pytest.raises(ValueError):
            Grid3(n)
    with pytest.raises(ValueError):
        Grid3(16, box_length=0.0)
    with pytest.raises(ValueError):
        Grid3(16, dealias_fraction=1.5)


def test_wave_numbers_are_multiples_of_inverse_box_length():
    g = Grid3(8, 2.0)
    assert np.allclose(g.k1d, np.array([0, 1, 2, 3, -4, -3, -2, -1]) / 2.0)
    assert g.side == pytest.approx(4 * np.pi)
    assert g.x[0][0, 0, 0] == 0.0


def test_constant_field_maps_to_mean_mode(grid):
    c = field(grid, np.ones(grid.shape)).coeffs
    assert c[0, 0, 0] == pytest.approx(1.0)
    c[0, 0, 0] = 0
    assert np.max(np.abs(c)) < 1e-15


def test_cosine_has_two_equal_modes(grid):
    c = field(grid, np.cos(grid.x[0] + 0 * grid.radius)).coeffs
    assert c[1, 0, 0] == pytest.approx(0.5)
    assert c[-1, 0, 0] == pytest.approx(0.5)
    c[1, 0, 0] = c[-1, 0, 0] = 0
    assert np.max(np.abs(c)) < 1e-15


def test_shape_mismatch_rejected(grid):
    with pytest.raises(ValueError):
        transform_forward(np.zeros((8, 8, 8)), grid)


def test_roundtrip_random(grid):
    f = np.random.default_rng(1).standard_normal(grid.shape)
    back = transform_inverse(transform_forward(f, grid))
    assert np.max(np.abs(back - f)) <= 1e-13 * np.max(np.abs(f))


def test_derivatives_of_cosine(grid):
    x1 = grid.x[0] + 0 * grid.radius
    f = field(grid, np.cos(x1))
    assert np.allclose(differentiate(f, 1).physical(), -np.sin(x1), atol=1e-13)
    assert np.max(np.abs(differentiate(f, 2).physical())) < 1e-14


def test_second_derivative_of_exponential(grid):
    x1 = grid.x[0] + 0 * grid.radius
    f = field(grid, np.exp(3j * x1))
    assert np.allclose(differentiate(f, 1, 2).physical(), -9 * np.exp(3j * x1), atol=1e-12)


def test_derivative_zeroes_nyquist_for_odd_orders_only(grid):
    nyq = grid.nyquist_axis[0][:, 0, 0]
    assert np.all(derivative_symbol(grid, 1, 1)[nyq] == 0)
    assert np.all(derivative_symbol(grid, 1, 2)[nyq] != 0)


def test_derivatives_commute(grid):
    f = field(grid, np.random.default_rng(2).standard_normal(grid.shape))
    a = differentiate(differentiate(f, 1), 3).coeffs
    b = differentiate(differentiate(f, 3), 1).coeffs
    # equal up to floating-point reassociation of the two symbol products
    assert np.allclose(a, b, rtol=1e-15, atol=0)


def test_dealias_product_identity_factor(grid):
    f = field(grid, np.random.default_rng(3).standard_normal(grid.shape))
    one = field(grid, np.ones(grid.shape))
    assert np.allclose(dealias_product([f, one]).coeffs, dealias(f.coeffs, grid), atol=1e-15)


def test_dealias_product_cosine_square(grid):
    x1 = grid.x[0] + 0 * grid.radius
    f = field(grid, np.cos(x1))
    assert np.allclose(dealias_product([f, f]).physical(), 0.5 + 0.5 * np.cos(2 * x1), atol=1e-14)


def _band_limited(grid, rng):
    """Random real field on the retained cube; sums of two supports exceed Nyquist."""
    return SpectralField(grid, dealias(fft3(rng.standard_normal(grid.shape)), grid))


def test_dealias_product_matches_padded_convolution(grid):
    rng = np.random.default_rng(4)
    f, g = _band_limited(grid, rng), _band_limited(grid, rng)
    # exact product on a grid large enough to hold every sum of retained modes
    n, m = grid.n, 2 * grid.n
    idx = np.r_[0:n // 2, m - n // 2:m]

    def pad(c):
        big = np.zeros((m, m, m), complex)
        big[np.ix_(idx, idx, idx)] = c
        return big

    exact = fft3(ifft3(pad(f.coeffs)) * ifft3(pad(g.coeffs)))[np.ix_(idx, idx, idx)]
    got = dealias_product([f, g]).coeffs
    assert np.allclose(got, dealias(exact, grid), atol=1e-14)
    assert np.allclose(got, dealias_product([g, f]).coeffs, atol=1e-16)


def test_dealias_product_arity_and_grid_checks(grid):
    f = field(grid, np.ones(grid.shape))
    with pytest.raises(ValueError):
        dealias_product([f])
    with pytest.raises(ValueError):
        dealias_product([f] * 5)
    with pytest.raises(ValueError):
        dealias_product([f, field(Grid3(8), np.ones((8, 8, 8)))])


def test_sobolev_norms(grid):
    zero = SpectralField(grid, grid.zeros())
    assert sobolev_norm(zero, 2) == 0.0
    x1 = grid.x[0] + 0 * grid.radius
    f = field(grid, np.exp(1j * x1))
    assert sobolev_norm(f, 1) == pytest.approx(np.sqrt(2) * l2_norm(f), rel=1e-14)
    with pytest.raises(ValueError):
        sobolev_norm(f, -1)


def test_parseval(grid):
    f = np.random.default_rng(5).standard_normal(grid.shape)
    direct = np.sqrt(np.mean(f**2) * grid.volume)
    assert l2_norm(field(grid, f)) == pytest.approx(direct, rel=1e-12)


def test_sup_norm(grid):
    x1 = grid.x[0] + 0 * grid.radius
    assert sup_norm(field(grid, np.cos(x1))) == pytest.approx(1.0)
    assert sup_norm(SpectralField(grid, grid.zeros())) == 0.0


def test_sup_norm_against_oversampling():
    # sampling error is at most 1 - cos(pi m / n) per mode of order m
    g = Grid3(32, 1.0)
    x1, x2 = g.x[0] + 0 * g.radius, g.x[1] + 0 * g.radius
    f = field(g, np.cos(x1 + 0.3) + 0.7 * np.sin(2 * x2 + 1.1))
    t = np.linspace(-np.pi, np.pi, 8 * 32, endpoint=False)
    dense = np.max(np.abs(np.cos(t[:, None] + 0.3) + 0.7 * np.sin(2 * t[None, :] + 1.1)))
    assert abs(sup_norm(f) - dense) <= 0.02 * dense


def test_vector_field_requires_shared_grid():
    a = SpectralField(Grid3(8), np.zeros((8, 8, 8), complex))
    b = SpectralField(Grid3(10), np.zeros((10, 10, 10), complex))
    with pytest.raises(ValueError):
        VectorField3.from_components([a, a, b])


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_real_fields_have_hermitian_coefficients(seed):
    g = Grid3(8)
    f = field(g, np.random.default_rng(seed).standard_normal(g.shape))
    assert f.is_real()
    assert np.allclose(reflect(reflect(f.coeffs)), f.coeffs)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), a=st.floats(-3, 3), b=st.floats(-3, 3))
def test_differentiate_is_linear(seed, a, b):
    g = Grid3(8)
    rng = np.random.default_rng(seed)
    f, h = (field(g, rng.standard_normal(g.shape)) for _ in range(2))
    lhs = differentiate(a * f + b * h, 2).coeffs
    rhs = a * differentiate(f, 2).coeffs + b * differentiate(h, 2).coeffs
    assert np.allclose(lhs, rhs, atol=1e-12)
