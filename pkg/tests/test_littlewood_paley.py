import numpy as np
import pytest

from hyperlc.littlewood_paley import (
    bernstein_ratio,
    lp_decompose,
    lp_project,
    lp_project_gt,
    lp_project_leq,
    mollifier,
    q_indices,
    q_project,
    resolved_shells,
    shell_symbol,
    spatial_cutoff,
)
from hyperlc.spectral import Grid3, SpectralField, dealias, fft3, l2_norm, transform_forward


@pytest.fixture(scope="module")
def grid():
    return Grid3(32, 1.0)


def random_field(grid, seed):
    return SpectralField(grid, dealias(fft3(np.random.default_rng(seed).standard_normal(grid.shape)), grid))


def band_field(grid, seed, lo, hi):
    f = random_field(grid, seed)
    keep = (grid.kmag >= lo) & (grid.kmag < hi)
    return SpectralField(grid, np.where(keep, f.coeffs, 0))


def test_mollifier_shape():
    r = np.linspace(-3, 3, 601)
    m = mollifier(r)
    assert np.all(m[np.abs(r) <= 1] == 1.0)
    assert np.all(m[np.abs(r) >= 2] == 0.0)
    assert np.all((m >= 0) & (m <= 1))
    assert np.array_equal(m, mollifier(-r))


def test_shell_symbols_telescope():
    r = np.linspace(0.01, 40, 4000)
    total = sum(shell_symbol(r, k) for k in range(-8, 8))
    assert np.allclose(total, 1.0, atol=1e-15)


def test_support_example(grid):
    f = band_field(grid, 1, 1.0, 2.0)
    # |xi| in [1, 2) is seen only by the shells k = 0 and its upper neighbour
    for k in (-1, 2, 5):
        assert np.max(np.abs(lp_project(f, k).coeffs)) == 0.0
    near = lp_project(f, 0).coeffs + lp_project(f, 1).coeffs
    assert np.allclose(near, f.coeffs, atol=1e-15)


def test_partition_of_unity(grid):
    f = SpectralField(grid, fft3(np.random.default_rng(2).standard_normal(grid.shape)))
    pieces = lp_decompose(f)
    total = sum(p.coeffs for p in pieces.values())
    total[0, 0, 0] += f.coeffs[0, 0, 0]
    assert np.max(np.abs(total - f.coeffs)) <= 1e-12


def test_leq_gt_split(grid):
    f = random_field(grid, 3)
    for k in (-1, 0, 2):
        assert np.allclose(lp_project_leq(f, k).coeffs + lp_project_gt(f, k).coeffs, f.coeffs, atol=1e-15)
    assert lp_project_leq(f, 0).coeffs[0, 0, 0] == f.coeffs[0, 0, 0]


def test_resolved_shells_cover_grid(grid):
    ks = resolved_shells(grid)
    assert 2.0 ** ks.start <= 1.0 / grid.box_length
    assert 2.0 ** (ks.stop - 1) >= np.sqrt(3) * (grid.n // 2) / grid.box_length


def test_bernstein_constant_over_random_fields(grid):
    rng = np.random.default_rng(4)
    worst = 0.0
    for _ in range(20):
        f = random_field(grid, int(rng.integers(2**31)))
        for k in (0, 1, 2, 3):
            worst = max(worst, bernstein_ratio(f, k))
    assert 0 < worst <= 4.0


def test_spatial_cutoff_cases(grid):
    r = grid.radius
    assert np.array_equal(spatial_cutoff(grid, 0, 2), mollifier(r))
    assert np.array_equal(spatial_cutoff(grid, 2, -2), mollifier(r / 4.0))
    assert np.array_equal(spatial_cutoff(grid, 1, 0), shell_symbol(r, 1))
    with pytest.raises(ValueError):
        spatial_cutoff(grid, 0, -1)
    with pytest.raises(ValueError):
        q_project(random_field(grid, 5), -1, 3)


@pytest.mark.parametrize("k", [-1, 0, 1, 2])
def test_q_reconstruction(grid, k):
    f = random_field(grid, 6)
    total = sum(q_project(f, j, k).coeffs for j in q_indices(grid, k))
    assert np.max(np.abs(total - lp_project(f, k).coeffs)) <= 1e-10


def test_q_vanishes_far_from_a_centered_bump():
    # P_k spreads the bump by its kernel tail, so the pieces decay in j rather than vanish
    g = Grid3(32, 2.0)
    f = transform_forward(np.exp(-((g.radius / 0.4) ** 2)), g)
    norms = [l2_norm(q_project(f, j, 3)) for j in q_indices(g, 3)]
    assert all(b < a for a, b in zip(norms[:-2], norms[1:-1]))
    assert norms[4] <= 1e-5 * norms[0]
