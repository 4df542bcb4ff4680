import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from weaklab.core import (
    DensityMatrix,
    PointerGrid,
    PointerState,
    current_density,
    momentum_expectation,
    normalized_current,
    position_moments,
    sandwich,
    sandwich_diagonal,
    spectral_decompose,
    spectral_derivative,
    translate,
)
from weaklab.errors import (
    DegenerateDistributionError,
    DisplacementRangeError,
    InvalidStateError,
    NotHermitianError,
)
from weaklab.gallery import boosted_pointer, gaussian_pointer, thermal_pointer


def random_hermitian(rng, n):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return a + a.conj().T


# --- grid -------------------------------------------------------------------

def test_grid_geometry():
    g = PointerGrid(512, 20.0)
    assert g.spacing * g.n_points == pytest.approx(g.length, rel=1e-15)
    assert np.all(np.diff(g.positions) > 0)
    np.testing.assert_allclose(np.diff(g.positions), g.spacing, rtol=1e-12)
    assert g.positions[g.n_points // 2] == 0.0
    k = np.sort(np.unique(np.abs(g.wavenumbers)))
    assert k[1] == pytest.approx(2 * np.pi / g.length)


@pytest.mark.parametrize("kwargs", [{"n_points": 1}, {"length": 0.0}, {"length": -3.0}])
def test_grid_rejects_bad_parameters(kwargs):
    with pytest.raises(ValueError):
        PointerGrid(**kwargs)


# --- spectral decomposition ---------------------------------------------------

def test_identity_has_single_projector():
    obs = spectral_decompose(np.eye(2))
    np.testing.assert_array_equal(obs.levels, [1.0])
    np.testing.assert_allclose(obs.projectors[0], np.eye(2), atol=1e-15)


def test_pauli_z():
    obs = spectral_decompose(np.diag([1.0, -1.0]))
    np.testing.assert_allclose(obs.eigenvalues, [-1, 1])
    np.testing.assert_allclose(obs.projectors[0], np.diag([0, 1]), atol=1e-15)
    np.testing.assert_allclose(obs.projectors[1], np.diag([1, 0]), atol=1e-15)


def test_spectral_round_trip_many_random_matrices():
    rng = np.random.default_rng(7)
    for trial in range(200):
        n = 2 + trial % 7
        h = random_hermitian(rng, n)
        obs = spectral_decompose(h)
        assert np.max(np.abs(obs.reconstruct() - h)) < 1e-10
        assert np.all(np.diff(obs.eigenvalues) >= 0)
        np.testing.assert_allclose(obs.projectors.sum(axis=0), np.eye(n), atol=1e-10)
        for i, p in enumerate(obs.projectors):
            np.testing.assert_allclose(p @ p, p, atol=1e-10)
            for q in obs.projectors[i + 1:]:
                np.testing.assert_allclose(p @ q, 0, atol=1e-10)


def test_degenerate_eigenvalues_merge():
    rng = np.random.default_rng(3)
    u, _ = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))
    h = u @ np.diag([2.0, 2.0 + 1e-13, -1.0, 5.0]) @ u.conj().T
    obs = spectral_decompose(h)
    assert len(obs.levels) == 3
    ranks = [round(np.trace(p).real) for p in obs.projectors]
    assert ranks == [1, 2, 1]


def test_non_hermitian_rejected_with_asymmetry():
    with pytest.raises(NotHermitianError) as info:
        spectral_decompose(np.array([[1.0, 2.0], [0.5, 1.0]]))
    assert info.value.max_asymmetry == pytest.approx(1.5)
    assert "1.5" in str(info.value)


# --- states -------------------------------------------------------------------

def test_density_matrix_invariants():
    DensityMatrix.pure([1, 1j])
    with pytest.raises(InvalidStateError):
        DensityMatrix(np.diag([0.7, 0.7]))
    with pytest.raises(InvalidStateError):
        DensityMatrix(np.diag([1.2, -0.2]))
    with pytest.raises(NotHermitianError):
        DensityMatrix(np.array([[0.5, 0.3], [0.0, 0.5]]))


def test_pointer_state_normalization_enforced(small_grid):
    psi = np.exp(-small_grid.positions**2)
    with pytest.raises(InvalidStateError):
        PointerState(small_grid, np.outer(psi, psi))
    state = PointerState.from_wavefunction(small_grid, psi)
    assert state.density.sum() * small_grid.spacing == pytest.approx(1.0, abs=1e-12)


# --- translation ----------------------------------------------------------------

def test_translate_zero_is_identity(grid):
    g = gaussian_pointer(1.0, grid=grid)
    assert np.max(np.abs(translate(g, 0.0).matrix - g.matrix)) <= 1e-14


def test_translate_moves_peak(grid):
    g = gaussian_pointer(1.0, grid=grid)
    moved = translate(g, 0.5)
    nearest = grid.positions[np.argmin(np.abs(grid.positions - 0.5))]
    assert grid.positions[np.argmax(moved.density)] == nearest


def test_translate_group_property(grid):
    t = thermal_pointer(1.0, 1.0, grid=grid)
    back = translate(translate(t, 0.73), -0.73)
    assert np.max(np.abs(back.matrix - t.matrix)) < 1e-10


def test_translate_is_unitary(small_grid):
    t = thermal_pointer(1.0, 2.0, grid=PointerGrid(256, 30.0))
    moved = translate(t, 1.37)
    assert np.trace(moved.matrix).real * moved.grid.spacing == pytest.approx(1.0, abs=1e-10)
    np.testing.assert_allclose(moved.spectrum(), t.spectrum(), atol=1e-10)


def test_translate_range_guard(grid):
    g = gaussian_pointer(1.0, grid=grid)
    with pytest.raises(DisplacementRangeError):
        translate(g, grid.length / 4)


def test_translate_matches_continuum_shift(grid):
    g = gaussian_pointer(1.0, grid=grid)
    expected = gaussian_pointer(1.0, center=0.3, grid=grid)
    np.testing.assert_allclose(translate(g, 0.3).matrix, expected.matrix, atol=1e-12)


def test_sandwich_diagonal_matches_full_product(small_grid, rng):
    a = rng.normal(size=(256, 256)) + 1j * rng.normal(size=(256, 256))
    state = PointerState.from_kernel(small_grid, a @ a.conj().T)
    left = rng.normal(size=256) + 1j * rng.normal(size=256)
    right = rng.normal(size=256) + 1j * rng.normal(size=256)
    full = np.diagonal(sandwich(state.matrix, small_grid, left, right))
    np.testing.assert_allclose(sandwich_diagonal(state, left, right), full, atol=1e-10)


def test_spectral_derivative_of_gaussian(grid):
    x = grid.positions
    f = np.exp(-(x**2) / 2)
    np.testing.assert_allclose(spectral_derivative(f, grid), -x * f, atol=1e-12)
    np.testing.assert_allclose(spectral_derivative(f, grid, 2), (x**2 - 1) * f, atol=1e-11)


# --- moments ----------------------------------------------------------------------

def test_moments_of_gaussian(grid):
    x = grid.positions
    rho = np.exp(-(x**2) / 2) / np.sqrt(2 * np.pi)
    mean, std, norm = position_moments(rho, grid)
    assert abs(mean) < 1e-8
    assert std == pytest.approx(1.0, abs=1e-4)
    assert norm == pytest.approx(1.0, abs=1e-10)


def test_moments_of_single_bin(grid):
    rho = np.zeros(grid.n_points)
    i = np.argmin(np.abs(grid.positions - 2.0))
    rho[i] = 1.0
    mean, std, _ = position_moments(rho, grid)
    assert mean == pytest.approx(grid.positions[i])
    assert std == 0.0


def test_moments_of_two_gaussian_mixture(grid):
    # mixture of N(+-3, 0.5^2): variance = 0.5^2 + 3^2 = 9.25
    x = grid.positions
    g = lambda c: np.exp(-((x - c) ** 2) / (2 * 0.25)) / np.sqrt(2 * np.pi * 0.25)
    mean, std, _ = position_moments(0.5 * (g(3) + g(-3)), grid)
    assert abs(mean) < 1e-10
    assert std == pytest.approx(np.sqrt(9.25), abs=1e-3)


def test_moments_reject_degenerate(grid):
    with pytest.raises(DegenerateDistributionError):
        position_moments(np.zeros(grid.n_points), grid)
    bad = np.zeros(grid.n_points)
    bad[3] = -1e-6
    with pytest.raises(DegenerateDistributionError):
        position_moments(bad, grid)


# --- current density ------------------------------------------------------------

def test_real_gaussian_has_no_current(grid):
    g = gaussian_pointer(1.0, grid=grid)
    assert normalized_current(g) < 1e-10


def test_thermal_has_no_current(grid):
    assert normalized_current(thermal_pointer(1.0, 1.0, grid=grid)) < 1e-10


def test_boosted_gaussian_current(grid):
    b = boosted_pointer(1.0, 1.0, grid=grid)
    j = current_density(b)
    c = grid.n_points // 2
    # analytic current of exp(i k0 Q) g(Q) is k0 |g|^2
    assert j[c] == pytest.approx(1.0 * b.density[c], rel=1e-6)


def test_current_integrates_to_mean_momentum(grid):
    for k0 in (0.0, 0.4, -1.3):
        b = boosted_pointer(k0, 1.0, grid=grid)
        j = current_density(b)
        assert np.sum(j) * grid.spacing == pytest.approx(momentum_expectation(b), abs=1e-8)
        assert momentum_expectation(b) == pytest.approx(k0, abs=1e-8)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), rank=st.integers(1, 6))
def test_real_psd_kernels_carry_no_current(seed, rank):
    g = PointerGrid(128, 20.0)
    rng = np.random.default_rng(seed)
    x = g.positions
    vecs = []
    for _ in range(rank):
        c, w = rng.uniform(-4, 4), rng.uniform(0.8, 2.0)
        poly = np.polynomial.polynomial.polyval(x - c, rng.normal(size=3))
        vecs.append(poly * np.exp(-((x - c) ** 2) / (2 * w * w)))
    v = np.array(vecs)
    state = PointerState.from_kernel(g, v.T @ np.diag(rng.uniform(0.1, 1, rank)) @ v)
    j = current_density(state)
    assert np.max(np.abs(j)) < 1e-10 * state.density.max()
    assert normalized_current(state) < 1e-10
