"""Numerical substrate: pointer grids, Hermitian spectral data, states, and
the discrete momentum calculus shared by every engine.

Units are hbar = 1 and unit pointer mass. The pointer lives on a uniform
periodic grid; the momentum operator is defined through the discrete
Fourier transform, so ``exp(-i a P)`` is an exact unitary translation and
the spectral derivative is its generator.
"""

from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np

from .errors import (
    DegenerateDistributionError,
    DisplacementRangeError,
    InvalidStateError,
    NotHermitianError,
)


@dataclass(frozen=True)
class Tolerances:
    """Numerical thresholds used across the package.

    Every check takes an optional ``tol`` argument; pass a modified copy
    (``dataclasses.replace(DEFAULT_TOLERANCES, zero_current=1e-6)``) to
    change a threshold for one call.
    """

    hermitian_rtol: float = 1e-12
    projector_atol: float = 1e-10
    density_trace_atol: float = 1e-10
    min_eigenvalue: float = -1e-10
    pointer_trace_atol: float = 1e-8
    pointer_diag_floor: float = -1e-12
    degeneracy_rtol: float = 1e-9
    negative_density: float = -1e-12
    degenerate_norm: float = 1e-14
    postselection_threshold: float = 1e-12
    zero_current: float = 1e-8
    weakness_ratio: float = 0.1
    remainder_fraction: float = 0.1
    conditional_floor: float = 1e-10


DEFAULT_TOLERANCES = Tolerances()


@dataclass(frozen=True)
class PointerGrid:
    """Uniform periodic grid for the pointer position, centered on zero."""

    n_points: int = 1024
    length: float = 40.0

    def __post_init__(self):
        if int(self.n_points) != self.n_points or self.n_points < 2:
            raise ValueError(f"n_points must be an integer >= 2, got {self.n_points}")
        if not self.length > 0:
            raise ValueError(f"length must be positive, got {self.length}")
        object.__setattr__(self, "n_points", int(self.n_points))
        object.__setattr__(self, "length", float(self.length))

    @classmethod
    def for_width(cls, sigma, n_points=1024, widths=40.0):
        """Default grid for a pointer of position spread ``sigma``."""
        return cls(n_points=n_points, length=widths * sigma)

    @property
    def spacing(self):
        return self.length / self.n_points

    @cached_property
    def positions(self):
        x = (np.arange(self.n_points) - self.n_points // 2) * self.spacing
        x.flags.writeable = False
        return x

    @cached_property
    def wavenumbers(self):
        """Angular wavenumbers in FFT order, spacing 2*pi/length.

        The unpaired Nyquist mode of an even grid is set to zero so that the
        discrete momentum operator maps real kernels to purely imaginary
        ones (real kernels then carry exactly zero current).
        """
        k = 2.0 * np.pi * np.fft.fftfreq(self.n_points, d=self.spacing)
        if self.n_points % 2 == 0:
            k[self.n_points // 2] = 0.0
        k.flags.writeable = False
        return k

    @property
    def momentum_spacing(self):
        return 2.0 * np.pi / self.length


@dataclass(frozen=True)
class HermitianObservable:
    """A Hermitian matrix with its spectral decomposition.

    ``eigenvalues`` lists all ``dim`` eigenvalues in ascending order;
    ``levels`` are the distinct eigenvalues after degeneracy merging and
    ``projectors[i]`` projects onto the eigenspace of ``levels[i]``.
    """

    matrix: np.ndarray
    eigenvalues: np.ndarray
    levels: np.ndarray
    projectors: np.ndarray

    @property
    def dim(self):
        return self.matrix.shape[0]

    def reconstruct(self):
        return np.einsum("j,jab->ab", self.levels, self.projectors)

    def power(self, n):
        """Matrix power through the spectral data (``n >= 0``)."""
        return np.einsum("j,jab->ab", self.levels**n, self.projectors)


def _as_square(matrix):
    m = np.asarray(matrix, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    return m


def hermitian_asymmetry(matrix):
    m = np.asarray(matrix)
    return float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0


def _check_hermitian(m, rtol):
    asym = hermitian_asymmetry(m)
    scale = max(float(np.max(np.abs(m))), 1.0) if m.size else 1.0
    if asym > rtol * scale:
        raise NotHermitianError(asym)


def spectral_decompose(matrix, tol=DEFAULT_TOLERANCES):
    """Eigen-decompose a Hermitian matrix, grouping degenerate eigenvalues.

    Eigenvalues closer than ``tol.degeneracy_rtol`` times the spectral
    range are merged into a single eigenprojector.

    Raises
    ------
    NotHermitianError
        If ``matrix`` deviates from its conjugate transpose.
    """
    m = _as_square(matrix)
    _check_hermitian(m, tol.hermitian_rtol)
    m = 0.5 * (m + m.conj().T)
    vals, vecs = np.linalg.eigh(m)
    spread = vals[-1] - vals[0]
    gap = tol.degeneracy_rtol * (spread if spread > 0 else max(abs(vals[0]), 1.0))

    groups = [[0]]
    for i in range(1, len(vals)):
        if vals[i] - vals[groups[-1][-1]] < gap:
            groups[-1].append(i)
        else:
            groups.append([i])

    levels = np.array([vals[g].mean() for g in groups])
    projectors = np.array([vecs[:, g] @ vecs[:, g].conj().T for g in groups])
    m.flags.writeable = False
    return HermitianObservable(matrix=m, eigenvalues=vals, levels=levels, projectors=projectors)


@dataclass(frozen=True)
class DensityMatrix:
    """Object-space density matrix (Hermitian, unit trace, positive)."""

    matrix: np.ndarray
    tol: Tolerances = field(default=DEFAULT_TOLERANCES, repr=False, compare=False)

    def __post_init__(self):
        m = _as_square(self.matrix)
        asym = hermitian_asymmetry(m)
        if asym > self.tol.hermitian_rtol * max(float(np.max(np.abs(m))), 1.0):
            raise NotHermitianError(asym)
        tr = np.trace(m).real
        if abs(tr - 1.0) > self.tol.density_trace_atol:
            raise InvalidStateError(f"density matrix trace {tr!r} != 1")
        lo = np.linalg.eigvalsh(0.5 * (m + m.conj().T))[0]
        if lo < self.tol.min_eigenvalue:
            raise InvalidStateError(f"density matrix has negative eigenvalue {lo:.3e}")
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self):
        return self.matrix.shape[0]

    @classmethod
    def pure(cls, vector):
        v = np.asarray(vector, dtype=complex)
        v = v / np.linalg.norm(v)
        return cls(np.outer(v, v.conj()))

    @classmethod
    def maximally_mixed(cls, dim):
        return cls(np.eye(dim, dtype=complex) / dim)

    @property
    def purity(self):
        return float(np.real(np.trace(self.matrix @ self.matrix)))


@dataclass(frozen=True)
class PointerState:
    """Pointer density kernel <Q_m|rho|Q_n> on a grid, continuum-normalized.

    Normalization is ``sum(diag) * spacing == 1`` so the diagonal is a
    probability density in Q.
    """

    grid: PointerGrid
    matrix: np.ndarray
    tol: Tolerances = field(default=DEFAULT_TOLERANCES, repr=False, compare=False)

    def __post_init__(self):
        m = _as_square(self.matrix)
        n = self.grid.n_points
        if m.shape != (n, n):
            raise ValueError(f"kernel shape {m.shape} does not match grid of {n} points")
        asym = hermitian_asymmetry(m)
        if asym > self.tol.hermitian_rtol * max(float(np.max(np.abs(m))), 1.0):
            raise NotHermitianError(asym)
        diag = np.diagonal(m)
        norm = diag.real.sum() * self.grid.spacing
        if abs(norm - 1.0) > self.tol.pointer_trace_atol:
            raise InvalidStateError(f"pointer kernel integrates to {norm!r}, expected 1")
        if diag.real.min() < self.tol.pointer_diag_floor:
            raise InvalidStateError(f"pointer density negative: min {diag.real.min():.3e}")
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_wavefunction(cls, grid, psi):
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.sqrt(np.sum(np.abs(psi) ** 2) * grid.spacing)
        return cls(grid, np.outer(psi, psi.conj()))

    @classmethod
    def from_kernel(cls, grid, kernel):
        """Build a state from an unnormalized Hermitian kernel."""
        k = np.asarray(kernel, dtype=complex)
        k = 0.5 * (k + k.conj().T)
        return cls(grid, k / (np.trace(k).real * grid.spacing))

    @property
    def density(self):
        return np.diagonal(self.matrix).real.copy()

    @property
    def purity(self):
        """Tr(rho^2) with the continuum measure: sum |rho_mn|^2 * spacing^2."""
        return float(np.sum(np.abs(self.matrix) ** 2) * self.grid.spacing**2)

    @cached_property
    def momentum_kernel(self):
        """Momentum-index kernel M = F rho F^-1 (F the unnormalized DFT), skewed so
        that row ``s`` holds M[i, (i - s) mod N]; cached for diagonal extraction."""
        m = np.fft.fft(np.fft.ifft(self.matrix, axis=1), axis=0)
        i = np.arange(self.grid.n_points)
        skewed = m[i[None, :], _skew_index(self.grid.n_points)]
        skewed.flags.writeable = False
        return skewed

    def spectrum(self):
        """Eigenvalues of the operator (kernel times spacing), ascending."""
        return np.linalg.eigvalsh(self.matrix * self.grid.spacing)


# --- discrete momentum calculus --------------------------------------------

def apply_momentum_function(values, grid, multiplier, axis=0):
    """Apply ``f(P)`` to ``values`` along ``axis``, with ``multiplier = f(k)``."""
    shape = [1] * np.ndim(values)
    shape[axis] = -1
    spec = np.fft.fft(values, axis=axis) * np.reshape(multiplier, shape)
    return np.fft.ifft(spec, axis=axis)


def sandwich(matrix, grid, left=None, right=None):
    """Return ``A rho B^dagger`` where A = left(P), B = right(P).

    ``left`` and ``right`` are arrays of multipliers in k-space (FFT order)
    or None for the identity.
    """
    out = np.asarray(matrix, dtype=complex)
    if left is not None:
        out = apply_momentum_function(out, grid, left, axis=0)
    if right is not None:
        out = np.conj(apply_momentum_function(np.conj(out), grid, right, axis=1))
    return out


@lru_cache(maxsize=8)
def _skew_index(n):
    idx = (np.arange(n)[None, :] - np.arange(n)[:, None]) % n
    idx.flags.writeable = False
    return idx


def sandwich_diagonal(state, left=None, right=None):
    """Diagonal <Q|A rho B^dagger|Q> for A = left(P), B = right(P), in O(N^2).

    Sums the momentum kernel along its wrapped diagonals, then one inverse
    FFT returns the position diagonal.
    """
    skewed = state.momentum_kernel
    n = state.grid.n_points
    weighted = skewed if right is None else skewed * np.conj(np.asarray(right))[_skew_index(n)]
    sums = weighted @ (np.ones(n) if left is None else np.asarray(left, dtype=complex))
    return np.fft.ifft(sums)


def translation_multiplier(grid, a):
    return np.exp(-1j * grid.wavenumbers * a)


def spectral_derivative(values, grid, order=1):
    """d^n/dQ^n of a periodic array, computed with the grid wavenumbers."""
    mult = (1j * grid.wavenumbers) ** order
    out = apply_momentum_function(values, grid, mult, axis=-1)
    return out.real if np.isrealobj(values) else out


def translate(state, a):
    """Displace a pointer state by ``a``: rho -> T(a) rho T(a)^dagger, T(a) = exp(-i a P).

    Raises
    ------
    DisplacementRangeError
        If ``|a| >= length / 4``; larger shifts would wrap around the box.
    """
    grid = state.grid
    if not abs(a) < grid.length / 4:
        raise DisplacementRangeError(
            f"displacement {a!r} exceeds length/4 = {grid.length / 4!r}"
        )
    if a == 0:
        return state
    phase = translation_multiplier(grid, a)
    out = sandwich(state.matrix, grid, phase, phase)
    out = 0.5 * (out + out.conj().T)
    return PointerState(grid, out, state.tol)


def position_moments(density, grid, tol=DEFAULT_TOLERANCES):
    """Return (mean, std, norm) of a density sampled on ``grid``.

    The density need not be normalized; ``norm`` is its integral.
    """
    rho = np.asarray(density, dtype=float)
    if rho.min() < tol.negative_density:
        raise DegenerateDistributionError(f"density has negative entry {rho.min():.3e}")
    x = grid.positions
    dx = grid.spacing
    norm = rho.sum() * dx
    if norm <= tol.degenerate_norm:
        raise DegenerateDistributionError(f"distribution norm {norm:.3e} is degenerate")
    mean = np.sum(x * rho) * dx / norm
    var = np.sum((x - mean) ** 2 * rho) * dx / norm
    if var < 0:
        if var < tol.negative_density:
            raise DegenerateDistributionError(f"negative variance {var:.3e}")
        var = 0.0
    return float(mean), float(np.sqrt(var)), float(norm)


def momentum_expectation(state, power=1):
    """<P^n> = Tr(P^n rho)."""
    diag = sandwich_diagonal(state, left=state.grid.wavenumbers**power)
    return float(np.sum(diag).real * state.grid.spacing)


def current_density(state):
    """Probability current j(Q) = (<Q|P rho|Q> + <Q|rho P|Q>) / 2."""
    k = state.grid.wavenumbers
    p_rho = sandwich_diagonal(state, left=k)
    rho_p = sandwich_diagonal(state, right=k)
    return (0.5 * (p_rho + rho_p)).real


def normalized_current(state, current=None):
    """max|j| / (momentum spread * max density), the scale-free current measure."""
    j = current_density(state) if current is None else current
    p1 = momentum_expectation(state, 1)
    p2 = momentum_expectation(state, 2)
    sigma_p = np.sqrt(max(p2 - p1**2, 0.0))
    scale = sigma_p * state.density.max()
    if scale <= 0:
        raise DegenerateDistributionError("pointer has no momentum spread")
    return float(np.max(np.abs(j)) / scale)


def has_zero_current(state, tol=DEFAULT_TOLERANCES):
    return normalized_current(state) < tol.zero_current
