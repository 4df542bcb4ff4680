"""Canonical pointer and object states.

Pointer presets cover the zero-current class (pure Gaussian, thermal,
two-Gaussian superposition, two-Gaussian mixture) and current-carrying
counterexamples (boosted and chirped Gaussians). Object presets are the
standard pre/postselection setups, each with its reference weak values.
"""

from dataclasses import dataclass, field

import numpy as np

from .classical import GaussianPhaseDensity
from .core import DensityMatrix, PointerGrid, PointerState, position_moments, spectral_decompose
from .errors import ResolutionError

SIGMA_Z = np.diag([1.0, -1.0]).astype(complex)


def _gaussian_amplitude(x, sigma, center=0.0):
    return (2 * np.pi * sigma**2) ** -0.25 * np.exp(-((x - center) ** 2) / (4 * sigma**2))


def _check_width(sigma, grid, what="sigma"):
    if not sigma > 4 * grid.spacing:
        raise ResolutionError(
            f"{what}={sigma!r} under-resolved: needs > 4 * spacing = {4 * grid.spacing!r}"
        )


def _check_center(offset, grid):
    if not abs(offset) < grid.length / 8:
        raise ResolutionError(f"offset {offset!r} must stay within length/8 = {grid.length / 8!r}")


def gaussian_pointer(sigma=1.0, center=0.0, grid=None):
    """Pure real Gaussian with position standard deviation ``sigma``."""
    grid = grid or PointerGrid.for_width(sigma)
    _check_width(sigma, grid)
    _check_center(center, grid)
    return PointerState.from_wavefunction(grid, _gaussian_amplitude(grid.positions, sigma, center))


def thermal_pointer(frequency=1.0, temperature=1.0, grid=None):
    """Gibbs state of a unit-mass harmonic oscillator, from its closed-form kernel.

    rho(x, x') ~ exp(-a (x^2 + x'^2) + b x x') with
    a = w coth(w/T) / 2 and b = w / sinh(w/T).
    """
    w, beta = float(frequency), 1.0 / float(temperature)
    if not (w > 0 and beta > 0):
        raise ValueError("frequency and temperature must be positive")
    bw = beta * w
    variance = 0.5 / w / np.tanh(bw / 2)
    std = np.sqrt(variance)
    grid = grid or PointerGrid.for_width(std)
    _check_width(std, grid, "thermal position std")
    if not std < grid.length / 10:
        raise ResolutionError(f"thermal std {std!r} too wide for box length {grid.length!r}")
    a = 0.5 * w / np.tanh(bw)
    b = w / np.sinh(bw)
    x = grid.positions
    kernel = np.exp(-a * (x[:, None] ** 2 + x[None, :] ** 2) + b * np.outer(x, x))
    return PointerState.from_kernel(grid, kernel)


def thermal_purity(frequency, temperature):
    return float(np.tanh(frequency / temperature / 2))


def superposition_pointer(separation=6.0, sigma=1.0, grid=None):
    """Pure symmetric superposition of two real Gaussians at +-separation/2."""
    grid = grid or PointerGrid.for_width(sigma)
    _check_width(sigma, grid)
    _check_center(separation / 2, grid)
    x = grid.positions
    psi = _gaussian_amplitude(x, sigma, -separation / 2) + _gaussian_amplitude(x, sigma, separation / 2)
    return PointerState.from_wavefunction(grid, psi)


def mixture_pointer(separation=6.0, sigma=1.0, grid=None):
    """50/50 incoherent mixture of two real Gaussians at +-separation/2."""
    grid = grid or PointerGrid.for_width(sigma)
    _check_width(sigma, grid)
    _check_center(separation / 2, grid)
    x = grid.positions
    g1 = _gaussian_amplitude(x, sigma, -separation / 2)
    g2 = _gaussian_amplitude(x, sigma, separation / 2)
    return PointerState.from_kernel(grid, 0.5 * (np.outer(g1, g1) + np.outer(g2, g2)))


def mixture_purity(separation, sigma):
    return float((1 + np.exp(-(separation**2) / (4 * sigma**2))) / 2)


def boosted_pointer(k0=1.0, sigma=1.0, grid=None):
    """Gaussian times exp(i k0 Q); carries current k0 |g(Q)|^2."""
    grid = grid or PointerGrid.for_width(sigma)
    _check_width(sigma, grid)
    if abs(k0) >= 0.5 * np.pi / grid.spacing:
        raise ResolutionError(f"boost k0={k0!r} beyond half the grid Nyquist wavenumber")
    x = grid.positions
    return PointerState.from_wavefunction(grid, _gaussian_amplitude(x, sigma) * np.exp(1j * k0 * x))


def chirped_pointer(chirp=0.25, sigma=1.0, grid=None):
    """Gaussian times exp(i chirp Q^2): current 2 chirp Q |g|^2, Q-P covariance 2 chirp sigma^2."""
    grid = grid or PointerGrid.for_width(sigma)
    _check_width(sigma, grid)
    x = grid.positions
    return PointerState.from_wavefunction(
        grid, _gaussian_amplitude(x, sigma) * np.exp(1j * chirp * x**2)
    )


@dataclass(frozen=True)
class PointerPreset:
    name: str
    constructor: object
    parameters: dict = field(default_factory=dict)
    expected_zero_current: bool = True
    description: str = ""

    def build(self, grid=None, **overrides):
        params = {**self.parameters, **overrides}
        return self.constructor(grid=grid, **params)


POINTER_PRESETS = {
    p.name: p
    for p in [
        PointerPreset("gaussian", gaussian_pointer, {"sigma": 1.0}, True,
                      "pure real Gaussian"),
        PointerPreset("thermal", thermal_pointer, {"frequency": 1.0, "temperature": 1.0}, True,
                      "harmonic-oscillator Gibbs state, hbar*w/kT = 1"),
        PointerPreset("superposition", superposition_pointer, {"separation": 6.0, "sigma": 1.0}, True,
                      "coherent sum of two real Gaussians"),
        PointerPreset("mixture", mixture_pointer, {"separation": 6.0, "sigma": 1.0}, True,
                      "incoherent mixture of two real Gaussians"),
        PointerPreset("boosted", boosted_pointer, {"k0": 1.0, "sigma": 1.0}, False,
                      "Gaussian with momentum boost, nonzero current"),
        PointerPreset("chirped", chirped_pointer, {"chirp": 0.25, "sigma": 1.0}, False,
                      "Gaussian with quadratic phase, position-dependent current"),
    ]
}


def default_grid_for(preset_name, n_points=1024, **overrides):
    """The default 40-sigma grid sized to a pointer preset's position spread."""
    preset = POINTER_PRESETS[preset_name]
    params = {**preset.parameters, **overrides}
    if preset_name == "thermal":
        w, t = params["frequency"], params["temperature"]
        width = np.sqrt(0.5 / w / np.tanh(w / t / 2))
    else:
        width = params["sigma"]
    return PointerGrid.for_width(width, n_points=n_points)


def pointer_std(state):
    return position_moments(state.density, state.grid)[1]


@dataclass(frozen=True)
class ObjectPreset:
    """Object-side data for one experiment plus reference weak values per outcome."""

    name: str
    object_state: DensityMatrix
    observable: object
    postselection: np.ndarray
    reference_weak_values: tuple
    note: str = ""

    @property
    def postselection_vectors(self):
        return [self.postselection[:, i] for i in range(self.postselection.shape[1])]


def _basis(*vectors):
    return np.column_stack([np.asarray(v, dtype=complex) for v in vectors])


def object_presets():
    s = 1 / np.sqrt(2)
    plus = np.array([s, s], dtype=complex)
    th = np.pi / 3
    d_anom = np.array([np.cos(th), -np.sin(th)], dtype=complex)
    d_anom_perp = np.array([np.sin(th), np.cos(th)], dtype=complex)
    d_imag = np.array([s, 1j * s])
    d_imag_perp = np.array([s, -1j * s])
    sz = spectral_decompose(SIGMA_Z)

    sigma_x = np.array([[0, 1], [1, 0]], dtype=complex)
    d_mixed = np.array([np.cos(0.3), np.exp(0.7j) * np.sin(0.3)])
    d_mixed_perp = np.array([-np.exp(-0.7j) * np.sin(0.3), np.cos(0.3)])

    q_obs = np.diag([1.0, 1.0, -1.0]).astype(complex)
    psi3 = np.array([1, 1j, 1], dtype=complex) / np.sqrt(3)
    d3 = _basis([1, 1, 1], [1, -1, 0], [1, 1, -2])
    d3 = d3 / np.linalg.norm(d3, axis=0)
    # <d|c|psi>/<d|psi> for each outcome of the qutrit basis
    qutrit_wv = tuple(
        complex((d3[:, i].conj() @ q_obs @ psi3) / (d3[:, i].conj() @ psi3)) for i in range(3)
    )

    sqrt3 = np.sqrt(3)
    return [
        ObjectPreset(
            "projective", DensityMatrix.pure(plus), sz, _basis([1, 0], [0, 1]),
            (1.0 + 0j, -1.0 + 0j),
            "postselection in the eigenbasis of sigma_z; weak value equals the eigenvalue",
        ),
        ObjectPreset(
            "anomalous", DensityMatrix.pure(plus), sz, _basis(d_anom, d_anom_perp),
            (complex(-(2 + sqrt3)), complex(2 - sqrt3)),
            "(|0>+|1>)/sqrt2 postselected at angle pi/3: -(2+sqrt3) lies outside [-1, 1]",
        ),
        ObjectPreset(
            "imaginary", DensityMatrix.pure(plus), sz, _basis(d_imag, d_imag_perp),
            (1j, -1j),
            "postselection on (|0>+i|1>)/sqrt2 gives a purely imaginary weak value",
        ),
        ObjectPreset(
            "mixed", DensityMatrix.maximally_mixed(2), spectral_decompose(sigma_x),
            _basis(d_mixed, d_mixed_perp),
            tuple(complex(v.conj() @ sigma_x @ v) for v in (d_mixed, d_mixed_perp)),
            "maximally mixed object; weak value reduces to <d|c|d>",
        ),
        ObjectPreset(
            "qutrit", DensityMatrix.pure(psi3), spectral_decompose(q_obs), d3,
            qutrit_wv,
            "degenerate observable diag(1, 1, -1); exercises eigenprojector grouping",
        ),
    ]


OBJECT_PRESETS = {p.name: p for p in object_presets()}


# --- classical phase-space presets ------------------------------------------

CLASSICAL_OBJECT_PRESETS = {
    "standard": GaussianPhaseDensity(),
    "correlated": GaussianPhaseDensity(correlation=0.8),
}

CLASSICAL_POINTER_PRESETS = {
    # name -> (density, expected_zero_current)
    "gaussian": (GaussianPhaseDensity(), True),
    "drifting": (GaussianPhaseDensity(mean_y=0.5), False),
    "correlated": (GaussianPhaseDensity(correlation=0.6), False),
}
