"""Impulsive object-pointer coupling H = eps * delta(t) * c (x) P.

The exact evolution uses the eigenprojectors Pi_j of c:

    rho_eps(Q, d) = sum_jk <d|Pi_j rho_s Pi_k|d> <Q|T(eps c_j) rho_a T(eps c_k)^+|Q>

with T(a) = exp(-i a P) applied exactly on the periodic grid. The
first-order predictor, the Maclaurin remainder, and the Lagrange-form
diagnostics share the same discrete momentum calculus, so differences
between them are pure expansion error.
"""

from dataclasses import dataclass, field
from math import comb, factorial

import numpy as np

from .core import (
    DEFAULT_TOLERANCES,
    DensityMatrix,
    HermitianObservable,
    PointerGrid,
    PointerState,
    current_density,
    normalized_current,
    position_moments,
    sandwich_diagonal,
    spectral_decompose,
    spectral_derivative,
    translation_multiplier,
)
from .errors import (
    DegenerateDistributionError,
    DisplacementRangeError,
    NonzeroCurrentError,
    PostselectionError,
)

MAX_REMAINDER_ORDER = 6


def weak_value(object_state, observable_c, postselection_vector, tol=DEFAULT_TOLERANCES):
    """<d|c rho_s|d> / <d|rho_s|d>.

    For a pure state this is <d|c|psi> / <d|psi>.

    Raises
    ------
    PostselectionError
        If <d|rho_s|d> is below ``tol.postselection_threshold``.
    """
    rho = object_state.matrix if isinstance(object_state, DensityMatrix) else np.asarray(object_state)
    c = observable_c.matrix if isinstance(observable_c, HermitianObservable) else np.asarray(observable_c)
    d = np.asarray(postselection_vector, dtype=complex)
    prob = np.vdot(d, rho @ d).real
    if prob < tol.postselection_threshold:
        raise PostselectionError(prob, tol.postselection_threshold)
    return complex(np.vdot(d, c @ rho @ d) / prob)


@dataclass(frozen=True)
class MeasurementSetup:
    """Everything needed to simulate one pre/postselected weak measurement.

    ``postselection_basis`` holds the basis vectors as columns.
    """

    observable_c: HermitianObservable
    postselection_basis: np.ndarray
    object_state: DensityMatrix
    pointer_state: PointerState
    coupling: float
    tol: object = field(default=DEFAULT_TOLERANCES, repr=False, compare=False)

    def __post_init__(self):
        if not isinstance(self.observable_c, HermitianObservable):
            object.__setattr__(self, "observable_c", spectral_decompose(self.observable_c, self.tol))
        if not isinstance(self.object_state, DensityMatrix):
            object.__setattr__(self, "object_state", DensityMatrix(self.object_state))
        basis = np.asarray(self.postselection_basis, dtype=complex)
        dim = self.observable_c.dim
        if self.object_state.dim != dim or basis.shape[0] != dim:
            raise ValueError(
                f"dimension mismatch: observable {dim}, state {self.object_state.dim}, "
                f"basis {basis.shape}"
            )
        gram = basis.conj().T @ basis
        if np.max(np.abs(gram - np.eye(basis.shape[1]))) > 1e-10:
            raise ValueError("postselection basis is not orthonormal")
        object.__setattr__(self, "postselection_basis", basis)
        object.__setattr__(self, "coupling", float(self.coupling))

    @property
    def grid(self):
        return self.pointer_state.grid

    @property
    def n_outcomes(self):
        return self.postselection_basis.shape[1]

    def with_coupling(self, eps):
        return MeasurementSetup(self.observable_c, self.postselection_basis, self.object_state,
                                self.pointer_state, eps, self.tol)

    def with_pointer(self, pointer_state):
        return MeasurementSetup(self.observable_c, self.postselection_basis, self.object_state,
                                pointer_state, self.coupling, self.tol)

    def postselection_probabilities(self):
        d = self.postselection_basis
        return np.einsum("ai,ab,bi->i", d.conj(), self.object_state.matrix, d).real

    def weak_values(self):
        return np.array([
            weak_value(self.object_state, self.observable_c, self.postselection_basis[:, i], self.tol)
            for i in range(self.n_outcomes)
        ])

    def _object_weights(self, left_ops, right_ops):
        """w[i, d] = <d| L_i rho_s R_i |d> for paired operator lists."""
        d = self.postselection_basis
        rho = self.object_state.matrix
        return np.array([
            np.einsum("ai,ab,bi->i", d.conj(), L @ rho @ R, d) for L, R in zip(left_ops, right_ops)
        ])


@dataclass(frozen=True)
class JointDistribution:
    """Table over (pointer grid point, postselection outcome).

    Column ``d`` is a density in Q; integrating it gives the probability
    of outcome ``d``.
    """

    grid: PointerGrid
    table: np.ndarray

    @property
    def outcomes(self):
        return self.table.shape[1]

    @property
    def total(self):
        return float(self.table.sum() * self.grid.spacing)


def product_joint(setup):
    """rho_0(Q, d) = <d|rho_s|d> <Q|rho_a|Q>."""
    return JointDistribution(
        setup.grid, np.outer(setup.pointer_state.density, setup.postselection_probabilities())
    )


def _check_displacement(setup, eps=None):
    eps = setup.coupling if eps is None else eps
    reach = abs(eps) * np.max(np.abs(setup.observable_c.levels))
    if not reach < setup.grid.length / 4:
        raise DisplacementRangeError(
            f"|eps| * max|c_j| = {reach!r} exceeds length/4 = {setup.grid.length / 4!r}"
        )


def _pair_weights(setup):
    obs = setup.observable_c
    n = len(obs.levels)
    pairs = [(j, k) for j in range(n) for k in range(n)]
    w = setup._object_weights([obs.projectors[j] for j, _ in pairs],
                              [obs.projectors[k] for _, k in pairs])
    return pairs, w


def evolve_exact(setup):
    """Joint distribution of pointer position and postselection outcome after the kick."""
    _check_displacement(setup)
    eps = setup.coupling
    if eps == 0:
        return product_joint(setup)
    grid, obs = setup.grid, setup.observable_c
    phases = [translation_multiplier(grid, eps * c) for c in obs.levels]
    pairs, w = _pair_weights(setup)
    table = np.zeros((grid.n_points, setup.n_outcomes), dtype=complex)
    for (j, k), wjk in zip(pairs, w):
        if np.max(np.abs(wjk)) == 0:
            continue
        diag = sandwich_diagonal(setup.pointer_state, phases[j], phases[k])
        table += np.outer(diag, wjk)
    return JointDistribution(grid, table.real)


def first_order_unchecked(setup):
    """first_order_joint without the current and postselection guards."""
    rho0 = product_joint(setup)
    if setup.coupling == 0:
        return rho0
    shift = setup.coupling * setup.weak_values().real
    deriv = spectral_derivative(rho0.table.T, setup.grid).T
    return JointDistribution(setup.grid, rho0.table - deriv * shift[None, :])


def _check_postselection(setup):
    probs = setup.postselection_probabilities()
    thr = setup.tol.postselection_threshold
    if probs.min() < thr:
        raise PostselectionError(probs.min(), thr)


def first_order_joint(setup):
    """rho_0 - eps Re(c_w) d rho_0/dQ per outcome.

    Raises
    ------
    NonzeroCurrentError
        If the pointer carries a probability current; the first-order law
        holds only for pointers whose current density vanishes everywhere.
    """
    current = normalized_current(setup.pointer_state)
    if current >= setup.tol.zero_current:
        raise NonzeroCurrentError(current, setup.tol.zero_current)
    _check_postselection(setup)
    return first_order_unchecked(setup)


def general_first_order_joint(setup):
    """First-order expansion without the zero-current assumption.

    Keeps the current term: rho_0 - eps Re(c_w) d rho_0/dQ + 2 eps Im(<d|c rho_s|d>) j(Q).
    """
    base = product_joint(setup)
    if setup.coupling == 0:
        return base
    eps = setup.coupling
    a = setup._object_weights([setup.observable_c.matrix], [np.eye(setup.observable_c.dim)])[0]
    deriv = spectral_derivative(setup.pointer_state.density, setup.grid)
    j = current_density(setup.pointer_state)
    table = base.table - eps * np.outer(deriv, a.real) + 2 * eps * np.outer(j, a.imag)
    return JointDistribution(setup.grid, table)


def _remainder_terms(setup, order):
    """Individual Maclaurin terms n = 2..order, each an (N, outcomes) array."""
    if not 2 <= order <= MAX_REMAINDER_ORDER:
        raise ValueError(f"remainder order must be in [2, {MAX_REMAINDER_ORDER}], got {order}")
    grid, obs = setup.grid, setup.observable_c
    eps = setup.coupling
    k = grid.wavenumbers
    cpow = [obs.power(m) for m in range(order + 1)]
    terms = []
    for n in range(2, order + 1):
        acc = np.zeros((grid.n_points, setup.n_outcomes), dtype=complex)
        ks = list(range(n + 1))
        w = setup._object_weights([cpow[n - m] for m in ks], [cpow[m] for m in ks])
        for m in ks:
            coeff = (-1) ** (n - m) * comb(n, m)
            left = k ** (n - m) if n - m else None
            right = k**m if m else None
            diag = sandwich_diagonal(setup.pointer_state, left, right)
            acc += coeff * np.outer(diag, w[m])
        terms.append(((1j * eps) ** n / factorial(n) * acc).real)
    return terms


def remainder_term(setup, order=2):
    """Sum of the n = 2..order terms of the eps-expansion of rho_eps(Q, d)."""
    if setup.coupling == 0:
        return np.zeros((setup.grid.n_points, setup.n_outcomes))
    return np.sum(_remainder_terms(setup, order), axis=0)


def lagrange_remainder(setup, xi):
    """(eps^2 / 2) d^2 rho_xi(Q, d) / d xi^2, evaluated exactly at ``xi``.

    At ``xi = 0`` this equals the n = 2 remainder term; the ``xi = eps``
    value is reported as a diagnostic only.
    """
    _check_displacement(setup, xi)
    grid, obs = setup.grid, setup.observable_c
    k = grid.wavenumbers
    state = setup.pointer_state
    pairs, w = _pair_weights(setup)
    table = np.zeros((grid.n_points, setup.n_outcomes), dtype=complex)
    for (j, kk), wjk in zip(pairs, w):
        cj, ck = obs.levels[j], obs.levels[kk]
        tj = translation_multiplier(grid, xi * cj)
        tk = translation_multiplier(grid, xi * ck)
        # d^2/dxi^2 of T_j rho T_k^+ = T_j (-cj^2 P^2 rho + 2 cj ck P rho P - ck^2 rho P^2) T_k^+
        second = (-(cj**2) * sandwich_diagonal(state, tj * k**2, tk)
                  + 2 * cj * ck * sandwich_diagonal(state, tj * k, tk * k)
                  - ck**2 * sandwich_diagonal(state, tj, tk * k**2))
        table += np.outer(second, wjk)
    return 0.5 * setup.coupling**2 * table.real


def conditional_pointer(joint, outcome, tol=DEFAULT_TOLERANCES):
    """Pointer density given a postselection outcome, normalized to 1."""
    col = np.array(joint.table[:, outcome], dtype=float)
    marginal = col.sum() * joint.grid.spacing
    if marginal <= 1e-12:
        raise DegenerateDistributionError(f"outcome {outcome} has marginal {marginal:.3e}")
    col /= marginal
    col[(col < 0) & (col >= -tol.conditional_floor)] = 0.0
    return col


def object_marginal(joint):
    """Outcome probabilities: integral over Q of each column."""
    return joint.table.sum(axis=0) * joint.grid.spacing


def _signed_conditional_mean(joint, outcome):
    col = joint.table[:, outcome]
    x = joint.grid.positions
    return float(np.sum(x * col) / np.sum(col))


@dataclass
class WeakValueReport:
    outcome: int
    weak_value: complex
    postselection_probability: float
    predicted_shift: float
    measured_shift: float
    remainder_norm: float
    weakness_ratio: float
    current_max: float
    marginal_drift: float
    lagrange_xi0: float
    lagrange_xi_eps: float
    zero_current: bool
    weak_coupling: bool
    remainder_small: bool

    @property
    def abs_err(self):
        return abs(self.measured_shift - self.predicted_shift)

    @property
    def valid(self):
        return self.zero_current and self.weak_coupling and self.remainder_small

    def flags(self):
        return {"zero_current": self.zero_current, "weak_coupling": self.weak_coupling,
                "remainder_small": self.remainder_small}


def measure_shift(setup, outcome, exact=None, baseline=None):
    """Compare the exact conditional pointer shift against eps * Re(c_w).

    ``exact`` and ``baseline`` (the eps = 0 joint) may be passed in to
    reuse work across outcomes. The remainder used for ``remainder_norm``
    is the exact one, rho_eps - rho_0 + eps Re(c_w) d rho_0/dQ.
    """
    tol = setup.tol
    eps = setup.coupling
    grid = setup.grid
    probs = setup.postselection_probabilities()
    p_d = float(probs[outcome])
    cw = weak_value(setup.object_state, setup.observable_c,
                    setup.postselection_basis[:, outcome], tol)
    exact = evolve_exact(setup) if exact is None else exact
    baseline = product_joint(setup) if baseline is None else baseline

    measured = (_signed_conditional_mean(exact, outcome)
                - _signed_conditional_mean(baseline, outcome))
    predicted = eps * cw.real
    x = grid.positions
    if eps == 0:
        measured = 0.0
        remainder = np.zeros(grid.n_points)
        lag0 = lag_eps = 0.0
    else:
        first = first_order_unchecked(setup).table[:, outcome]
        remainder = exact.table[:, outcome] - first
        lag0 = abs(np.sum(x * lagrange_remainder(setup, 0.0)[:, outcome]) * grid.spacing)
        lag_eps = abs(np.sum(x * lagrange_remainder(setup, eps)[:, outcome]) * grid.spacing)
    remainder_norm = float(abs(np.sum(x * remainder) * grid.spacing))

    sigma = position_moments(setup.pointer_state.density, grid, tol)[1]
    ratio = abs(predicted) / sigma
    current = normalized_current(setup.pointer_state)
    drift = float(abs(object_marginal(exact)[outcome] - p_d))
    return WeakValueReport(
        outcome=outcome,
        weak_value=cw,
        postselection_probability=p_d,
        predicted_shift=predicted,
        measured_shift=measured,
        remainder_norm=remainder_norm,
        weakness_ratio=ratio,
        current_max=current,
        marginal_drift=drift,
        lagrange_xi0=float(lag0),
        lagrange_xi_eps=float(lag_eps),
        zero_current=current < tol.zero_current,
        weak_coupling=ratio < tol.weakness_ratio,
        remainder_small=remainder_norm <= tol.remainder_fraction * abs(predicted) * p_d,
    )
