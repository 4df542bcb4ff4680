"""c-number weak measurements on a Monte Carlo phase-space ensemble.

The kick Hamiltonian H = eps * delta(t) * c(q, p) * P is integrated along
its characteristics. P and c(q, p) are constants of the kick flow, so the
pointer update Q -> Q + eps * c(q0, p0) is exact; the object moves along

    dq/ds = eps P dc/dp,   dp/ds = -eps P dc/dq,   s in [0, 1].
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import stats

from .errors import InsufficientStatisticsError, IntegrationError, NonzeroCurrentError

MIN_BIN_COUNT = 100


@dataclass(frozen=True)
class CNumberObservable:
    """Phase-space function c(q, p) with optional analytic gradients.

    ``depends_on`` may be "q" or "p" when c is a function of one variable
    only; the kick is then applied in closed form. Missing gradients fall
    back to central differences with step ``fd_step * scale``.
    """

    value: Callable
    grad_q: Optional[Callable] = None
    grad_p: Optional[Callable] = None
    depends_on: str = "both"
    fd_step: float = 1e-5
    scale: float = 1.0
    name: str = "c"

    def __post_init__(self):
        if self.depends_on not in ("q", "p", "both"):
            raise ValueError(f"depends_on must be 'q', 'p' or 'both', got {self.depends_on!r}")

    def __call__(self, q, p):
        return self.value(q, p)

    def gradients(self, q, p):
        h = self.fd_step * self.scale
        if self.grad_q is not None:
            gq = self.grad_q(q, p)
        else:
            gq = (self.value(q + h, p) - self.value(q - h, p)) / (2 * h)
        if self.grad_p is not None:
            gp = self.grad_p(q, p)
        else:
            gp = (self.value(q, p + h) - self.value(q, p - h)) / (2 * h)
        return np.broadcast_to(gq, np.shape(q)), np.broadcast_to(gp, np.shape(q))

    def check_gradients(self, q, p, rtol=1e-4):
        """True if analytic gradients agree with central differences on (q, p)."""
        fd = CNumberObservable(self.value, fd_step=self.fd_step, scale=self.scale)
        ok = True
        for given, approx in zip(self.gradients(q, p), fd.gradients(q, p)):
            ref = np.maximum(np.abs(approx), 1.0)
            ok &= bool(np.all(np.abs(given - approx) <= rtol * ref))
        return ok


def position_observable():
    return CNumberObservable(lambda q, p: q, lambda q, p: np.ones_like(q),
                             lambda q, p: np.zeros_like(q), depends_on="q", name="q")


def momentum_observable():
    return CNumberObservable(lambda q, p: p, lambda q, p: np.zeros_like(p),
                             lambda q, p: np.ones_like(p), depends_on="p", name="p")


def energy_observable():
    return CNumberObservable(lambda q, p: q**2 + p**2, lambda q, p: 2 * q,
                             lambda q, p: 2 * p, name="q^2+p^2")


OBSERVABLES = {"q": position_observable, "p": momentum_observable, "energy": energy_observable}


@dataclass(frozen=True)
class GaussianPhaseDensity:
    """Bivariate Gaussian over one canonical pair (x, y)."""

    mean_x: float = 0.0
    mean_y: float = 0.0
    std_x: float = 1.0
    std_y: float = 1.0
    correlation: float = 0.0

    def __post_init__(self):
        if not (self.std_x > 0 and self.std_y > 0 and -1 < self.correlation < 1):
            raise ValueError("need positive stds and |correlation| < 1")

    def sample(self, n, rng):
        z = rng.standard_normal((n, 2))
        r = self.correlation
        x = z[:, 0]
        y = r * z[:, 0] + np.sqrt(1 - r * r) * z[:, 1]
        return np.column_stack([self.mean_x + self.std_x * x, self.mean_y + self.std_y * y])

    def conditional_mean_y(self, x):
        """E[y | x], the closed-form Gaussian regression line."""
        return self.mean_y + self.correlation * self.std_y / self.std_x * (np.asarray(x) - self.mean_x)


@dataclass(frozen=True)
class PhaseEnsemble:
    """Equal-weight samples of (q, p, Q, P)."""

    samples: np.ndarray
    rng_seed: Optional[int] = None
    conservation_error: float = 0.0

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.ndim != 2 or s.shape[1] != 4:
            raise ValueError(f"samples must have shape (N, 4), got {s.shape}")
        s.flags.writeable = False
        object.__setattr__(self, "samples", s)

    @classmethod
    def product(cls, object_density, pointer_density, n, seed):
        """Sample the product density F_s(q, p) F_a(Q, P)."""
        rng = np.random.default_rng(seed)
        obj = object_density.sample(n, rng)
        ptr = pointer_density.sample(n, rng)
        return cls(np.column_stack([obj, ptr]), rng_seed=seed)

    def __len__(self):
        return self.samples.shape[0]

    q = property(lambda self: self.samples[:, 0])
    p = property(lambda self: self.samples[:, 1])
    Q = property(lambda self: self.samples[:, 2])
    P = property(lambda self: self.samples[:, 3])


def _rk4_flow(q, p, P, c, eps, substeps):
    h = 1.0 / substeps

    def rhs(q, p):
        gq, gp = c.gradients(q, p)
        return eps * P * gp, -eps * P * gq

    for _ in range(substeps):
        k1q, k1p = rhs(q, p)
        k2q, k2p = rhs(q + 0.5 * h * k1q, p + 0.5 * h * k1p)
        k3q, k3p = rhs(q + 0.5 * h * k2q, p + 0.5 * h * k2p)
        k4q, k4p = rhs(q + h * k3q, p + h * k3p)
        q = q + h / 6 * (k1q + 2 * k2q + 2 * k3q + k4q)
        p = p + h / 6 * (k1p + 2 * k2p + 2 * k3p + k4p)
    return q, p


def kick_evolve(ensemble, c, eps, substeps=64):
    """Apply the impulsive coupling eps * c(q, p) * P to every sample.

    The returned ensemble records max |c(q', p') - c(q0, p0)| as
    ``conservation_error``.
    """
    if not np.isfinite(eps):
        raise ValueError(f"coupling must be finite, got {eps!r}")
    if substeps < 1:
        raise ValueError("substeps must be >= 1")
    q0, p0, Q0, P0 = (ensemble.samples[:, i] for i in range(4))
    if eps == 0:
        return ensemble
    c0 = c(q0, p0)
    if c.depends_on == "q":
        gq, _ = c.gradients(q0, p0)
        q1, p1 = q0, p0 - eps * P0 * gq
    elif c.depends_on == "p":
        _, gp = c.gradients(q0, p0)
        q1, p1 = q0 + eps * P0 * gp, p0
    else:
        q1, p1 = _rk4_flow(q0, p0, P0, c, eps, substeps)
    Q1 = Q0 + eps * c0
    out = np.column_stack([q1, p1, Q1, P0])
    bad = ~np.all(np.isfinite(out), axis=1)
    if bad.any():
        raise IntegrationError(int(np.argmax(bad)))
    drift = float(np.max(np.abs(c(q1, p1) - c0))) if len(c0) else 0.0
    return PhaseEnsemble(out, ensemble.rng_seed, drift)


@dataclass(frozen=True)
class Estimate:
    value: float
    stderr: float
    count: int


def _bin_mask(x, lo, hi):
    return (x >= lo) & (x < hi)


def classical_weak_value(q, p, c, q_bin, min_count=MIN_BIN_COUNT):
    """E[c(q, p) | q in q_bin] with its standard error."""
    lo, hi = q_bin
    mask = _bin_mask(np.asarray(q), lo, hi)
    n = int(mask.sum())
    if n < min_count:
        raise InsufficientStatisticsError(f"{n} samples in q-bin [{lo}, {hi}), need {min_count}")
    vals = c(np.asarray(q)[mask], np.asarray(p)[mask])
    return Estimate(float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(n)), n)


def discrete_weak_value(values, prior, likelihood):
    """E[c | outcome] for the discrete joint P(i, outcome) = prior_i * likelihood_i."""
    w = np.asarray(prior, dtype=float) * np.asarray(likelihood, dtype=float)
    return float(np.dot(np.asarray(values, dtype=float), w) / w.sum())


@dataclass(frozen=True)
class CurrentCheck:
    centers: np.ndarray
    means: np.ndarray
    stderrs: np.ndarray
    counts: np.ndarray
    n_sigma: float = 3.0

    @property
    def vanishing(self):
        return bool(np.all(np.abs(self.means) <= self.n_sigma * self.stderrs))

    @property
    def max_abs_mean(self):
        return float(np.max(np.abs(self.means))) if self.means.size else 0.0


def classical_current_check(ensemble, Q_edges, min_count=30, n_sigma=3.0):
    """Per-Q-bin mean pointer momentum, the sampled form of int dP P F_a(Q, P).

    The predicate asks for the conditional mean to vanish in every bin,
    which is stronger than a zero overall mean momentum.
    """
    edges = np.asarray(Q_edges, dtype=float)
    idx = np.digitize(ensemble.Q, edges) - 1
    nb = len(edges) - 1
    inside = (idx >= 0) & (idx < nb)
    idx, P = idx[inside], ensemble.P[inside]
    counts = np.bincount(idx, minlength=nb)
    sums = np.bincount(idx, weights=P, minlength=nb)
    sq = np.bincount(idx, weights=P * P, minlength=nb)
    keep = counts >= min_count
    n = counts[keep]
    means = sums[keep] / n
    var = (sq[keep] - n * means**2) / (n - 1)
    centers = 0.5 * (edges[:-1] + edges[1:])[keep]
    return CurrentCheck(centers, means, np.sqrt(np.maximum(var, 0) / n), n, n_sigma)


@dataclass(frozen=True)
class ClassicalJoint:
    """Histogram density of (Q, q); rows index Q bins, columns q bins."""

    q_edges: np.ndarray
    Q_edges: np.ndarray
    counts: np.ndarray
    density: np.ndarray

    @property
    def total(self):
        areas = np.outer(np.diff(self.Q_edges), np.diff(self.q_edges))
        return float(np.sum(self.density * areas))


def classical_joint(ensemble, q_edges, Q_edges):
    counts, _, _ = np.histogram2d(ensemble.Q, ensemble.q, bins=[Q_edges, q_edges])
    areas = np.outer(np.diff(Q_edges), np.diff(q_edges))
    return ClassicalJoint(np.asarray(q_edges), np.asarray(Q_edges), counts,
                          counts / (len(ensemble) * areas))


def _conditional_Q(q, Q, lo, hi):
    mask = _bin_mask(q, lo, hi)
    n = int(mask.sum())
    if n < 2:
        return np.nan, np.nan, n
    vals = Q[mask]
    return float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(n)), n


@dataclass
class ShiftExperiment:
    """Per-q-bin comparison of measured and predicted pointer shifts."""

    eps: float
    centers: np.ndarray
    counts: np.ndarray
    measured: np.ndarray
    measured_se: np.ndarray
    weak_values: np.ndarray
    weak_value_se: np.ndarray
    pointer_std: float
    current: CurrentCheck
    marginal_pvalue: float
    marginal_exact: bool
    marginal_drift: np.ndarray
    conservation_error: float
    seed: Optional[int] = None
    extras: dict = field(default_factory=dict)

    @property
    def predicted(self):
        return self.eps * self.weak_values

    @property
    def weakness_ratio(self):
        return np.abs(self.predicted) / self.pointer_std

    def agreement(self, reference=None, n_sigma=3.0):
        """Boolean per bin: |measured - reference| <= n_sigma * SE (reference defaults to predicted)."""
        ref = self.predicted if reference is None else np.asarray(reference)
        return np.abs(self.measured - ref) <= n_sigma * self.measured_se


def marginal_chi_square(before, after, edges, min_expected=5):
    """Two-sample chi-square homogeneity test of two samples on common bins; returns p-value."""
    h0, _ = np.histogram(before, bins=edges)
    h1, _ = np.histogram(after, bins=edges)
    keep = (h0 + h1) >= 2 * min_expected
    if keep.sum() < 2:
        return 1.0
    table = np.vstack([h0[keep], h1[keep]])
    return float(stats.chi2_contingency(table, correction=False)[1])


def classical_shift_experiment(object_density, pointer_density, c, eps, q_edges,
                               n_samples=1_000_000, seed=0, substeps=64, Q_edges=None,
                               require_zero_current=True, min_count=MIN_BIN_COUNT):
    """Kick a sampled product ensemble and compare per-q-bin pointer shifts to eps * c_w(q).

    The measured shift in a bin is the conditional mean of Q given q after
    the kick minus the same quantity before it; its standard error treats
    the two means as independent, which is conservative.
    """
    ens0 = PhaseEnsemble.product(object_density, pointer_density, n_samples, seed)
    sigma_Q = float(np.std(ens0.Q))
    if Q_edges is None:
        Q_edges = np.linspace(ens0.Q.mean() - 4 * sigma_Q, ens0.Q.mean() + 4 * sigma_Q, 41)
    current = classical_current_check(ens0, Q_edges)
    if require_zero_current and not current.vanishing:
        raise NonzeroCurrentError(current.max_abs_mean, 0.0)
    ens1 = kick_evolve(ens0, c, eps, substeps)

    edges = np.asarray(q_edges, dtype=float)
    rows = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        n0 = int(_bin_mask(ens0.q, lo, hi).sum())
        if n0 < min_count:
            continue
        cw = classical_weak_value(ens0.q, ens0.p, c, (lo, hi), min_count)
        m1, s1, _ = _conditional_Q(ens1.q, ens1.Q, lo, hi)
        m0, s0, _ = _conditional_Q(ens0.q, ens0.Q, lo, hi)
        if eps == 0:
            shift, se = 0.0, 0.0
        else:
            shift, se = m1 - m0, float(np.hypot(s0, s1))
        rows.append((0.5 * (lo + hi), n0, shift, se, cw.value, cw.stderr))
    if not rows:
        raise InsufficientStatisticsError("no q-bin holds enough samples")
    centers, counts, measured, measured_se, cws, cw_se = (np.array(col) for col in zip(*rows))

    exact = bool(np.array_equal(ens0.q, ens1.q))
    pvalue = 1.0 if exact else marginal_chi_square(ens0.q, ens1.q, edges)
    h0, _ = np.histogram(ens0.q, bins=edges)
    h1, _ = np.histogram(ens1.q, bins=edges)
    return ShiftExperiment(
        eps=float(eps), centers=centers, counts=counts.astype(int), measured=measured,
        measured_se=measured_se, weak_values=cws, weak_value_se=cw_se, pointer_std=sigma_Q,
        current=current, marginal_pvalue=pvalue, marginal_exact=exact,
        marginal_drift=np.abs(h1 - h0) / len(ens0), conservation_error=ens1.conservation_error,
        seed=seed,
    )
