"""Weak measurements with arbitrary pointer states: exact coupling, first-order
predictions and their validity conditions, quantum and classical."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    DEFAULT_TOLERANCES,
    DensityMatrix,
    HermitianObservable,
    PointerGrid,
    PointerState,
    Tolerances,
    current_density,
    normalized_current,
    position_moments,
    spectral_decompose,
    translate,
)
from .quantum import (  # noqa: E402
    JointDistribution,
    MeasurementSetup,
    WeakValueReport,
    conditional_pointer,
    evolve_exact,
    first_order_joint,
    measure_shift,
    object_marginal,
    remainder_term,
    weak_value,
)
