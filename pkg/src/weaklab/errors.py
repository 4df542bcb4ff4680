"""Exception hierarchy for weaklab."""


class WeakLabError(Exception):
    """Base class for all weaklab errors."""


class NotHermitianError(WeakLabError, ValueError):
    def __init__(self, max_asymmetry):
        self.max_asymmetry = float(max_asymmetry)
        super().__init__(f"matrix is not Hermitian: max |H - H^dagger| = {self.max_asymmetry:.3e}")


class InvalidStateError(WeakLabError, ValueError):
    """A density matrix or pointer kernel violates its invariants."""


class DisplacementRangeError(WeakLabError, ValueError):
    """A translation would push the pointer across the periodic boundary."""


class ResolutionError(WeakLabError, ValueError):
    """A pointer state is under-resolved (or too wide) for its grid."""


class DegenerateDistributionError(WeakLabError, ValueError):
    pass


class PostselectionError(WeakLabError, ValueError):
    """Postselection probability too small for the weak value to be defined."""

    def __init__(self, probability, threshold):
        self.probability = float(probability)
        self.threshold = float(threshold)
        super().__init__(
            f"postselection probability {self.probability:.3e} below threshold "
            f"{self.threshold:.1e}; weak value undefined"
        )


class NonzeroCurrentError(WeakLabError, ValueError):
    """The pointer carries a probability current; first-order theory does not apply."""

    def __init__(self, max_current, tolerance):
        self.max_current = float(max_current)
        self.tolerance = float(tolerance)
        super().__init__(
            f"pointer current density does not vanish: max normalized current "
            f"{self.max_current:.3e} > {self.tolerance:.1e}"
        )


class InsufficientStatisticsError(WeakLabError, ValueError):
    pass


class IntegrationError(WeakLabError, ArithmeticError):
    def __init__(self, sample_index):
        self.sample_index = int(sample_index)
        super().__init__(f"non-finite trajectory for sample {self.sample_index}")


class ScenarioError(WeakLabError, ValueError):
    """Scenario file failed validation. ``errors`` holds (field path, message) pairs."""

    def __init__(self, errors):
        self.errors = list(errors)
        lines = [f"  {path}: {msg}" for path, msg in self.errors]
        super().__init__("invalid scenario:\n" + "\n".join(lines))
