"""Log-log convergence-order fits."""

from dataclasses import dataclass

import numpy as np
from scipy import stats


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    r_squared: float
    slope_ci95: float  # half-width of the 95% confidence interval on the slope

    def as_dict(self):
        return {"slope": self.slope, "intercept": self.intercept,
                "r_squared": self.r_squared, "slope_ci95": self.slope_ci95}


def fit_slope(x, y):
    """Least-squares fit of log(y) = slope * log(x) + intercept.

    Needs at least four points, all strictly positive.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-D arrays of equal length")
    if len(x) < 4:
        raise ValueError(f"need at least 4 points, got {len(x)}")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("all values must be positive to take logarithms")
    res = stats.linregress(np.log(x), np.log(y))
    t = stats.t.ppf(0.975, len(x) - 2)
    return SlopeFit(float(res.slope), float(res.intercept), float(res.rvalue**2),
                    float(t * res.stderr))
