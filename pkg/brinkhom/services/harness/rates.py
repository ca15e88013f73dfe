import logging
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from scipy.stats import linregress

from brinkhom.core.exceptions import RateFitError

logger = logging.getLogger(__name__)

MIN_RATE_POINTS = 3


@dataclass
class RateFit:
    slope: float  # log(value) against log(eps)
    intercept: float
    stderr: float
    r_squared: float
    count: int  # pairs used
    excluded: int  # nonpositive values dropped


def fit_rate(eps: Sequence[float], values: Sequence[float], quantity: str = "value") -> RateFit:
    """Least-squares slope of log(value) against log(eps)."""
    e = np.asarray(eps, dtype=float)
    v = np.asarray(values, dtype=float)
    if e.shape != v.shape:
        raise RateFitError(f"Got {e.size} eps values and {v.size} values for {quantity}")
    keep = (v > 0) & np.isfinite(v) & (e > 0)
    excluded = int(e.size - keep.sum())
    if excluded:
        logger.warning(f"Rate fit of {quantity}: dropping {excluded} nonpositive values")
    if keep.sum() < MIN_RATE_POINTS:
        raise RateFitError(
            f"Rate fit of {quantity} needs {MIN_RATE_POINTS} positive pairs, got {int(keep.sum())}"
        )
    fit = linregress(np.log(e[keep]), np.log(v[keep]))
    return RateFit(
        slope=float(fit.slope),
        intercept=float(fit.intercept),
        stderr=float(fit.stderr),
        r_squared=float(fit.rvalue**2),
        count=int(keep.sum()),
        excluded=excluded,
    )
