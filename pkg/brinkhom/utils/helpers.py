import numpy as np
from numpy.typing import ArrayLike, NDArray

FloatArray = NDArray[np.float64]


def as_points(points: ArrayLike) -> tuple[FloatArray, bool]:
    """Return points as an (N, 3) float array and whether a single point was passed."""
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1:
        return arr.reshape(1, 3), True
    return arr.reshape(-1, 3), False


def unit_vector(k: int) -> FloatArray:
    e = np.zeros(3)
    e[k] = 1.0
    return e


def fibonacci_sphere(count: int) -> FloatArray:
    """Nearly uniform unit directions, deterministic."""
    i = np.arange(count) + 0.5
    polar = np.arccos(1.0 - 2.0 * i / count)
    azimuth = np.pi * (1.0 + 5.0**0.5) * i
    return np.column_stack(
        (np.cos(azimuth) * np.sin(polar), np.sin(azimuth) * np.sin(polar), np.cos(polar))
    )
