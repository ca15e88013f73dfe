from collections.abc import Sequence

import numpy as np


def validate_epsilon(epsilon: float) -> bool:
    return 0.0 < epsilon < 1.0


def is_strictly_decreasing(values: Sequence[float]) -> bool:
    return all(b < a for a, b in zip(values[:-1], values[1:], strict=False))


def is_geometric(values: Sequence[float], rel_tol: float = 0.05) -> bool:
    """True when consecutive ratios agree to rel_tol."""
    if len(values) < 3:
        return True
    ratios = np.asarray(values[1:]) / np.asarray(values[:-1])
    return bool(np.all(np.abs(ratios / ratios[0] - 1.0) <= rel_tol))


def is_symmetric(matrix: np.ndarray, rel_tol: float = 1e-8) -> bool:
    scale = float(np.max(np.abs(matrix))) if matrix.size else 0.0
    return float(np.max(np.abs(matrix - matrix.T))) <= rel_tol * max(scale, 1e-300)


def is_positive_semidefinite(matrix: np.ndarray, tol: float = 1e-10) -> bool:
    sym = 0.5 * (matrix + matrix.T)
    scale = max(float(np.max(np.abs(sym))), 1.0) if sym.size else 1.0
    return float(np.linalg.eigvalsh(sym).min()) >= -tol * scale
