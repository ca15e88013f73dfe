from brinkhom.utils.helpers import (
    as_points,
    fibonacci_sphere,
    unit_vector,
)
from brinkhom.utils.validators import (
    is_geometric,
    is_positive_semidefinite,
    is_strictly_decreasing,
    is_symmetric,
    validate_epsilon,
)

__all__ = [
    "as_points",
    "fibonacci_sphere",
    "unit_vector",
    "is_geometric",
    "is_positive_semidefinite",
    "is_strictly_decreasing",
    "is_symmetric",
    "validate_epsilon",
]
