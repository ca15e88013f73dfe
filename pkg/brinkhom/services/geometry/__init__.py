from brinkhom.services.geometry.domain import (
    CellRegions,
    PerforatedDomain,
    RegionKind,
    build_perforated_domain,
    cell_regions,
)
from brinkhom.services.geometry.quadrature import (
    Box,
    BoxMinusBall,
    QuadratureRegion,
    Shell,
    angular_rule,
    ball,
    region_quadrature,
)
from brinkhom.services.geometry.shapes import HoleShape, OuterDomain, OuterKind, ShapeKind

__all__ = [
    "OuterDomain",
    "OuterKind",
    "HoleShape",
    "ShapeKind",
    "PerforatedDomain",
    "CellRegions",
    "RegionKind",
    "build_perforated_domain",
    "cell_regions",
    "Shell",
    "Box",
    "BoxMinusBall",
    "QuadratureRegion",
    "angular_rule",
    "ball",
    "region_quadrature",
]
