import csv
import logging
import math
from typing import Any, Dict, List, Tuple, Union

import numpy as np

from permdecoder.exceptions import IoFailure, NonPositivePermeability, PorosityNotSpecified
from permdecoder.geometry.models import (
    CONCAVE_DIAMOND_COEFF,
    CONCAVE_TRIANGLE_COEFF,
    PACKING_TABLE,
    GrainRadius,
    PackingConfig,
    PackingGeometry,
    ThroatShape,
)

logger = logging.getLogger(__name__)

RadiusLike = Union[GrainRadius, float]

GEOMETRY_TABLE_COLUMNS = [
    "config",
    "n_diamond_faces",
    "n_triangle_faces",
    "total_throat_area_coeff",
    "n_pore_throats",
    "n_cv_inlets",
    "effective_throat_coeff",
    "recomputed_area_coeff",
    "discrepancy",
    "nominal_porosity",
    "effective_over_pi",
]
GEOMETRY_CONSTANT_COLUMNS = ["quantity", "value"]


def _r(r: RadiusLike) -> float:
    if isinstance(r, GrainRadius):
        return r.r_g_um
    return GrainRadius(r).r_g_um


class GeometryService:
    """
    Closed-form sphere-packing geometry. All areas are in um^2 for radii in um.
    """

    @staticmethod
    def pore_area_2d(r: RadiusLike) -> float:
        """Square pore between four touching circles: (2r)^2"""
        return 4.0 * _r(r) ** 2

    @staticmethod
    def throat_area_2d(shape: ThroatShape, r: RadiusLike) -> float:
        coeff = {
            ThroatShape.CONCAVE_DIAMOND: CONCAVE_DIAMOND_COEFF,
            ThroatShape.CONCAVE_TRIANGLE: CONCAVE_TRIANGLE_COEFF,
        }[ThroatShape(shape)]
        return coeff * _r(r) ** 2

    @staticmethod
    def throat_to_pore_ratio_2d() -> float:
        return CONCAVE_DIAMOND_COEFF / 4.0

    @staticmethod
    def packing_geometry(config: PackingConfig) -> PackingGeometry:
        geometry = PACKING_TABLE[PackingConfig(config)]
        if geometry.discrepancy:
            logger.debug(
                "%s stated throat area %.4f r^2 differs from face inventory %.4f r^2",
                geometry.config.value,
                geometry.total_throat_area_coeff,
                geometry.recomputed_area_coeff,
            )
        return geometry

    @staticmethod
    def effective_pore_throat_size_3d(config: PackingConfig, r: RadiusLike) -> float:
        return GeometryService.packing_geometry(config).effective_throat_coeff * _r(r) ** 2

    @staticmethod
    def permeability_from_grain_radius(config: PackingConfig, r: RadiusLike) -> float:
        """
        Permeability in mD, numerically equal to the effective throat area in
        um^2. This is an empirical labelling, not a unit conversion.
        """
        return GeometryService.effective_pore_throat_size_3d(config, r)

    @staticmethod
    def grain_radius_from_permeability(config: PackingConfig, k_md: float) -> GrainRadius:
        if not k_md > 0:
            raise NonPositivePermeability(f"Permeability must be positive to invert, got {k_md}")
        coeff = GeometryService.packing_geometry(config).effective_throat_coeff
        return GrainRadius(math.sqrt(k_md / coeff))

    @staticmethod
    def nominal_porosity(config: PackingConfig) -> float:
        porosity = GeometryService.packing_geometry(config).nominal_porosity
        if porosity is None:
            raise PorosityNotSpecified(f"No porosity is defined for {PackingConfig(config).value} packing")
        return porosity

    @staticmethod
    def monte_carlo_cubic_porosity(n_samples: int = 200_000, seed: int = 0) -> Tuple[float, float]:
        """
        Estimate the cubic porosity by sampling a unit cell holding one sphere
        of radius half the cell edge. Returns (estimate, standard error).
        """
        rng = np.random.default_rng(seed)
        points = rng.random((n_samples, 3)) - 0.5
        void = np.einsum("ij,ij->i", points, points) > 0.25
        estimate = float(void.mean())
        stderr = math.sqrt(estimate * (1.0 - estimate) / n_samples)
        return estimate, stderr

    @staticmethod
    def geometry_table() -> List[Dict[str, Any]]:
        rows = []
        for config in PackingConfig:
            row = GeometryService.packing_geometry(config).to_dict()
            # rhombohedral: 0.0858 r^2 == 0.02731 pi r^2
            row["effective_over_pi"] = row["effective_throat_coeff"] / math.pi
            rows.append(row)
        return rows

    @staticmethod
    def geometry_constants() -> List[Dict[str, Any]]:
        """2D cubic-packing constants, as multiples of r^2 where they are areas"""
        return [
            {"quantity": "pore_area_coeff_2d", "value": GeometryService.pore_area_2d(1.0)},
            {"quantity": "concave_diamond_coeff", "value": CONCAVE_DIAMOND_COEFF},
            {"quantity": "concave_triangle_coeff", "value": CONCAVE_TRIANGLE_COEFF},
            {"quantity": "throat_to_pore_ratio_2d", "value": GeometryService.throat_to_pore_ratio_2d()},
        ]

    @staticmethod
    def write_geometry_table_csv(handle) -> None:
        """
        Packing rows, a blank line, then the 2D constants as quantity,value rows
        """
        try:
            writer = csv.DictWriter(handle, fieldnames=GEOMETRY_TABLE_COLUMNS, lineterminator="\n")
            writer.writeheader()
            for row in GeometryService.geometry_table():
                row["nominal_porosity"] = "" if row["nominal_porosity"] is None else repr(row["nominal_porosity"])
                writer.writerow(row)
            handle.write("\n")
            writer = csv.DictWriter(handle, fieldnames=GEOMETRY_CONSTANT_COLUMNS, lineterminator="\n")
            writer.writeheader()
            writer.writerows(GeometryService.geometry_constants())
        except OSError as e:
            raise IoFailure(f"Cannot write geometry table: {str(e)}")
