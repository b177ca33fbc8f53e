import math
from typing import Any, Dict, List

import numpy as np


class CalibrationPoint:
    """
    One bead standard: measured image intensity and its grain diameter (um)
    """
    def __init__(self, mriii: float, grain_diameter_um: float):
        mriii = float(mriii)
        grain_diameter_um = float(grain_diameter_um)
        if not math.isfinite(mriii):
            raise ValueError(f"Calibration intensity must be finite, got {mriii}")
        if not (grain_diameter_um > 0 and math.isfinite(grain_diameter_um)):
            raise ValueError(f"Grain diameter must be positive, got {grain_diameter_um}")
        self.mriii = mriii
        self.grain_diameter_um = grain_diameter_um

    @classmethod
    def from_bead_range(cls, mriii: float, low_um: float, high_um: float) -> "CalibrationPoint":
        """
        Bead batches are sold as size ranges; the representative diameter is
        the geometric midpoint, consistent with interpolating in log diameter.
        """
        if not 0 < low_um <= high_um:
            raise ValueError(f"Invalid bead range {low_um}-{high_um} um")
        return cls(mriii, math.sqrt(low_um * high_um))

    def to_dict(self) -> Dict[str, Any]:
        return {"mriii": self.mriii, "grain_diameter_um": self.grain_diameter_um}

    def __repr__(self) -> str:
        return f"CalibrationPoint({self.mriii}, {self.grain_diameter_um} um)"


class CalibrationModel:
    """
    Intensity to grain diameter curve, piecewise linear in
    (intensity, log diameter), knots sorted by intensity.
    """
    def __init__(self, points: List[CalibrationPoint], acquisition_tag: str):
        self.points = sorted(points, key=lambda p: p.mriii)
        self.acquisition_tag = acquisition_tag
        self.mriii = np.array([p.mriii for p in self.points])
        self.diameters = np.array([p.grain_diameter_um for p in self.points])
        self.log_diameters = np.log(self.diameters)

    @property
    def increasing(self) -> bool:
        return bool(self.diameters[-1] > self.diameters[0])

    @property
    def calibrated_range(self) -> tuple:
        return (float(self.mriii[0]), float(self.mriii[-1]))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "acquisition_tag": self.acquisition_tag,
            "points": [p.to_dict() for p in self.points],
        }


class LookupResult:
    def __init__(
        self,
        mriii_mean: float,
        grain_diameter_um: float,
        extrapolated: bool,
        tag: str,
        tag_mismatch: bool = False,
    ):
        self.mriii_mean = float(mriii_mean)
        self.grain_diameter_um = float(grain_diameter_um)
        self.extrapolated = bool(extrapolated)
        self.tag = tag
        self.tag_mismatch = bool(tag_mismatch)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "mriii_mean": self.mriii_mean,
            "grain_diameter_um": self.grain_diameter_um,
            "extrapolated": self.extrapolated,
            "tag": self.tag,
            "tag_mismatch": self.tag_mismatch,
        }
