from enum import Enum
from typing import Any, Dict, List, Optional

from permdecoder.segmenter.models import DhzClass

# Recorded in every report: permeability values are the effective throat
# area in um^2 relabelled as mD, not a physical unit conversion.
UNIT_CONVENTION = "k in mD is numerically equal to the effective 3D pore throat area in um^2 (empirical convention)"


class ProvenanceKind(str, Enum):
    DIRECT_CONSTANT = "DirectConstant"
    FROM_CALIBRATION = "FromCalibration"


class ClassPermeability:
    """
    Permeability of one class and where it came from
    """
    def __init__(
        self,
        k_md: float,
        provenance: ProvenanceKind,
        mriii_mean: Optional[float] = None,
        grain_diameter_um: Optional[float] = None,
        config: Optional[str] = None,
        extrapolated: bool = False,
    ):
        k_md = float(k_md)
        if not k_md >= 0:
            raise ValueError(f"Class permeability must be non-negative, got {k_md}")
        self.k_md = k_md
        self.provenance = ProvenanceKind(provenance)
        self.mriii_mean = mriii_mean
        self.grain_diameter_um = grain_diameter_um
        self.config = config
        self.extrapolated = extrapolated

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ClassPermeability":
        return cls(
            k_md=data["k_md"],
            provenance=data["provenance"],
            mriii_mean=data.get("mriii_mean"),
            grain_diameter_um=data.get("grain_diameter_um"),
            config=data.get("config"),
            extrapolated=data.get("extrapolated", False),
        )

    @classmethod
    def constant(cls, k_md: float) -> "ClassPermeability":
        return cls(k_md, ProvenanceKind.DIRECT_CONSTANT)

    def provenance_text(self) -> str:
        if self.provenance == ProvenanceKind.DIRECT_CONSTANT:
            return self.provenance.value
        return (
            f"{self.provenance.value}(mriii_mean={self.mriii_mean!r};"
            f"grain_diameter_um={self.grain_diameter_um!r};config={self.config};"
            f"extrapolated={self.extrapolated})"
        )

    def to_dict(self) -> Dict[str, Any]:
        data = {"k_md": self.k_md, "provenance": self.provenance.value}
        if self.provenance == ProvenanceKind.FROM_CALIBRATION:
            data.update(
                {
                    "mriii_mean": self.mriii_mean,
                    "grain_diameter_um": self.grain_diameter_um,
                    "config": self.config,
                    "extrapolated": self.extrapolated,
                }
            )
        return data


class ClassPermeabilityTable:
    def __init__(self, entries: Dict[DhzClass, ClassPermeability]):
        self.entries = {DhzClass(c): entry for c, entry in entries.items()}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ClassPermeabilityTable":
        """Keys are class display names, as written by to_dict"""
        return cls({DhzClass.from_name(name): ClassPermeability.from_dict(entry) for name, entry in data.items()})

    def is_complete(self) -> bool:
        return all(c in self.entries for c in DhzClass)

    def missing(self) -> List[DhzClass]:
        return [c for c in DhzClass if c not in self.entries]

    def k(self, dhz_class: DhzClass) -> float:
        return self.entries[DhzClass(dhz_class)].k_md

    def lookup_array(self) -> List[float]:
        """k by class id"""
        return [self.entries[c].k_md for c in DhzClass]

    def to_dict(self) -> Dict[str, Any]:
        return {c.display_name: self.entries[c].to_dict() for c in DhzClass if c in self.entries}


class DecodeReport:
    """
    Outcome of aggregating one permeability map along z
    """
    def __init__(
        self,
        slice_k: List[float],
        k_3d: float,
        lower_bound_harmonic: float,
        upper_bound_arithmetic: float,
        blocked: bool,
        k_3d_column_first: float,
        class_table: Optional[ClassPermeabilityTable] = None,
        calib_tag: str = "",
        class_contributions: Optional[Dict[str, Dict[str, float]]] = None,
        flow_axis: str = "z",
    ):
        self.slice_k = [float(k) for k in slice_k]
        self.k_3d = float(k_3d)
        self.lower_bound_harmonic = float(lower_bound_harmonic)
        self.upper_bound_arithmetic = float(upper_bound_arithmetic)
        self.blocked = bool(blocked)
        self.k_3d_column_first = float(k_3d_column_first)
        self.class_table = class_table
        self.calib_tag = calib_tag
        self.class_contributions = class_contributions or {}
        self.flow_axis = flow_axis

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "DecodeReport":
        table = data.get("class_table")
        return cls(
            slice_k=data["slice_k"],
            k_3d=data["k_3d"],
            lower_bound_harmonic=data["lower_bound_harmonic"],
            upper_bound_arithmetic=data["upper_bound_arithmetic"],
            blocked=data["blocked"],
            k_3d_column_first=data["k_3d_column_first"],
            class_table=ClassPermeabilityTable.from_dict(table) if table else None,
            calib_tag=data.get("calib_tag", ""),
            class_contributions=data.get("class_contributions"),
            flow_axis=data.get("flow_axis", "z"),
        )

    def within_bounds(self, value: float, rel_tol: float = 1e-12) -> bool:
        slack = rel_tol * max(abs(self.upper_bound_arithmetic), 1e-300)
        return self.lower_bound_harmonic - slack <= value <= self.upper_bound_arithmetic + slack

    def to_dict(self) -> Dict[str, Any]:
        return {
            "flow_axis": self.flow_axis,
            "slice_k": self.slice_k,
            "k_3d": self.k_3d,
            "lower_bound_harmonic": self.lower_bound_harmonic,
            "upper_bound_arithmetic": self.upper_bound_arithmetic,
            "blocked": self.blocked,
            "k_3d_column_first": self.k_3d_column_first,
            "class_table": self.class_table.to_dict() if self.class_table else None,
            "class_contributions": self.class_contributions,
            "calib_tag": self.calib_tag,
            "unit_convention": UNIT_CONVENTION,
        }
