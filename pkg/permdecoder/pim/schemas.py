from typing import Dict, List, Optional

from pydantic import BaseModel, Field


class ClassEntryResponse(BaseModel):
    k_md: float = Field(..., ge=0, description="Permeability assigned to every voxel of the class")
    provenance: str = Field(..., description="DirectConstant or FromCalibration")
    mriii_mean: Optional[float] = Field(None, description="Mean intensity the calibration was applied to")
    grain_diameter_um: Optional[float] = Field(None, description="Calibrated grain diameter")
    config: Optional[str] = Field(None, description="Packing used to turn the radius into permeability")
    extrapolated: bool = Field(False, description="Whether the calibration was extrapolated")


class ClassContribution(BaseModel):
    volume_fraction: float = Field(..., description="Share of voxels in the class")
    k_md: float = Field(..., description="Class permeability")
    arithmetic_share: float = Field(..., description="Share of the arithmetic bound carried by the class")


class DecodeReportResponse(BaseModel):
    flow_axis: str = Field("z", description="Axis the volume was rotated onto before aggregation")
    slice_k: List[float] = Field(..., description="Parallel-aggregated permeability of each slice, mD")
    k_3d: float = Field(..., description="Serial aggregation of the slices, mD")
    lower_bound_harmonic: float = Field(..., description="Harmonic mean of all voxels, mD")
    upper_bound_arithmetic: float = Field(..., description="Arithmetic mean of all voxels, mD")
    blocked: bool = Field(..., description="True when a slice has zero permeability")
    k_3d_column_first: float = Field(..., description="Diagnostic: serial per column first, then parallel")
    class_table: Optional[Dict[str, ClassEntryResponse]] = Field(None, description="Class permeabilities used")
    class_contributions: Dict[str, ClassContribution] = Field({}, description="Per-class share of the map")
    calib_tag: str = Field("", description="Acquisition tag of the calibration")
    unit_convention: str = Field(..., description="How mD relates to the geometric throat area")


