from typing import Literal, Optional

from pydantic import BaseModel, Field

from permdecoder.grid.models import ValueKind

# on-disk dtype name -> little-endian numpy dtype
RAW_DTYPES = {
    "u8": "<u1",
    "u16": "<u2",
    "f32": "<f4",
    "f64": "<f8",
}


class GridSidecar(BaseModel):
    nx: int = Field(..., ge=1, description="Voxel count along x")
    ny: int = Field(..., ge=1, description="Voxel count along y")
    nz: int = Field(..., ge=1, description="Voxel count along z (flow axis)")
    voxel_size_um: float = Field(..., gt=0, description="Isotropic voxel edge in micrometres")
    dtype: Literal["u8", "u16", "f32", "f64"] = Field(..., description="Raw little-endian scalar type of the data file")
    value_kind: ValueKind = Field(..., description="What the voxel values mean")
    order: Literal["x-fastest"] = Field("x-fastest", description="Voxel ordering of the data file")
    acquisition_tag: Optional[str] = Field(None, description="Provenance of the acquisition, compared against calibration tags")

    model_config = {
        "json_schema_extra": {
            "example": {
                "nx": 64,
                "ny": 64,
                "nz": 64,
                "voxel_size_um": 28.0,
                "dtype": "u8",
                "value_kind": "intensity",
                "order": "x-fastest",
            }
        }
    }
