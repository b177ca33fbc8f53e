from pydantic import BaseModel, Field


class LookupResponse(BaseModel):
    mriii_mean: float = Field(..., description="Mean image intensity of the selected voxels")
    grain_diameter_um: float = Field(..., gt=0, description="Calibrated grain diameter")
    extrapolated: bool = Field(..., description="Whether the intensity lies outside the calibrated range")
    tag: str = Field(..., description="Acquisition tag of the calibration used")
    tag_mismatch: bool = Field(False, description="Whether the volume was acquired under a different tag")

    model_config = {
        "json_schema_extra": {
            "example": {
                "mriii_mean": 67.633,
                "grain_diameter_um": 68.82,
                "extrapolated": False,
                "tag": "bead-set-A/TE-fixed",
                "tag_mismatch": False,
            }
        }
    }
