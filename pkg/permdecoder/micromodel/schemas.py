from enum import Enum
from typing import List, Optional

from pydantic import BaseModel, Field


class MicromodelSample(str, Enum):
    HOMOGENEOUS_2000 = "Homogeneous2000"
    HOMOGENEOUS_4000 = "Homogeneous4000"
    SERIAL_TWO_ZONE = "SerialTwoZone"
    PARALLEL_TWO_ZONE = "ParallelTwoZone"
    ARBITRARY_HETEROGENEOUS = "ArbitraryHeterogeneous"


# numbering of the five validation layouts
SAMPLE_NUMBERS = {
    MicromodelSample.HOMOGENEOUS_2000: 1,
    MicromodelSample.HOMOGENEOUS_4000: 2,
    MicromodelSample.SERIAL_TWO_ZONE: 3,
    MicromodelSample.PARALLEL_TWO_ZONE: 4,
    MicromodelSample.ARBITRARY_HETEROGENEOUS: 5,
}


class MicromodelSpec(BaseModel):
    sample: MicromodelSample = Field(..., description="Which of the five validation layouts")
    seed: int = Field(0, description="Generator seed, used by ArbitraryHeterogeneous")
    mesh_fine_um: float = Field(2000.0, gt=0, description="Inner lateral of the fine mesh")
    mesh_coarse_um: float = Field(4000.0, gt=0, description="Inner lateral of the coarse mesh")
    length_cm: float = Field(7.8, gt=0, description="Cylinder length along the flow axis")
    diameter_cm: float = Field(3.8, gt=0, description="Cylinder diameter")
    voxel_size_um: float = Field(1000.0, gt=0, description="Voxel edge; must divide both mesh laterals")
    mesh_k_md: Optional[List[float]] = Field(
        None,
        min_length=2,
        max_length=2,
        description="Permeability of the fine and coarse mesh; default derives it from the mesh lateral",
    )

    @property
    def name(self) -> str:
        if self.sample == MicromodelSample.ARBITRARY_HETEROGENEOUS:
            return f"{self.sample.value}[seed={self.seed}]"
        return self.sample.value

    @property
    def number(self) -> int:
        return SAMPLE_NUMBERS[self.sample]

    model_config = {
        "json_schema_extra": {
            "example": {
                "sample": "SerialTwoZone",
                "voxel_size_um": 1000.0,
            }
        }
    }


class OracleResponse(BaseModel):
    k_eff: float = Field(..., ge=0, description="Effective permeability from the flow solve, mD")
    iterations: int = Field(..., ge=0, description="Conjugate gradient iterations")
    residual: float = Field(..., ge=0, description="Final relative residual")
    percolates: bool = Field(..., description="Whether a k>0 path joins inlet and outlet")
    n_unknowns: int = Field(..., ge=0, description="Voxels taking part in the solve")


class ComparisonResponse(BaseModel):
    sample: str = Field(..., description="Sample name")
    k_3dpim: float = Field(..., description="Slice-aggregated permeability, mD")
    k_oracle: float = Field(..., description="Flow-solve permeability, mD")
    relative_error: Optional[float] = Field(..., description="|k_3dpim - k_oracle| / k_oracle")
    within_bounds: bool = Field(..., description="Both values inside the harmonic/arithmetic bounds")
