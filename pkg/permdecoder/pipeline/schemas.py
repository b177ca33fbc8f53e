from typing import Any, Dict, Optional

from pydantic import BaseModel, Field


class SuiteRow(BaseModel):
    sample: str = Field(..., description="Sample name, with seed for the heterogeneous layout")
    number: int = Field(..., ge=1, le=5, description="Position of the layout in the validation set")
    k_3dpim: Optional[float] = Field(None, description="Slice-aggregated permeability, mD")
    k_oracle: Optional[float] = Field(None, description="Flow-solve permeability, mD")
    relative_error: Optional[float] = Field(None, description="|k_3dpim - k_oracle| / k_oracle")
    lower_bound_harmonic: Optional[float] = Field(None, description="Harmonic voxel mean, mD")
    upper_bound_arithmetic: Optional[float] = Field(None, description="Arithmetic voxel mean, mD")
    within_bounds: Optional[bool] = Field(None, description="Both values inside the bounds")
    iterations: Optional[int] = Field(None, description="CG iterations of the flow solve")
    status: str = Field(..., description="pass, fail, reported or error")
    error: Optional[str] = Field(None, description="Error detail when status is error")


class RunDocument(BaseModel):
    """
    Envelope of every JSON report. Everything but `metadata` is a pure
    function of config and inputs.
    """
    command: str = Field(..., description="Subcommand that produced the report")
    config: Dict[str, Any] = Field(..., description="Fully resolved run configuration")
    versions: Dict[str, str] = Field(..., description="Package and library versions")
    result: Dict[str, Any] = Field(..., description="Command result")
    metadata: Dict[str, Any] = Field({}, description="Wall-clock timestamps; not part of comparisons")
