from typing import Dict, List

from pydantic import BaseModel, Field, RootModel, field_validator

from permdecoder.segmenter.models import FEATURE_NAMES, DhzClass


class SeedEntry(BaseModel):
    x: int = Field(..., ge=0, description="Voxel index along x")
    y: int = Field(..., ge=0, description="Voxel index along y")
    z: int = Field(..., ge=0, description="Voxel index along z")
    class_name: str = Field(..., description="Pyrite, OpenVug, Intergranular1 or Intergranular2")

    @field_validator("class_name")
    @classmethod
    def validate_class_name(cls, v):
        DhzClass.from_name(v)
        return v


class SeedsFile(RootModel[List[SeedEntry]]):
    pass


class ClassifierModelFile(BaseModel):
    k: int = Field(..., ge=1, description="Neighbor count")
    feature_names: List[str] = Field(..., min_length=1, description="Features kept after dropping degenerate ones")
    feature_mean: List[float] = Field(..., description="Training mean of each kept feature")
    feature_scale: List[float] = Field(..., description="Training standard deviation of each kept feature")
    dropped_features: List[str] = Field([], description="Features with zero variance over the seeds")
    vectors: List[List[float]] = Field(..., description="Standardized training vectors")
    labels: List[int] = Field(..., description="Class id of each training vector")

    @field_validator("feature_names", "dropped_features")
    @classmethod
    def validate_feature_names(cls, v):
        for name in v:
            if name not in FEATURE_NAMES:
                raise ValueError(f"Unknown feature {name!r}")
        return v


class SegmentationSummary(BaseModel):
    class_fractions: Dict[str, float] = Field(..., description="Volume fraction of each class")
    k: int = Field(..., description="Neighbor count used")
    feature_names: List[str] = Field(..., description="Features the classifier used")
    dropped_features: List[str] = Field([], description="Degenerate features left out")
