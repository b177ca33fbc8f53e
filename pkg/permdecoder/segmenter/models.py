from enum import IntEnum
from typing import Any, Dict, List, Optional

import numpy as np

from permdecoder.grid.models import ValueKind, VoxelGrid

FEATURE_NAMES = ["intensity", "neighborhood_mean", "neighborhood_std", "gradient_magnitude"]


class DhzClass(IntEnum):
    """
    Heterogeneity zone classes. Ids are stable and break voting ties.
    """
    PYRITE = 0
    OPEN_VUG = 1
    INTERGRANULAR_1 = 2
    INTERGRANULAR_2 = 3

    @property
    def display_name(self) -> str:
        return _DISPLAY_NAMES[self]

    @classmethod
    def from_name(cls, name: str) -> "DhzClass":
        for member, display in _DISPLAY_NAMES.items():
            if name == display or name.upper() == member.name:
                return member
        raise ValueError(f"Unknown class name {name!r}")


_DISPLAY_NAMES = {
    DhzClass.PYRITE: "Pyrite",
    DhzClass.OPEN_VUG: "OpenVug",
    DhzClass.INTERGRANULAR_1: "Intergranular1",
    DhzClass.INTERGRANULAR_2: "Intergranular2",
}


class LabelGrid:
    """
    One DhzClass id per voxel, laid out like VoxelGrid.values (nz, ny, nx)
    """
    def __init__(self, labels: np.ndarray, voxel_size_um: float = 1.0):
        labels = np.asarray(labels)
        if labels.ndim != 3:
            raise ValueError(f"Label grid needs three axes, got shape {labels.shape}")
        if labels.size and (labels.min() < 0 or labels.max() >= len(DhzClass)):
            raise ValueError("Label grid holds ids outside the class set")
        self.labels = np.ascontiguousarray(labels, dtype=np.uint8)
        self.voxel_size_um = float(voxel_size_um)

    @property
    def dims(self) -> tuple:
        nz, ny, nx = self.labels.shape
        return (nx, ny, nz)

    def to_voxel_grid(self) -> VoxelGrid:
        return VoxelGrid(self.labels.astype(np.float64), self.voxel_size_um, ValueKind.LABELS)

    @classmethod
    def from_voxel_grid(cls, grid: VoxelGrid) -> "LabelGrid":
        if grid.value_kind != ValueKind.LABELS:
            raise ValueError(f"{grid!r} does not hold labels")
        return cls(grid.values.astype(np.uint8), grid.voxel_size_um)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LabelGrid):
            return NotImplemented
        return np.array_equal(self.labels, other.labels)


class Seed:
    def __init__(self, x: int, y: int, z: int, dhz_class: DhzClass):
        self.x = int(x)
        self.y = int(y)
        self.z = int(z)
        self.dhz_class = DhzClass(dhz_class)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Seed":
        return cls(data["x"], data["y"], data["z"], DhzClass.from_name(data["class_name"]))

    def to_dict(self) -> Dict[str, Any]:
        return {"x": self.x, "y": self.y, "z": self.z, "class_name": self.dhz_class.display_name}


class TrainingSeeds:
    """
    Expert annotations: voxel coordinates with the class they belong to
    """
    def __init__(self, seeds: List[Seed]):
        self.seeds = list(seeds)

    def __len__(self) -> int:
        return len(self.seeds)

    def __iter__(self):
        return iter(self.seeds)

    def classes(self) -> set:
        return {seed.dhz_class for seed in self.seeds}

    def to_dict(self) -> List[Dict[str, Any]]:
        return [seed.to_dict() for seed in self.seeds]


class ClassifierModel:
    """
    k-NN voxel classifier in z-scored feature space.

    Holds the standardized training vectors, so it is immutable and
    self-contained once trained.
    """
    def __init__(
        self,
        k: int,
        kept_features: List[int],
        feature_mean: np.ndarray,
        feature_scale: np.ndarray,
        vectors: np.ndarray,
        labels: np.ndarray,
        dropped_features: Optional[List[str]] = None,
    ):
        self.k = int(k)
        self.kept_features = list(kept_features)
        self.feature_mean = np.asarray(feature_mean, dtype=np.float64)
        self.feature_scale = np.asarray(feature_scale, dtype=np.float64)
        self.vectors = np.asarray(vectors, dtype=np.float64)
        self.labels = np.asarray(labels, dtype=np.int64)
        self.dropped_features = list(dropped_features or [])

    @property
    def feature_names(self) -> List[str]:
        return [FEATURE_NAMES[i] for i in self.kept_features]

    def standardize(self, features: np.ndarray) -> np.ndarray:
        """Select the kept columns of raw (..., 4) features and z-score them"""
        return (features[..., self.kept_features] - self.feature_mean) / self.feature_scale

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ClassifierModel":
        return cls(
            k=data["k"],
            kept_features=[FEATURE_NAMES.index(name) for name in data["feature_names"]],
            feature_mean=data["feature_mean"],
            feature_scale=data["feature_scale"],
            vectors=data["vectors"],
            labels=data["labels"],
            dropped_features=data.get("dropped_features", []),
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "k": self.k,
            "feature_names": self.feature_names,
            "feature_mean": self.feature_mean.tolist(),
            "feature_scale": self.feature_scale.tolist(),
            "dropped_features": self.dropped_features,
            "vectors": self.vectors.tolist(),
            "labels": self.labels.tolist(),
        }
