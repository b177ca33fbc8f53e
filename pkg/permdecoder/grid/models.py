from enum import Enum
from typing import Any, Dict, List, Optional

import numpy as np


class ValueKind(str, Enum):
    INTENSITY = "intensity"
    PERMEABILITY_MD = "permeability_md"
    LABELS = "labels"
    PRESSURE = "pressure"


class VoxelGrid:
    """
    Dense 3D scalar volume with isotropic voxels.

    `values` is held as a float64 array of shape (nz, ny, nx), so the flat
    C-order layout is x-fastest, then y, then z, and every z-slice is a
    contiguous block.
    """
    def __init__(
        self,
        values: np.ndarray,
        voxel_size_um: float,
        value_kind: ValueKind = ValueKind.INTENSITY,
        acquisition_tag: Optional[str] = None,
    ):
        values = np.asarray(values, dtype=np.float64)
        if values.ndim != 3 or min(values.shape) < 1:
            raise ValueError(f"Voxel grid needs three non-empty axes, got shape {values.shape}")
        if not voxel_size_um > 0:
            raise ValueError(f"Voxel size must be positive, got {voxel_size_um}")
        self.values = np.ascontiguousarray(values)
        self.voxel_size_um = float(voxel_size_um)
        self.value_kind = ValueKind(value_kind)
        self.acquisition_tag = acquisition_tag

    @classmethod
    def from_flat(
        cls,
        flat: np.ndarray,
        nx: int,
        ny: int,
        nz: int,
        voxel_size_um: float,
        value_kind: ValueKind = ValueKind.INTENSITY,
        acquisition_tag: Optional[str] = None,
    ) -> "VoxelGrid":
        """
        Build from an x-fastest flat sequence of nx*ny*nz values
        """
        flat = np.asarray(flat, dtype=np.float64)
        if flat.size != nx * ny * nz:
            raise ValueError(f"Expected {nx * ny * nz} values, got {flat.size}")
        return cls(flat.reshape(nz, ny, nx), voxel_size_um, value_kind, acquisition_tag)

    @property
    def nx(self) -> int:
        return self.values.shape[2]

    @property
    def ny(self) -> int:
        return self.values.shape[1]

    @property
    def nz(self) -> int:
        return self.values.shape[0]

    @property
    def dims(self) -> tuple:
        return (self.nx, self.ny, self.nz)

    @property
    def n_voxels(self) -> int:
        return self.values.size

    def flat(self) -> np.ndarray:
        return self.values.reshape(-1)

    def value_at(self, x: int, y: int, z: int) -> float:
        return float(self.values[z, y, x])

    def slice_view(self, z: int) -> np.ndarray:
        """The x-y plane at height z, shape (ny, nx)"""
        return self.values[z]

    def with_values(self, values: np.ndarray, value_kind: Optional[ValueKind] = None) -> "VoxelGrid":
        return VoxelGrid(
            values,
            self.voxel_size_um,
            value_kind if value_kind is not None else self.value_kind,
            self.acquisition_tag,
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, VoxelGrid):
            return NotImplemented
        return (
            self.values.shape == other.values.shape
            and self.voxel_size_um == other.voxel_size_um
            and self.value_kind == other.value_kind
            and np.array_equal(self.values, other.values)
        )

    def __repr__(self) -> str:
        return f"VoxelGrid({self.nx}x{self.ny}x{self.nz}, {self.voxel_size_um} um, {self.value_kind.value})"


class Histogram:
    """
    Counts of the selected voxels plus their exact arithmetic mean
    """
    def __init__(self, bin_edges: np.ndarray, counts: np.ndarray, mean: float):
        self.bin_edges = np.asarray(bin_edges, dtype=np.float64)
        self.counts = np.asarray(counts, dtype=np.int64)
        self.mean = float(mean)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def rows(self) -> List[Dict[str, Any]]:
        return [
            {"bin_lo": float(lo), "bin_hi": float(hi), "count": int(count)}
            for lo, hi, count in zip(self.bin_edges[:-1], self.bin_edges[1:], self.counts)
        ]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "bin_edges": self.bin_edges.tolist(),
            "counts": self.counts.tolist(),
            "mean": self.mean,
        }
