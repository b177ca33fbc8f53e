import csv
import json
import logging
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np
from pydantic import ValidationError

from permdecoder.exceptions import (
    DecoderException,
    EmptySelection,
    IoFailure,
    MaskMismatch,
    NonFiniteValues,
    SidecarError,
    SizeMismatch,
    wrap_unexpected,
)
from permdecoder.grid.models import Histogram, ValueKind, VoxelGrid
from permdecoder.grid.schemas import RAW_DTYPES, GridSidecar

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

# new z axis taken from the old axis, as an (nz, ny, nx) transpose
_FLOW_AXIS_TRANSPOSE = {
    "z": (0, 1, 2),
    "y": (1, 0, 2),
    "x": (2, 1, 0),
}


def sidecar_path(path: PathLike) -> Path:
    """`<name>.raw` -> `<name>.meta.json`; any other name gets `.meta.json` appended"""
    path = Path(path)
    if path.suffix == ".raw":
        return path.with_name(path.stem + ".meta.json")
    return path.with_name(path.name + ".meta.json")


class GridService:
    """
    Service for voxel grid I/O and summary statistics
    """

    @staticmethod
    def load_grid(path: PathLike) -> VoxelGrid:
        """
        Load a raw little-endian volume plus its JSON sidecar
        """
        path = Path(path)
        meta_path = sidecar_path(path)
        try:
            with open(meta_path, "r", encoding="utf-8") as handle:
                sidecar = GridSidecar(**json.load(handle))
        except FileNotFoundError:
            raise SidecarError(f"Sidecar {meta_path} not found")
        except (json.JSONDecodeError, ValidationError, TypeError) as e:
            raise SidecarError(f"Sidecar {meta_path} is corrupt: {str(e)}")

        try:
            raw = np.fromfile(path, dtype=RAW_DTYPES[sidecar.dtype])
        except FileNotFoundError:
            raise IoFailure(f"Data file {path} not found")
        except OSError as e:
            raise IoFailure(f"Cannot read data file {path}: {str(e)}")

        expected = sidecar.nx * sidecar.ny * sidecar.nz
        if raw.size != expected or path.stat().st_size != expected * raw.itemsize:
            raise SizeMismatch(
                f"Sidecar says {sidecar.nx}x{sidecar.ny}x{sidecar.nz} {sidecar.dtype} "
                f"({expected} values) but {path} holds {path.stat().st_size} bytes"
            )

        values = raw.astype(np.float64)
        if not np.all(np.isfinite(values)):
            raise NonFiniteValues(f"{path} contains NaN or infinite values")

        grid = VoxelGrid.from_flat(
            values,
            sidecar.nx,
            sidecar.ny,
            sidecar.nz,
            sidecar.voxel_size_um,
            sidecar.value_kind,
            sidecar.acquisition_tag,
        )
        logger.debug("Loaded %r from %s", grid, path)
        return grid

    @staticmethod
    def save_grid(grid: VoxelGrid, path: PathLike, dtype: Optional[str] = None) -> None:
        """
        Write data + sidecar. Floating grids default to f64 and labels to u8,
        so load_grid gives back the same values bit for bit.
        """
        if dtype is None:
            dtype = "u8" if grid.value_kind == ValueKind.LABELS else "f64"
        if dtype not in RAW_DTYPES:
            raise SidecarError(f"Unsupported dtype {dtype}")
        if not np.all(np.isfinite(grid.values)):
            raise NonFiniteValues(f"Refusing to save {grid!r} with non-finite values")

        data = grid.values.astype(RAW_DTYPES[dtype])
        if not np.array_equal(data.astype(np.float64), grid.values):
            raise IoFailure(f"Values of {grid!r} are not representable as {dtype}")

        sidecar = GridSidecar(
            nx=grid.nx,
            ny=grid.ny,
            nz=grid.nz,
            voxel_size_um=grid.voxel_size_um,
            dtype=dtype,
            value_kind=grid.value_kind,
            acquisition_tag=grid.acquisition_tag,
        )
        path = Path(path)
        try:
            data.tofile(path)
            with open(sidecar_path(path), "w", encoding="utf-8") as handle:
                handle.write(sidecar.model_dump_json(indent=2, exclude_none=True))
        except OSError as e:
            raise IoFailure(f"Cannot write grid to {path}: {str(e)}")
        logger.debug("Saved %r to %s as %s", grid, path, dtype)

    @staticmethod
    def selection(grid: VoxelGrid, mask=None, mask_class=None) -> np.ndarray:
        """
        Values selected by an optional label grid restricted to one class
        """
        if mask is None:
            return grid.flat()
        if tuple(mask.dims) != tuple(grid.dims):
            raise MaskMismatch(f"Mask dims {mask.dims} differ from grid dims {grid.dims}")
        if mask_class is None:
            raise MaskMismatch("A mask needs the class it selects")
        selected = grid.values[mask.labels == int(mask_class)]
        if selected.size == 0:
            raise EmptySelection(f"No voxels carry label {mask_class!r}")
        return selected

    @staticmethod
    def bounded_mean(values: np.ndarray) -> float:
        """
        Arithmetic mean kept inside [min, max]; a constant selection returns
        its value exactly.
        """
        if values.size == 0:
            raise EmptySelection("Mean of an empty selection")
        return float(np.clip(np.mean(values), values.min(), values.max()))

    @staticmethod
    def histogram(
        grid: VoxelGrid,
        n_bins: int,
        mask=None,
        mask_class=None,
        value_range: Optional[Tuple[float, float]] = None,
    ) -> Histogram:
        """
        Histogram of the (masked) voxels. The mean is taken from the values,
        not from bin centres.
        """
        if n_bins < 1:
            raise DecoderException(f"n_bins must be at least 1, got {n_bins}")
        try:
            values = GridService.selection(grid, mask, mask_class)
            if values.size == 0:
                raise EmptySelection("Histogram of an empty selection")
            counts, edges = np.histogram(values, bins=n_bins, range=value_range)
            if counts.sum() != values.size:
                # values outside an explicit range are not counted
                raise EmptySelection(
                    f"{values.size - int(counts.sum())} selected voxels fall outside range {value_range}"
                )
            return Histogram(edges, counts, GridService.bounded_mean(values))
        except Exception as e:
            raise wrap_unexpected(e, "computing histogram")

    @staticmethod
    def write_histogram_csv(hist: Histogram, path: PathLike) -> None:
        try:
            with open(path, "w", newline="", encoding="utf-8") as handle:
                writer = csv.writer(handle)
                writer.writerow(["bin_lo", "bin_hi", "count"])
                for row in hist.rows():
                    writer.writerow([repr(row["bin_lo"]), repr(row["bin_hi"]), row["count"]])
                handle.write(f"# mean={hist.mean!r}\n")
        except OSError as e:
            raise IoFailure(f"Cannot write histogram to {path}: {str(e)}")

    @staticmethod
    def read_histogram_csv(path: PathLike) -> Histogram:
        edges, counts, mean = [], [], None
        try:
            with open(path, "r", encoding="utf-8") as handle:
                for line in handle:
                    line = line.strip()
                    if line.startswith("# mean="):
                        mean = float(line.split("=", 1)[1])
                    elif line and not line.startswith("bin_lo"):
                        lo, hi, count = line.split(",")
                        if not edges:
                            edges.append(float(lo))
                        edges.append(float(hi))
                        counts.append(int(count))
        except (OSError, ValueError) as e:
            raise IoFailure(f"Cannot read histogram {path}: {str(e)}")
        if mean is None:
            raise IoFailure(f"Histogram {path} has no mean line")
        return Histogram(np.array(edges), np.array(counts), mean)

    @staticmethod
    def rotate_to_flow_axis(grid: VoxelGrid, axis: str) -> VoxelGrid:
        """
        Reorder axes so that `axis` becomes z, the axis every aggregation
        treats as the flow direction.
        """
        if axis not in _FLOW_AXIS_TRANSPOSE:
            raise DecoderException(f"Unknown flow axis {axis!r}")
        return grid.with_values(np.transpose(grid.values, _FLOW_AXIS_TRANSPOSE[axis]))
