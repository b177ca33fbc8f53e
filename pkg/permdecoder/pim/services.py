import csv
import logging
import re
from pathlib import Path
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np

from permdecoder.calib.models import CalibrationModel
from permdecoder.calib.services import CalibService
from permdecoder.exceptions import DecoderException, IncompleteTable, IoFailure, wrap_unexpected
from permdecoder.geometry.models import GrainRadius, PackingConfig
from permdecoder.geometry.services import GeometryService
from permdecoder.grid.models import ValueKind, VoxelGrid
from permdecoder.pim.models import (
    ClassPermeability,
    ClassPermeabilityTable,
    DecodeReport,
    ProvenanceKind,
)
from permdecoder.segmenter.models import DhzClass, LabelGrid

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

CLASS_TABLE_COLUMNS = ["class_name", "k_mD", "provenance"]
_PROVENANCE_FIELDS = re.compile(r"(\w+)=([^;)]*)")


def _bounded(value: float, values: np.ndarray) -> float:
    """Keep an aggregate inside the range of what it aggregates"""
    return float(np.clip(value, values.min(), values.max()))


def _harmonic(values: np.ndarray, weights: Optional[np.ndarray] = None) -> float:
    """Weighted harmonic mean; zero as soon as any value is zero"""
    if np.any(values == 0):
        return 0.0
    if weights is None:
        weights = np.ones_like(values)
    return _bounded(np.sum(weights) / np.sum(weights / values), values)


class PimService:
    """
    Service for per-voxel permeability maps and their parallel/serial aggregation
    """

    @staticmethod
    def validate_kmap(kmap: VoxelGrid) -> None:
        if kmap.value_kind != ValueKind.PERMEABILITY_MD:
            raise DecoderException(f"{kmap!r} is not a permeability map")
        if not np.all(np.isfinite(kmap.values)) or np.any(kmap.values < 0):
            raise DecoderException(f"{kmap!r} holds negative or non-finite permeability")

    @staticmethod
    def assign_permeability(labels: LabelGrid, table: ClassPermeabilityTable) -> VoxelGrid:
        """Every voxel takes the permeability of its class"""
        if not table.is_complete():
            missing = ", ".join(c.display_name for c in table.missing())
            raise IncompleteTable(f"No permeability for class(es): {missing}")
        lookup = np.array(table.lookup_array(), dtype=np.float64)
        return VoxelGrid(lookup[labels.labels], labels.voxel_size_um, ValueKind.PERMEABILITY_MD)

    @staticmethod
    def table_from_calibration(
        per_class_mriii: Dict[DhzClass, float],
        model: CalibrationModel,
        config: PackingConfig,
        overrides: Optional[Dict[DhzClass, float]] = None,
    ) -> ClassPermeabilityTable:
        """
        Mean intensity -> grain diameter -> permeability from grain radius,
        per class. Overrides are taken as given.
        """
        try:
            config = PackingConfig(config)
            overrides = {DhzClass(c): k for c, k in (overrides or {}).items()}
            entries: Dict[DhzClass, ClassPermeability] = {}
            for dhz_class in DhzClass:
                if dhz_class in overrides:
                    entries[dhz_class] = ClassPermeability.constant(overrides[dhz_class])
                    continue
                if dhz_class not in per_class_mriii:
                    raise IncompleteTable(f"No mean intensity and no override for {dhz_class.display_name}")
                lookup = CalibService.grain_diameter_from_intensity(model, per_class_mriii[dhz_class])
                radius = GrainRadius.from_diameter(lookup.grain_diameter_um)
                entries[dhz_class] = ClassPermeability(
                    k_md=GeometryService.permeability_from_grain_radius(config, radius),
                    provenance=ProvenanceKind.FROM_CALIBRATION,
                    mriii_mean=lookup.mriii_mean,
                    grain_diameter_um=lookup.grain_diameter_um,
                    config=config.value,
                    extrapolated=lookup.extrapolated,
                )

            table = ClassPermeabilityTable(entries)
            vug = entries[DhzClass.OPEN_VUG]
            if vug.provenance == ProvenanceKind.FROM_CALIBRATION and vug.k_md < max(table.lookup_array()):
                logger.warning("OpenVug is not the most permeable class; check the calibration direction")
            return table
        except Exception as e:
            raise wrap_unexpected(e, "building class permeability table")

    @staticmethod
    def parallel_aggregate_slice(kmap: VoxelGrid, z: int) -> float:
        """
        Area-weighted arithmetic mean of one x-y slice. Voxels share one
        cross-section, so this is the plain mean.
        """
        if not 0 <= z < kmap.nz:
            raise DecoderException(f"Slice {z} is outside 0..{kmap.nz - 1}")
        plane = kmap.slice_view(z).reshape(-1)
        return _bounded(np.mean(plane), plane)

    @staticmethod
    def serial_aggregate_stack(slice_k: Sequence[float], slice_thickness: float = 1.0) -> float:
        """
        Length-weighted harmonic mean sum(l) / sum(l / k). A zero slice
        blocks the stack and gives 0.
        """
        values = np.asarray(slice_k, dtype=np.float64)
        if values.size == 0:
            raise DecoderException("Cannot aggregate an empty stack")
        if np.any(values < 0):
            raise DecoderException("Slice permeabilities must be non-negative")
        return _harmonic(values, np.full(values.shape, float(slice_thickness)))

    @staticmethod
    def column_first_aggregate(kmap: VoxelGrid) -> float:
        """
        Diagnostic reverse order: harmonic along z per (x, y) column, then
        arithmetic across columns.
        """
        values = kmap.values
        columns = values.reshape(kmap.nz, -1)
        blocked = np.any(columns == 0, axis=0)
        safe = np.where(columns == 0, 1.0, columns)
        column_k = np.where(blocked, 0.0, kmap.nz / np.sum(1.0 / safe, axis=0))
        column_k = np.clip(column_k, columns.min(axis=0), columns.max(axis=0))
        return _bounded(np.mean(column_k), column_k)

    @staticmethod
    def wiener_bounds(kmap: VoxelGrid) -> Tuple[float, float]:
        """(harmonic mean, arithmetic mean) over every voxel"""
        flat = kmap.flat()
        return _harmonic(flat), _bounded(np.mean(flat), flat)

    @staticmethod
    def class_contributions(
        labels: LabelGrid, table: ClassPermeabilityTable, arithmetic_bound: float
    ) -> Dict[str, Dict[str, float]]:
        counts = np.bincount(labels.labels.reshape(-1), minlength=len(DhzClass))
        total = labels.labels.size
        contributions = {}
        for dhz_class in DhzClass:
            fraction = counts[int(dhz_class)] / total
            k = table.k(dhz_class)
            share = fraction * k / arithmetic_bound if arithmetic_bound > 0 else 0.0
            contributions[dhz_class.display_name] = {
                "volume_fraction": float(fraction),
                "k_md": float(k),
                "arithmetic_share": float(share),
            }
        return contributions

    @staticmethod
    def decode(
        kmap: VoxelGrid,
        labels: Optional[LabelGrid] = None,
        table: Optional[ClassPermeabilityTable] = None,
        calib_tag: str = "",
        flow_axis: str = "z",
    ) -> DecodeReport:
        """
        Parallel within every x-y slice, then serial along z.
        """
        try:
            PimService.validate_kmap(kmap)
            slice_k = np.array([PimService.parallel_aggregate_slice(kmap, z) for z in range(kmap.nz)])
            k_3d = PimService.serial_aggregate_stack(slice_k, slice_thickness=kmap.voxel_size_um)
            harmonic, arithmetic = PimService.wiener_bounds(kmap)

            contributions = None
            if labels is not None and table is not None:
                contributions = PimService.class_contributions(labels, table, arithmetic)

            report = DecodeReport(
                slice_k=slice_k.tolist(),
                k_3d=k_3d,
                lower_bound_harmonic=harmonic,
                upper_bound_arithmetic=arithmetic,
                blocked=bool(np.any(slice_k == 0)),
                k_3d_column_first=PimService.column_first_aggregate(kmap),
                class_table=table,
                calib_tag=calib_tag,
                class_contributions=contributions,
                flow_axis=flow_axis,
            )
            if not report.within_bounds(report.k_3d):
                logger.warning(
                    "k_3d %.6g outside bounds [%.6g, %.6g]", report.k_3d, harmonic, arithmetic
                )
            logger.info(
                "Decoded %r along %s: k_3d=%.6g mD, bounds [%.6g, %.6g]%s",
                kmap,
                flow_axis,
                report.k_3d,
                harmonic,
                arithmetic,
                " (blocked)" if report.blocked else "",
            )
            return report
        except Exception as e:
            raise wrap_unexpected(e, "decoding permeability map")

    @staticmethod
    def write_slice_csv(report: DecodeReport, path: PathLike) -> None:
        try:
            with open(path, "w", newline="", encoding="utf-8") as handle:
                writer = csv.writer(handle, lineterminator="\n")
                writer.writerow(["z", "k_mD"])
                for z, k in enumerate(report.slice_k):
                    writer.writerow([z, repr(k)])
        except OSError as e:
            raise IoFailure(f"Cannot write slice table to {path}: {str(e)}")

    @staticmethod
    def write_class_table_csv(table: ClassPermeabilityTable, path: PathLike) -> None:
        try:
            with open(path, "w", newline="", encoding="utf-8") as handle:
                writer = csv.writer(handle, lineterminator="\n")
                writer.writerow(CLASS_TABLE_COLUMNS)
                for dhz_class in DhzClass:
                    if dhz_class in table.entries:
                        entry = table.entries[dhz_class]
                        writer.writerow([dhz_class.display_name, repr(entry.k_md), entry.provenance_text()])
        except OSError as e:
            raise IoFailure(f"Cannot write class table to {path}: {str(e)}")

    @staticmethod
    def read_class_table_csv(path: PathLike) -> ClassPermeabilityTable:
        entries = {}
        try:
            with open(path, "r", newline="", encoding="utf-8") as handle:
                for row in csv.DictReader(handle):
                    kind, _, details = row["provenance"].partition("(")
                    fields = dict(_PROVENANCE_FIELDS.findall(details))
                    entries[DhzClass.from_name(row["class_name"])] = ClassPermeability(
                        k_md=float(row["k_mD"]),
                        provenance=ProvenanceKind(kind),
                        mriii_mean=float(fields["mriii_mean"]) if "mriii_mean" in fields else None,
                        grain_diameter_um=float(fields["grain_diameter_um"]) if "grain_diameter_um" in fields else None,
                        config=fields.get("config"),
                        extrapolated=fields.get("extrapolated") == "True",
                    )
        except FileNotFoundError:
            raise IoFailure(f"Class table {path} not found")
        except (KeyError, ValueError) as e:
            raise DecoderException(f"Class table {path} is malformed: {str(e)}")
        return ClassPermeabilityTable(entries)
