import csv
import json
import logging
from contextlib import contextmanager
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Sequence, Union

import numpy as np
import pydantic
import scipy
import sklearn
from pydantic import ValidationError

import permdecoder
from permdecoder.calib.models import CalibrationModel
from permdecoder.calib.services import CalibService
from permdecoder.config import RunConfig
from permdecoder.exceptions import DecoderException, ExitStatus, IoFailure, wrap_unexpected
from permdecoder.geometry.models import PackingConfig
from permdecoder.grid.models import VoxelGrid
from permdecoder.grid.services import GridService
from permdecoder.micromodel.schemas import MicromodelSample, MicromodelSpec
from permdecoder.micromodel.services import MicromodelService
from permdecoder.pim.models import DecodeReport
from permdecoder.pim.services import PimService
from permdecoder.pipeline.models import PipelineOutcome
from permdecoder.pipeline.schemas import RunDocument, SuiteRow
from permdecoder.segmenter.models import ClassifierModel, DhzClass, LabelGrid, TrainingSeeds
from permdecoder.segmenter.services import SegmenterService

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

FLOW_AXES = ("x", "y", "z")
SUITE_COLUMNS = list(SuiteRow.model_fields)
# layouts 1-4 are separable, so slice aggregation must match the flow solve
SEPARABLE_SAMPLES = {
    MicromodelSample.HOMOGENEOUS_2000,
    MicromodelSample.HOMOGENEOUS_4000,
    MicromodelSample.SERIAL_TWO_ZONE,
    MicromodelSample.PARALLEL_TWO_ZONE,
}


@contextmanager
def stage(name: str) -> Iterator[None]:
    """Run a pipeline stage; any error leaving it is tagged with its name"""
    logger.info("Stage %s", name)
    try:
        yield
    except Exception as e:
        raise wrap_unexpected(e, f"in stage {name}").with_stage(name)


def flow_axes(flow_axis: str) -> List[str]:
    return list(FLOW_AXES) if flow_axis == "all" else [flow_axis]


def _rotate_labels(labels: LabelGrid, axis: str) -> LabelGrid:
    return LabelGrid.from_voxel_grid(GridService.rotate_to_flow_axis(labels.to_voxel_grid(), axis))


class PipelineService:
    """
    Service wiring segmentation, calibration and aggregation into runs
    """

    @staticmethod
    def per_class_mean_intensity(grid: VoxelGrid, labels: LabelGrid, n_bins: int) -> Dict[DhzClass, float]:
        """Mean intensity of every class present in `labels`"""
        present = np.unique(labels.labels)
        return {
            DhzClass(int(c)): GridService.histogram(grid, n_bins, labels, DhzClass(int(c))).mean for c in present
        }

    @staticmethod
    def decode_volume(
        intensity_grid: VoxelGrid,
        calibration: Union[CalibrationModel, PathLike],
        config: RunConfig,
        seeds: Union[TrainingSeeds, PathLike, None] = None,
        model: Optional[ClassifierModel] = None,
        training_grid: Optional[VoxelGrid] = None,
        flow_axis: Optional[str] = None,
    ) -> PipelineOutcome:
        """
        train -> classify -> per-class mean intensity -> class table ->
        permeability map -> decode. Seeds are placed on `training_grid` when
        given, otherwise on the volume itself. A saved model skips training.
        """
        flow_axis = flow_axis or config.flow_axis
        if flow_axis not in FLOW_AXES:
            raise DecoderException(f"Decode runs along one axis at a time, got {flow_axis!r}")

        if model is None:
            with stage("train"):
                if seeds is None:
                    raise DecoderException("Training needs seeds or a saved classifier model")
                if not isinstance(seeds, TrainingSeeds):
                    seeds = SegmenterService.load_seeds(seeds)
                model = SegmenterService.train(
                    intensity_grid if training_grid is None else training_grid, seeds, config.k_neighbors
                )

        with stage("classify"):
            labels = SegmenterService.classify(intensity_grid, model)
            fractions = SegmenterService.class_fractions(labels)
            logger.info(
                "Class fractions: %s",
                ", ".join(f"{c.display_name}={f:.4f}" for c, f in fractions.items()),
            )

        with stage("mean-intensity"):
            per_class = PipelineService.per_class_mean_intensity(intensity_grid, labels, config.bins)

        with stage("calibrate"):
            if not isinstance(calibration, CalibrationModel):
                calibration = CalibService.load_calibration(calibration)
            if intensity_grid.acquisition_tag and intensity_grid.acquisition_tag != calibration.acquisition_tag:
                logger.warning(
                    "Volume acquired as %r but calibration is for %r",
                    intensity_grid.acquisition_tag,
                    calibration.acquisition_tag,
                )
            overrides: Dict[DhzClass, float] = {c: 0.0 for c in DhzClass if c not in per_class}
            if config.pyrite_override_md is not None:
                overrides[DhzClass.PYRITE] = config.pyrite_override_md
            table = PimService.table_from_calibration(
                per_class, calibration, PackingConfig(config.packing), overrides
            )

        with stage("assign"):
            kmap = GridService.rotate_to_flow_axis(PimService.assign_permeability(labels, table), flow_axis)
            rotated_labels = _rotate_labels(labels, flow_axis)

        with stage("decode"):
            report = PimService.decode(
                kmap,
                labels=rotated_labels,
                table=table,
                calib_tag=calibration.acquisition_tag,
                flow_axis=flow_axis,
            )

        return PipelineOutcome(
            report=report,
            kmap=kmap,
            labels=labels,
            model=model,
            class_fractions={c.display_name: float(f) for c, f in fractions.items()},
        )

    @staticmethod
    def run_decode_pipeline(
        intensity_grid: VoxelGrid,
        seeds: Union[TrainingSeeds, PathLike],
        calibration: Union[CalibrationModel, PathLike],
        config: RunConfig,
    ) -> DecodeReport:
        return PipelineService.decode_volume(intensity_grid, calibration, config, seeds=seeds).report

    @staticmethod
    def decode_kmap(kmap: VoxelGrid, flow_axis: str = "z") -> DecodeReport:
        """Decode an existing permeability map along one axis"""
        with stage("decode"):
            rotated = GridService.rotate_to_flow_axis(kmap, flow_axis)
            return PimService.decode(rotated, flow_axis=flow_axis)

    @staticmethod
    def default_suite(config: RunConfig) -> List[MicromodelSpec]:
        """The five validation layouts at the configured voxel size"""
        return [
            MicromodelSpec(sample=sample, seed=config.seed, voxel_size_um=config.voxel_size_um)
            for sample in MicromodelSample
        ]

    @staticmethod
    def run_validation_sample(spec: MicromodelSpec, config: RunConfig) -> SuiteRow:
        with stage("generate"):
            kmap, _, _ = MicromodelService.generate_micromodel(spec, PackingConfig(config.packing))
        with stage("decode"):
            report = PimService.decode(kmap)
        with stage("oracle"):
            oracle = MicromodelService.resistor_oracle(kmap, tol=config.tol, max_iter=config.max_iter)
        with stage("compare"):
            comparison = MicromodelService.compare(spec.name, report, oracle)

        if spec.sample in SEPARABLE_SAMPLES:
            matches = comparison.relative_error is not None and comparison.relative_error <= config.suite_tolerance
            status = "pass" if matches and comparison.within_bounds else "fail"
        else:
            status = "reported" if comparison.within_bounds else "fail"
        return SuiteRow(
            sample=spec.name,
            number=spec.number,
            k_3dpim=comparison.k_3dpim,
            k_oracle=comparison.k_oracle,
            relative_error=comparison.relative_error,
            lower_bound_harmonic=report.lower_bound_harmonic,
            upper_bound_arithmetic=report.upper_bound_arithmetic,
            within_bounds=comparison.within_bounds,
            iterations=oracle.iterations,
            status=status,
        )

    @staticmethod
    def run_validation_suite(specs: Sequence[MicromodelSpec], config: RunConfig) -> List[SuiteRow]:
        """
        generate -> decode -> oracle -> compare for every spec. A failing
        sample becomes an error row and the suite carries on.
        """
        rows = []
        for spec in specs:
            logger.info("Validating %s", spec.name)
            try:
                row = PipelineService.run_validation_sample(spec, config)
            except DecoderException as e:
                logger.error("Sample %s failed: %s", spec.name, str(e))
                row = SuiteRow(sample=spec.name, number=spec.number, status="error", error=str(e))
            logger.info("Sample %s: %s", spec.name, row.status)
            rows.append(row)
        return rows

    @staticmethod
    def suite_status(rows: Sequence[SuiteRow]) -> ExitStatus:
        if any(row.status in ("error", "fail") for row in rows):
            return ExitStatus.PARTIAL_FAILURE
        return ExitStatus.OK

    @staticmethod
    def versions() -> Dict[str, str]:
        return {
            "permdecoder": permdecoder.__version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "scikit-learn": sklearn.__version__,
            "pydantic": pydantic.VERSION,
        }

    @staticmethod
    def build_run_document(
        command: str,
        config: RunConfig,
        result: Dict[str, Any],
        started_at: Optional[datetime] = None,
    ) -> RunDocument:
        finished_at = datetime.now(timezone.utc)
        return RunDocument(
            command=command,
            config=config.model_dump(mode="json"),
            versions=PipelineService.versions(),
            result=result,
            metadata={
                "started_at": (started_at or finished_at).isoformat(),
                "finished_at": finished_at.isoformat(),
            },
        )

    @staticmethod
    def comparable(document: RunDocument) -> str:
        """Canonical JSON of a report without its timestamps"""
        return json.dumps(document.model_dump(mode="json", exclude={"metadata"}), sort_keys=True)

    @staticmethod
    def write_run_document(document: RunDocument, path: PathLike) -> None:
        try:
            with open(path, "w", encoding="utf-8") as handle:
                json.dump(document.model_dump(mode="json"), handle, sort_keys=True, indent=2)
                handle.write("\n")
        except OSError as e:
            raise IoFailure(f"Cannot write report to {path}: {str(e)}")

    @staticmethod
    def load_run_document(path: PathLike) -> RunDocument:
        try:
            with open(path, "r", encoding="utf-8") as handle:
                return RunDocument(**json.load(handle))
        except FileNotFoundError:
            raise IoFailure(f"Report {path} not found")
        except (json.JSONDecodeError, ValidationError, TypeError) as e:
            raise DecoderException(f"Report {path} is invalid: {str(e)}")

    @staticmethod
    def write_suite_csv(rows: Sequence[SuiteRow], path: PathLike) -> None:
        try:
            with open(path, "w", newline="", encoding="utf-8") as handle:
                writer = csv.writer(handle, lineterminator="\n")
                writer.writerow(SUITE_COLUMNS)
                for row in rows:
                    values = row.model_dump()
                    writer.writerow(["" if values[c] is None else values[c] for c in SUITE_COLUMNS])
        except OSError as e:
            raise IoFailure(f"Cannot write suite table to {path}: {str(e)}")

    @staticmethod
    def emit_companions(document: RunDocument, out_dir: PathLike) -> List[Path]:
        """
        Re-create the CSV companions of a saved report: slice and class
        tables for decode reports, the comparison table for suites.
        """
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        written = []
        try:
            decodes = document.result.get("decodes", {})
            for axis, data in decodes.items():
                report = DecodeReport.from_dict(data)
                path = out_dir / f"slices_{axis}.csv"
                PimService.write_slice_csv(report, path)
                written.append(path)
                if report.class_table is not None:
                    path = out_dir / f"class_table_{axis}.csv"
                    PimService.write_class_table_csv(report.class_table, path)
                    written.append(path)
                logger.info(
                    "%s: k_3d=%.6g mD within [%.6g, %.6g]",
                    axis,
                    report.k_3d,
                    report.lower_bound_harmonic,
                    report.upper_bound_arithmetic,
                )
            if "rows" in document.result:
                rows = [SuiteRow(**row) for row in document.result["rows"]]
                path = out_dir / "suite.csv"
                PipelineService.write_suite_csv(rows, path)
                written.append(path)
                for row in rows:
                    logger.info("%s: %s, relative error %s", row.sample, row.status, row.relative_error)
        except (KeyError, TypeError, ValueError, ValidationError) as e:
            raise DecoderException(f"Report result is malformed: {str(e)}")
        if not written:
            logger.warning("Report of %r has no tables to emit", document.command)
        return written
