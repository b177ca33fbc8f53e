import csv
import logging
import math
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np

from permdecoder.calib.models import CalibrationModel, CalibrationPoint, LookupResult
from permdecoder.exceptions import (
    DecoderException,
    DuplicateIntensity,
    IoFailure,
    NonMonotone,
    TooFewPoints,
    wrap_unexpected,
)
from permdecoder.grid.models import VoxelGrid
from permdecoder.grid.services import GridService

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

TAG_PREFIX = "# tag="
CALIBRATION_COLUMNS = ["mriii", "grain_diameter_um"]


def _parse_diameter(cell: str, mriii: float) -> CalibrationPoint:
    """A diameter cell is either one value or a bead range such as 520-700"""
    cell = cell.strip()
    low, sep, high = cell.partition("-")
    if sep and low and high:
        return CalibrationPoint.from_bead_range(mriii, float(low), float(high))
    return CalibrationPoint(mriii, float(cell))


class CalibService:
    """
    Service for the intensity to grain diameter calibration
    """

    @staticmethod
    def fit_mgcm(points: List[CalibrationPoint], tag: str) -> CalibrationModel:
        """
        Validate calibration points and build the curve. The tag records the
        acquisition settings the curve is valid for and is mandatory.
        """
        if not tag or not tag.strip():
            raise DecoderException("A calibration needs an acquisition tag")
        if len(points) < 2:
            raise TooFewPoints(f"A calibration needs at least 2 points, got {len(points)}")

        ordered = sorted(points, key=lambda p: p.mriii)
        intensities = np.array([p.mriii for p in ordered])
        if np.any(np.diff(intensities) == 0):
            raise DuplicateIntensity("Two calibration points share the same intensity")

        steps = np.diff([p.grain_diameter_um for p in ordered])
        if not (np.all(steps > 0) or np.all(steps < 0)):
            raise NonMonotone("Grain diameter must change monotonically with intensity")

        model = CalibrationModel(ordered, tag.strip())
        logger.info(
            "Calibration %r: %d points over intensity %.4g..%.4g, diameter %s with intensity",
            model.acquisition_tag,
            len(ordered),
            *model.calibrated_range,
            "increasing" if model.increasing else "decreasing",
        )
        return model

    @staticmethod
    def lookup(model: CalibrationModel, mriii: float) -> Tuple[float, bool]:
        """
        (diameter, extrapolated). Knots return their diameter exactly; outside
        the calibrated range the end segment is extended.
        """
        mriii = float(mriii)
        knots = model.mriii
        at = int(np.searchsorted(knots, mriii))
        if at < len(knots) and knots[at] == mriii:
            return float(model.diameters[at]), False

        i = min(max(at - 1, 0), len(knots) - 2)
        t = (mriii - knots[i]) / (knots[i + 1] - knots[i])
        log_d = (1.0 - t) * model.log_diameters[i] + t * model.log_diameters[i + 1]
        extrapolated = mriii < knots[0] or mriii > knots[-1]
        return float(math.exp(log_d)), extrapolated

    @staticmethod
    def grain_diameter_from_intensity(model: CalibrationModel, mriii: float) -> LookupResult:
        diameter, extrapolated = CalibService.lookup(model, mriii)
        if extrapolated:
            logger.warning(
                "Intensity %.6g lies outside calibrated range %s of %r; extrapolating",
                mriii,
                model.calibrated_range,
                model.acquisition_tag,
            )
        return LookupResult(mriii, diameter, extrapolated, model.acquisition_tag)

    @staticmethod
    def decode_grain_diameter(
        grid: VoxelGrid,
        model: CalibrationModel,
        mask=None,
        mask_class=None,
        n_bins: int = 64,
    ) -> LookupResult:
        """
        Histogram the (masked) volume, take its mean intensity and look it up
        """
        try:
            hist = GridService.histogram(grid, n_bins, mask, mask_class)
            result = CalibService.grain_diameter_from_intensity(model, hist.mean)
            if grid.acquisition_tag and grid.acquisition_tag != model.acquisition_tag:
                logger.warning(
                    "Volume acquired as %r but calibration is for %r",
                    grid.acquisition_tag,
                    model.acquisition_tag,
                )
                result.tag_mismatch = True
            return result
        except Exception as e:
            raise wrap_unexpected(e, "decoding grain diameter")

    @staticmethod
    def load_calibration(path: PathLike, tag: Optional[str] = None) -> CalibrationModel:
        """
        CSV `mriii,grain_diameter_um` with a `# tag=<text>` header line.
        An explicit tag overrides the file's.
        """
        file_tag = None
        points = []
        try:
            with open(path, "r", encoding="utf-8") as handle:
                lines = handle.read().splitlines()
        except FileNotFoundError:
            raise IoFailure(f"Calibration file {path} not found")
        except OSError as e:
            raise IoFailure(f"Cannot read calibration file {path}: {str(e)}")

        body = []
        for line in lines:
            if line.startswith(TAG_PREFIX):
                file_tag = line[len(TAG_PREFIX):].strip()
            elif line.strip() and not line.startswith("#"):
                body.append(line)
        try:
            for row in csv.DictReader(body):
                mriii = float(row["mriii"])
                points.append(_parse_diameter(row["grain_diameter_um"], mriii))
        except (KeyError, TypeError, ValueError) as e:
            raise DecoderException(f"Calibration file {path} is malformed: {str(e)}")
        return CalibService.fit_mgcm(points, tag or file_tag or "")

    @staticmethod
    def save_calibration(model: CalibrationModel, path: PathLike) -> None:
        try:
            with open(path, "w", newline="", encoding="utf-8") as handle:
                handle.write(f"{TAG_PREFIX}{model.acquisition_tag}\n")
                writer = csv.writer(handle, lineterminator="\n")
                writer.writerow(CALIBRATION_COLUMNS)
                for point in model.points:
                    writer.writerow([repr(point.mriii), repr(point.grain_diameter_um)])
        except OSError as e:
            raise IoFailure(f"Cannot write calibration to {path}: {str(e)}")
