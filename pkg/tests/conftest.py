import numpy as np
import pytest

from permdecoder.calib.models import CalibrationPoint
from permdecoder.calib.services import CalibService
from permdecoder.grid.models import ValueKind, VoxelGrid
from permdecoder.grid.services import GridService
from permdecoder.segmenter.models import DhzClass, LabelGrid, Seed, TrainingSeeds
from permdecoder.segmenter.services import SegmenterService

# 4x4x4 golden volume: x-bands per z-pair, uniform along y
GOLDEN_LOWER = [
    (DhzClass.OPEN_VUG, 40.0),
    (DhzClass.INTERGRANULAR_1, 100.0),
    (DhzClass.INTERGRANULAR_1, 100.0),
    (DhzClass.INTERGRANULAR_2, 160.0),
]
GOLDEN_UPPER = [
    (DhzClass.INTERGRANULAR_1, 100.0),
    (DhzClass.INTERGRANULAR_2, 160.0),
    (DhzClass.INTERGRANULAR_2, 160.0),
    (DhzClass.PYRITE, 230.0),
]
# intensity -> grain diameter (um), diameter falling with intensity
GOLDEN_KNOTS = [(40.0, 200.0), (100.0, 100.0), (160.0, 50.0), (230.0, 10.0)]


def _golden_arrays():
    labels = np.zeros((4, 4, 4), dtype=np.uint8)
    values = np.zeros((4, 4, 4))
    for z in range(4):
        bands = GOLDEN_LOWER if z < 2 else GOLDEN_UPPER
        for x, (dhz_class, intensity) in enumerate(bands):
            labels[z, :, x] = int(dhz_class)
            values[z, :, x] = intensity
    return values, labels


@pytest.fixture
def golden_volume():
    values, labels = _golden_arrays()
    return VoxelGrid(values, 28.0, ValueKind.INTENSITY, acquisition_tag="golden"), LabelGrid(labels, 28.0)


@pytest.fixture
def golden_seeds(golden_volume):
    _, labels = golden_volume
    return TrainingSeeds(
        [Seed(x, y, z, DhzClass(int(labels.labels[z, y, x]))) for z in range(4) for y in range(4) for x in range(4)]
    )


@pytest.fixture
def golden_calibration():
    return CalibService.fit_mgcm([CalibrationPoint(m, d) for m, d in GOLDEN_KNOTS], "golden")


@pytest.fixture
def phantom():
    return SegmenterService.generate_phantom((16, 16, 16))


@pytest.fixture
def write_grid(tmp_path):
    """Save a grid under tmp_path and return the .raw path"""
    def _write(grid, name="grid", dtype=None):
        path = tmp_path / f"{name}.raw"
        GridService.save_grid(grid, path, dtype=dtype)
        return path

    return _write
