import json
import logging
from pathlib import Path
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from pydantic import ValidationError
from scipy import ndimage
from sklearn.neighbors import NearestNeighbors

from permdecoder.exceptions import (
    CoordinateOutOfRange,
    DecoderException,
    IoFailure,
    InvalidSeeds,
    MissingClassSeeds,
    NoUsableFeatures,
    wrap_unexpected,
)
from permdecoder.grid.models import ValueKind, VoxelGrid
from permdecoder.grid.services import GridService
from permdecoder.segmenter.models import (
    FEATURE_NAMES,
    ClassifierModel,
    DhzClass,
    LabelGrid,
    Seed,
    TrainingSeeds,
)
from permdecoder.segmenter.schemas import ClassifierModelFile, SeedsFile

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

# z-slices per chunk when building the feature volume
FEATURE_CHUNK_SLICES = 16
# query rows per k-NN batch
CLASSIFY_BATCH = 65536
# a feature whose spread over the seeds is below this (relative) is degenerate
DEGENERATE_TOLERANCE = 1e-9

# phantom intensities on a 0-255 scale
PHANTOM_INTENSITIES = {
    DhzClass.PYRITE: 220.0,
    DhzClass.OPEN_VUG: 10.0,
    DhzClass.INTERGRANULAR_1: 80.0,
    DhzClass.INTERGRANULAR_2: 150.0,
}
# phantom band order along z
PHANTOM_BAND_ORDER = (
    DhzClass.OPEN_VUG,
    DhzClass.INTERGRANULAR_1,
    DhzClass.INTERGRANULAR_2,
    DhzClass.PYRITE,
)


def _neighborhood_features(windows: np.ndarray) -> np.ndarray:
    """
    Four features from (..., 3, 3, 3) clamped neighborhoods indexed [dz, dy, dx]
    """
    flat = windows.reshape(windows.shape[:-3] + (27,))
    centre = flat[..., 13]
    mean = flat.mean(axis=-1)
    std = flat.std(axis=-1)
    gx = (windows[..., 1, 1, 2] - windows[..., 1, 1, 0]) / 2.0
    gy = (windows[..., 1, 2, 1] - windows[..., 1, 0, 1]) / 2.0
    gz = (windows[..., 2, 1, 1] - windows[..., 0, 1, 1]) / 2.0
    gradient = np.sqrt(gx * gx + gy * gy + gz * gz)
    return np.stack([centre, mean, std, gradient], axis=-1)


def _windows(values: np.ndarray) -> np.ndarray:
    """3x3x3 views over an edge-replicated copy, shape (nz, ny, nx, 3, 3, 3)"""
    return sliding_window_view(np.pad(values, 1, mode="edge"), (3, 3, 3))


class SegmenterService:
    """
    Service for seed-trained voxel classification into heterogeneity zones
    """

    @staticmethod
    def extract_features(grid: VoxelGrid, x: int, y: int, z: int) -> np.ndarray:
        """
        [intensity, 3x3x3 mean, 3x3x3 std, central-difference gradient magnitude]
        at one voxel, with edge-replicated neighborhoods
        """
        if not (0 <= x < grid.nx and 0 <= y < grid.ny and 0 <= z < grid.nz):
            raise CoordinateOutOfRange(f"Voxel ({x}, {y}, {z}) is outside grid {grid.dims}")
        zs = np.clip(np.arange(z - 1, z + 2), 0, grid.nz - 1)
        ys = np.clip(np.arange(y - 1, y + 2), 0, grid.ny - 1)
        xs = np.clip(np.arange(x - 1, x + 2), 0, grid.nx - 1)
        block = grid.values[np.ix_(zs, ys, xs)]
        return _neighborhood_features(block[np.newaxis])[0]

    @staticmethod
    def feature_volume(grid: VoxelGrid) -> np.ndarray:
        """
        Features of every voxel, shape (nz, ny, nx, 4)
        """
        windows = _windows(grid.values)
        features = np.empty(grid.values.shape + (len(FEATURE_NAMES),), dtype=np.float64)
        for z0 in range(0, grid.nz, FEATURE_CHUNK_SLICES):
            z1 = min(z0 + FEATURE_CHUNK_SLICES, grid.nz)
            features[z0:z1] = _neighborhood_features(windows[z0:z1])
        return features

    @staticmethod
    def train(grid: VoxelGrid, seeds: TrainingSeeds, k: int = 5) -> ClassifierModel:
        """
        Fit the classifier on seed voxels. Features with no spread over the
        seeds are dropped and recorded; if none remain training fails.
        """
        try:
            if k < 1 or k % 2 == 0:
                raise InvalidSeeds(f"k must be a positive odd number, got {k}")
            if len(seeds) == 0:
                raise MissingClassSeeds("No training seeds given")
            if k > len(seeds):
                raise InvalidSeeds(f"k={k} exceeds the {len(seeds)} available seeds")
            missing = [c.display_name for c in DhzClass if c not in seeds.classes()]
            if missing:
                raise MissingClassSeeds(f"No seeds for class(es): {', '.join(missing)}")
            for seed in seeds:
                if not (0 <= seed.x < grid.nx and 0 <= seed.y < grid.ny and 0 <= seed.z < grid.nz):
                    raise InvalidSeeds(f"Seed ({seed.x}, {seed.y}, {seed.z}) is outside grid {grid.dims}")

            features = SegmenterService.feature_volume(grid)
            zs = np.array([s.z for s in seeds])
            ys = np.array([s.y for s in seeds])
            xs = np.array([s.x for s in seeds])
            raw = features[zs, ys, xs]
            labels = np.array([int(s.dhz_class) for s in seeds], dtype=np.int64)

            mean = raw.mean(axis=0)
            scale = raw.std(axis=0)
            magnitude = np.maximum(1.0, np.abs(raw).max(axis=0))
            keep = scale > DEGENERATE_TOLERANCE * magnitude
            dropped = [FEATURE_NAMES[i] for i in np.flatnonzero(~keep)]
            if not keep.any():
                raise NoUsableFeatures("Every feature is constant over the seeds")
            if dropped:
                logger.info("Dropping degenerate features: %s", ", ".join(dropped))

            kept = np.flatnonzero(keep).tolist()
            model = ClassifierModel(
                k=k,
                kept_features=kept,
                feature_mean=mean[keep],
                feature_scale=scale[keep],
                vectors=(raw[:, keep] - mean[keep]) / scale[keep],
                labels=labels,
                dropped_features=dropped,
            )
            logger.info("Trained %d-NN classifier on %d seeds using %s", k, len(seeds), ", ".join(model.feature_names))
            return model
        except Exception as e:
            raise wrap_unexpected(e, "training classifier")

    @staticmethod
    def classify(grid: VoxelGrid, model: ClassifierModel) -> LabelGrid:
        """
        Label every voxel by majority vote of its k nearest training vectors;
        ties go to the smallest class id.
        """
        try:
            queries = model.standardize(SegmenterService.feature_volume(grid).reshape(-1, len(FEATURE_NAMES)))
            index = NearestNeighbors(n_neighbors=model.k, algorithm="brute").fit(model.vectors)
            predicted = np.empty(queries.shape[0], dtype=np.uint8)
            n_classes = len(DhzClass)
            for start in range(0, queries.shape[0], CLASSIFY_BATCH):
                stop = min(start + CLASSIFY_BATCH, queries.shape[0])
                _, neighbors = index.kneighbors(queries[start:stop])
                votes = model.labels[neighbors]
                counts = (votes[..., np.newaxis] == np.arange(n_classes)).sum(axis=1)
                # argmax keeps the first, i.e. smallest, id among tied counts
                predicted[start:stop] = counts.argmax(axis=1)
            return LabelGrid(predicted.reshape(grid.values.shape), grid.voxel_size_um)
        except Exception as e:
            raise wrap_unexpected(e, "classifying voxels")

    @staticmethod
    def class_fractions(labels: LabelGrid) -> Dict[DhzClass, float]:
        counts = np.bincount(labels.labels.reshape(-1), minlength=len(DhzClass))
        total = labels.labels.size
        return {dhz_class: counts[int(dhz_class)] / total for dhz_class in DhzClass}

    @staticmethod
    def boundary_shell(labels: LabelGrid) -> np.ndarray:
        """
        Voxels with a differently labelled voxel in their 3x3x3 neighborhood
        """
        upper = ndimage.maximum_filter(labels.labels, size=3, mode="nearest")
        lower = ndimage.minimum_filter(labels.labels, size=3, mode="nearest")
        return upper != lower

    @staticmethod
    def accuracy(predicted: LabelGrid, truth: LabelGrid, exclude_boundary: bool = True) -> float:
        """Fraction of voxels labelled as in `truth`, optionally outside its boundary shell"""
        if predicted.dims != truth.dims:
            raise DecoderException(f"Label grids differ in dims: {predicted.dims} vs {truth.dims}")
        considered = ~SegmenterService.boundary_shell(truth) if exclude_boundary else np.ones(truth.labels.shape, bool)
        if not considered.any():
            raise DecoderException("No voxels left to score")
        return float((predicted.labels[considered] == truth.labels[considered]).mean())

    @staticmethod
    def generate_phantom(
        shape: Tuple[int, int, int],
        noise_sigma: float = 0.0,
        mode: str = "intensity",
        seed: int = 0,
        voxel_size_um: float = 28.0,
        texture_amplitude: float = 40.0,
    ) -> Tuple[VoxelGrid, LabelGrid]:
        """
        Four equal z-bands, one per class, with known labels.

        "intensity" mode separates every class by intensity alone. "texture"
        mode gives both intergranular classes the same mean intensity and
        makes Intergranular2 a +/- checkerboard, so only local variance
        separates them.
        """
        nx, ny, nz = shape
        if nz < len(PHANTOM_BAND_ORDER):
            raise DecoderException(f"Phantom needs at least {len(PHANTOM_BAND_ORDER)} slices, got {nz}")
        if mode not in ("intensity", "texture"):
            raise DecoderException(f"Unknown phantom mode {mode!r}")

        band = np.minimum(np.arange(nz) * len(PHANTOM_BAND_ORDER) // nz, len(PHANTOM_BAND_ORDER) - 1)
        label_column = np.array([int(PHANTOM_BAND_ORDER[b]) for b in band], dtype=np.uint8)
        labels = np.broadcast_to(label_column[:, None, None], (nz, ny, nx)).copy()

        intensities = dict(PHANTOM_INTENSITIES)
        if mode == "texture":
            shared = (intensities[DhzClass.INTERGRANULAR_1] + intensities[DhzClass.INTERGRANULAR_2]) / 2.0
            intensities[DhzClass.INTERGRANULAR_1] = shared
            intensities[DhzClass.INTERGRANULAR_2] = shared
        lookup = np.array([intensities[c] for c in DhzClass])
        values = lookup[labels]

        if mode == "texture":
            zz, yy, xx = np.indices(labels.shape)
            checker = np.where((xx + yy + zz) % 2 == 0, 1.0, -1.0)
            textured = labels == int(DhzClass.INTERGRANULAR_2)
            values = values + np.where(textured, texture_amplitude * checker, 0.0)

        if noise_sigma > 0:
            rng = np.random.default_rng(seed)
            values = values + rng.normal(0.0, noise_sigma, size=values.shape)

        return (
            VoxelGrid(values, voxel_size_um, ValueKind.INTENSITY),
            LabelGrid(labels, voxel_size_um),
        )

    @staticmethod
    def seeds_from_labels(
        labels: LabelGrid,
        per_class: int,
        seed: int = 0,
        interior_only: bool = True,
        classes: Optional[Sequence[DhzClass]] = None,
    ) -> TrainingSeeds:
        """
        Draw annotation seeds from a known label grid, `per_class` voxels of
        each class, away from class boundaries unless told otherwise.
        """
        rng = np.random.default_rng(seed)
        allowed = ~SegmenterService.boundary_shell(labels) if interior_only else np.ones(labels.labels.shape, bool)
        picked = []
        for dhz_class in classes or list(DhzClass):
            candidates = np.argwhere((labels.labels == int(dhz_class)) & allowed)
            if len(candidates) == 0:
                raise MissingClassSeeds(f"No voxels of {dhz_class.display_name} to seed from")
            chosen = rng.choice(len(candidates), size=min(per_class, len(candidates)), replace=False)
            for z, y, x in candidates[np.sort(chosen)]:
                picked.append(Seed(x, y, z, dhz_class))
        return TrainingSeeds(picked)

    @staticmethod
    def load_seeds(path: PathLike) -> TrainingSeeds:
        try:
            with open(path, "r", encoding="utf-8") as handle:
                entries = SeedsFile.model_validate(json.load(handle)).root
        except FileNotFoundError:
            raise IoFailure(f"Seeds file {path} not found")
        except (json.JSONDecodeError, ValidationError) as e:
            raise InvalidSeeds(f"Seeds file {path} is invalid: {str(e)}")
        return TrainingSeeds([Seed.from_dict(entry.model_dump()) for entry in entries])

    @staticmethod
    def save_seeds(seeds: TrainingSeeds, path: PathLike) -> None:
        try:
            with open(path, "w", encoding="utf-8") as handle:
                json.dump(seeds.to_dict(), handle, indent=2)
        except OSError as e:
            raise IoFailure(f"Cannot write seeds to {path}: {str(e)}")

    @staticmethod
    def save_model(model: ClassifierModel, path: PathLike) -> None:
        try:
            with open(path, "w", encoding="utf-8") as handle:
                handle.write(ClassifierModelFile(**model.to_dict()).model_dump_json(indent=2))
        except OSError as e:
            raise IoFailure(f"Cannot write model to {path}: {str(e)}")

    @staticmethod
    def load_model(path: PathLike) -> ClassifierModel:
        try:
            with open(path, "r", encoding="utf-8") as handle:
                document = ClassifierModelFile(**json.load(handle))
        except FileNotFoundError:
            raise IoFailure(f"Model file {path} not found")
        except (json.JSONDecodeError, ValidationError, TypeError) as e:
            raise DecoderException(f"Model file {path} is invalid: {str(e)}")
        return ClassifierModel.from_dict(document.model_dump())

    @staticmethod
    def save_labels(labels: LabelGrid, path: PathLike) -> None:
        GridService.save_grid(labels.to_voxel_grid(), path, dtype="u8")

    @staticmethod
    def load_labels(path: PathLike) -> LabelGrid:
        grid = GridService.load_grid(path)
        try:
            return LabelGrid.from_voxel_grid(grid)
        except ValueError as e:
            raise DecoderException(f"{path} is not a label grid: {str(e)}")
