import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from permdecoder.exceptions import (
    CoordinateOutOfRange,
    InvalidSeeds,
    MissingClassSeeds,
    NoUsableFeatures,
)
from permdecoder.grid.models import VoxelGrid
from permdecoder.segmenter.models import DhzClass, LabelGrid, Seed, TrainingSeeds
from permdecoder.segmenter.services import SegmenterService


def test_constant_grid_features():
    grid = VoxelGrid(np.full((4, 4, 4), 5.0), 1.0)
    for voxel in [(1, 1, 1), (0, 0, 0), (3, 0, 2)]:
        assert SegmenterService.extract_features(grid, *voxel).tolist() == [5.0, 5.0, 0.0, 0.0]


def test_single_bright_voxel_features():
    values = np.zeros((5, 5, 5))
    values[2, 2, 2] = 1.0
    intensity, mean, std, gradient = SegmenterService.extract_features(VoxelGrid(values, 1.0), 2, 2, 2)
    assert intensity == 1.0
    assert mean == pytest.approx(1.0 / 27.0, rel=1e-15)
    assert std == pytest.approx(math.sqrt(26.0) / 27.0, rel=1e-12)
    assert gradient == 0.0


def test_gradient_of_linear_ramp():
    values = np.broadcast_to(np.arange(5, dtype=float)[None, None, :] * 3.0, (5, 5, 5))
    features = SegmenterService.extract_features(VoxelGrid(values, 1.0), 2, 2, 2)
    assert features[3] == pytest.approx(3.0, rel=1e-15)


def test_extract_features_out_of_range():
    with pytest.raises(CoordinateOutOfRange):
        SegmenterService.extract_features(VoxelGrid(np.zeros((2, 2, 2)), 1.0), 2, 0, 0)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 5), st.integers(0, 4), st.integers(0, 3), st.integers(0, 1000))
def test_feature_volume_matches_single_voxel_features(x, y, z, seed):
    rng = np.random.default_rng(seed)
    grid = VoxelGrid(rng.normal(size=(4, 5, 6)), 1.0)
    volume = SegmenterService.feature_volume(grid)
    assert np.allclose(volume[z, y, x], SegmenterService.extract_features(grid, x, y, z), rtol=1e-12, atol=1e-12)


def test_training_voxels_keep_their_labels_with_one_neighbor(phantom):
    grid, truth = phantom
    seeds = SegmenterService.seeds_from_labels(truth, per_class=6, interior_only=False)
    model = SegmenterService.train(grid, seeds, k=1)
    predicted = SegmenterService.classify(grid, model)
    for seed in seeds:
        assert predicted.labels[seed.z, seed.y, seed.x] == int(seed.dhz_class)


def test_missing_class_seeds(phantom):
    grid, truth = phantom
    classes = [c for c in DhzClass if c != DhzClass.OPEN_VUG]
    seeds = SegmenterService.seeds_from_labels(truth, per_class=5, classes=classes)
    with pytest.raises(MissingClassSeeds):
        SegmenterService.train(grid, seeds, k=1)


def test_constant_grid_has_no_usable_features():
    grid = VoxelGrid(np.full((4, 4, 4), 9.0), 1.0)
    seeds = TrainingSeeds([Seed(i, 0, 0, c) for i, c in enumerate(DhzClass)])
    with pytest.raises(NoUsableFeatures):
        SegmenterService.train(grid, seeds, k=1)


@pytest.mark.parametrize("k", [0, 2, 41])
def test_invalid_k(phantom, k):
    grid, truth = phantom
    seeds = SegmenterService.seeds_from_labels(truth, per_class=5)
    with pytest.raises(InvalidSeeds):
        SegmenterService.train(grid, seeds, k=k)


def test_seed_outside_grid(phantom):
    grid, truth = phantom
    seeds = SegmenterService.seeds_from_labels(truth, per_class=5)
    outside = TrainingSeeds(list(seeds) + [Seed(16, 0, 0, DhzClass.PYRITE)])
    with pytest.raises(InvalidSeeds):
        SegmenterService.train(grid, outside, k=5)


def test_noise_free_phantom_accuracy():
    grid, truth = SegmenterService.generate_phantom((32, 32, 32))
    seeds = SegmenterService.seeds_from_labels(truth, per_class=5, seed=1)
    model = SegmenterService.train(grid, seeds, k=5)
    assert SegmenterService.accuracy(SegmenterService.classify(grid, model), truth) >= 0.99


def test_noisy_phantom_accuracy():
    grid, truth = SegmenterService.generate_phantom((32, 32, 32), noise_sigma=10.0, seed=4)
    seeds = SegmenterService.seeds_from_labels(truth, per_class=100, seed=2)
    model = SegmenterService.train(grid, seeds, k=5)
    assert SegmenterService.accuracy(SegmenterService.classify(grid, model), truth) >= 0.95


def test_texture_phantom_separates_by_local_variance():
    grid, truth = SegmenterService.generate_phantom((16, 16, 16), mode="texture")
    seeds = SegmenterService.seeds_from_labels(truth, per_class=10, seed=3)
    model = SegmenterService.train(grid, seeds, k=1)
    assert "neighborhood_std" in model.feature_names
    assert SegmenterService.accuracy(SegmenterService.classify(grid, model), truth) >= 0.99


def test_classification_is_deterministic(phantom):
    grid, truth = phantom
    seeds = SegmenterService.seeds_from_labels(truth, per_class=5)
    model = SegmenterService.train(grid, seeds, k=3)
    assert SegmenterService.classify(grid, model) == SegmenterService.classify(grid, model)


def test_class_fractions():
    all_pyrite = LabelGrid(np.zeros((2, 2, 2), dtype=np.uint8))
    assert SegmenterService.class_fractions(all_pyrite) == {
        DhzClass.PYRITE: 1.0,
        DhzClass.OPEN_VUG: 0.0,
        DhzClass.INTERGRANULAR_1: 0.0,
        DhzClass.INTERGRANULAR_2: 0.0,
    }
    pair = LabelGrid(np.array([0, 1], dtype=np.uint8).reshape(1, 1, 2))
    fractions = SegmenterService.class_fractions(pair)
    assert fractions[DhzClass.PYRITE] == 0.5
    assert fractions[DhzClass.OPEN_VUG] == 0.5


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_class_fractions_sum_to_one(seed):
    labels = np.random.default_rng(seed).integers(0, 4, size=(3, 4, 5)).astype(np.uint8)
    assert sum(SegmenterService.class_fractions(LabelGrid(labels)).values()) == pytest.approx(1.0, abs=1e-12)


def test_model_and_seed_files_round_trip(tmp_path, phantom):
    grid, truth = phantom
    seeds = SegmenterService.seeds_from_labels(truth, per_class=5)
    SegmenterService.save_seeds(seeds, tmp_path / "seeds.json")
    loaded_seeds = SegmenterService.load_seeds(tmp_path / "seeds.json")
    assert [s.to_dict() for s in loaded_seeds] == [s.to_dict() for s in seeds]

    model = SegmenterService.train(grid, loaded_seeds, k=3)
    SegmenterService.save_model(model, tmp_path / "model.json")
    reloaded = SegmenterService.load_model(tmp_path / "model.json")
    assert SegmenterService.classify(grid, reloaded) == SegmenterService.classify(grid, model)


def test_invalid_seeds_file(tmp_path):
    path = tmp_path / "seeds.json"
    path.write_text('[{"x": 0, "y": 0, "z": 0, "class_name": "Granite"}]', encoding="utf-8")
    with pytest.raises(InvalidSeeds):
        SegmenterService.load_seeds(path)


def test_labels_round_trip(tmp_path, phantom):
    _, truth = phantom
    SegmenterService.save_labels(truth, tmp_path / "labels.raw")
    assert SegmenterService.load_labels(tmp_path / "labels.raw") == truth


def test_renaming_seed_classes_renames_output_labels(phantom):
    grid, truth = phantom
    seeds = SegmenterService.seeds_from_labels(truth, per_class=6)
    rename = {
        DhzClass.PYRITE: DhzClass.INTERGRANULAR_2,
        DhzClass.OPEN_VUG: DhzClass.PYRITE,
        DhzClass.INTERGRANULAR_1: DhzClass.OPEN_VUG,
        DhzClass.INTERGRANULAR_2: DhzClass.INTERGRANULAR_1,
    }
    renamed = TrainingSeeds([Seed(s.x, s.y, s.z, rename[s.dhz_class]) for s in seeds])

    original = SegmenterService.classify(grid, SegmenterService.train(grid, seeds, k=1))
    relabelled = SegmenterService.classify(grid, SegmenterService.train(grid, renamed, k=1))
    lookup = np.array([int(rename[c]) for c in DhzClass], dtype=np.uint8)
    assert np.array_equal(relabelled.labels, lookup[original.labels])
