import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from permdecoder.calib.models import CalibrationPoint
from permdecoder.calib.services import CalibService
from permdecoder.geometry.models import PackingConfig
from permdecoder.grid.models import ValueKind, VoxelGrid
from permdecoder.exceptions import DecoderException, IncompleteTable
from permdecoder.pim.models import ClassPermeability, ClassPermeabilityTable, DecodeReport, ProvenanceKind
from permdecoder.pim.services import PimService
from permdecoder.segmenter.models import DhzClass, LabelGrid

positive_maps = arrays(
    np.float64,
    st.tuples(st.integers(1, 4), st.integers(1, 4), st.integers(1, 4)),
    elements=st.floats(1e-3, 1e4, allow_nan=False, allow_infinity=False),
)


def kmap(values):
    return VoxelGrid(np.asarray(values, dtype=float), 1.0, ValueKind.PERMEABILITY_MD)


def constant_table(**k):
    return ClassPermeabilityTable({DhzClass[name]: ClassPermeability.constant(v) for name, v in k.items()})


def test_assign_constant_class():
    labels = LabelGrid(np.full((2, 2, 2), int(DhzClass.INTERGRANULAR_1), dtype=np.uint8))
    table = constant_table(PYRITE=0.0, OPEN_VUG=500.0, INTERGRANULAR_1=100.0, INTERGRANULAR_2=50.0)
    grid = PimService.assign_permeability(labels, table)
    assert grid.value_kind == ValueKind.PERMEABILITY_MD
    assert np.all(grid.values == 100.0)


def test_assign_checkerboard():
    zz, yy, xx = np.indices((2, 2, 2))
    labels = LabelGrid(((xx + yy + zz) % 2).astype(np.uint8))
    table = constant_table(PYRITE=0.0, OPEN_VUG=500.0, INTERGRANULAR_1=100.0, INTERGRANULAR_2=50.0)
    values = PimService.assign_permeability(labels, table).values
    assert set(np.unique(values).tolist()) == {0.0, 500.0}
    assert values[0, 0, 0] == 0.0 and values[0, 0, 1] == 500.0


def test_assign_incomplete_table():
    labels = LabelGrid(np.zeros((1, 1, 1), dtype=np.uint8))
    with pytest.raises(IncompleteTable):
        PimService.assign_permeability(labels, constant_table(PYRITE=0.0))


def test_table_from_calibration_worked_point():
    model = CalibService.fit_mgcm(
        [CalibrationPoint(40.0, 120.0), CalibrationPoint(67.633, 68.82), CalibrationPoint(95.0, 30.0)], "mri"
    )
    per_class = {c: 67.633 for c in DhzClass}
    table = PimService.table_from_calibration(
        per_class, model, PackingConfig.RHOMBOHEDRAL, overrides={DhzClass.PYRITE: 0.0}
    )
    entry = table.entries[DhzClass.INTERGRANULAR_1]
    assert entry.provenance == ProvenanceKind.FROM_CALIBRATION
    assert entry.grain_diameter_um == 68.82
    assert entry.k_md == pytest.approx(0.0858 * 34.41**2, rel=1e-12)
    assert entry.k_md == pytest.approx(101.6, abs=0.05)
    assert table.entries[DhzClass.PYRITE].provenance == ProvenanceKind.DIRECT_CONSTANT
    assert table.k(DhzClass.PYRITE) == 0.0


def test_table_from_calibration_needs_every_class(golden_calibration):
    with pytest.raises(IncompleteTable):
        PimService.table_from_calibration({DhzClass.OPEN_VUG: 40.0}, golden_calibration, PackingConfig.CUBIC)


def test_slice_aggregation():
    assert PimService.parallel_aggregate_slice(kmap(np.full((1, 3, 3), 7.0)), 0) == 7.0
    assert PimService.parallel_aggregate_slice(kmap([[[100.0, 300.0]]]), 0) == 200.0
    assert PimService.parallel_aggregate_slice(kmap([[[0.0, 400.0]]]), 0) == 200.0
    with pytest.raises(DecoderException):
        PimService.parallel_aggregate_slice(kmap([[[1.0]]]), 1)


def test_stack_aggregation():
    assert PimService.serial_aggregate_stack([42.0, 42.0, 42.0]) == 42.0
    assert PimService.serial_aggregate_stack([100.0, 300.0]) == pytest.approx(150.0, rel=1e-15)
    assert PimService.serial_aggregate_stack([100.0, 0.0, 300.0]) == 0.0


def test_decode_homogeneous():
    report = PimService.decode(kmap(np.full((3, 3, 3), 858.0)))
    assert report.k_3d == 858.0
    assert (report.lower_bound_harmonic, report.upper_bound_arithmetic) == (858.0, 858.0)
    assert not report.blocked


def test_decode_layers_and_columns():
    layers = np.zeros((2, 2, 2))
    layers[0], layers[1] = 100.0, 300.0
    assert PimService.decode(kmap(layers)).k_3d == pytest.approx(150.0, rel=1e-15)

    columns = np.zeros((2, 2, 2))
    columns[:, :, 0], columns[:, :, 1] = 100.0, 300.0
    report = PimService.decode(kmap(columns))
    assert report.k_3d == 200.0
    assert report.k_3d_column_first == 200.0


def test_decode_blocked_layer():
    values = np.full((3, 2, 2), 10.0)
    values[1] = 0.0
    report = PimService.decode(kmap(values))
    assert report.blocked
    assert report.k_3d == 0.0


def test_wiener_bounds_two_values():
    harmonic, arithmetic = PimService.wiener_bounds(kmap([[[100.0, 300.0]]]))
    assert harmonic == pytest.approx(150.0, rel=1e-15)
    assert arithmetic == 200.0


@settings(max_examples=50, deadline=None)
@given(positive_maps)
def test_decode_is_sandwiched_by_bounds(values):
    report = PimService.decode(kmap(values))
    assert report.within_bounds(report.k_3d)
    assert report.within_bounds(report.k_3d_column_first)


@settings(max_examples=50, deadline=None)
@given(positive_maps, st.floats(1e-3, 1e3))
def test_decode_is_scale_homogeneous(values, scale):
    k = PimService.decode(kmap(values)).k_3d
    assert PimService.decode(kmap(values * scale)).k_3d == pytest.approx(scale * k, rel=1e-9)


def test_class_contributions(golden_volume):
    _, labels = golden_volume
    table = constant_table(PYRITE=0.0, OPEN_VUG=400.0, INTERGRANULAR_1=100.0, INTERGRANULAR_2=50.0)
    report = PimService.decode(PimService.assign_permeability(labels, table), labels, table)
    contributions = report.class_contributions
    assert sum(c["volume_fraction"] for c in contributions.values()) == pytest.approx(1.0)
    assert sum(c["arithmetic_share"] for c in contributions.values()) == pytest.approx(1.0)
    assert contributions["Pyrite"]["arithmetic_share"] == 0.0


def test_report_dict_round_trip(golden_volume):
    _, labels = golden_volume
    table = constant_table(PYRITE=0.0, OPEN_VUG=400.0, INTERGRANULAR_1=100.0, INTERGRANULAR_2=50.0)
    report = PimService.decode(PimService.assign_permeability(labels, table), labels, table, calib_tag="t")
    again = DecodeReport.from_dict(report.to_dict())
    assert again.to_dict() == report.to_dict()
    assert "unit_convention" in report.to_dict()


def test_class_table_csv_round_trip(tmp_path, golden_calibration):
    per_class = {DhzClass.OPEN_VUG: 40.0, DhzClass.INTERGRANULAR_1: 100.0, DhzClass.INTERGRANULAR_2: 160.0}
    table = PimService.table_from_calibration(
        per_class, golden_calibration, PackingConfig.RHOMBOHEDRAL, {DhzClass.PYRITE: 0.0}
    )
    path = tmp_path / "class_table.csv"
    PimService.write_class_table_csv(table, path)
    loaded = PimService.read_class_table_csv(path)
    assert loaded.lookup_array() == table.lookup_array()
    assert loaded.entries[DhzClass.OPEN_VUG].grain_diameter_um == 200.0
    assert loaded.entries[DhzClass.PYRITE].provenance == ProvenanceKind.DIRECT_CONSTANT


def test_slice_csv(tmp_path):
    report = PimService.decode(kmap(np.arange(1.0, 9.0).reshape(2, 2, 2)))
    path = tmp_path / "slices.csv"
    PimService.write_slice_csv(report, path)
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "z,k_mD"
    assert lines[1] == f"0,{report.slice_k[0]!r}"


def test_class_table_csv_keeps_extrapolation_flag(tmp_path, golden_calibration):
    per_class = {DhzClass.OPEN_VUG: 20.0, DhzClass.INTERGRANULAR_1: 100.0, DhzClass.INTERGRANULAR_2: 160.0}
    table = PimService.table_from_calibration(
        per_class, golden_calibration, PackingConfig.RHOMBOHEDRAL, {DhzClass.PYRITE: 0.0}
    )
    assert table.entries[DhzClass.OPEN_VUG].extrapolated
    path = tmp_path / "class_table.csv"
    PimService.write_class_table_csv(table, path)
    loaded = PimService.read_class_table_csv(path)
    assert loaded.entries[DhzClass.OPEN_VUG].extrapolated is True
    assert loaded.entries[DhzClass.INTERGRANULAR_1].extrapolated is False


@settings(max_examples=50, deadline=None)
@given(positive_maps, st.integers(0, 10_000))
def test_decode_ignores_slice_order(values, seed):
    order = np.random.default_rng(seed).permutation(values.shape[0])
    k = PimService.decode(kmap(values)).k_3d
    assert PimService.decode(kmap(values[order])).k_3d == pytest.approx(k, rel=1e-12)
