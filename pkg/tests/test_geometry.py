import io
import math

import pytest
from hypothesis import given, strategies as st

from permdecoder.exceptions import NonPositivePermeability, PorosityNotSpecified
from permdecoder.geometry.models import SAMPLE_POROSITY_RANGE, GrainRadius, PackingConfig, ThroatShape
from permdecoder.geometry.services import GEOMETRY_TABLE_COLUMNS, GeometryService

radii = st.floats(min_value=1e-3, max_value=1e4, allow_nan=False, allow_infinity=False)


@pytest.mark.parametrize("r, area", [(1.0, 4.0), (0.5, 1.0), (10.0, 400.0)])
def test_pore_area(r, area):
    assert GeometryService.pore_area_2d(r) == pytest.approx(area, rel=1e-15)


def test_throat_areas_at_unit_radius():
    diamond = GeometryService.throat_area_2d(ThroatShape.CONCAVE_DIAMOND, 1.0)
    triangle = GeometryService.throat_area_2d(ThroatShape.CONCAVE_TRIANGLE, 1.0)
    assert diamond == pytest.approx(0.858, abs=5e-4)
    assert diamond == pytest.approx(4.0 - math.pi, rel=1e-15)
    assert triangle == pytest.approx(0.1613, abs=1e-4)


def test_throat_to_pore_ratio():
    assert GeometryService.throat_to_pore_ratio_2d() == pytest.approx(0.2146, abs=1e-4)


@pytest.mark.parametrize(
    "config, total, effective, discrepancy",
    [
        (PackingConfig.CUBIC, 5.148, 0.429, False),
        (PackingConfig.TRICLINIC, 4.08, 0.255, False),
        (PackingConfig.RHOMBOHEDRAL, 1.716, 0.0858, True),
    ],
)
def test_packing_geometry(config, total, effective, discrepancy):
    geometry = GeometryService.packing_geometry(config)
    assert geometry.total_throat_area_coeff == total
    assert geometry.effective_throat_coeff == pytest.approx(effective, rel=1e-12)
    assert geometry.discrepancy is discrepancy


def test_rhombohedral_face_inventory_recomputed():
    geometry = GeometryService.packing_geometry(PackingConfig.RHOMBOHEDRAL)
    assert geometry.recomputed_area_coeff == pytest.approx(3.007, abs=1e-3)


@pytest.mark.parametrize(
    "config, r, size",
    [(PackingConfig.RHOMBOHEDRAL, 1.0, 0.0858), (PackingConfig.CUBIC, 10.0, 42.9)],
)
def test_effective_pore_throat_size(config, r, size):
    assert GeometryService.effective_pore_throat_size_3d(config, r) == pytest.approx(size, rel=1e-12)


@pytest.mark.parametrize("r, k", [(100.0, 858.0), (1.0, 0.0858)])
def test_permeability_from_grain_radius(r, k):
    assert GeometryService.permeability_from_grain_radius(PackingConfig.RHOMBOHEDRAL, GrainRadius(r)) == pytest.approx(
        k, rel=1e-12
    )


@pytest.mark.parametrize("k, r", [(0.0858, 1.0), (858.0, 100.0)])
def test_grain_radius_from_permeability(k, r):
    radius = GeometryService.grain_radius_from_permeability(PackingConfig.RHOMBOHEDRAL, k)
    assert radius.r_g_um == pytest.approx(r, rel=1e-12)


@pytest.mark.parametrize("k", [0.0, -1.0])
def test_grain_radius_from_non_positive_permeability(k):
    with pytest.raises(NonPositivePermeability):
        GeometryService.grain_radius_from_permeability(PackingConfig.CUBIC, k)


def test_non_positive_radius_rejected():
    with pytest.raises(ValueError):
        GrainRadius(0.0)


@given(radii, st.sampled_from(list(PackingConfig)))
def test_permeability_scales_quadratically(r, config):
    k1 = GeometryService.permeability_from_grain_radius(config, r)
    k2 = GeometryService.permeability_from_grain_radius(config, 2.0 * r)
    assert k2 == pytest.approx(4.0 * k1, rel=1e-12)


@given(radii, radii)
def test_permeability_monotone_in_radius(a, b):
    lo, hi = sorted((a, b))
    config = PackingConfig.RHOMBOHEDRAL
    assert GeometryService.permeability_from_grain_radius(config, lo) <= GeometryService.permeability_from_grain_radius(
        config, hi
    )


@given(radii, st.sampled_from(list(PackingConfig)))
def test_radius_permeability_inverse(r, config):
    k = GeometryService.permeability_from_grain_radius(config, r)
    assert GeometryService.grain_radius_from_permeability(config, k).r_g_um == pytest.approx(r, rel=1e-9)


def test_nominal_porosity():
    assert GeometryService.nominal_porosity(PackingConfig.RHOMBOHEDRAL) == 0.25
    assert GeometryService.nominal_porosity(PackingConfig.CUBIC) == pytest.approx(0.4764, abs=1e-4)
    with pytest.raises(PorosityNotSpecified):
        GeometryService.nominal_porosity(PackingConfig.TRICLINIC)


def test_monte_carlo_agrees_with_analytic_cubic_porosity():
    estimate, stderr = GeometryService.monte_carlo_cubic_porosity(n_samples=400_000, seed=3)
    analytic = GeometryService.nominal_porosity(PackingConfig.CUBIC)
    assert abs(estimate - analytic) < 3.0 * stderr
    assert stderr < 1e-3


def test_sample_porosity_range_is_documentation_only():
    lo, hi = SAMPLE_POROSITY_RANGE
    assert lo < GeometryService.nominal_porosity(PackingConfig.RHOMBOHEDRAL) < hi


def test_geometry_table_csv():
    handle = io.StringIO()
    GeometryService.write_geometry_table_csv(handle)
    text = handle.getvalue()
    lines = text.splitlines()
    assert lines[0].split(",") == GEOMETRY_TABLE_COLUMNS
    assert lines[3].startswith("rhombohedral,")
    assert lines[4] == ""
    assert lines[5] == "quantity,value"
    assert len(lines) == 6 + len(GeometryService.geometry_constants())
    for constant in ["0.2146", "0.858", "0.1612", "0.02731"]:
        assert constant in text


def test_rhombohedral_effective_size_is_a_multiple_of_pi():
    for r in [1.0, 34.41, 500.0]:
        size = GeometryService.effective_pore_throat_size_3d(PackingConfig.RHOMBOHEDRAL, r)
        assert size == pytest.approx(0.02731 * math.pi * r**2, rel=1e-3)
    row = GeometryService.geometry_table()[2]
    assert row["effective_over_pi"] == pytest.approx(0.02731, abs=5e-6)
