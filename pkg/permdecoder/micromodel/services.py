import csv
import logging
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import ndimage, sparse
from scipy.sparse.linalg import cg

from permdecoder.exceptions import (
    DecoderException,
    ExitStatus,
    IncompatibleVoxelSize,
    IoFailure,
    NonConvergence,
    wrap_unexpected,
)
from permdecoder.geometry.models import PackingConfig
from permdecoder.geometry.services import GeometryService
from permdecoder.grid.models import ValueKind, VoxelGrid
from permdecoder.micromodel.models import ComparisonRecord, OracleSolution
from permdecoder.micromodel.schemas import MicromodelSample, MicromodelSpec
from permdecoder.pim.models import ClassPermeability, ClassPermeabilityTable, DecodeReport
from permdecoder.pim.services import PimService
from permdecoder.segmenter.models import DhzClass, LabelGrid

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

UM_PER_CM = 1.0e4
ITERATIONS_PER_EDGE = 2000
COMPARISON_COLUMNS = ["sample", "k_3dpim", "k_oracle", "relative_error", "within_bounds"]
INITIAL_GUESSES = ("columns", "linear")


def _voxels_per(length_um: float, voxel_size_um: float) -> int:
    """Whole number of voxels spanning `length_um`, or 0 if it does not divide"""
    ratio = length_um / voxel_size_um
    n = int(round(ratio))
    if n < 1 or abs(ratio - n) > 1e-9 * max(1.0, ratio):
        return 0
    return n


def _linear_profile(nz: int) -> np.ndarray:
    """Cell-centre pressure falling linearly from 1 at the inlet face to 0 at the outlet face"""
    return (1.0 - (np.arange(nz) + 0.5) / nz)[:, None, None]


def _column_guess(k: np.ndarray, keep: np.ndarray) -> np.ndarray:
    """
    Pressure of each (x, y) column solved on its own as a 1D series chain.
    Columns with an excluded voxel fall back to the linear profile.
    """
    nz = k.shape[0]
    resistance = np.where(keep, 1.0 / np.where(keep, k, 1.0), 0.0)
    to_centre = np.cumsum(resistance, axis=0) - 0.5 * resistance
    total = resistance.sum(axis=0)
    complete = np.all(keep, axis=0)
    series = 1.0 - to_centre / np.where(complete, total, 1.0)
    return np.where(complete[None, :, :], series, _linear_profile(nz))


class MicromodelService:
    """
    Service for the synthetic validation cylinders and the flow solve they
    are checked against
    """

    @staticmethod
    def mesh_permeabilities(
        spec: MicromodelSpec, packing: PackingConfig = PackingConfig.RHOMBOHEDRAL
    ) -> Tuple[float, float]:
        """
        (fine, coarse) mesh permeability. Unless given, each mesh is treated
        as a packing of grains with radius half the mesh lateral.
        """
        if spec.mesh_k_md is not None:
            fine, coarse = spec.mesh_k_md
            return float(fine), float(coarse)
        return (
            GeometryService.permeability_from_grain_radius(packing, spec.mesh_fine_um / 2.0),
            GeometryService.permeability_from_grain_radius(packing, spec.mesh_coarse_um / 2.0),
        )

    @staticmethod
    def generate_micromodel(
        spec: MicromodelSpec, packing: PackingConfig = PackingConfig.RHOMBOHEDRAL
    ) -> Tuple[VoxelGrid, LabelGrid, ClassPermeabilityTable]:
        """
        Voxelise one of the validation cylinders. Fine mesh voxels are
        Intergranular1, coarse mesh voxels Intergranular2 and everything
        outside the cylinder is impermeable Pyrite.
        """
        voxel = spec.voxel_size_um
        fine_cells = _voxels_per(spec.mesh_fine_um, voxel)
        coarse_cells = _voxels_per(spec.mesh_coarse_um, voxel)
        if not fine_cells or not coarse_cells:
            raise IncompatibleVoxelSize(
                f"Voxel size {voxel:g} um does not divide the {spec.mesh_fine_um:g} and "
                f"{spec.mesh_coarse_um:g} um mesh laterals"
            )
        try:
            length_um = spec.length_cm * UM_PER_CM
            diameter_um = spec.diameter_cm * UM_PER_CM
            nz = max(1, int(round(length_um / voxel)))
            nxy = max(1, int(round(diameter_um / voxel)))

            centres = (np.arange(nxy) + 0.5) * voxel - diameter_um / 2.0
            inside = centres[None, :] ** 2 + centres[:, None] ** 2 <= (diameter_um / 2.0) ** 2

            if spec.sample == MicromodelSample.HOMOGENEOUS_2000:
                coarse = np.zeros((nz, nxy, nxy), dtype=bool)
            elif spec.sample == MicromodelSample.HOMOGENEOUS_4000:
                coarse = np.ones((nz, nxy, nxy), dtype=bool)
            elif spec.sample == MicromodelSample.SERIAL_TWO_ZONE:
                coarse = np.broadcast_to((np.arange(nz) >= nz // 2)[:, None, None], (nz, nxy, nxy))
            elif spec.sample == MicromodelSample.PARALLEL_TWO_ZONE:
                coarse = np.broadcast_to((np.arange(nxy) >= nxy // 2)[None, None, :], (nz, nxy, nxy))
            else:
                # one coin flip per coarse-mesh-sized block
                rng = np.random.default_rng(spec.seed)
                zi = np.arange(nz) // coarse_cells
                yi = np.arange(nxy) // coarse_cells
                draws = rng.integers(0, 2, size=(zi[-1] + 1, yi[-1] + 1, yi[-1] + 1)).astype(bool)
                coarse = draws[np.ix_(zi, yi, yi)]

            labels = np.where(coarse, DhzClass.INTERGRANULAR_2, DhzClass.INTERGRANULAR_1).astype(np.uint8)
            labels[:, ~inside] = DhzClass.PYRITE
            label_grid = LabelGrid(labels, voxel)

            k_fine, k_coarse = MicromodelService.mesh_permeabilities(spec, packing)
            table = ClassPermeabilityTable(
                {
                    DhzClass.PYRITE: ClassPermeability.constant(0.0),
                    DhzClass.OPEN_VUG: ClassPermeability.constant(0.0),
                    DhzClass.INTERGRANULAR_1: ClassPermeability.constant(k_fine),
                    DhzClass.INTERGRANULAR_2: ClassPermeability.constant(k_coarse),
                }
            )
            kmap = PimService.assign_permeability(label_grid, table)
            logger.info(
                "Generated %s: %dx%dx%d voxels of %g um, k fine/coarse %.6g/%.6g mD",
                spec.name,
                nxy,
                nxy,
                nz,
                voxel,
                k_fine,
                k_coarse,
            )
            return kmap, label_grid, table
        except Exception as e:
            raise wrap_unexpected(e, f"generating micromodel {spec.name}")

    @staticmethod
    def resistor_oracle(
        kmap: VoxelGrid,
        tol: float = 1e-8,
        max_iter: Optional[int] = None,
        initial_guess: str = "columns",
    ) -> OracleSolution:
        """
        Two-point flux finite-volume solve: harmonic conductance between
        face-sharing voxels, half-cell conductance to the p=1 inlet at z=0
        and the p=0 outlet at z=nz-1, no flow through the side walls.

        Voxels with k=0 and clusters that do not join both faces are left
        out of the system; their pressure is reported as 0.

        CG starts from the per-column series pressure (`columns`), or from
        the linear profile between the faces (`linear`).
        """
        if initial_guess not in INITIAL_GUESSES:
            raise DecoderException(f"Unknown initial guess {initial_guess!r}; expected one of {INITIAL_GUESSES}")
        PimService.validate_kmap(kmap)
        k = kmap.values
        nz, ny, nx = k.shape

        components, _ = ndimage.label(k > 0, structure=ndimage.generate_binary_structure(3, 1))
        inlet = np.unique(components[0][components[0] > 0])
        outlet = np.unique(components[-1][components[-1] > 0])
        spanning = np.intersect1d(inlet, outlet)
        if spanning.size == 0:
            logger.warning("%r has no permeable path between inlet and outlet", kmap)
            return OracleSolution(
                k_eff=0.0,
                iterations=0,
                residual=0.0,
                pressure=kmap.with_values(np.zeros_like(k), ValueKind.PRESSURE),
                percolates=False,
                n_unknowns=0,
            )

        keep = np.isin(components, spanning)
        n = int(keep.sum())
        index = np.full(k.shape, -1, dtype=np.int64)
        index[keep] = np.arange(n)

        diag = np.zeros(n)
        rows: List[np.ndarray] = []
        cols: List[np.ndarray] = []
        vals: List[np.ndarray] = []
        for axis in range(3):
            lo = [slice(None)] * 3
            hi = [slice(None)] * 3
            lo[axis] = slice(None, -1)
            hi[axis] = slice(1, None)
            lo, hi = tuple(lo), tuple(hi)
            both = keep[lo] & keep[hi]
            k1, k2 = k[lo][both], k[hi][both]
            g = 2.0 * k1 * k2 / (k1 + k2)
            i, j = index[lo][both], index[hi][both]
            rows += [i, j]
            cols += [j, i]
            vals += [-g, -g]
            np.add.at(diag, i, g)
            np.add.at(diag, j, g)

        inlet_idx = index[0][keep[0]]
        g_in = 2.0 * k[0][keep[0]]
        outlet_idx = index[-1][keep[-1]]
        g_out = 2.0 * k[-1][keep[-1]]
        np.add.at(diag, inlet_idx, g_in)
        np.add.at(diag, outlet_idx, g_out)
        rhs = np.zeros(n)
        rhs[inlet_idx] = g_in

        every = np.arange(n)
        matrix = sparse.coo_matrix(
            (np.concatenate(vals + [diag]), (np.concatenate(rows + [every]), np.concatenate(cols + [every]))),
            shape=(n, n),
        ).tocsr()
        jacobi = sparse.diags(1.0 / diag)

        if initial_guess == "linear":
            x0 = np.broadcast_to(_linear_profile(nz), k.shape)[keep]
        else:
            x0 = _column_guess(k, keep)[keep]
        if max_iter is None:
            max_iter = int(ITERATIONS_PER_EDGE * n ** (1.0 / 3.0))
        iterations = 0

        def _count(_):
            nonlocal iterations
            iterations += 1

        pressure, info = cg(matrix, rhs, x0=x0, rtol=tol, atol=0.0, maxiter=max_iter, M=jacobi, callback=_count)
        residual = float(np.linalg.norm(rhs - matrix @ pressure) / np.linalg.norm(rhs))
        if info > 0:
            raise NonConvergence(
                f"Flow solve did not reach tolerance {tol:g} within {max_iter} iterations "
                f"(relative residual {residual:.3e})"
            )
        if info < 0:
            raise DecoderException("Flow solve rejected its input", status_code=ExitStatus.INTERNAL_ERROR)

        q_in = float(np.sum(g_in * (1.0 - pressure[inlet_idx])))
        q_out = float(np.sum(g_out * pressure[outlet_idx]))
        logger.debug("Inlet flux %.12g, outlet flux %.12g", q_in, q_out)

        field = np.zeros_like(k)
        field[keep] = pressure
        k_eff = q_in * nz / (nx * ny)
        logger.info(
            "Flow solve on %r: k_eff=%.6g mD after %d iterations, residual %.3e", kmap, k_eff, iterations, residual
        )
        return OracleSolution(
            k_eff=k_eff,
            iterations=iterations,
            residual=residual,
            pressure=kmap.with_values(field, ValueKind.PRESSURE),
            percolates=True,
            n_unknowns=n,
        )

    @staticmethod
    def compare(sample: str, report: DecodeReport, oracle: OracleSolution) -> ComparisonRecord:
        k_3d, k_oracle = report.k_3d, oracle.k_eff
        if k_oracle > 0:
            relative_error: Optional[float] = abs(k_3d - k_oracle) / k_oracle
        elif k_3d == 0:
            relative_error = 0.0
        else:
            relative_error = None
        within = report.within_bounds(k_3d) and report.within_bounds(k_oracle, rel_tol=1e-6)
        return ComparisonRecord(sample, k_3d, k_oracle, relative_error, within)

    @staticmethod
    def write_comparison_csv(records: Sequence[ComparisonRecord], path: PathLike) -> None:
        try:
            with open(path, "w", newline="", encoding="utf-8") as handle:
                writer = csv.writer(handle, lineterminator="\n")
                writer.writerow(COMPARISON_COLUMNS)
                for record in records:
                    row = record.to_dict()
                    writer.writerow(["" if row[c] is None else row[c] for c in COMPARISON_COLUMNS])
        except OSError as e:
            raise IoFailure(f"Cannot write comparison table to {path}: {str(e)}")
