import argparse
import logging
from pathlib import Path

from pydantic import ValidationError

from permdecoder.cli import add_command, emit_report
from permdecoder.config import RunConfig
from permdecoder.exceptions import DecoderException, ExitStatus
from permdecoder.geometry.models import PackingConfig
from permdecoder.grid.services import GridService
from permdecoder.micromodel.schemas import MicromodelSample, MicromodelSpec, OracleResponse
from permdecoder.micromodel.services import MicromodelService
from permdecoder.pim.services import PimService
from permdecoder.pipeline.services import flow_axes
from permdecoder.segmenter.services import SegmenterService

logger = logging.getLogger(__name__)

STAND_IN_NOTE = "mesh permeability derived from packing with r = mesh lateral / 2 (stand-in, not measured)"


def synth(args: argparse.Namespace, config: RunConfig) -> ExitStatus:
    """
    Voxelise one validation cylinder: permeability map, labels, class table
    """
    try:
        spec = MicromodelSpec(
            sample=args.sample,
            seed=config.seed,
            voxel_size_um=config.voxel_size_um,
            mesh_k_md=args.mesh_k,
        )
    except ValidationError as e:
        raise DecoderException(f"Invalid micromodel: {str(e)}")

    kmap, labels, table = MicromodelService.generate_micromodel(spec, PackingConfig(config.packing))
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    GridService.save_grid(kmap, out_dir / "kmap.raw")
    SegmenterService.save_labels(labels, out_dir / "labels.raw")
    PimService.write_class_table_csv(table, out_dir / "class_table.csv")

    emit_report(
        args,
        config,
        {
            "spec": spec.model_dump(mode="json"),
            "dims": list(kmap.dims),
            "class_table": table.to_dict(),
            "mesh_permeability": "user supplied" if args.mesh_k else STAND_IN_NOTE,
        },
        out_dir / "synth.json",
    )
    return ExitStatus.OK


def _pressure_path(path: str, axis: str, several: bool) -> Path:
    path = Path(path)
    if not several:
        return path
    return path.with_name(f"{path.stem}_{axis}{path.suffix}")


def oracle(args: argparse.Namespace, config: RunConfig) -> ExitStatus:
    """
    Flow solve on a permeability map, once per requested flow axis
    """
    kmap = GridService.load_grid(args.kmap)
    axes = flow_axes(config.flow_axis)
    solutions = {}
    for axis in axes:
        solution = MicromodelService.resistor_oracle(
            GridService.rotate_to_flow_axis(kmap, axis), tol=config.tol, max_iter=config.max_iter
        )
        if args.pressure:
            path = _pressure_path(args.pressure, axis, len(axes) > 1)
            GridService.save_grid(solution.pressure, path)
            logger.info("Wrote %s pressure field to %s", axis, path)
        solutions[axis] = OracleResponse(**solution.to_dict()).model_dump()
    emit_report(args, config, {"solutions": solutions}, args.out)
    return ExitStatus.OK


def include(subparsers, parents) -> None:
    parser = add_command(subparsers, parents, "synth", synth, "Generate a synthetic validation micromodel")
    parser.add_argument(
        "--sample",
        required=True,
        choices=[s.value for s in MicromodelSample],
        help="Validation layout",
    )
    parser.add_argument("--mesh-k", type=float, nargs=2, metavar=("FINE", "COARSE"), help="Mesh permeabilities, mD")
    parser.add_argument("--out-dir", required=True, help="Directory for kmap.raw, labels.raw, class_table.csv")

    parser = add_command(subparsers, parents, "oracle", oracle, "Flow-solve permeability of a map")
    parser.add_argument("--kmap", required=True, help="Permeability map (.raw with sidecar)")
    parser.add_argument("--pressure", help="Write the pressure field grid here; suffixed by axis for --flow-axis all")
    parser.add_argument("--out", help="JSON output path; stdout when omitted")
