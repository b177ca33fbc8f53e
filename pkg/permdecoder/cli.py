import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Union

from permdecoder.config import RunConfig, resolve_config
from permdecoder.exceptions import ExitStatus
from permdecoder.pipeline.services import PipelineService

logger = logging.getLogger(__name__)

Handler = Callable[[argparse.Namespace, RunConfig], ExitStatus]
PathLike = Union[str, Path]

# command-line flag dest -> RunConfig field
CONFIG_FLAGS = {
    "k_neighbors": "k_neighbors",
    "bins": "bins",
    "tol": "tol",
    "max_iter": "max_iter",
    "seed": "seed",
    "flow_axis": "flow_axis",
    "packing": "packing",
    "voxel_size": "voxel_size_um",
    "pyrite_override": "pyrite_override_md",
    "suite_tolerance": "suite_tolerance",
}


def common_options() -> argparse.ArgumentParser:
    """
    Flags every subcommand accepts. All default to None so that only flags
    actually given override the config file.
    """
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--config", help="JSON config file; keys mirror the flag names")
    parent.add_argument("--log-level", type=str.upper, choices=["DEBUG", "INFO", "WARNING", "ERROR"], help="Log level")
    parent.add_argument("--flow-axis", choices=["x", "y", "z", "all"], help="Axis of flow; the volume is rotated onto z")
    parent.add_argument("--tol", type=float, help="Relative residual tolerance of the flow solve")
    parent.add_argument("--max-iter", type=int, help="Iteration cap of the flow solve")
    parent.add_argument("--k-neighbors", type=int, help="Neighbor count of the voxel classifier")
    parent.add_argument("--bins", type=int, help="Histogram bins")
    parent.add_argument("--seed", type=int, help="Seed of the heterogeneous micromodel")
    parent.add_argument("--packing", choices=["cubic", "triclinic", "rhombohedral"], help="Grain packing")
    parent.add_argument("--voxel-size", type=float, help="Voxel edge of synthetic micromodels, um")
    parent.add_argument("--pyrite-override", type=float, help="Fixed Pyrite permeability, mD")
    parent.add_argument("--suite-tolerance", type=float, help="Accepted relative error on separable samples")
    return parent


def config_from_args(args: argparse.Namespace) -> RunConfig:
    overrides = {field: getattr(args, dest, None) for dest, field in CONFIG_FLAGS.items()}
    return resolve_config(getattr(args, "config", None), overrides)


def add_command(
    subparsers: argparse._SubParsersAction,
    parents: list,
    name: str,
    handler: Handler,
    help: str,
) -> argparse.ArgumentParser:
    parser = subparsers.add_parser(name, parents=parents, help=help, description=help)
    parser.set_defaults(handler=handler)
    return parser


def emit_report(args: argparse.Namespace, config: RunConfig, result: Dict[str, Any], path: Optional[PathLike]) -> None:
    """
    Wrap a command result in the run envelope (resolved config, versions,
    timestamps) and write it to `path`, or to stdout
    """
    document = PipelineService.build_run_document(args.command, config, result, getattr(args, "started_at", None))
    if path:
        PipelineService.write_run_document(document, path)
        logger.info("Wrote %s", path)
    else:
        sys.stdout.write(json.dumps(document.model_dump(mode="json"), sort_keys=True, indent=2) + "\n")

