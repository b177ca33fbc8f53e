import argparse
import logging
import sys

from permdecoder.cli import add_command
from permdecoder.config import RunConfig
from permdecoder.exceptions import ExitStatus, IoFailure
from permdecoder.geometry.services import GeometryService

logger = logging.getLogger(__name__)


def geometry_table(args: argparse.Namespace, config: RunConfig) -> ExitStatus:
    """
    Dump the packing constants of every configuration as CSV
    """
    if args.out:
        try:
            with open(args.out, "w", newline="", encoding="utf-8") as handle:
                GeometryService.write_geometry_table_csv(handle)
        except OSError as e:
            raise IoFailure(f"Cannot write {args.out}: {str(e)}")
        logger.info("Wrote geometry table to %s", args.out)
    else:
        GeometryService.write_geometry_table_csv(sys.stdout)
    return ExitStatus.OK


def include(subparsers, parents) -> None:
    parser = add_command(subparsers, parents, "geometry-table", geometry_table, "Packing geometry constants as CSV")
    parser.add_argument("--out", help="CSV path; stdout when omitted")
