import argparse
import logging
import sys
from datetime import datetime, timezone
from typing import List, Optional

import permdecoder
from permdecoder.calib import router as calib_router
from permdecoder.cli import common_options, config_from_args
from permdecoder.config import setup_logging
from permdecoder.exceptions import DecoderException, wrap_unexpected
from permdecoder.geometry import router as geometry_router
from permdecoder.micromodel import router as micromodel_router
from permdecoder.pipeline import router as pipeline_router
from permdecoder.segmenter import router as segmenter_router

logger = logging.getLogger("permdecoder.main")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="permdecoder",
        description="Simulation-free 3D permeability decoder for intensity volumes",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {permdecoder.__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)
    parents = [common_options()]

    # Include routers
    geometry_router.include(subparsers, parents)
    micromodel_router.include(subparsers, parents)
    segmenter_router.include(subparsers, parents)
    calib_router.include(subparsers, parents)
    pipeline_router.include(subparsers, parents)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    args.started_at = datetime.now(timezone.utc)
    setup_logging(args.log_level)
    logger.info("Starting permdecoder %s...", args.command)
    try:
        config = config_from_args(args)
        status = args.handler(args, config)
    except DecoderException as e:
        logger.error("%s", str(e))
        status = e.status_code
    except Exception as e:
        logger.exception("Unexpected failure")
        status = wrap_unexpected(e, f"running {args.command}").status_code
    logger.info("Shutting down permdecoder %s (exit %d)", args.command, int(status))
    return int(status)


if __name__ == "__main__":
    sys.exit(main())
