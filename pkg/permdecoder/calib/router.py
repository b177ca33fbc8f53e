import argparse
import logging

from permdecoder.calib.schemas import LookupResponse
from permdecoder.calib.services import CalibService
from permdecoder.cli import add_command, emit_report
from permdecoder.config import RunConfig
from permdecoder.exceptions import DecoderException, ExitStatus
from permdecoder.grid.services import GridService
from permdecoder.segmenter.models import DhzClass
from permdecoder.segmenter.services import SegmenterService

logger = logging.getLogger(__name__)


def calibrate(args: argparse.Namespace, config: RunConfig) -> ExitStatus:
    """
    Load and validate a calibration, then look up one intensity or the mean
    intensity of a (masked) volume
    """
    if args.mask_class and not args.labels:
        raise DecoderException("--mask-class needs --labels")
    model = CalibService.load_calibration(args.calibration, tag=args.tag)
    if args.save:
        CalibService.save_calibration(model, args.save)
        logger.info("Wrote calibration to %s", args.save)

    if args.grid:
        grid = GridService.load_grid(args.grid)
        mask = SegmenterService.load_labels(args.labels) if args.labels else None
        try:
            mask_class = DhzClass.from_name(args.mask_class) if args.mask_class else None
        except ValueError as e:
            raise DecoderException(str(e))
        result = CalibService.decode_grain_diameter(grid, model, mask, mask_class, n_bins=config.bins)
    elif args.mriii is not None:
        result = CalibService.grain_diameter_from_intensity(model, args.mriii)
    else:
        emit_report(args, config, model.to_dict(), args.out)
        return ExitStatus.OK

    emit_report(args, config, LookupResponse(**result.to_dict()).model_dump(), args.out)
    return ExitStatus.OK


def include(subparsers, parents) -> None:
    parser = add_command(subparsers, parents, "calibrate", calibrate, "Intensity to grain diameter lookup")
    parser.add_argument("--calibration", required=True, help="Calibration CSV (mriii,grain_diameter_um)")
    parser.add_argument("--tag", help="Acquisition tag; overrides the file's")
    parser.add_argument("--mriii", type=float, help="Intensity to look up")
    parser.add_argument("--grid", help="Intensity volume whose mean intensity is looked up")
    parser.add_argument("--labels", help="Label grid masking the volume")
    parser.add_argument("--mask-class", help="Class selected by --labels")
    parser.add_argument("--save", help="Write the validated calibration here")
    parser.add_argument("--out", help="JSON output path; stdout when omitted")
