import argparse
import logging
from pathlib import Path

from permdecoder.cli import add_command
from permdecoder.config import RunConfig
from permdecoder.exceptions import DecoderException, ExitStatus
from permdecoder.grid.services import GridService
from permdecoder.micromodel.schemas import MicromodelSample, MicromodelSpec
from permdecoder.pipeline.services import PipelineService, flow_axes
from permdecoder.segmenter.services import SegmenterService

logger = logging.getLogger(__name__)


def decode(args: argparse.Namespace, config: RunConfig) -> ExitStatus:
    """
    Decode a volume end to end, or aggregate an existing permeability map,
    along one or all flow axes
    """
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    decodes = {}

    if args.kmap:
        kmap = GridService.load_grid(args.kmap)
        for axis in flow_axes(config.flow_axis):
            decodes[axis] = PipelineService.decode_kmap(kmap, axis).to_dict()
    else:
        if not (args.grid and args.calibration):
            raise DecoderException("decode needs --kmap, or --grid with --calibration")
        grid = GridService.load_grid(args.grid)
        training_grid = GridService.load_grid(args.training_grid) if args.training_grid else None
        model = SegmenterService.load_model(args.model) if args.model else None
        for axis in flow_axes(config.flow_axis):
            outcome = PipelineService.decode_volume(
                grid,
                args.calibration,
                config,
                seeds=args.seeds,
                model=model,
                training_grid=training_grid,
                flow_axis=axis,
            )
            # the classifier does not depend on the axis; train once
            model = outcome.model
            decodes[axis] = outcome.to_dict()
            if args.save_intermediates:
                GridService.save_grid(outcome.kmap, out_dir / f"kmap_{axis}.raw")
                if axis == flow_axes(config.flow_axis)[0]:
                    SegmenterService.save_labels(outcome.labels, out_dir / "labels.raw")
                    SegmenterService.save_model(outcome.model, out_dir / "model.json")

    document = PipelineService.build_run_document("decode", config, {"decodes": decodes}, args.started_at)
    PipelineService.write_run_document(document, out_dir / "report.json")
    PipelineService.emit_companions(document, out_dir)
    return ExitStatus.OK


def validate(args: argparse.Namespace, config: RunConfig) -> ExitStatus:
    """
    Run the micromodel validation suite against the flow solve
    """
    if args.samples is None:
        specs = PipelineService.default_suite(config)
    else:
        specs = [
            MicromodelSpec(sample=name, seed=config.seed, voxel_size_um=config.voxel_size_um)
            for name in args.samples
        ]
    rows = PipelineService.run_validation_suite(specs, config)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    document = PipelineService.build_run_document(
        "validate", config, {"rows": [row.model_dump() for row in rows]}, args.started_at
    )
    PipelineService.write_run_document(document, out_dir / "suite.json")
    PipelineService.write_suite_csv(rows, out_dir / "suite.csv")
    return PipelineService.suite_status(rows)


def report(args: argparse.Namespace, config: RunConfig) -> ExitStatus:
    """
    Re-emit the CSV companions of a saved report
    """
    document = PipelineService.load_run_document(args.report)
    out_dir = args.out_dir or str(Path(args.report).parent)
    for path in PipelineService.emit_companions(document, out_dir):
        logger.info("Wrote %s", path)
    return ExitStatus.OK


def include(subparsers, parents) -> None:
    parser = add_command(subparsers, parents, "decode", decode, "Decode 3D permeability")
    parser.add_argument("--grid", help="Intensity volume (.raw with .meta.json sidecar)")
    parser.add_argument("--seeds", help="Seeds JSON")
    parser.add_argument("--training-grid", help="Volume the seeds refer to, when not --grid")
    parser.add_argument("--model", help="Saved classifier to use instead of training")
    parser.add_argument("--calibration", help="Calibration CSV")
    parser.add_argument("--kmap", help="Existing permeability map; skips segmentation and calibration")
    parser.add_argument("--save-intermediates", action="store_true", help="Also write kmap, labels and model")
    parser.add_argument("--out-dir", required=True, help="Directory for report.json and CSV companions")

    parser = add_command(subparsers, parents, "validate", validate, "Run the micromodel validation suite")
    parser.add_argument(
        "--samples",
        nargs="*",
        choices=[s.value for s in MicromodelSample],
        help="Subset of layouts; all five when omitted",
    )
    parser.add_argument("--out-dir", required=True, help="Directory for suite.json and suite.csv")

    parser = add_command(subparsers, parents, "report", report, "Re-emit CSV tables from a saved report")
    parser.add_argument("--report", required=True, help="report.json or suite.json")
    parser.add_argument("--out-dir", help="Output directory; the report's own when omitted")
