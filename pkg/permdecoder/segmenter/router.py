import argparse
import logging

from permdecoder.cli import add_command, emit_report
from permdecoder.config import RunConfig
from permdecoder.exceptions import DecoderException, ExitStatus
from permdecoder.grid.services import GridService
from permdecoder.segmenter.schemas import SegmentationSummary
from permdecoder.segmenter.services import SegmenterService

logger = logging.getLogger(__name__)


def segment(args: argparse.Namespace, config: RunConfig) -> ExitStatus:
    """
    Train on seeds (or load a model) and label every voxel of a volume
    """
    grid = GridService.load_grid(args.grid)
    if args.model:
        model = SegmenterService.load_model(args.model)
    elif args.seeds:
        seeds = SegmenterService.load_seeds(args.seeds)
        training_grid = GridService.load_grid(args.training_grid) if args.training_grid else grid
        model = SegmenterService.train(training_grid, seeds, config.k_neighbors)
    else:
        raise DecoderException("segment needs --seeds or --model")

    if args.save_model:
        SegmenterService.save_model(model, args.save_model)
        logger.info("Wrote classifier to %s", args.save_model)

    labels = SegmenterService.classify(grid, model)
    if args.labels_out:
        SegmenterService.save_labels(labels, args.labels_out)
        logger.info("Wrote labels to %s", args.labels_out)

    summary = SegmentationSummary(
        class_fractions={c.display_name: f for c, f in SegmenterService.class_fractions(labels).items()},
        k=model.k,
        feature_names=model.feature_names,
        dropped_features=model.dropped_features,
    ).model_dump()
    if args.truth:
        truth = SegmenterService.load_labels(args.truth)
        summary["accuracy"] = SegmenterService.accuracy(labels, truth, exclude_boundary=True)
        logger.info("Accuracy against %s: %.4f", args.truth, summary["accuracy"])
    emit_report(args, config, summary, args.out)
    return ExitStatus.OK


def include(subparsers, parents) -> None:
    parser = add_command(subparsers, parents, "segment", segment, "Label voxels into heterogeneity classes")
    parser.add_argument("--grid", required=True, help="Intensity volume (.raw with .meta.json sidecar)")
    parser.add_argument("--seeds", help="Seeds JSON")
    parser.add_argument("--training-grid", help="Volume the seeds refer to, when not --grid")
    parser.add_argument("--model", help="Saved classifier to use instead of training")
    parser.add_argument("--save-model", help="Write the trained classifier here")
    parser.add_argument("--labels-out", help="Write the label grid here")
    parser.add_argument("--truth", help="Known label grid to score against, boundary shell excluded")
    parser.add_argument("--out", help="JSON summary path; stdout when omitted")
