from typing import Any, Dict, Optional

from permdecoder.grid.models import VoxelGrid
from permdecoder.pim.models import DecodeReport
from permdecoder.segmenter.models import ClassifierModel, LabelGrid


class PipelineOutcome:
    """
    Everything one decode run produced, so the CLI can persist intermediates
    """
    def __init__(
        self,
        report: DecodeReport,
        kmap: VoxelGrid,
        labels: Optional[LabelGrid] = None,
        model: Optional[ClassifierModel] = None,
        class_fractions: Optional[Dict[str, float]] = None,
    ):
        self.report = report
        self.kmap = kmap
        self.labels = labels
        self.model = model
        self.class_fractions = class_fractions or {}

    def to_dict(self) -> Dict[str, Any]:
        data = self.report.to_dict()
        data["class_fractions"] = self.class_fractions
        return data
