import json
import logging
import os
from typing import Any, Dict, Literal, Optional

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from permdecoder.exceptions import DecoderException

# Load environment variables
load_dotenv()

LOG_LEVEL = os.getenv("PERMDECODER_LOG_LEVEL", "INFO")
DEFAULT_CONFIG_PATH = os.getenv("PERMDECODER_CONFIG")

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def setup_logging(level: Optional[str] = None) -> None:
    """
    Install one stream handler on the package logger
    """
    package_logger = logging.getLogger("permdecoder")
    package_logger.setLevel((level or LOG_LEVEL).upper())
    if not package_logger.handlers:
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        package_logger.addHandler(handler)


class RunConfig(BaseModel):
    """
    Every tunable of a run. Defaults here, overridden by a JSON config file,
    overridden in turn by command-line flags.
    """
    model_config = ConfigDict(extra="forbid")

    k_neighbors: int = Field(5, ge=1, description="Neighbor count of the voxel classifier (odd)")
    bins: int = Field(64, ge=1, description="Histogram bins for intensity summaries")
    tol: float = Field(1e-8, gt=0, description="Relative residual tolerance of the flow oracle")
    max_iter: Optional[int] = Field(None, ge=1, description="CG iteration cap; None derives it from the grid size")
    seed: int = Field(0, description="Seed for the heterogeneous micromodel generator")
    flow_axis: Literal["x", "y", "z", "all"] = Field("z", description="Flow axis; the volume is rotated so it becomes z")
    packing: Literal["cubic", "triclinic", "rhombohedral"] = Field("rhombohedral", description="Packing used for grain radius to permeability")
    voxel_size_um: float = Field(1000.0, gt=0, description="Voxel edge of synthetic micromodels")
    pyrite_override_md: Optional[float] = Field(0.0, ge=0, description="Fixed Pyrite permeability; None derives it from calibration")
    suite_tolerance: float = Field(1e-4, gt=0, description="Relative error accepted on separable validation samples")


def load_config_file(path: Optional[str]) -> Dict[str, Any]:
    if not path:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as handle:
            data = json.load(handle)
    except (OSError, json.JSONDecodeError) as e:
        raise DecoderException(f"Cannot read config file {path}: {str(e)}")
    if not isinstance(data, dict):
        raise DecoderException(f"Config file {path} must hold a JSON object")
    # flag spelling is accepted in the file as well
    return {key.replace("-", "_"): value for key, value in data.items()}


def resolve_config(config_path: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """
    Resolve defaults < config file < flags. Flags left at None are not overrides.
    """
    values = load_config_file(config_path or DEFAULT_CONFIG_PATH)
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value
    try:
        return RunConfig(**values)
    except ValidationError as e:
        raise DecoderException(f"Invalid configuration: {str(e)}")
