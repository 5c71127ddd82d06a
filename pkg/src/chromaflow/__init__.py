"""Region-directed color transfer with landmark-accelerated edit propagation."""

from .colorspace import LabImage, RgbImage, lab_to_rgb, rgb_to_lab
from .pipeline import PipelineCache, PipelineConfig, PipelineError, TransferJob, load_job, preview, run
from .regions import Correspondence, CorrespondenceSet, RegionMask
from .solver import SolveReport

__version__ = "0.1.0"

__all__ = [
    "LabImage",
    "RgbImage",
    "lab_to_rgb",
    "rgb_to_lab",
    "PipelineCache",
    "PipelineConfig",
    "PipelineError",
    "TransferJob",
    "load_job",
    "preview",
    "run",
    "Correspondence",
    "CorrespondenceSet",
    "RegionMask",
    "SolveReport",
    "__version__",
]
