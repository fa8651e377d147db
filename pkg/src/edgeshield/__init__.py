"""Flow-level IoT threat classification, DDoS mitigation, and edge-cloud simulation."""

from .errors import EdgeShieldError
from .flows import FlowRecord, class_proportions, validate_flow
from .kernels import KERNEL_BACKEND
from .metrics import ConfusionMatrix, MetricsReport, Prediction
from .promptcodec import PROMPT_TEMPLATE, parse_prompt, render_prompt
from .taxonomy import (
    BENIGN_LABEL,
    DDOS_LABEL,
    NUM_CLASSES,
    Origin,
    Taxonomy,
    load_taxonomy,
)

__version__ = "0.1.0"

__all__ = [
    "BENIGN_LABEL",
    "ConfusionMatrix",
    "DDOS_LABEL",
    "EdgeShieldError",
    "FlowRecord",
    "KERNEL_BACKEND",
    "MetricsReport",
    "NUM_CLASSES",
    "Origin",
    "PROMPT_TEMPLATE",
    "Prediction",
    "Taxonomy",
    "class_proportions",
    "load_taxonomy",
    "parse_prompt",
    "render_prompt",
    "validate_flow",
    "__version__",
]
