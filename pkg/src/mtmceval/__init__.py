"""Identity-based and event-based evaluation of multi-camera tracking."""

__version__ = "0.1.0"

from .assignment import Assignment, linear_assignment, solve_min_cost_assignment  # noqa: E402
from .errors import (  # noqa: E402
    DegenerateProjectionError,
    DuplicateDetectionError,
    ParseError,
    UndefinedMeasureError,
    ValidationError,
)
from .events import EventScores, evaluate_events  # noqa: E402
from .geometry import Homography, Overlap  # noqa: E402
from .idmeasures import IdScores, coverage_oracle, id_scores, match_truth_to_result  # noqa: E402
from .model import Camera, Detection, DetectionTable, Scenario, build_scenario, restrict_to_camera  # noqa: E402

__all__ = [
    "Assignment",
    "Camera",
    "DegenerateProjectionError",
    "Detection",
    "DetectionTable",
    "DuplicateDetectionError",
    "EventScores",
    "Homography",
    "IdScores",
    "Overlap",
    "ParseError",
    "Scenario",
    "UndefinedMeasureError",
    "ValidationError",
    "build_scenario",
    "coverage_oracle",
    "evaluate_events",
    "id_scores",
    "linear_assignment",
    "match_truth_to_result",
    "restrict_to_camera",
    "solve_min_cost_assignment",
]
