"""Frame streams: ingestion, per-frame evaluation, synthetic data and ground-truth validation."""

from .frames import Frame, load_frames, make_frame, write_frames
from .noise import EntityNoise, NoiseSpec
from .stream import (
    EvaluationTrace,
    MCConfig,
    PipelineConfig,
    evaluate_stream,
    load_config,
    write_report,
    write_trace_csv,
)
from .synth import SPEED_LEVELS, TrajectorySpec, synth_generate
from .validation import ValidationRecord, validate_against_ground_truth

__all__ = [
    "EntityNoise",
    "EvaluationTrace",
    "Frame",
    "MCConfig",
    "NoiseSpec",
    "PipelineConfig",
    "SPEED_LEVELS",
    "TrajectorySpec",
    "ValidationRecord",
    "evaluate_stream",
    "load_config",
    "load_frames",
    "make_frame",
    "synth_generate",
    "validate_against_ground_truth",
    "write_frames",
    "write_report",
    "write_trace_csv",
]
