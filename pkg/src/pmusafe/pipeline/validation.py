"""Check reported position uncertainties against known ground truth."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..analytic import coverage_factor
from ..errors import StreamError
from .frames import Frame
from .stream import EvaluationTrace

CONTAINMENT_SLACK = 0.02


@dataclass(frozen=True)
class ValidationRecord:
    n_frames: int
    contained: int
    containment_rate: float
    coverage: float
    mean_pmu: float
    ground_truth_std: float
    discrepancy: float
    flagged: bool
    mode: str

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def validate_against_ground_truth(
    true_frames: Sequence[Frame],
    measured_frames: Sequence[Frame],
    trace: EvaluationTrace,
    coverage: float = 0.95,
    mode: str = "norm",
) -> ValidationRecord:
    """Containment of the true position in the reported uncertainty region, frame by frame.

    ``mode="norm"``: ``|r_measured - r_true| <= radius`` (coverage sphere).
    ``mode="componentwise"``: every axis error within ``k * axis_std``.

    ``mean_pmu`` is the quadratic mean of the per-frame RMS radial PMU and
    ``ground_truth_std`` the radial standard deviation of measured - true;
    ``discrepancy`` is their relative difference. ``flagged`` marks a
    containment rate more than 0.02 below ``coverage``.
    """
    if not (len(true_frames) == len(measured_frames) == len(trace.frames)):
        raise StreamError(
            f"lengths differ: {len(true_frames)} true, {len(measured_frames)} measured, {len(trace.frames)} traced",
            "length-mismatch",
        )
    if mode not in ("norm", "componentwise"):
        raise ValueError(f"unknown containment mode {mode!r}")
    entity = trace.tracked
    if "position" not in trace.attributes:
        raise StreamError("trace has no position attribute; evaluate with attributes=['position']", "missing-field")

    err = np.array([m.position(entity) - t.position(entity) for t, m in zip(true_frames, measured_frames)])
    pmus = [fr.attributes["position"].position for fr in trace.frames]
    if mode == "norm":
        radius = np.array([p.radius for p in pmus])
        inside = np.linalg.norm(err, axis=1) <= radius
    else:
        half = coverage_factor(coverage) * np.array([p.axis_std for p in pmus])
        inside = np.all(np.abs(err) <= half, axis=1)

    n = len(err)
    rate = float(np.count_nonzero(inside)) / n
    mean_pmu = float(np.sqrt(np.mean([p.rms**2 for p in pmus])))
    gt = float(np.sqrt(np.var(err, axis=0, ddof=1).sum())) if n > 1 else float(np.linalg.norm(err))
    if gt == 0:
        discrepancy = 0.0 if mean_pmu == 0 else float("inf")
    else:
        discrepancy = abs(mean_pmu - gt) / gt
    return ValidationRecord(
        n_frames=n,
        contained=int(np.count_nonzero(inside)),
        containment_rate=rate,
        coverage=coverage,
        mean_pmu=mean_pmu,
        ground_truth_std=gt,
        discrepancy=discrepancy,
        flagged=rate < coverage - CONTAINMENT_SLACK,
        mode=mode,
    )
