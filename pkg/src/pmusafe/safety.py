"""Safety limits on uncertain attributes and the dangerous-failure rate per hour."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .errors import SafetyError

ISO_13849_THRESHOLD = 1e-6  # dangerous failures per hour
SECONDS_PER_HOUR = 3600

DIRECTIONS = ("lower", "upper")
MODES = ("standard", "expanded-95")


@dataclass(frozen=True)
class SafetyLimit:
    """Bound on one attribute.

    ``direction="lower"``: the attribute must stay at or above ``bound``
    (separation distance). ``direction="upper"``: at or below (approach speed).
    """

    attribute: str
    bound: float
    direction: str
    mode: str = "expanded-95"

    def __post_init__(self):
        if not math.isfinite(self.bound):
            raise SafetyError(f"limit for {self.attribute} is not finite", "config-invalid")
        if self.direction not in DIRECTIONS:
            raise SafetyError(f"direction must be one of {DIRECTIONS}, got {self.direction!r}", "config-invalid")
        if self.mode not in MODES:
            raise SafetyError(f"mode must be one of {MODES}, got {self.mode!r}", "config-invalid")

    @classmethod
    def from_dict(cls, doc: dict) -> "SafetyLimit":
        if "direction" not in doc:
            raise SafetyError(f"limit {doc} must state its direction", "config-invalid")
        try:
            return cls(doc["attribute"], float(doc["lambda"]), doc["direction"], doc.get("mode", "expanded-95"))
        except KeyError as exc:
            raise SafetyError(f"limit missing {exc}", "config-invalid") from exc

    def to_dict(self) -> dict:
        return {"attribute": self.attribute, "lambda": self.bound, "direction": self.direction, "mode": self.mode}


@dataclass(frozen=True)
class Verdict:
    safe: bool
    margin: float  # attribute units; negative means the limit is crossed

    def to_dict(self) -> dict:
        return {"safe": self.safe, "margin": self.margin}


def check_limit(a: float, u_a: float, limit: SafetyLimit) -> Verdict:
    """Worst-case comparison of ``a`` widened by ``u_a`` in the dangerous direction.

    Touching the bound exactly counts as safe.
    """
    if not u_a >= 0:
        raise SafetyError(f"uncertainty must be non-negative, got {u_a}", "negative-uncertainty")
    if limit.direction == "lower":
        margin = (a - u_a) - limit.bound
    else:
        margin = limit.bound - (a + u_a)
    return Verdict(margin >= 0, margin)


def compute_pfdh(n_violations: int, n_frames: int, fps: float) -> float:
    """Violations per hour: (n_violations / n_frames) * fps * 3600."""
    if n_frames <= 0:
        raise SafetyError("no frames to rate", "zero-frames")
    if n_violations < 0:
        raise SafetyError(f"negative violation count {n_violations}", "negative-counts")
    if n_violations > n_frames:
        raise SafetyError(f"{n_violations} violations in only {n_frames} frames", "negative-counts")
    if not fps > 0:
        raise SafetyError(f"frame rate must be positive, got {fps}", "invalid-fps")
    # Multiply before dividing so whole-hour recordings give exact rates.
    return n_violations * fps * SECONDS_PER_HOUR / n_frames


@dataclass(frozen=True)
class ComplianceVerdict:
    compliant: bool
    pfdh: float
    threshold: float
    orders_of_magnitude_gap: float | None


def assess(pfdh: float, threshold: float = ISO_13849_THRESHOLD) -> ComplianceVerdict:
    """Compare a failure rate with the tolerated rate (inclusive)."""
    if hasattr(pfdh, "pfdh"):
        pfdh = pfdh.pfdh
    gap = math.log10(pfdh / threshold) if pfdh > 0 else None
    return ComplianceVerdict(pfdh <= threshold, pfdh, threshold, gap)


@dataclass(frozen=True)
class SafetyReport:
    total_frames: int
    verdicts: tuple = field(repr=False)
    n_violations: int
    violation_fraction: float
    fps: float
    pfdh: float
    threshold: float
    compliant: bool
    orders_of_magnitude_gap: float | None

    def to_dict(self) -> dict:
        return {
            "total_frames": self.total_frames,
            "n_violations": self.n_violations,
            "violation_fraction": self.violation_fraction,
            "violation_fraction_units": "violations per frame",
            "fps": self.fps,
            "pfdh": self.pfdh,
            "threshold": self.threshold,
            "compliant": self.compliant,
            "orders_of_magnitude_gap": self.orders_of_magnitude_gap,
        }


def frame_is_safe(verdict) -> bool:
    if isinstance(verdict, Verdict):
        return verdict.safe
    return all(v.safe for v in verdict.values())


def summarize(
    verdicts: Sequence[Verdict | Mapping[str, Verdict]], fps: float, threshold: float = ISO_13849_THRESHOLD
) -> SafetyReport:
    """Aggregate per-frame verdicts into a report.

    A frame whose verdict is a mapping (one entry per attribute) violates
    when any of its attributes does.
    """
    n = len(verdicts)
    n_bad = sum(not frame_is_safe(v) for v in verdicts)
    pfdh = compute_pfdh(n_bad, n, fps)
    verdict = assess(pfdh, threshold)
    return SafetyReport(
        total_frames=n,
        verdicts=tuple(verdicts),
        n_violations=n_bad,
        violation_fraction=n_bad / n,
        fps=fps,
        pfdh=pfdh,
        threshold=threshold,
        compliant=verdict.compliant,
        orders_of_magnitude_gap=verdict.orders_of_magnitude_gap,
    )
