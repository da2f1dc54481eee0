"""Type-B uncertainty from conservation measures.

A conserved quantity (say the length of a rigid body segment) should not
change between frames; whatever spread the tracked value shows is taken as
the uncertainty of the pipeline that produced it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import PMUError, StreamError
from .model import Distance3D, MeasurementModel

MIN_SAMPLES = 30
ZERO_MEAN_TOL = 1e-12


@dataclass(frozen=True)
class ConservationSpec:
    """A quantity over frame entities that must stay constant in time.

    ``model`` receives the concatenated xyz coordinates of ``fields``.
    """

    name: str
    fields: tuple[str, ...]
    model: MeasurementModel

    def __post_init__(self):
        object.__setattr__(self, "fields", tuple(self.fields))
        if self.model.arity != 3 * len(self.fields):
            raise PMUError(f"{self.name}: model arity does not match {len(self.fields)} entities", "config-invalid")

    @classmethod
    def segment(cls, name: str, joint_a: str, joint_b: str) -> "ConservationSpec":
        return cls(name, (joint_a, joint_b), Distance3D())

    @classmethod
    def from_dict(cls, doc: dict) -> "ConservationSpec":
        try:
            return cls.segment(doc["name"], doc["jointA"], doc["jointB"])
        except KeyError as exc:
            raise PMUError(f"conservation spec missing {exc}", "config-invalid") from exc


@dataclass(frozen=True, eq=False)
class Series:
    times: np.ndarray
    values: np.ndarray

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class TypeBEstimate:
    absolute: float
    relative: float | None  # None when the mean is (numerically) zero
    mean: float
    n: int

    def to_dict(self) -> dict:
        return {"absolute": self.absolute, "relative": self.relative, "mean": self.mean, "n": self.n}


def conserved_series(frames: Sequence, spec: ConservationSpec) -> Series:
    """Evaluate the conserved quantity on every frame, keeping timestamps."""
    if len(frames) < 2:
        raise StreamError(f"need at least 2 frames, got {len(frames)}", "too-few-frames")
    rows = np.empty((len(frames), spec.model.arity))
    for k, frame in enumerate(frames):
        for j, name in enumerate(spec.fields):
            if name not in frame.entities:
                raise StreamError(f"frame {k} (t={frame.t}) has no entity {name!r}", "missing-field")
            rows[k, 3 * j : 3 * j + 3] = frame.entities[name]
    values, ok = spec.model.evaluate_batch(rows)
    if not ok.all():
        k = int(np.flatnonzero(~ok)[0])
        raise StreamError(f"{spec.name} undefined at frame {k}", "domain-error")
    return Series(np.array([f.t for f in frames], dtype=float), values)


def estimate_typeb(series) -> TypeBEstimate:
    """Sample standard deviation (N-1) of the series, absolute and relative to its mean.

    No outlier rejection and no detrending: drift inflates the estimate,
    which errs on the safe side.
    """
    values = np.asarray(series.values if isinstance(series, Series) else series, dtype=float).ravel()
    if values.size < MIN_SAMPLES:
        raise PMUError(f"need at least {MIN_SAMPLES} samples, got {values.size}", "too-few-samples")
    if not np.all(np.isfinite(values)):
        raise PMUError("series has non-finite values", "invalid-inputs")
    mean = float(values.mean())
    absolute = 0.0 if values.min() == values.max() else float(values.std(ddof=1))
    relative = None if abs(mean) <= ZERO_MEAN_TOL else absolute / abs(mean)
    return TypeBEstimate(absolute, relative, mean, int(values.size))


def implied_deviation(relative: float, length: float) -> float:
    """Absolute deviation implied by a relative uncertainty on a quantity of given size."""
    return relative * length
