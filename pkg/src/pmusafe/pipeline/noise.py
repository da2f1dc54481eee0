"""Position noise model shared by the synthetic generator and the stream evaluator.

Each coordinate of a tracked entity carries two Gaussian error terms:

* camera: ``sqrt((relative * |x|)**2 + absolute**2)``, i.e. a resolution
  error proportional to the coordinate plus an absolute floor;
* motion: ``velocity_coeff * |v| / fps``, a fraction of the distance the
  coordinate travels in one frame interval.

The two terms of the same coordinate are correlated with ``correlation``.
Entities without a noise entry are treated as exactly known.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from ..distributions import Gaussian, InputSet
from ..errors import ConfigError

log = logging.getLogger(__name__)

DEFAULT_CORRELATION = 0.5
DEFAULT_ABSOLUTE = 1e-3


@dataclass(frozen=True)
class EntityNoise:
    relative: float = 0.0
    absolute: float = DEFAULT_ABSOLUTE
    velocity_coeff: float = 0.0

    def __post_init__(self):
        for name in ("relative", "absolute", "velocity_coeff"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v >= 0):
                raise ConfigError(f"noise {name} must be finite and >= 0, got {v}")

    def camera_sigma(self, position) -> np.ndarray:
        return np.hypot(self.relative * np.abs(position), self.absolute)

    def motion_sigma(self, velocity, fps: float) -> np.ndarray:
        return self.velocity_coeff * np.abs(velocity) / fps

    def scaled(self, factor: float) -> "EntityNoise":
        return EntityNoise(self.relative * factor, self.absolute * factor, self.velocity_coeff * factor)


@dataclass(frozen=True)
class NoiseSpec:
    entities: Mapping[str, EntityNoise] = field(default_factory=dict)
    correlation: float = DEFAULT_CORRELATION

    def __post_init__(self):
        if not -1 <= self.correlation <= 1:
            raise ConfigError(f"correlation must lie in [-1, 1], got {self.correlation}")

    def get(self, entity: str) -> EntityNoise | None:
        return self.entities.get(entity)

    def scaled(self, factor: float) -> "NoiseSpec":
        return NoiseSpec({k: v.scaled(factor) for k, v in self.entities.items()}, self.correlation)

    @classmethod
    def from_dict(cls, doc: Mapping) -> "NoiseSpec":
        try:
            entities = {name: EntityNoise(**params) for name, params in doc.get("entities", {}).items()}
        except TypeError as exc:
            raise ConfigError(f"bad entity noise entry: {exc}") from exc
        if "correlation" not in doc and any(e.velocity_coeff > 0 for e in entities.values()):
            log.warning(
                "camera/motion noise correlation not configured; using default %.2f", DEFAULT_CORRELATION
            )
        return cls(entities, float(doc.get("correlation", DEFAULT_CORRELATION)))

    def to_dict(self) -> dict:
        return {
            "correlation": self.correlation,
            "entities": {
                k: {"relative": v.relative, "absolute": v.absolute, "velocity_coeff": v.velocity_coeff}
                for k, v in self.entities.items()
            },
        }


def entity_block(
    prefix: str,
    position,
    velocity,
    noise: EntityNoise | None,
    correlation: float,
    fps: float,
    centered: bool = False,
):
    """Inputs for one entity: three positions then three motion-error terms.

    Returns ``(names, marginals, covariance)``. With ``centered=True`` the
    position inputs have zero mean (deviation from the measured point).
    """
    position = np.asarray(position, dtype=float)
    if noise is None:
        cam = np.zeros(3)
        mot = np.zeros(3)
    else:
        cam = noise.camera_sigma(position)
        mot = noise.motion_sigma(np.asarray(velocity, dtype=float), fps)
    means = np.zeros(3) if centered else position
    names = [f"{prefix}.{c}" for c in "xyz"] + [f"{prefix}.{c}~motion" for c in "xyz"]
    marginals = [Gaussian(float(m), float(s)) for m, s in zip(means, cam)]
    marginals += [Gaussian(0.0, float(s)) for s in mot]
    cov = np.diag(np.concatenate([cam**2, mot**2]))
    for c in range(3):
        cov[c, c + 3] = cov[c + 3, c] = correlation * cam[c] * mot[c]
    return names, marginals, cov


def combine_blocks(blocks: Sequence) -> tuple[InputSet, np.ndarray]:
    """Stack entity blocks into one InputSet plus the matrix summing each
    position with its motion error (shape ``(3 * len(blocks), 6 * len(blocks))``)."""
    names, marginals = [], []
    n = 6 * len(blocks)
    cov = np.zeros((n, n))
    summing = np.zeros((3 * len(blocks), n))
    for b, (bn, bm, bc) in enumerate(blocks):
        names += bn
        marginals += bm
        cov[6 * b : 6 * b + 6, 6 * b : 6 * b + 6] = bc
        for c in range(3):
            summing[3 * b + c, 6 * b + c] = 1.0
            summing[3 * b + c, 6 * b + 3 + c] = 1.0
    return InputSet(tuple(names), tuple(marginals), cov), summing
