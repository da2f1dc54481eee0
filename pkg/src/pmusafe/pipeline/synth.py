"""Synthetic ground-truth trajectories with controlled measurement noise."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from ..errors import ConfigError
from .frames import Frame
from .noise import NoiseSpec

DEFAULT_FPS = 30.0

# End-effector speed presets in m/s, slow to fast.
SPEED_LEVELS = {"v1": 0.1, "v2": 0.25, "v3": 0.5}


@dataclass(frozen=True)
class TrajectorySpec:
    """Parametric end-effector path.

    ``kind="linear"`` shuttles between ``start`` and ``end`` at constant
    speed, reversing at each end. ``kind="circular"`` runs around a circle of
    ``radius`` about ``center`` in the horizontal plane. Entities in
    ``static`` stay fixed (e.g. a standing person).
    """

    kind: str = "linear"
    speed: float | str = "v2"
    entity: str = "robot.ee"
    start: tuple[float, float, float] = (0.4, -0.3, 0.5)
    end: tuple[float, float, float] = (0.4, 0.3, 0.5)
    center: tuple[float, float, float] = (0.5, 0.0, 0.5)
    radius: float = 0.2
    static: Mapping[str, tuple[float, float, float]] = field(default_factory=dict)

    @property
    def speed_value(self) -> float:
        if isinstance(self.speed, str):
            try:
                return SPEED_LEVELS[self.speed]
            except KeyError:
                raise ConfigError(f"unknown speed level {self.speed!r}; use {sorted(SPEED_LEVELS)}") from None
        return float(self.speed)

    def validate(self) -> None:
        if self.kind not in ("linear", "circular"):
            raise ConfigError(f"unknown trajectory kind {self.kind!r}", "invalid-spec")
        if not self.speed_value >= 0:
            raise ConfigError("speed must be non-negative", "invalid-spec")
        if self.kind == "linear" and np.allclose(self.start, self.end):
            raise ConfigError("linear trajectory needs distinct start and end", "invalid-spec")
        if self.kind == "circular" and not self.radius > 0:
            raise ConfigError("circular trajectory needs a positive radius", "invalid-spec")

    def sample(self, times) -> tuple[np.ndarray, np.ndarray]:
        """True positions and velocities at ``times``, each shaped (N, 3)."""
        t = np.asarray(times, dtype=float)
        v = self.speed_value
        if self.kind == "linear":
            a = np.asarray(self.start, dtype=float)
            b = np.asarray(self.end, dtype=float)
            length = float(np.linalg.norm(b - a))
            unit = (b - a) / length
            phase = np.mod(v * t, 2 * length)
            outbound = phase < length
            s = np.where(outbound, phase, 2 * length - phase)
            pos = a + s[:, None] * unit
            vel = np.where(outbound, v, -v)[:, None] * unit
            return pos, vel
        c = np.asarray(self.center, dtype=float)
        w = v / self.radius
        ang = w * t
        pos = c + self.radius * np.stack([np.cos(ang), np.sin(ang), np.zeros_like(ang)], axis=1)
        vel = self.radius * w * np.stack([-np.sin(ang), np.cos(ang), np.zeros_like(ang)], axis=1)
        return pos, vel


def synth_generate(
    trajectory: TrajectorySpec,
    noise: NoiseSpec,
    fps: float = DEFAULT_FPS,
    duration: float = 200.0,
    seed: int = 0,
) -> tuple[list[Frame], list[Frame]]:
    """Sample the path at ``fps`` for ``duration`` seconds and add noise.

    Measured coordinates are the true ones plus a camera and a motion error
    drawn per :class:`NoiseSpec`, the motion term using the true
    instantaneous velocity. Coordinates with zero noise are copied verbatim.
    """
    trajectory.validate()
    if not fps > 0:
        raise ConfigError(f"fps must be positive, got {fps}", "invalid-spec")
    if not duration > 0:
        raise ConfigError(f"duration must be positive, got {duration}", "invalid-spec")
    n = int(round(duration * fps))
    times = np.arange(n) / fps

    truth = {trajectory.entity: trajectory.sample(times)}
    for name, pos in trajectory.static.items():
        p = np.broadcast_to(np.asarray(pos, dtype=float), (n, 3))
        truth[name] = (p, np.zeros((n, 3)))

    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))
    rho = noise.correlation
    measured = {}
    for name, (pos, vel) in truth.items():
        spec = noise.get(name)
        if spec is None:
            measured[name] = pos
            continue
        cam = spec.camera_sigma(pos)
        mot = spec.motion_sigma(vel, fps)
        z = rng.standard_normal((2, n, 3))
        err = cam * z[0] + mot * (rho * z[0] + np.sqrt(1 - rho**2) * z[1])
        noisy = (cam > 0) | (mot > 0)
        measured[name] = np.where(noisy, pos + err, pos)

    def frames_from(table):
        return [
            Frame(float(times[k]), {name: tuple(float(c) for c in table[name][k]) for name in table})
            for k in range(n)
        ]

    return frames_from({k: v[0] for k, v in truth.items()}), frames_from(measured)
