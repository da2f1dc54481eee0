"""Online evaluation of a frame stream: attribute, its PMU, and safety verdicts per frame."""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from ..analytic import coverage_factor, propagate_correlated
from ..errors import ConfigError, SingularityError, StreamError
from ..model import Distance3D, EuclideanNorm, RelativeSpeed
from ..montecarlo import DEFAULT_TRIALS, PropagationResult, propagate_mc
from ..distributions import empirical_quantile
from ..safety import ISO_13849_THRESHOLD, SafetyLimit, SafetyReport, Verdict, check_limit, summarize
from ..typeb import ConservationSpec
from .frames import Frame, check_monotone
from .noise import NoiseSpec, combine_blocks, entity_block

log = logging.getLogger(__name__)

ATTRIBUTES = ("distance", "approach_speed", "position")
METHODS = ("monte-carlo", "analytic")


@dataclass(frozen=True)
class MCConfig:
    trials: int = DEFAULT_TRIALS
    seed: int = 0
    coverage: float = 0.95
    method: str = "monte-carlo"

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"mc.method must be one of {METHODS}, got {self.method!r}")
        if not 0 < self.coverage < 1:
            raise ConfigError(f"mc.coverage must be in (0, 1), got {self.coverage}")
        if self.trials < 2:
            raise ConfigError(f"mc.M must be at least 2, got {self.trials}")


@dataclass(frozen=True)
class PipelineConfig:
    human: str = "human"
    robot: str = "robot.ee"
    track: str | None = None  # entity whose position PMU is reported; defaults to robot
    attributes: tuple[str, ...] = ("distance", "approach_speed")
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    limits: tuple[SafetyLimit, ...] = ()
    mc: MCConfig = field(default_factory=MCConfig)
    fps: float | None = None  # inferred from timestamps when absent
    threshold: float = ISO_13849_THRESHOLD
    conservation: tuple[ConservationSpec, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "attributes", tuple(self.attributes))
        object.__setattr__(self, "limits", tuple(self.limits))
        bad = [a for a in self.attributes if a not in ATTRIBUTES]
        if bad:
            raise ConfigError(f"unknown attributes {bad}; choose from {ATTRIBUTES}")
        for lim in self.limits:
            if lim.attribute not in self.attributes or lim.attribute == "position":
                raise ConfigError(f"limit on {lim.attribute!r} but that attribute is not evaluated")

    @property
    def tracked(self) -> str:
        return self.track or self.robot

    @classmethod
    def from_dict(cls, doc: Mapping) -> "PipelineConfig":
        model = doc.get("model", {})
        mc = doc.get("mc", {})
        noise_doc = doc.get("noise", doc.get("inputs", {}))
        try:
            mc_cfg = MCConfig(
                trials=int(mc.get("M", DEFAULT_TRIALS)),
                seed=int(mc.get("seed", 0)),
                coverage=float(mc.get("coverage", 0.95)),
                method=mc.get("method", "monte-carlo"),
            )
            return cls(
                human=model.get("human", "human"),
                robot=model.get("robot", "robot.ee"),
                track=model.get("track"),
                attributes=tuple(model.get("attributes", ("distance", "approach_speed"))),
                noise=NoiseSpec.from_dict(noise_doc),
                limits=tuple(SafetyLimit.from_dict(d) for d in doc.get("limits", [])),
                mc=mc_cfg,
                fps=doc.get("fps"),
                threshold=float(doc.get("threshold", ISO_13849_THRESHOLD)),
                conservation=tuple(ConservationSpec.from_dict(d) for d in doc.get("conservation", [])),
            )
        except (TypeError, ValueError, AttributeError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"invalid pipeline config: {exc}") from exc

    def to_dict(self) -> dict:
        return {
            "model": {"human": self.human, "robot": self.robot, "track": self.track, "attributes": list(self.attributes)},
            "noise": self.noise.to_dict(),
            "limits": [lim.to_dict() for lim in self.limits],
            "mc": {"M": self.mc.trials, "seed": self.mc.seed, "coverage": self.mc.coverage, "method": self.mc.method},
            "fps": self.fps,
            "threshold": self.threshold,
            "conservation": [
                {"name": c.name, "jointA": c.fields[0], "jointB": c.fields[1]} for c in self.conservation
            ],
        }


def load_config(path) -> PipelineConfig:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    return PipelineConfig.from_dict(doc)


@dataclass(frozen=True)
class PositionPMU:
    """Scalar uncertainty of a tracked 3-D position.

    ``rms`` is the root-mean-square radial deviation, ``radius`` the radius
    of the sphere holding the position with the coverage probability, and
    ``axis_std`` the per-coordinate standard uncertainties.
    """

    rms: float
    radius: float
    axis_std: tuple[float, float, float]


@dataclass(frozen=True)
class AttributeResult:
    value: float
    result: PropagationResult
    position: PositionPMU | None = None

    def to_dict(self) -> dict:
        out = {"value": self.value, **self.result.to_dict(), "u_expanded": self.result.half_width}
        if self.position is not None:
            out.update(rms=self.position.rms, radius=self.position.radius, axis_std=list(self.position.axis_std))
        return out


@dataclass(frozen=True)
class FrameResult:
    t: float
    attributes: Mapping[str, AttributeResult]
    verdicts: Mapping[str, Verdict]

    @property
    def safe(self) -> bool:
        return all(v.safe for v in self.verdicts.values())


@dataclass(frozen=True)
class EvaluationTrace:
    frames: tuple[FrameResult, ...]
    report: SafetyReport
    attributes: tuple[str, ...]
    tracked: str

    def __len__(self):
        return len(self.frames)

    def series(self, attribute: str, what: str = "u_prop") -> np.ndarray:
        """Per-frame column (NaN where the attribute is absent), e.g. ``series("distance", "value")``."""
        out = np.full(len(self.frames), np.nan)
        for k, fr in enumerate(self.frames):
            res = fr.attributes.get(attribute)
            if res is None:
                continue
            if what == "value":
                out[k] = res.value
            elif what in ("rms", "radius"):
                out[k] = getattr(res.position, what)
            elif what == "u_expanded":
                out[k] = res.result.half_width
            else:
                out[k] = getattr(res.result, what)
        return out

    def to_dict(self) -> dict:
        return {
            "report": self.report.to_dict(),
            "attributes": list(self.attributes),
            "frames": [
                {
                    "t": fr.t,
                    "safe": fr.safe,
                    "attributes": {k: v.to_dict() for k, v in fr.attributes.items()},
                    "verdicts": {k: v.to_dict() for k, v in fr.verdicts.items()},
                }
                for fr in self.frames
            ],
        }


def frame_seed(seed: int, frame: int, attribute: str) -> int:
    """Independent 64-bit seed for one (frame, attribute) propagation."""
    ss = np.random.SeedSequence([seed, frame, ATTRIBUTES.index(attribute)])
    return int(ss.generate_state(1, np.uint64)[0])


def _velocities(frames: Sequence[Frame], names) -> dict[str, np.ndarray]:
    """Backward-difference velocity per entity and frame (forward difference on the first)."""
    out = {}
    t = np.array([f.t for f in frames])
    for name in names:
        pos = np.array([f.position(name) for f in frames])
        vel = np.zeros_like(pos)
        if len(frames) > 1:
            vel[1:] = np.diff(pos, axis=0) / np.diff(t)[:, None]
            vel[0] = vel[1]
        out[name] = vel
    return out


def _infer_fps(frames: Sequence[Frame]) -> float:
    if len(frames) < 2:
        raise ConfigError("cannot infer frame rate from a single frame; set 'fps'")
    return float(1.0 / np.median(np.diff([f.t for f in frames])))


class _Propagator:
    def __init__(self, mc: MCConfig):
        self.mc = mc

    def __call__(self, model, inputs, seed, keep_samples=False) -> PropagationResult:
        if self.mc.method == "analytic" and not keep_samples:
            try:
                return propagate_correlated(model, inputs, coverage=self.mc.coverage)
            except SingularityError:
                log.debug("analytic propagation singular; falling back to Monte-Carlo")
        return propagate_mc(
            model, inputs, self.mc.trials, seed=seed, coverage=self.mc.coverage, keep_samples=keep_samples
        )


def evaluate_stream(frames: Sequence[Frame], config: PipelineConfig) -> EvaluationTrace:
    """Evaluate every frame: build inputs from the noise model, propagate, check limits, aggregate."""
    frames = list(frames)
    if not frames:
        raise StreamError("no frames to evaluate", "too-few-frames")
    check_monotone(frames)
    if "approach_speed" in config.attributes and len(frames) < 2:
        raise StreamError("approach speed needs at least 2 frames", "too-few-frames")
    fps = float(config.fps) if config.fps else _infer_fps(frames)
    if not fps > 0:
        raise ConfigError(f"fps must be positive, got {fps}")

    entities = []
    if {"distance", "approach_speed"} & set(config.attributes):
        entities += [config.human, config.robot]
    if "position" in config.attributes:
        entities.append(config.tracked)
    velocities = _velocities(frames, dict.fromkeys(entities))
    rho = config.noise.correlation
    propagate = _Propagator(config.mc)

    def block(prefix, name, k, centered=False):
        return entity_block(
            prefix, frames[k].position(name), velocities[name][k], config.noise.get(name), rho, fps, centered
        )

    results = []
    for k, frame in enumerate(frames):
        attrs: dict[str, AttributeResult] = {}
        if "distance" in config.attributes:
            inputs, summing = combine_blocks([block("human", config.human, k), block("robot", config.robot, k)])
            model = Distance3D().precompose(summing, inputs.names)
            seed = frame_seed(config.mc.seed, k, "distance")
            attrs["distance"] = AttributeResult(model(inputs.means), propagate(model, inputs, seed))
        if "approach_speed" in config.attributes and k > 0:
            inputs, summing = combine_blocks(
                [
                    block("prev.human", config.human, k - 1),
                    block("prev.robot", config.robot, k - 1),
                    block("human", config.human, k),
                    block("robot", config.robot, k),
                ]
            )
            model = RelativeSpeed(frame.t - frames[k - 1].t).precompose(summing, inputs.names)
            seed = frame_seed(config.mc.seed, k, "approach_speed")
            attrs["approach_speed"] = AttributeResult(model(inputs.means), propagate(model, inputs, seed))
        if "position" in config.attributes:
            attrs["position"] = _position_pmu(block("track", config.tracked, k, centered=True), config, k)

        verdicts = {}
        for lim in config.limits:
            res = attrs.get(lim.attribute)
            if res is not None:
                verdicts[lim.attribute] = check_limit(res.value, res.result.uncertainty(lim.mode), lim)
        results.append(FrameResult(frame.t, attrs, verdicts))

    report = summarize([fr.verdicts for fr in results], fps, config.threshold)
    return EvaluationTrace(tuple(results), report, config.attributes, config.tracked)


def _position_pmu(blk, config: PipelineConfig, k: int) -> AttributeResult:
    inputs, summing = combine_blocks([blk])
    model = EuclideanNorm(["dx", "dy", "dz"]).precompose(summing, inputs.names)
    cov = inputs.covariance
    axis_var = np.array([cov[c, c] + cov[c + 3, c + 3] + 2 * cov[c, c + 3] for c in range(3)])
    axis_std = tuple(float(s) for s in np.sqrt(axis_var))
    if config.mc.method == "analytic":
        # Radial deviation is not differentiable at its mean; use the
        # closed-form RMS and a chi-3 style radius from the axis stds.
        rms = float(np.sqrt(axis_var.sum()))
        radius = _gaussian_radius(axis_var, config.mc.coverage, config.mc.seed, k)
        res = PropagationResult(0.0, rms, (0.0, radius), "analytic-correlated", config.mc.coverage)
        return AttributeResult(0.0, res, PositionPMU(rms, radius, axis_std))
    seed = frame_seed(config.mc.seed, k, "position")
    res = propagate_mc(model, inputs, config.mc.trials, seed=seed, coverage=config.mc.coverage, keep_samples=True)
    samples = res.samples
    rms = float(np.sqrt(np.mean(samples**2)))
    radius = float(empirical_quantile(samples, config.mc.coverage))
    res = PropagationResult(res.estimate, res.u_prop, res.interval, res.method, res.coverage, res.trials, res.seed)
    return AttributeResult(0.0, res, PositionPMU(rms, radius, axis_std))


def _gaussian_radius(axis_var, coverage, seed, k) -> float:
    if not np.any(axis_var > 0):
        return 0.0
    rng = np.random.default_rng([seed, k])
    r = np.sqrt((rng.standard_normal((20000, 3)) ** 2 * axis_var).sum(axis=1))
    return float(np.quantile(r, coverage))


def write_report(trace: EvaluationTrace, path, config: PipelineConfig | None = None) -> None:
    doc = trace.to_dict()
    if config is not None:
        doc["config"] = config.to_dict()
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")


def write_trace_csv(trace: EvaluationTrace, path) -> None:
    """One row per frame: ``t``, then value / standard / expanded uncertainty per attribute, then the verdict."""
    header = ["t"]
    for a in trace.attributes:
        header += [a, f"u_{a}", f"U_{a}"]
    header.append("verdict")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for fr in trace.frames:
            row = [repr(fr.t)]
            for a in trace.attributes:
                res = fr.attributes.get(a)
                if res is None:
                    row += ["", "", ""]
                elif res.position is not None:
                    row += ["", repr(res.position.rms), repr(res.position.radius)]
                else:
                    row += [repr(res.value), repr(res.result.u_prop), repr(res.result.half_width)]
            row.append("safe" if fr.safe else "violation")
            writer.writerow(row)
