"""Command-line front end.

Machine-readable JSON goes to stdout, a short human summary to stderr.
Exit codes: 0 ok / compliant, 1 error, 2 violations found, 64 usage error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import analytic, montecarlo
from .distributions import load_inputs
from .errors import PMUError
from .model import model_from_spec
from .pipeline import frames as frames_io
from .pipeline.noise import EntityNoise, NoiseSpec
from .pipeline.stream import evaluate_stream, load_config, write_report, write_trace_csv
from .pipeline.synth import SPEED_LEVELS, TrajectorySpec, synth_generate
from .pipeline.validation import validate_against_ground_truth
from .typeb import ConservationSpec, conserved_series, estimate_typeb

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_VIOLATIONS = 2
EXIT_USAGE = 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _existing(path: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"no such file: {path}")
    return p


def _emit(doc) -> None:
    sys.stdout.write(json.dumps(doc, indent=1, sort_keys=True) + "\n")


def _note(msg: str) -> None:
    print(msg, file=sys.stderr)


def cmd_propagate(args) -> int:
    inputs = load_inputs(_existing(args.inputs))
    model = model_from_spec(args.model)
    if args.analytic:
        off_diag = inputs.covariance[~np.eye(inputs.n, dtype=bool)]
        if np.any(off_diag != 0):
            result = analytic.propagate_correlated(model, inputs, coverage=args.coverage)
        else:
            result = analytic.propagate_uncorrelated(model, inputs, coverage=args.coverage)
    else:
        if args.seed is None:
            raise UsageError("--seed is required for Monte-Carlo propagation")
        result = montecarlo.propagate_mc(
            model,
            inputs,
            args.trials,
            seed=args.seed,
            coverage=args.coverage,
            keep_samples=bool(args.dump_samples),
        )
        if args.dump_samples:
            montecarlo.save_samples(result, args.dump_samples)
    _emit(result.to_dict())
    _note(f"{result.method}: estimate {result.estimate:.6g}, u {result.u_prop:.6g}, "
          f"{result.coverage:.0%} interval [{result.interval[0]:.6g}, {result.interval[1]:.6g}]")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    frames = frames_io.load_frames(_existing(args.stream), args.format)
    config = load_config(_existing(args.config))
    trace = evaluate_stream(frames, config)
    if args.report:
        write_report(trace, args.report, config)
    if args.trace:
        write_trace_csv(trace, args.trace)
    report = trace.report
    _emit(report.to_dict())
    _note(f"{report.total_frames} frames, {report.n_violations} violations, PFDH {report.pfdh:.3g}/h "
          f"({'compliant' if report.compliant else 'NOT compliant'} with {report.threshold:g}/h)")
    return EXIT_VIOLATIONS if report.n_violations else EXIT_OK


def _noise_from_args(args, entity: str) -> NoiseSpec:
    if args.noise_config:
        doc = json.loads(_existing(args.noise_config).read_text())
        return NoiseSpec.from_dict(doc.get("noise", doc))
    ent = EntityNoise(args.relative, args.absolute, args.velocity_coeff)
    return NoiseSpec({entity: ent}, args.correlation)


def _parse_static(items) -> dict:
    out = {}
    for item in items or []:
        name, _, xyz = item.partition("=")
        try:
            coords = tuple(float(c) for c in xyz.split(","))
        except ValueError:
            raise UsageError(f"bad --static {item!r}; expected NAME=x,y,z") from None
        if not name or len(coords) != 3:
            raise UsageError(f"bad --static {item!r}; expected NAME=x,y,z")
        out[name] = coords
    return out


def cmd_synth(args) -> int:
    speed = args.speed if args.speed in SPEED_LEVELS else float(args.speed)
    traj = TrajectorySpec(kind=args.path, speed=speed, entity=args.entity, static=_parse_static(args.static))
    noise = _noise_from_args(args, args.entity)
    true_frames, measured = synth_generate(traj, noise, fps=args.fps, duration=args.duration, seed=args.seed)
    frames_io.write_frames(true_frames, args.true_out)
    frames_io.write_frames(measured, args.measured_out)
    _emit({
        "frames": len(true_frames),
        "fps": args.fps,
        "duration": args.duration,
        "seed": args.seed,
        "trajectory": args.path,
        "speed": traj.speed_value,
        "true": str(args.true_out),
        "measured": str(args.measured_out),
        "noise": noise.to_dict(),
    })
    _note(f"wrote {len(true_frames)} frames to {args.true_out} and {args.measured_out}")
    return EXIT_OK


def cmd_validate(args) -> int:
    true_frames = frames_io.load_frames(_existing(args.true_frames))
    measured = frames_io.load_frames(_existing(args.measured))
    config = load_config(_existing(args.config))
    config = dataclasses.replace(config, attributes=("position",), limits=(), track=args.entity or config.track)
    trace = evaluate_stream(measured, config)
    record = validate_against_ground_truth(true_frames, measured, trace, config.mc.coverage, args.mode)
    _emit(record.to_dict())
    _note(f"containment {record.containment_rate:.4f} over {record.n_frames} frames, "
          f"PMU vs ground truth discrepancy {record.discrepancy:.2%}" + (" [FLAGGED]" if record.flagged else ""))
    return EXIT_OK


def _read_series(path: Path) -> np.ndarray:
    values = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        text = line.split(",")[-1].strip()
        if not text or text.startswith("#"):
            continue
        try:
            values.append(float(text))
        except ValueError:
            if values:
                raise PMUError(f"{path}:{lineno}: not a number: {text!r}", "malformed-record") from None
            # header line
    return np.array(values)


def cmd_typeb(args) -> int:
    if args.series:
        est = estimate_typeb(_read_series(_existing(args.series)))
        _emit({"series": str(args.series), **est.to_dict()})
        _note(f"Type-B uncertainty {est.absolute:.6g} from {est.n} samples")
        return EXIT_OK
    if not args.stream:
        raise UsageError("typeb needs --series or --stream")
    frames = frames_io.load_frames(_existing(args.stream))
    specs = []
    if args.config:
        specs += list(load_config(_existing(args.config)).conservation)
    for seg in args.segment or []:
        parts = seg.split(":")
        if len(parts) != 3:
            raise UsageError(f"bad --segment {seg!r}; expected NAME:JOINT_A:JOINT_B")
        specs.append(ConservationSpec.segment(*parts))
    if not specs:
        raise UsageError("no conservation specs: pass --config with 'conservation' or --segment")
    out = {}
    for spec in specs:
        out[spec.name] = estimate_typeb(conserved_series(frames, spec)).to_dict()
        _note(f"{spec.name}: {out[spec.name]['absolute']:.6g} absolute over {out[spec.name]['n']} frames")
    _emit(out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pmu", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("propagate", help="propagate input uncertainties through one model")
    p.add_argument("--model", required=True, help="builtin name, 'linear-combination:c1,c2,...' or s-expression")
    p.add_argument("--inputs", required=True, help="input set JSON file")
    how = p.add_mutually_exclusive_group()
    how.add_argument("--mc", action="store_true", help="Monte-Carlo propagation (default)")
    how.add_argument("--analytic", action="store_true", help="first-order propagation")
    p.add_argument("--trials", type=int, default=montecarlo.DEFAULT_TRIALS)
    p.add_argument("--seed", type=int)
    p.add_argument("--coverage", type=float, default=0.95)
    p.add_argument("--dump-samples", help="write the sorted output sample (.npy, .csv or raw)")
    p.set_defaults(func=cmd_propagate)

    p = sub.add_parser("evaluate", help="evaluate a frame stream against safety limits")
    p.add_argument("stream")
    p.add_argument("config")
    p.add_argument("--format", choices=("csv", "jsonl"))
    p.add_argument("--report", help="write the full JSON report here")
    p.add_argument("--trace", help="write a per-frame CSV trace here")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("synth", help="generate a synthetic ground-truth / measured frame pair")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--fps", type=float, default=30.0)
    p.add_argument("--duration", type=float, default=200.0)
    p.add_argument("--path", choices=("linear", "circular"), default="linear")
    p.add_argument("--speed", default="v2", help=f"preset {sorted(SPEED_LEVELS)} or m/s")
    p.add_argument("--entity", default="robot.ee")
    p.add_argument("--static", action="append", metavar="NAME=x,y,z", help="fixed extra entity")
    p.add_argument("--relative", type=float, default=2e-4)
    p.add_argument("--absolute", type=float, default=1e-3)
    p.add_argument("--velocity-coeff", type=float, default=0.1)
    p.add_argument("--correlation", type=float, default=0.5)
    p.add_argument("--noise-config", help="JSON with a 'noise' section (overrides the noise flags)")
    p.add_argument("--true-out", default="true.jsonl")
    p.add_argument("--measured-out", default="measured.jsonl")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("validate", help="check position PMU against ground truth")
    p.add_argument("--true", dest="true_frames", required=True)
    p.add_argument("--measured", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--entity", help="tracked entity (default: config track / robot)")
    p.add_argument("--mode", choices=("norm", "componentwise"), default="norm")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("typeb", help="Type-B uncertainty from a conserved quantity")
    p.add_argument("--series", help="file with one value per line")
    p.add_argument("--stream", help="frame file to derive conserved series from")
    p.add_argument("--config", help="pipeline config with 'conservation' entries")
    p.add_argument("--segment", action="append", metavar="NAME:JOINT_A:JOINT_B")
    p.set_defaults(func=cmd_typeb)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"pmu: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (PMUError, OSError, ValueError) as exc:
        kind = getattr(exc, "kind", type(exc).__name__)
        print(f"pmu: {kind}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
