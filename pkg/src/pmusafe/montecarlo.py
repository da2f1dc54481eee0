"""Monte-Carlo propagation of distributions through a measurement model."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .distributions import InputSet, empirical_quantile, sample_joint, validate
from .errors import ModelError, PropagationError
from .model import MeasurementModel

DEFAULT_TRIALS = 100_000
MAX_FAILURE_FRACTION = 1e-3
NONLINEAR_THRESHOLD = 0.05


@dataclass(frozen=True, eq=False)
class PropagationResult:
    estimate: float
    u_prop: float
    interval: tuple[float, float]
    method: str
    coverage: float = 0.95
    trials: int = 0
    seed: int | None = None
    failed_trials: int = 0
    samples: np.ndarray | None = field(default=None, repr=False)

    @property
    def half_width(self) -> float:
        """Half-width of the coverage interval (the expanded uncertainty)."""
        return 0.5 * (self.interval[1] - self.interval[0])

    def uncertainty(self, mode: str = "expanded-95") -> float:
        if mode == "standard":
            return self.u_prop
        if mode == "expanded-95":
            return self.half_width
        raise ValueError(f"unknown uncertainty mode {mode!r}")

    def to_dict(self) -> dict:
        return {
            "estimate": self.estimate,
            "u_prop": self.u_prop,
            "interval": list(self.interval),
            "coverage": self.coverage,
            "method": self.method,
            "trials": self.trials,
            "seed": self.seed,
            "failed_trials": self.failed_trials,
        }

    def __eq__(self, other):
        if not isinstance(other, PropagationResult):
            return NotImplemented
        same_samples = (self.samples is None and other.samples is None) or (
            self.samples is not None and other.samples is not None and np.array_equal(self.samples, other.samples)
        )
        return self.to_dict() == other.to_dict() and same_samples


def column_order(model: MeasurementModel, inputs: InputSet) -> np.ndarray:
    """Indices into ``inputs`` giving the model's argument order.

    Names must match as sets; when the two share no names at all and have
    equal length, inputs are taken positionally.
    """
    if model.arity != inputs.n:
        raise ModelError(f"model takes {model.arity} inputs, input set has {inputs.n}", "arity-mismatch")
    if set(model.names) == set(inputs.names):
        return np.array([inputs.index(n) for n in model.names], dtype=int)
    if not set(model.names) & set(inputs.names):
        return np.arange(inputs.n)
    missing = sorted(set(model.names) - set(inputs.names))
    raise ModelError(f"input set lacks model inputs {missing}", "input-name-mismatch")


def propagate_mc(
    model: MeasurementModel,
    inputs: InputSet,
    trials: int = DEFAULT_TRIALS,
    *,
    seed: int,
    coverage: float = 0.95,
    keep_samples: bool = False,
    workers: int | None = None,
) -> PropagationResult:
    """Propagate the joint input law through ``model`` by sampling.

    Draws ``trials`` input vectors, evaluates the model on each, sorts the
    outputs and summarises them: sample mean, sample standard deviation
    (divisor M-1) and the equal-tailed ``coverage`` interval. Trials that
    fall outside the model's domain are dropped and counted, but only while
    they stay under 0.1% of the total.
    """
    validate(inputs)
    trials = int(trials)
    if trials < 2:
        raise PropagationError(f"need at least 2 trials, got {trials}", "invalid-inputs")
    if not 0 < coverage < 1:
        raise PropagationError(f"coverage {coverage} not in (0, 1)", "invalid-inputs")
    order = column_order(model, inputs)

    X = sample_joint(inputs, trials, seed, workers=workers)
    values, ok = model.evaluate_batch(X[:, order])
    failed = int(trials - np.count_nonzero(ok))
    if failed and failed >= MAX_FAILURE_FRACTION * trials:
        raise PropagationError(
            f"{failed} of {trials} trials fell outside the model domain", "excessive-domain-failures"
        )
    values = np.sort(values[ok])

    if values[0] == values[-1]:
        estimate, u = float(values[0]), 0.0
    else:
        estimate, u = float(values.mean()), float(values.std(ddof=1))
    low, high = empirical_quantile(values, [(1 - coverage) / 2, (1 + coverage) / 2])
    return PropagationResult(
        estimate=estimate,
        u_prop=u,
        interval=(float(low), float(high)),
        method="monte-carlo",
        coverage=coverage,
        trials=trials,
        seed=int(seed),
        failed_trials=failed,
        samples=values if keep_samples else None,
    )


@dataclass(frozen=True)
class DiscrepancyRecord:
    monte_carlo: PropagationResult
    analytic: PropagationResult
    relative_difference: float | None
    nonlinear: bool

    def to_dict(self) -> dict:
        return {
            "monte_carlo": self.monte_carlo.to_dict(),
            "analytic": self.analytic.to_dict(),
            "relative_difference": self.relative_difference,
            "nonlinear": self.nonlinear,
        }


def mc_vs_analytic_report(
    model: MeasurementModel,
    inputs: InputSet,
    trials: int = DEFAULT_TRIALS,
    *,
    seed: int,
    coverage: float = 0.95,
    threshold: float = NONLINEAR_THRESHOLD,
) -> DiscrepancyRecord:
    """Compare sampled and first-order uncertainties.

    ``relative_difference`` is ``|u_mc - u_analytic| / u_analytic`` (None
    when the analytic value is zero); ``nonlinear`` is set when it exceeds
    ``threshold``, i.e. the linearisation is not trustworthy here.
    """
    from .analytic import propagate_correlated

    mc = propagate_mc(model, inputs, trials, seed=seed, coverage=coverage)
    lin = propagate_correlated(model, inputs, coverage=coverage)
    if lin.u_prop == 0:
        rel = None
        nonlinear = mc.u_prop > 0
    else:
        rel = abs(mc.u_prop - lin.u_prop) / lin.u_prop
        nonlinear = rel > threshold
    return DiscrepancyRecord(mc, lin, rel, nonlinear)


def save_samples(result: PropagationResult, path) -> None:
    """Write the retained sorted sample as .npy, .csv (one value per line) or raw float64."""
    if result.samples is None:
        raise ValueError("result holds no samples; propagate with keep_samples=True")
    path = Path(path)
    if path.suffix == ".npy":
        np.save(path, result.samples)
    elif path.suffix == ".csv":
        np.savetxt(path, result.samples, header="value", comments="", fmt="%.17g")
    else:
        result.samples.astype("<f8").tofile(path)
