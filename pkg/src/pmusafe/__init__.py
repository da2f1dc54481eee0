"""Propagated measurement uncertainty and safety-limit evaluation for human-robot collaboration."""

from .analytic import propagate_correlated, propagate_uncorrelated
from .distributions import Empirical, Gaussian, InputSet, Uniform, empirical_quantile, sample_joint, validate
from .errors import PMUError
from .model import (
    Distance3D,
    ExpressionModel,
    FunctionModel,
    LinearCombination,
    MeasurementModel,
    RelativeSpeed,
    approach_speed,
    distance3d,
    evaluate,
    gradient,
    relative_speed,
    sensitivity,
)
from .montecarlo import PropagationResult, mc_vs_analytic_report, propagate_mc
from .safety import SafetyLimit, SafetyReport, assess, check_limit, compute_pfdh, summarize
from .typeb import ConservationSpec, conserved_series, estimate_typeb

__version__ = "0.1.0"
