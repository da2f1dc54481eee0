"""Measurement models a = f(x1, ..., xn) and their numeric sensitivity coefficients."""

from __future__ import annotations

import math
import warnings
from typing import Callable, Sequence

import numpy as np

from . import expression as ex
from .errors import DomainError, ModelError, SingularityError

FD_STEP = 1e-6

DISTANCE_INPUTS = ("xH", "yH", "zH", "xR", "yR", "zR")
SPEED_INPUTS = tuple(f"{c}{who}{k}" for k in (0, 1) for who in ("H", "R") for c in "xyz")


class OneSidedDifferenceWarning(RuntimeWarning):
    """A sensitivity fell back to a one-sided difference at a domain edge."""


class MeasurementModel:
    """Base class. Subclasses implement ``_batch`` on an (M, n) array."""

    kind = "model"

    def __init__(self, names: Sequence[str]):
        names = tuple(str(n) for n in names)
        if len(set(names)) != len(names):
            raise ModelError(f"duplicate input names in {names}", "duplicate-input")
        self.names = names

    @property
    def arity(self) -> int:
        return len(self.names)

    def _batch(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def evaluate_batch(self, X) -> tuple[np.ndarray, np.ndarray]:
        """Evaluate every row of ``X``; returns ``(values, ok)`` with NaN where not ok."""
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.arity:
            raise ModelError(f"expected rows of length {self.arity}, got shape {X.shape}", "arity-mismatch")
        values, bad = self._batch(X)
        values = np.where(bad, np.nan, values)
        return values, ~bad

    def singular_at(self, x: np.ndarray) -> bool | None:
        """Whether f is non-differentiable at ``x``; ``None`` when the model cannot tell."""
        return False

    def increment(self, x_plus: np.ndarray, x_minus: np.ndarray) -> float:
        """f(x_plus) - f(x_minus); linear models override this to avoid cancellation."""
        vals, ok = self.evaluate_batch(np.vstack([x_plus, x_minus]))
        return float(vals[0] - vals[1])

    def __call__(self, x) -> float:
        return evaluate(self, x)

    def precompose(self, matrix, names: Sequence[str]) -> "Precomposed":
        return Precomposed(self, matrix, names)

    def __repr__(self):
        return f"{type(self).__name__}({', '.join(self.names)})"


class Distance3D(MeasurementModel):
    kind = "distance3d"

    def __init__(self, names: Sequence[str] = DISTANCE_INPUTS):
        super().__init__(names)
        if self.arity != 6:
            raise ModelError("distance3d takes 6 inputs (human xyz, robot xyz)", "arity-mismatch")

    def _batch(self, X):
        d = X[:, 0:3] - X[:, 3:6]
        return np.sqrt(np.einsum("ij,ij->i", d, d)), np.zeros(len(X), dtype=bool)

    def singular_at(self, x):
        x = np.asarray(x, dtype=float)
        scale = max(1.0, float(np.max(np.abs(x))))
        return bool(np.linalg.norm(x[0:3] - x[3:6]) <= 2 * FD_STEP * scale)


class EuclideanNorm(MeasurementModel):
    kind = "euclidean-norm"

    def _batch(self, X):
        return np.sqrt(np.einsum("ij,ij->i", X, X)), np.zeros(len(X), dtype=bool)

    def singular_at(self, x):
        x = np.asarray(x, dtype=float)
        scale = max(1.0, float(np.max(np.abs(x))))
        return bool(np.linalg.norm(x) <= 2 * FD_STEP * scale)


class LinearCombination(MeasurementModel):
    kind = "linear-combination"

    def __init__(self, coefficients, names: Sequence[str] | None = None):
        self.coefficients = np.array(coefficients, dtype=float).ravel()
        self.coefficients.flags.writeable = False
        if names is None:
            names = [f"x{i + 1}" for i in range(self.coefficients.size)]
        super().__init__(names)
        if self.arity != self.coefficients.size:
            raise ModelError("one coefficient per input required", "arity-mismatch")

    def _batch(self, X):
        return X @ self.coefficients, np.zeros(len(X), dtype=bool)

    def increment(self, x_plus, x_minus):
        return float(self.coefficients @ (np.asarray(x_plus) - np.asarray(x_minus)))


class RelativeSpeed(MeasurementModel):
    """Rate of change of the human-robot distance between two frames.

    Inputs are the 12 coordinates (human, robot) at the previous frame
    followed by the same at the current frame. With ``approach=True`` the
    value is the approach speed ``max(0, -rate)``.
    """

    kind = "relative-speed"

    def __init__(self, dt: float, approach: bool = True, names: Sequence[str] = SPEED_INPUTS):
        if not dt > 0:
            raise ModelError(f"time step must be positive, got {dt}", "nonpositive-dt")
        self.dt = float(dt)
        self.approach = approach
        super().__init__(names)
        if self.arity != 12:
            raise ModelError("relative-speed takes 12 inputs", "arity-mismatch")

    def _distances(self, X):
        d0 = X[:, 0:3] - X[:, 3:6]
        d1 = X[:, 6:9] - X[:, 9:12]
        return np.sqrt(np.einsum("ij,ij->i", d0, d0)), np.sqrt(np.einsum("ij,ij->i", d1, d1))

    def _batch(self, X):
        d0, d1 = self._distances(X)
        rate = (d1 - d0) / self.dt
        if self.approach:
            rate = np.maximum(0.0, -rate)
        return rate, np.zeros(len(X), dtype=bool)

    def singular_at(self, x):
        x = np.asarray(x, dtype=float)
        threshold = 2 * FD_STEP * max(1.0, float(np.max(np.abs(x))))
        d0, d1 = (float(v[0]) for v in self._distances(x[None, :]))
        if min(d0, d1) <= threshold:
            return True
        return self.approach and abs(d1 - d0) <= 2 * threshold


class ExpressionModel(MeasurementModel):
    kind = "expression"

    def __init__(self, tree: ex.Node | str, names: Sequence[str] | None = None):
        if isinstance(tree, str):
            tree = ex.parse(tree)
        self.tree = tree
        refs = tree.inputs()
        if names is None:
            names = refs
        super().__init__(names)
        unknown = [r for r in refs if r not in self.names]
        if unknown:
            raise ModelError(f"expression references undeclared inputs {unknown}", "unknown-input")

    def _columns(self, X):
        return {name: X[:, i] for i, name in enumerate(self.names)}

    def _batch(self, X):
        values, bad, _ = ex.evaluate_columns(self.tree, self._columns(X), len(X))
        return values, bad

    def singular_at(self, x):
        X = np.asarray(x, dtype=float)[None, :]
        _, _, singular = ex.evaluate_columns(self.tree, self._columns(X), 1)
        return bool(singular[0])

    def __repr__(self):
        return f"ExpressionModel({self.tree})"


class FunctionModel(MeasurementModel):
    """Wrap a user callable as a black-box model.

    With ``vectorized=True`` the callable receives the (M, n) array and must
    return M values; otherwise it is called once per row with n floats.
    Non-finite results and arithmetic exceptions count as domain failures.
    """

    kind = "function"

    def __init__(self, func: Callable, names: Sequence[str], vectorized: bool = False):
        super().__init__(names)
        self.func = func
        self.vectorized = vectorized

    def _batch(self, X):
        with np.errstate(all="ignore"):
            if self.vectorized:
                values = np.asarray(self.func(X), dtype=float).reshape(len(X))
            else:
                values = np.empty(len(X))
                for k, row in enumerate(X):
                    try:
                        values[k] = self.func(*row)
                    except (ArithmeticError, ValueError):
                        values[k] = np.nan
        return values, ~np.isfinite(values)

    def singular_at(self, x):
        return None


class Precomposed(MeasurementModel):
    """``base(A @ x)`` for a fixed matrix A, e.g. position plus correlated error terms."""

    def __init__(self, base: MeasurementModel, matrix, names: Sequence[str]):
        super().__init__(names)
        self.base = base
        self.matrix = np.array(matrix, dtype=float)
        self.matrix.flags.writeable = False
        if self.matrix.shape != (base.arity, self.arity):
            raise ModelError(
                f"matrix shape {self.matrix.shape} does not map {self.arity} inputs to {base.arity}",
                "arity-mismatch",
            )
        self.kind = base.kind

    def _batch(self, X):
        return self.base._batch(X @ self.matrix.T)

    def singular_at(self, x):
        return self.base.singular_at(self.matrix @ np.asarray(x, dtype=float))

    def increment(self, x_plus, x_minus):
        return self.base.increment(self.matrix @ x_plus, self.matrix @ x_minus)


def builtin(name: str, **params) -> MeasurementModel:
    """Construct a builtin model by its configuration name."""
    factories = {
        "distance3d": Distance3D,
        "euclidean-norm": EuclideanNorm,
        "linear-combination": LinearCombination,
        "relative-speed": RelativeSpeed,
    }
    if name not in factories:
        raise ModelError(f"unknown builtin model {name!r}; choose from {sorted(factories)}", "unknown-model")
    try:
        return factories[name](**params)
    except TypeError as exc:
        raise ModelError(f"bad parameters for {name}: {exc}", "unknown-model") from exc


def model_from_spec(spec) -> MeasurementModel:
    """Build a model from a config entry or a short command-line string.

    Accepted forms: ``"distance3d"``, ``"linear-combination:2,-1"``, an
    s-expression string, or a dict with ``builtin`` (plus parameters) or
    ``expression`` (plus optional ``inputs``).
    """
    if isinstance(spec, str):
        text = spec.strip()
        if text.startswith("("):
            return ExpressionModel(text)
        name, _, arg = text.partition(":")
        if name == "linear-combination":
            return LinearCombination([float(c) for c in arg.split(",") if c])
        if name == "relative-speed":
            return RelativeSpeed(float(arg)) if arg else builtin(name)
        if name == "euclidean-norm":
            n = int(arg) if arg else 3
            return EuclideanNorm([f"x{i + 1}" for i in range(n)])
        return builtin(name)
    spec = dict(spec)
    if "expression" in spec:
        return ExpressionModel(spec["expression"], spec.get("inputs"))
    if "builtin" in spec:
        name = spec.pop("builtin")
        if "inputs" in spec:
            spec["names"] = spec.pop("inputs")
        return builtin(name, **spec)
    raise ModelError("model spec needs 'builtin' or 'expression'", "unknown-model")


def _as_point(model: MeasurementModel, x) -> np.ndarray:
    x = np.array(x, dtype=float).ravel()
    if x.size != model.arity:
        raise ModelError(f"model takes {model.arity} inputs, got {x.size}", "arity-mismatch")
    if not np.all(np.isfinite(x)):
        raise ModelError("inputs must be finite", "non-finite-input")
    return x


def evaluate(model: MeasurementModel, x) -> float:
    x = _as_point(model, x)
    values, ok = model.evaluate_batch(x[None, :])
    if not ok[0]:
        raise DomainError(f"{model!r} is undefined at {x.tolist()}")
    return float(values[0])


def distance3d(r_h, r_r) -> float:
    r_h = np.asarray(r_h, dtype=float)
    r_r = np.asarray(r_r, dtype=float)
    if r_h.shape != (3,) or r_r.shape != (3,):
        raise ModelError("distance3d needs two 3-vectors", "arity-mismatch")
    if not (np.all(np.isfinite(r_h)) and np.all(np.isfinite(r_r))):
        raise ModelError("coordinates must be finite", "non-finite-input")
    return math.hypot(*(r_h - r_r))


def relative_speed(d_prev: float, d_curr: float, dt: float) -> float:
    """Signed rate of change of separation; negative when approaching."""
    if not dt > 0:
        raise ModelError(f"time step must be positive, got {dt}", "nonpositive-dt")
    return (d_curr - d_prev) / dt


def approach_speed(d_prev: float, d_curr: float, dt: float) -> float:
    return max(0.0, -relative_speed(d_prev, d_curr, dt))


def _has_kink(model, x0, i, h, f0) -> bool:
    # A kink keeps the forward/backward slope gap as the step shrinks;
    # curvature makes it shrink in proportion.
    def gap(step):
        xp = x0.copy()
        xm = x0.copy()
        xp[i] += step
        xm[i] -= step
        vals, ok = model.evaluate_batch(np.vstack([xp, xm]))
        if not ok.all():
            return None, 0.0
        fwd = (vals[0] - f0) / (xp[i] - x0[i])
        bwd = (f0 - vals[1]) / (x0[i] - xm[i])
        floor = 1e-6 * (abs(fwd) + abs(bwd)) + 1e3 * np.finfo(float).eps * (abs(f0) + 1.0) / step
        return abs(fwd - bwd), floor

    big, floor = gap(h)
    if big is None or big <= floor:
        return False
    small, _ = gap(h / 10)
    return small is not None and small > 0.5 * big


def sensitivity(model: MeasurementModel, x0, i: int) -> float:
    """Partial derivative of the model w.r.t. input ``i`` at ``x0``.

    Central difference with step ``1e-6 * max(|x0_i|, 1)``; falls back to a
    one-sided difference (with a warning) when one offset point is outside
    the model's domain.
    """
    x0 = _as_point(model, x0)
    if not 0 <= i < model.arity:
        raise ModelError(f"input index {i} out of range", "arity-mismatch")
    singular = model.singular_at(x0)
    if singular:
        raise SingularityError(
            f"{model!r} is not differentiable at {x0.tolist()}; use Monte-Carlo propagation instead"
        )
    h = FD_STEP * max(abs(x0[i]), 1.0)
    xp = x0.copy()
    xm = x0.copy()
    xp[i] += h
    xm[i] -= h
    vals, ok = model.evaluate_batch(np.vstack([xp, xm, x0]))
    if ok[0] and ok[1]:
        if singular is None and ok[2] and _has_kink(model, x0, i, h, vals[2]):
            raise SingularityError(
                f"{model!r} has a kink in input {model.names[i]!r} at {x0.tolist()}; "
                "use Monte-Carlo propagation instead"
            )
        return model.increment(xp, xm) / (xp[i] - xm[i])
    if not ok[2] or not (ok[0] or ok[1]):
        raise DomainError(f"{model!r} is not evaluable around {x0.tolist()} in input {model.names[i]!r}")
    warnings.warn(
        f"one-sided difference for input {model.names[i]!r} at domain edge", OneSidedDifferenceWarning, stacklevel=2
    )
    if ok[0]:
        return float((vals[0] - vals[2]) / (xp[i] - x0[i]))
    return float((vals[2] - vals[1]) / (x0[i] - xm[i]))


def gradient(model: MeasurementModel, x0, indices: Sequence[int] | None = None) -> np.ndarray:
    """Sensitivity vector; entries outside ``indices`` are left at zero."""
    x0 = _as_point(model, x0)
    g = np.zeros(model.arity)
    for i in range(model.arity) if indices is None else indices:
        g[i] = sensitivity(model, x0, i)
    return g
