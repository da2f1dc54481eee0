"""Input probability laws, covariance validation and reproducible joint sampling."""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import InputSetError

# Rows per random substream. Fixed so that the output never depends on how
# many workers consume the chunks.
CHUNK_ROWS = 1 << 14

SYMMETRY_RTOL = 1e-12
DIAGONAL_RTOL = 1e-12
PSD_TOL = 1e-10


@dataclass(frozen=True)
class Gaussian:
    mean: float
    std: float
    kind = "gaussian"

    def __post_init__(self):
        if not (np.isfinite(self.mean) and np.isfinite(self.std)):
            raise InputSetError("gaussian parameters must be finite", "invalid-distribution")
        if self.std < 0:
            raise InputSetError(f"negative standard deviation {self.std}", "invalid-distribution")

    @property
    def variance(self) -> float:
        return self.std * self.std

    def ppf(self, u):
        from scipy.special import ndtri

        return self.mean + self.std * ndtri(u)


@dataclass(frozen=True)
class Uniform:
    lower: float
    upper: float
    kind = "uniform"

    def __post_init__(self):
        if not (np.isfinite(self.lower) and np.isfinite(self.upper)):
            raise InputSetError("uniform bounds must be finite", "invalid-distribution")
        if self.lower > self.upper:
            raise InputSetError(
                f"uniform lower bound {self.lower} exceeds upper {self.upper}", "invalid-distribution"
            )

    @property
    def mean(self) -> float:
        return 0.5 * (self.lower + self.upper)

    @property
    def std(self) -> float:
        return (self.upper - self.lower) / np.sqrt(12.0)

    @property
    def variance(self) -> float:
        return (self.upper - self.lower) ** 2 / 12.0

    def ppf(self, u):
        return self.lower + (self.upper - self.lower) * np.asarray(u)


@dataclass(frozen=True, eq=False)
class Empirical:
    """Law given by a sorted sample; drawn by inverse-CDF interpolation."""

    samples: np.ndarray
    kind = "empirical"

    def __post_init__(self):
        arr = np.array(self.samples, dtype=float).ravel()
        if arr.size == 0:
            raise InputSetError("empirical sample is empty", "invalid-distribution")
        if not np.all(np.isfinite(arr)):
            raise InputSetError("empirical sample has non-finite values", "invalid-distribution")
        if np.any(np.diff(arr) < 0):
            raise InputSetError("empirical sample is not sorted", "invalid-distribution")
        arr.flags.writeable = False
        object.__setattr__(self, "samples", arr)

    @property
    def mean(self) -> float:
        return float(np.mean(self.samples))

    @property
    def std(self) -> float:
        if self.samples.size < 2:
            return 0.0
        return float(np.std(self.samples, ddof=1))

    @property
    def variance(self) -> float:
        return self.std**2

    def ppf(self, u):
        return empirical_quantile(self.samples, u)


Distribution = Gaussian | Uniform | Empirical


@dataclass(frozen=True, eq=False)
class InputSet:
    """Named input quantities with their marginals and joint covariance.

    The constructor only normalises types; call :func:`validate` (done
    implicitly by every propagation routine) to check the invariants.
    """

    names: tuple[str, ...]
    marginals: tuple[Distribution, ...]
    covariance: np.ndarray = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "marginals", tuple(self.marginals))
        if self.covariance is None:
            cov = np.diag([m.variance for m in self.marginals]).astype(float)
        else:
            cov = np.array(self.covariance, dtype=float)
        cov.flags.writeable = False
        object.__setattr__(self, "covariance", cov)

    @classmethod
    def gaussian(cls, names: Sequence[str], means, covariance) -> "InputSet":
        """Jointly Gaussian inputs; marginal stds come from the covariance diagonal."""
        cov = np.array(covariance, dtype=float)
        means = np.asarray(means, dtype=float)
        marginals = [Gaussian(float(m), float(np.sqrt(max(c, 0.0)))) for m, c in zip(means, np.diag(cov))]
        return cls(tuple(names), tuple(marginals), cov)

    @classmethod
    def independent(cls, names: Sequence[str], means, stds) -> "InputSet":
        marginals = [Gaussian(float(m), float(s)) for m, s in zip(means, stds)]
        return cls(tuple(names), tuple(marginals))

    @property
    def n(self) -> int:
        return len(self.names)

    @property
    def means(self) -> np.ndarray:
        return np.array([m.mean for m in self.marginals], dtype=float)

    @property
    def stds(self) -> np.ndarray:
        return np.array([m.std for m in self.marginals], dtype=float)

    def index(self, name: str) -> int:
        return self.names.index(name)

    def reordered(self, order: Sequence[int | str]) -> "InputSet":
        order = [self.index(o) if isinstance(o, str) else int(o) for o in order]
        cov = self.covariance[np.ix_(order, order)]
        return InputSet(tuple(self.names[i] for i in order), tuple(self.marginals[i] for i in order), cov)

    def to_dict(self) -> dict:
        inputs = []
        for name, m in zip(self.names, self.marginals):
            entry = {"name": name, "kind": m.kind}
            if m.kind == "gaussian":
                entry.update(mean=m.mean, std=m.std)
            elif m.kind == "uniform":
                entry.update(lower=m.lower, upper=m.upper)
            else:
                entry.update(samples=m.samples.tolist())
            inputs.append(entry)
        return {"inputs": inputs, "covariance": self.covariance.tolist()}

    @classmethod
    def from_dict(cls, doc: dict) -> "InputSet":
        try:
            entries = doc["inputs"]
            names, marginals = [], []
            for entry in entries:
                kind = entry.get("kind", "gaussian")
                names.append(str(entry["name"]))
                if kind == "gaussian":
                    marginals.append(Gaussian(float(entry["mean"]), float(entry["std"])))
                elif kind == "uniform":
                    marginals.append(Uniform(float(entry["lower"]), float(entry["upper"])))
                elif kind == "empirical":
                    marginals.append(Empirical(entry["samples"]))
                else:
                    raise InputSetError(f"unknown distribution kind {kind!r}", "invalid-distribution")
        except (KeyError, TypeError) as exc:
            raise InputSetError(f"malformed input set document: {exc}", "invalid-inputs") from exc
        return cls(tuple(names), tuple(marginals), doc.get("covariance"))


def load_inputs(path) -> InputSet:
    with open(path) as fh:
        return InputSet.from_dict(json.load(fh))


def save_inputs(inputs: InputSet, path) -> None:
    Path(path).write_text(json.dumps(inputs.to_dict(), indent=2) + "\n")


def validate(inputs: InputSet) -> None:
    """Check every InputSet invariant; raise InputSetError naming the first breach."""
    n = len(inputs.names)
    cov = inputs.covariance
    if len(inputs.marginals) != n or cov.shape != (n, n):
        raise InputSetError(
            f"{n} names, {len(inputs.marginals)} marginals, covariance shape {cov.shape}",
            "dimension-mismatch",
        )
    if len(set(inputs.names)) != n:
        raise InputSetError("input names are not distinct", "dimension-mismatch")
    if n == 0:
        return
    if not np.all(np.isfinite(cov)):
        raise InputSetError("covariance has non-finite entries", "not-psd")

    scale = float(np.max(np.abs(cov)))
    asym = np.abs(cov - cov.T)
    if np.any(asym > SYMMETRY_RTOL * scale):
        i, j = np.unravel_index(np.argmax(asym), asym.shape)
        raise InputSetError(
            f"covariance[{i},{j}]={cov[i, j]} differs from covariance[{j},{i}]={cov[j, i]}",
            "asymmetric-covariance",
        )

    for i, m in enumerate(inputs.marginals):
        var = m.variance
        if abs(cov[i, i] - var) > DIAGONAL_RTOL * max(abs(var), abs(cov[i, i])):
            raise InputSetError(
                f"covariance[{i},{i}]={cov[i, i]} but marginal {inputs.names[i]!r} has variance {var}",
                "diagonal-mismatch",
            )

    for i, m in enumerate(inputs.marginals):
        if m.kind != "gaussian":
            off = np.delete(cov[i], i)
            if np.any(off != 0):
                raise InputSetError(
                    f"non-gaussian input {inputs.names[i]!r} has nonzero covariance with other inputs",
                    "non-gaussian-correlation",
                )

    eig = np.linalg.eigvalsh(0.5 * (cov + cov.T))
    tol = PSD_TOL * float(np.trace(cov))
    if eig[0] < -tol:
        raise InputSetError(
            f"covariance has eigenvalue {eig[0]:.6g} below tolerance -{tol:.3g}", "not-psd"
        )


def _gaussian_factor(inputs: InputSet) -> tuple[np.ndarray, np.ndarray]:
    """Indices of random Gaussian inputs and a factor L with L @ L.T equal to their covariance.

    The factor is built on the correlation matrix and rescaled by the marginal
    stds, so an uncorrelated input contributes exactly ``std * z``.
    """
    idx = np.array(
        [i for i, m in enumerate(inputs.marginals) if m.kind == "gaussian" and m.std > 0], dtype=int
    )
    if idx.size == 0:
        return idx, np.zeros((0, 0))
    s = inputs.stds[idx]
    corr = inputs.covariance[np.ix_(idx, idx)] / np.outer(s, s)
    corr = 0.5 * (corr + corr.T)
    try:
        chol = np.linalg.cholesky(corr)
    except np.linalg.LinAlgError:
        w, v = np.linalg.eigh(corr)
        if w[0] < -PSD_TOL * corr.shape[0]:
            raise InputSetError(f"correlation eigenvalue {w[0]:.6g} is negative", "not-psd")
        chol = v * np.sqrt(np.clip(w, 0.0, None))
    return idx, s[:, None] * chol


def _check_seed(seed) -> int:
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise InputSetError(f"seed {seed} is not a 64-bit unsigned integer", "invalid-seed")
    return seed


def chunk_generator(seed: int, chunk: int) -> np.random.Generator:
    """Counter-based generator for one fixed block of trials."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(chunk,))))


def sample_joint(inputs: InputSet, count: int, seed: int, workers: int | None = None) -> np.ndarray:
    """Draw ``count`` joint input vectors as a (count, n) array.

    Trials are split into fixed blocks of ``CHUNK_ROWS`` rows, each with its
    own substream derived from ``(seed, block index)``; ``workers`` only
    changes how blocks are scheduled, never the values.
    """
    validate(inputs)
    seed = _check_seed(seed)
    count = int(count)
    if count < 1:
        raise InputSetError(f"sample count must be positive, got {count}", "invalid-count")

    means = inputs.means
    out = np.empty((count, inputs.n))
    out[:] = means
    g_idx, factor = _gaussian_factor(inputs)
    others = [i for i, m in enumerate(inputs.marginals) if m.kind != "gaussian"]
    n_chunks = -(-count // CHUNK_ROWS)

    def fill(chunk):
        lo = chunk * CHUNK_ROWS
        hi = min(lo + CHUNK_ROWS, count)
        rng = chunk_generator(seed, chunk)
        if g_idx.size:
            z = rng.standard_normal((hi - lo, g_idx.size))
            out[lo:hi, g_idx] = means[g_idx] + z @ factor.T
        for j in others:
            out[lo:hi, j] = inputs.marginals[j].ppf(rng.random(hi - lo))

    if workers and workers > 1 and n_chunks > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(fill, range(n_chunks)))
    else:
        for chunk in range(n_chunks):
            fill(chunk)
    return out


def empirical_quantile(sorted_samples, p):
    """Quantile of a sorted sample by linear interpolation at index ``(n - 1) * p``.

    ``p`` may be a scalar or an array; a scalar returns a float.
    """
    s = np.asarray(sorted_samples, dtype=float)
    if s.size == 0:
        raise ValueError("empirical_quantile of an empty sample")
    p_arr = np.asarray(p, dtype=float)
    if np.any((p_arr < 0) | (p_arr > 1)) or np.any(np.isnan(p_arr)):
        raise ValueError(f"probability {p} outside [0, 1]")
    pos = (s.size - 1) * p_arr
    lo = np.floor(pos).astype(int)
    hi = np.minimum(lo + 1, s.size - 1)
    frac = pos - lo
    q = s[lo] + frac * (s[hi] - s[lo])
    return float(q) if q.ndim == 0 else q
