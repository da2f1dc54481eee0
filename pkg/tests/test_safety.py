import math

import numpy as np
import pytest

from pmusafe.errors import SafetyError
from pmusafe.safety import (
    ISO_13849_THRESHOLD,
    SafetyLimit,
    Verdict,
    assess,
    check_limit,
    compute_pfdh,
    summarize,
)

DIST = SafetyLimit("distance", 1.0, "lower")


def test_check_limit_examples():
    v = check_limit(1.5, 0.2, DIST)
    assert v.safe and v.margin == pytest.approx(0.3)
    v = check_limit(1.1, 0.2, DIST)
    assert not v.safe and v.margin == pytest.approx(-0.1)
    assert check_limit(1.0, 0.0, DIST).safe


def test_upper_bound_direction():
    speed = SafetyLimit("approach_speed", 0.5, "upper")
    assert check_limit(0.3, 0.1, speed).safe
    assert check_limit(0.45, 0.1, speed).margin == pytest.approx(-0.05)
    assert check_limit(0.5, 0.0, speed).safe


def test_limit_validation():
    with pytest.raises(SafetyError):
        SafetyLimit("distance", 1.0, "sideways")
    with pytest.raises(SafetyError):
        SafetyLimit("distance", math.inf, "lower")
    with pytest.raises(SafetyError):
        SafetyLimit.from_dict({"attribute": "distance", "lambda": 1.0})
    with pytest.raises(SafetyError) as err:
        check_limit(1.0, -0.1, DIST)
    assert err.value.kind == "negative-uncertainty"
    lim = SafetyLimit.from_dict({"attribute": "distance", "lambda": 1.2, "direction": "lower"})
    assert lim.bound == 1.2 and lim.to_dict()["lambda"] == 1.2


def test_pfdh_examples():
    assert compute_pfdh(0, 6000, 30) == 0
    assert compute_pfdh(1, 108_000, 30) == 1.0
    assert compute_pfdh(6000, 6000, 30) == 108_000
    for bad in [(1, 0, 30), (-1, 10, 30), (11, 10, 30), (1, 10, 0)]:
        with pytest.raises(SafetyError):
            compute_pfdh(*bad)


def test_assess_examples():
    assert assess(0.0).compliant
    v = assess(1e-4, 1e-6)
    assert not v.compliant and v.orders_of_magnitude_gap == pytest.approx(2.0, abs=1e-12)
    assert assess(1e-6, 1e-6).compliant
    assert ISO_13849_THRESHOLD == 1e-6


def test_summarize_any_attribute_violation_counts():
    ok, bad = Verdict(True, 0.1), Verdict(False, -0.1)
    frames = [{"distance": ok, "speed": ok}, {"distance": ok, "speed": bad}, {"distance": bad, "speed": bad}]
    rep = summarize(frames, fps=30)
    assert rep.n_violations == 2
    assert rep.violation_fraction == pytest.approx(2 / 3)
    assert rep.pfdh == pytest.approx(2 / 3 * 30 * 3600)
    assert not rep.compliant
    assert assess(rep).compliant is False
    assert rep.to_dict()["violation_fraction_units"] == "violations per frame"


def test_monotone_in_uncertainty():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        lim = SafetyLimit("a", rng.normal(), rng.choice(["lower", "upper"]))
        a = rng.normal()
        u1, u2 = np.sort(rng.exponential(size=2))
        v1, v2 = check_limit(a, u1, lim), check_limit(a, u2, lim)
        assert v2.margin <= v1.margin
        assert not (v2.safe and not v1.safe)


def test_pfdh_linear_in_count():
    rng = np.random.default_rng(1)
    for _ in range(1000):
        n = int(rng.integers(1, 10**6))
        fps = float(rng.uniform(1, 240))
        k = int(rng.integers(0, n + 1))
        assert compute_pfdh(k, n, fps) == pytest.approx(k * compute_pfdh(1, n, fps), rel=1e-12)
