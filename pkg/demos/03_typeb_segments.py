"""Type-B uncertainty from a body segment that should not change length."""

import numpy as np

from pmusafe.pipeline import Frame
from pmusafe.typeb import ConservationSpec, conserved_series, estimate_typeb, implied_deviation

rng = np.random.default_rng(3)
hip = np.array([0.0, 0.0, 0.9])
knee = np.array([0.0, 0.05, 0.5])  # 0.40 m thigh, roughly
frames = []
for k in range(600):
    sway = np.array([0.1 * np.sin(k / 40), 0.0, 0.0])
    # a pose estimator with about 1 cm of joint jitter
    frames.append(Frame(k / 30, {
        "hipL": tuple(hip + sway + rng.normal(scale=0.01, size=3)),
        "kneeL": tuple(knee + sway + rng.normal(scale=0.01, size=3)),
    }))

spec = ConservationSpec.segment("thigh-left", "hipL", "kneeL")
series = conserved_series(frames, spec)
est = estimate_typeb(series)
print(f"mean length {est.mean:.4f} m, spread {est.absolute:.4f} m, relative {est.relative:.2%} over {est.n} frames")

# A large relative spread on a short segment means centimetre-level deviations.
for rel in (est.relative, 0.236):
    dev = implied_deviation(rel, 0.40)
    print(f"relative {rel:6.2%} on 0.40 m -> {dev * 100:.1f} cm", "(above 8 cm)" if dev > 0.08 else "")
